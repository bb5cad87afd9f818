#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "pcsp/errors.hpp"
#include "pcsp/instances.hpp"
#include "pcsp/machine.hpp"
#include "pcsp/relations.hpp"

namespace pcsp {

inline constexpr const char* kInstanceFormat = "pcsp-instance/1";
inline constexpr const char* kMachineFormat = "pcsp-machine/1";

using json = nlohmann::ordered_json;

namespace detail {

inline const json& field(const json& obj, const std::string& key,
                         const std::string& path) {
  if (!obj.is_object()) throw ParseError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path + "." + key, "missing field");
  return *it;
}

inline std::uint64_t as_uint(const json& v, const std::string& path) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw ParseError(path, "expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

inline std::uint32_t as_u32(const json& v, const std::string& path) {
  const auto x = as_uint(v, path);
  if (x > UINT32_MAX) throw ParseError(path, "integer too large");
  return static_cast<std::uint32_t>(x);
}

inline const std::string& as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ParseError(path, "expected a string");
  return v.get_ref<const std::string&>();
}

inline const json& as_array(const json& v, const std::string& path) {
  if (!v.is_array()) throw ParseError(path, "expected an array");
  return v;
}

inline json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("$", std::string("invalid JSON: ") + e.what());
  }
}

inline void check_version(const json& doc, const char* expected) {
  const auto& v = as_string(field(doc, "format_version", "$"), "$.format_version");
  if (v != expected)
    throw ParseError("format_version",
                     "unsupported version '" + v + "', expected '" + expected + "'");
}

}  // namespace detail

inline json weightset_to_json(const WeightSet& ws) {
  static constexpr const char* kNames[] = {"finite", "cofinite", "even", "odd"};
  return json{{"kind", kNames[static_cast<int>(ws.kind())]},
              {"values", ws.values()}};
}

inline WeightSet weightset_from_json(const json& j, const std::string& path) {
  const auto& kind = detail::as_string(detail::field(j, "kind", path), path + ".kind");
  std::vector<std::uint32_t> values;
  if (j.contains("values")) {
    const auto& arr = detail::as_array(j["values"], path + ".values");
    for (std::size_t i = 0; i < arr.size(); ++i)
      values.push_back(
          detail::as_u32(arr[i], path + ".values[" + std::to_string(i) + "]"));
  }
  try {
    if (kind == "finite") return WeightSet::finite(std::move(values));
    if (kind == "cofinite") return WeightSet::cofinite(std::move(values));
    if (kind == "even" || kind == "odd") {
      if (!values.empty())
        throw ParseError(path + ".values", "parity weight sets take no values");
      return kind == "even" ? WeightSet::even() : WeightSet::odd();
    }
  } catch (const DomainError& e) {
    throw ParseError(path, e.what());
  }
  throw ParseError(path + ".kind", "unknown weight kind '" + kind + "'");
}

inline json relation_to_json(const Relation& rel) {
  json j;
  if (auto* r = rel.as_w()) {
    j = json{{"type", "W"}, {"weights", weightset_to_json(r->weights)},
             {"arity", r->arity}};
  } else if (auto* r = rel.as_cw()) {
    j = json{{"type", "CW"}, {"weights", weightset_to_json(r->weights)},
             {"d", r->head}, {"m", r->tail}};
  } else {
    auto* e = rel.as_explicit();
    j = json{{"type", "explicit"}, {"arity", e->arity}, {"members", e->members}};
  }
  if (rel.index() != 1) j["index"] = rel.index();
  return j;
}

inline Relation relation_from_json(const json& j, const std::string& path) {
  using namespace detail;
  const auto& type = as_string(field(j, "type", path), path + ".type");
  std::uint64_t index = 1;
  if (j.contains("index")) {
    index = as_uint(j["index"], path + ".index");
    if (index == 0) throw ParseError(path + ".index", "index must be positive");
  }
  try {
    if (type == "W") {
      auto ws = weightset_from_json(field(j, "weights", path), path + ".weights");
      const auto arity = as_u32(field(j, "arity", path), path + ".arity");
      if (arity == 0) throw ParseError(path + ".arity", "arity must be positive");
      return Relation::w(std::move(ws), arity, index);
    }
    if (type == "CW") {
      auto ws = weightset_from_json(field(j, "weights", path), path + ".weights");
      const auto d = as_u32(field(j, "d", path), path + ".d");
      const auto m = as_u32(field(j, "m", path), path + ".m");
      if (std::uint64_t{d} + m == 0)
        throw ParseError(path, "CW relation needs d + m >= 1");
      return Relation::cw(std::move(ws), d, m, index);
    }
    if (type == "explicit") {
      const auto arity = as_u32(field(j, "arity", path), path + ".arity");
      if (arity == 0) throw ParseError(path + ".arity", "arity must be positive");
      const auto& arr = as_array(field(j, "members", path), path + ".members");
      std::vector<PositionSet> members;
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto mp = path + ".members[" + std::to_string(i) + "]";
        PositionSet m;
        const auto& ma = as_array(arr[i], mp);
        for (std::size_t k = 0; k < ma.size(); ++k) {
          const auto p = as_u32(ma[k], mp + "[" + std::to_string(k) + "]");
          if (p < 1 || p > arity)
            throw ParseError(mp + "[" + std::to_string(k) + "]",
                             "position " + std::to_string(p) + " outside [" +
                                 std::to_string(arity) + "]");
          if (std::find(m.begin(), m.end(), p) != m.end())
            throw ParseError(mp, "repeated position " + std::to_string(p));
          m.push_back(p);
        }
        members.push_back(std::move(m));
      }
      return Relation::explicit_members(arity, std::move(members), index);
    }
  } catch (const DomainError& e) {
    throw ParseError(path, e.what());
  }
  throw ParseError(path + ".type", "unknown relation type '" + type + "'");
}

inline json instance_to_json(const Instance& inst,
                             bool materialize_weight_constraint = false) {
  json cons = json::array();
  const auto& w = inst.weight();
  if (materialize_weight_constraint && inst.num_variables() > 0) {
    std::vector<std::uint32_t> allowed;
    if (w.kind == WeightMode::Exact)
      allowed.push_back(w.k);
    else
      for (std::uint32_t i = 0; i <= w.k; ++i) allowed.push_back(i);
    cons.push_back(json{
        {"relation",
         relation_to_json(Relation::w(WeightSet::finite(std::move(allowed)),
                                      static_cast<std::uint32_t>(inst.num_variables())))},
        {"scope", inst.variables()},
        {"weight_constraint", true}});
  }
  for (const auto& c : inst.body()) {
    json scope = json::array();
    for (VarId v : c.scope) scope.push_back(inst.name(v));
    cons.push_back(json{{"relation", relation_to_json(c.relation)},
                        {"scope", std::move(scope)}});
  }
  return json{{"format_version", kInstanceFormat},
              {"variables", inst.variables()},
              {"parameter",
               {{"kind", w.kind == WeightMode::Exact ? "exact" : "atmost"},
                {"k", w.k}}},
              {"constraints", std::move(cons)}};
}

inline std::string serialize_instance(const Instance& inst,
                                      bool materialize_weight_constraint = false) {
  return instance_to_json(inst, materialize_weight_constraint).dump(2) + "\n";
}

inline Instance instance_from_json(const json& doc) {
  using namespace detail;
  check_version(doc, kInstanceFormat);
  const auto& vars_j = as_array(field(doc, "variables", "$"), "variables");
  std::vector<std::string> vars;
  std::unordered_map<std::string, VarId> ids;
  for (std::size_t i = 0; i < vars_j.size(); ++i) {
    const auto p = "variables[" + std::to_string(i) + "]";
    const auto& name = as_string(vars_j[i], p);
    if (name.empty()) throw ParseError(p, "empty variable name");
    if (!ids.emplace(name, static_cast<VarId>(i)).second)
      throw ParseError(p, "duplicate variable '" + name + "'");
    vars.push_back(name);
  }
  const auto& param = field(doc, "parameter", "$");
  const auto& kind = as_string(field(param, "kind", "parameter"), "parameter.kind");
  WeightParameter wp;
  if (kind == "exact")
    wp.kind = WeightMode::Exact;
  else if (kind == "atmost")
    wp.kind = WeightMode::AtMost;
  else
    throw ParseError("parameter.kind", "expected \"exact\" or \"atmost\"");
  wp.k = as_u32(field(param, "k", "parameter"), "parameter.k");

  std::vector<Constraint> body;
  const auto& cons = as_array(field(doc, "constraints", "$"), "constraints");
  for (std::size_t i = 0; i < cons.size(); ++i) {
    const auto p = "constraints[" + std::to_string(i) + "]";
    if (!cons[i].is_object()) throw ParseError(p, "expected an object");
    if (cons[i].contains("weight_constraint")) {
      if (!cons[i]["weight_constraint"].is_boolean())
        throw ParseError(p + ".weight_constraint", "expected a boolean");
      if (cons[i]["weight_constraint"].get<bool>()) continue;
    }
    auto rel = relation_from_json(field(cons[i], "relation", p), p + ".relation");
    const auto& scope_j = as_array(field(cons[i], "scope", p), p + ".scope");
    std::vector<VarId> scope;
    for (std::size_t k = 0; k < scope_j.size(); ++k) {
      const auto& name = as_string(scope_j[k], p + ".scope[" + std::to_string(k) + "]");
      auto it = ids.find(name);
      if (it == ids.end())
        throw ParseError(p + ".scope", "undeclared variable '" + name + "'");
      scope.push_back(it->second);
    }
    if (scope.size() != rel.arity())
      throw ParseError(p + ".scope", "length " + std::to_string(scope.size()) +
                                         " does not match arity " +
                                         std::to_string(rel.arity()));
    body.push_back(Constraint{std::move(rel), std::move(scope)});
  }
  return Instance(std::move(vars), wp, std::move(body));
}

inline Instance parse_instance(const std::string& text) {
  return instance_from_json(detail::parse_text(text));
}

// ---------------------------------------------------------------------------
// Machines.

inline json varset_to_json(const VarSet& s) { return json(s); }

inline json machine_to_json(const GuessCheckMachine& m);

inline json checker_to_json(const GuessCheckMachine& m) {
  return std::visit(
      [&](const auto& chk) -> json {
        using T = std::decay_t<decltype(chk)>;
        if constexpr (std::is_same_v<T, AlwaysReject>) {
          return json{{"kind", "always-reject"}};
        } else if constexpr (std::is_same_v<T, AppearanceChecker>) {
          json cons = json::array();
          for (const auto& c : chk.constraints)
            cons.push_back(json{{"relation", relation_to_json(c.relation)},
                                {"scope", c.scope}});
          return json{{"kind", "appearance"},
                      {"t0", chk.t0},
                      {"cost",
                       {{"exponent", chk.cost.exponent},
                        {"slope", chk.cost.slope},
                        {"intercept", chk.cost.intercept}}},
                      {"touching", chk.touching},
                      {"required", chk.required},
                      {"constraints", std::move(cons)}};
        } else if constexpr (std::is_same_v<T, CWChecker>) {
          json delta = json::object(), lambda = json::object(),
               empty = json::object();
          for (const auto& [k, v] : chk.delta_sizes)
            delta[encode_key(k.head, k.group)] = v;
          for (const auto& [k, v] : chk.lambda)
            lambda[encode_key(k.head, k.group)] = v;
          for (const auto& [k, v] : chk.delta_empty) empty[encode_key(k)] = v;
          return json{{"kind", "cw"},
                      {"b", chk.b},
                      {"input_size", chk.input_size},
                      {"delta_sizes", std::move(delta)},
                      {"lambda", std::move(lambda)},
                      {"delta_empty", std::move(empty)}};
        } else {
          return json{{"kind", "combined"},
                      {"first", machine_to_json(*chk.first)},
                      {"second", machine_to_json(*chk.second)}};
        }
      },
      m.checker);
}

inline json machine_to_json(const GuessCheckMachine& m) {
  return json{{"format_version", kMachineFormat},
              {"universe", m.universe},
              {"k0", m.k0},
              {"budget", m.budget},
              {"checker", checker_to_json(m)}};
}

inline std::string serialize_machine(const GuessCheckMachine& m) {
  return machine_to_json(m).dump(2) + "\n";
}

namespace detail {

inline std::vector<std::uint64_t> index_list(const json& j, const std::string& path,
                                             std::uint64_t limit) {
  const auto& arr = as_array(j, path);
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto p = path + "[" + std::to_string(i) + "]";
    const auto x = as_uint(arr[i], p);
    if (x >= limit) throw ParseError(p, "index out of range");
    if (!out.empty() && x <= out.back()) throw ParseError(p, "indices not increasing");
    out.push_back(x);
  }
  return out;
}

inline void check_key(const VarSet& s, std::size_t universe, const std::string& path) {
  if (!s.empty() && s.back() >= universe)
    throw ParseError(path, "variable position outside the universe");
}

}  // namespace detail

inline GuessCheckMachine machine_from_json(const json& doc,
                                           const std::string& path = "$") {
  using namespace detail;
  check_version(doc, kMachineFormat);
  GuessCheckMachine m;
  const auto& uni = as_array(field(doc, "universe", path), path + ".universe");
  std::unordered_map<std::string, int> seen;
  for (std::size_t i = 0; i < uni.size(); ++i) {
    const auto p = path + ".universe[" + std::to_string(i) + "]";
    const auto& name = as_string(uni[i], p);
    if (seen[name]++) throw ParseError(p, "duplicate variable '" + name + "'");
    m.universe.push_back(name);
  }
  m.k0 = as_u32(field(doc, "k0", path), path + ".k0");
  m.budget = as_uint(field(doc, "budget", path), path + ".budget");
  const auto cp = path + ".checker";
  const auto& chk = field(doc, "checker", path);
  const auto& kind = as_string(field(chk, "kind", cp), cp + ".kind");
  const auto n = m.universe.size();

  if (kind == "always-reject") {
    m.checker = AlwaysReject{};
  } else if (kind == "appearance") {
    AppearanceChecker a;
    a.t0 = as_uint(field(chk, "t0", cp), cp + ".t0");
    const auto& cost = field(chk, "cost", cp);
    a.cost.exponent = as_u32(field(cost, "exponent", cp + ".cost"), cp + ".cost.exponent");
    a.cost.slope = as_uint(field(cost, "slope", cp + ".cost"), cp + ".cost.slope");
    a.cost.intercept =
        as_uint(field(cost, "intercept", cp + ".cost"), cp + ".cost.intercept");
    const auto& cons = as_array(field(chk, "constraints", cp), cp + ".constraints");
    for (std::size_t i = 0; i < cons.size(); ++i) {
      const auto p = cp + ".constraints[" + std::to_string(i) + "]";
      auto rel = relation_from_json(field(cons[i], "relation", p), p + ".relation");
      std::vector<VarId> scope;
      const auto& sj = as_array(field(cons[i], "scope", p), p + ".scope");
      for (std::size_t k = 0; k < sj.size(); ++k) {
        const auto v = as_uint(sj[k], p + ".scope[" + std::to_string(k) + "]");
        if (v >= n) throw ParseError(p + ".scope", "variable position out of range");
        scope.push_back(static_cast<VarId>(v));
      }
      if (scope.size() != rel.arity())
        throw ParseError(p + ".scope", "length does not match arity");
      a.constraints.push_back(Constraint{std::move(rel), std::move(scope)});
    }
    const auto& touch = as_array(field(chk, "touching", cp), cp + ".touching");
    if (touch.size() != n)
      throw ParseError(cp + ".touching", "expected one list per universe variable");
    for (std::size_t v = 0; v < n; ++v) {
      auto list = index_list(touch[v], cp + ".touching[" + std::to_string(v) + "]",
                             a.constraints.size());
      a.touching.emplace_back(list.begin(), list.end());
    }
    auto req = index_list(field(chk, "required", cp), cp + ".required",
                          a.constraints.size());
    a.required.assign(req.begin(), req.end());
    m.checker = std::move(a);
  } else if (kind == "cw") {
    CWChecker c;
    c.b = as_u32(field(chk, "b", cp), cp + ".b");
    c.input_size = as_uint(field(chk, "input_size", cp), cp + ".input_size");
    auto read_table = [&](const char* name, std::map<TableKey, std::uint64_t>& out) {
      const auto p = cp + "." + name;
      const auto& obj = field(chk, name, cp);
      if (!obj.is_object()) throw ParseError(p, "expected an object");
      for (const auto& [key, value] : obj.items()) {
        const auto kp = p + "[\"" + key + "\"]";
        TableKey k;
        try {
          k = decode_key(key);
        } catch (const DomainError& e) {
          throw ParseError(kp, e.what());
        }
        check_key(k.head, n, kp);
        check_key(k.group, n, kp);
        out[k] = as_uint(value, kp);
      }
    };
    read_table("delta_sizes", c.delta_sizes);
    read_table("lambda", c.lambda);
    const auto& empty = field(chk, "delta_empty", cp);
    if (!empty.is_object()) throw ParseError(cp + ".delta_empty", "expected an object");
    for (const auto& [key, value] : empty.items()) {
      const auto kp = cp + ".delta_empty[\"" + key + "\"]";
      VarSet head;
      try {
        head = decode_varset(key);
      } catch (const DomainError& e) {
        throw ParseError(kp, e.what());
      }
      check_key(head, n, kp);
      c.delta_empty[head] = as_uint(value, kp);
    }
    m.checker = std::move(c);
  } else if (kind == "combined") {
    auto first = machine_from_json(field(chk, "first", cp), cp + ".first");
    auto second = machine_from_json(field(chk, "second", cp), cp + ".second");
    if (first.universe != m.universe || second.universe != m.universe ||
        first.k0 != m.k0 || second.k0 != m.k0)
      throw ParseError(cp, "components must share the universe and k0");
    m.checker = Combined{std::make_shared<const GuessCheckMachine>(std::move(first)),
                         std::make_shared<const GuessCheckMachine>(std::move(second))};
  } else {
    throw ParseError(cp + ".kind", "unknown checker kind '" + kind + "'");
  }
  return m;
}

inline GuessCheckMachine parse_machine(const std::string& text) {
  return machine_from_json(detail::parse_text(text));
}

}  // namespace pcsp
