#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "pcsp/errors.hpp"
#include "pcsp/relations.hpp"

namespace pcsp {

// Variables are identified by their position in the instance's declaration
// order; that order is the total order used for all tie-breaking.
using VarId = std::uint32_t;

struct Constraint {
  Relation relation;
  std::vector<VarId> scope;  // length arity(relation), repeats allowed

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

enum class WeightMode { Exact, AtMost };

// The weight constraint C(1): W^{k}_{|V|} (Exact) or W^{[0,k]}_{|V|} (AtMost)
// over all variables, each occurring once.
struct WeightParameter {
  WeightMode kind = WeightMode::Exact;
  std::uint32_t k = 0;

  bool admits(std::size_t weight) const noexcept {
    return kind == WeightMode::Exact ? weight == k : weight <= k;
  }
  friend bool operator==(const WeightParameter&, const WeightParameter&) =
      default;
};

struct Assignment {
  std::vector<VarId> trueset;  // strictly increasing

  std::size_t size() const noexcept { return trueset.size(); }
  bool contains(VarId v) const {
    return std::binary_search(trueset.begin(), trueset.end(), v);
  }
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

class Instance {
 public:
  Instance(std::vector<std::string> variables, WeightParameter weight,
           std::vector<Constraint> body)
      : variables_(std::move(variables)),
        weight_(weight),
        body_(std::move(body)) {
    for (std::size_t i = 0; i < variables_.size(); ++i) {
      if (variables_[i].empty()) throw DomainError("empty variable name");
      if (!index_.emplace(variables_[i], static_cast<VarId>(i)).second)
        throw DomainError("duplicate variable '" + variables_[i] + "'");
    }
    for (std::size_t c = 0; c < body_.size(); ++c) {
      const auto& con = body_[c];
      if (con.scope.size() != con.relation.arity())
        throw DomainError("constraint " + std::to_string(c) + ": scope length " +
                          std::to_string(con.scope.size()) + " != arity " +
                          std::to_string(con.relation.arity()));
      for (VarId v : con.scope)
        if (v >= variables_.size())
          throw DomainError("constraint " + std::to_string(c) +
                            ": undeclared variable id " + std::to_string(v));
    }
  }

  const std::vector<std::string>& variables() const noexcept {
    return variables_;
  }
  std::size_t num_variables() const noexcept { return variables_.size(); }
  const WeightParameter& weight() const noexcept { return weight_; }
  const std::vector<Constraint>& body() const noexcept { return body_; }

  std::optional<VarId> find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& name(VarId v) const { return variables_.at(v); }

  std::vector<std::string> names(const Assignment& a) const {
    std::vector<std::string> out;
    out.reserve(a.size());
    for (VarId v : a.trueset) out.push_back(name(v));
    return out;
  }

  friend bool operator==(const Instance& a, const Instance& b) {
    return a.variables_ == b.variables_ && a.weight_ == b.weight_ &&
           a.body_ == b.body_;
  }

 private:
  std::vector<std::string> variables_;
  WeightParameter weight_;
  std::vector<Constraint> body_;
  std::unordered_map<std::string, VarId> index_;
};

// T = {j | scope(j) in D} for a membership mask over the variables.
inline PositionSet tuple_of(const Constraint& c,
                            const std::vector<char>& in_set) {
  PositionSet t;
  for (std::uint32_t j = 0; j < c.scope.size(); ++j)
    if (in_set[c.scope[j]]) t.push_back(j + 1);
  return t;
}

inline std::vector<char> membership_mask(const Instance& inst,
                                         const Assignment& d) {
  std::vector<char> mask(inst.num_variables(), 0);
  for (VarId v : d.trueset) mask[v] = 1;
  return mask;
}

inline void check_assignment(const Instance& inst, const Assignment& d) {
  if (!std::is_sorted(d.trueset.begin(), d.trueset.end()) ||
      std::adjacent_find(d.trueset.begin(), d.trueset.end()) != d.trueset.end())
    throw DomainError("assignment is not a strictly increasing variable list");
  if (!d.trueset.empty() && d.trueset.back() >= inst.num_variables())
    throw DomainError("assignment mentions variable id " +
                      std::to_string(d.trueset.back()) +
                      " foreign to the instance");
}

inline bool satisfies_constraint(const Constraint& c,
                                 const std::vector<char>& in_set) {
  return c.relation.contains_unchecked(tuple_of(c, in_set));
}

inline bool satisfies(const Instance& inst, const Assignment& d) {
  check_assignment(inst, d);
  if (!inst.weight().admits(d.size())) return false;
  const auto mask = membership_mask(inst, d);
  return std::all_of(inst.body().begin(), inst.body().end(),
                     [&](const Constraint& c) {
                       return satisfies_constraint(c, mask);
                     });
}

// |C|, counting the weight constraint.
inline std::size_t param_u(const Instance& inst) {
  return inst.body().size() + 1;
}

// Maximum total multiplicity of a variable over the body constraints.
inline std::size_t param_t(const Instance& inst) {
  std::vector<std::size_t> total(inst.num_variables(), 0);
  for (const auto& c : inst.body())
    for (VarId v : c.scope) ++total[v];
  return total.empty() ? 0 : *std::max_element(total.begin(), total.end());
}

// Maximum multiplicity of a variable inside a single body constraint.
inline std::size_t param_e(const Instance& inst) {
  std::size_t best = 0;
  std::unordered_map<VarId, std::size_t> count;
  for (const auto& c : inst.body()) {
    count.clear();
    for (VarId v : c.scope) best = std::max(best, ++count[v]);
  }
  return best;
}

// Visits subsets of {0..n-1} with min_size <= |A| <= max_size in
// lexicographic order of their sorted element sequences (a proper prefix
// precedes its extensions). Stops early when `visit` returns false.
inline void for_each_subset_lex(
    std::size_t n, std::size_t min_size, std::size_t max_size,
    const std::function<bool(const std::vector<VarId>&)>& visit) {
  std::vector<VarId> current;
  std::function<bool(VarId)> rec = [&](VarId next) -> bool {
    if (current.size() >= min_size && !visit(current)) return false;
    if (current.size() == max_size) return true;
    for (VarId v = next; v < n; ++v) {
      if (current.size() + (n - v) < min_size) break;
      current.push_back(v);
      if (!rec(v + 1)) return false;
      current.pop_back();
    }
    return true;
  };
  rec(0);
}

// Exhaustive oracle: the lexicographically least satisfying assignment among
// all subsets of admissible weight.
inline std::optional<Assignment> brute_force_solve(const Instance& inst) {
  const auto& w = inst.weight();
  const std::size_t n = inst.num_variables();
  if (w.kind == WeightMode::Exact && w.k > n) return std::nullopt;
  const std::size_t lo = w.kind == WeightMode::Exact ? w.k : 0;
  const std::size_t hi = std::min<std::size_t>(w.k, n);
  std::optional<Assignment> found;
  std::vector<char> mask(n, 0);
  for_each_subset_lex(n, lo, hi, [&](const std::vector<VarId>& a) {
    for (VarId v : a) mask[v] = 1;
    const bool ok = std::all_of(
        inst.body().begin(), inst.body().end(),
        [&](const Constraint& c) { return satisfies_constraint(c, mask); });
    for (VarId v : a) mask[v] = 0;
    if (ok) found = Assignment{a};
    return !ok;
  });
  return found;
}

namespace detail {

// Include-first backtracking over variables in declaration order. Each
// constraint is evaluated once its last scope variable is decided.
class BacktrackSearch {
 public:
  explicit BacktrackSearch(const Instance& inst)
      : inst_(inst),
        n_(inst.num_variables()),
        finalizing_(inst.num_variables()),
        mask_(inst.num_variables(), 0) {
    for (std::size_t i = 0; i < inst.body().size(); ++i) {
      const auto& scope = inst.body()[i].scope;
      finalizing_[*std::max_element(scope.begin(), scope.end())].push_back(i);
    }
  }

  std::vector<Assignment> run(std::size_t limit) {
    limit_ = limit;
    solutions_.clear();
    chosen_.clear();
    dfs(0);
    return std::move(solutions_);
  }

  std::uint64_t nodes() const noexcept { return nodes_; }

 private:
  bool dfs(std::size_t p) {
    ++nodes_;
    const auto& w = inst_.weight();
    if (chosen_.size() > w.k) return true;
    if (w.kind == WeightMode::Exact && chosen_.size() + (n_ - p) < w.k)
      return true;
    if (p == n_) {
      solutions_.push_back(Assignment{chosen_});
      return solutions_.size() < limit_;
    }
    for (int value = 1; value >= 0; --value) {
      mask_[p] = static_cast<char>(value);
      if (value) chosen_.push_back(static_cast<VarId>(p));
      bool consistent = true;
      for (auto i : finalizing_[p])
        if (!satisfies_constraint(inst_.body()[i], mask_)) {
          consistent = false;
          break;
        }
      const bool keep_going = !consistent || dfs(p + 1);
      if (value) chosen_.pop_back();
      mask_[p] = 0;
      if (!keep_going) return false;
    }
    return true;
  }

  const Instance& inst_;
  std::size_t n_;
  std::vector<std::vector<std::size_t>> finalizing_;
  std::vector<char> mask_;
  std::vector<VarId> chosen_;
  std::vector<Assignment> solutions_;
  std::size_t limit_ = 1;
  std::uint64_t nodes_ = 0;
};

}  // namespace detail

// Second exact oracle for instances too large for subset enumeration.
// Returns up to `limit` satisfying assignments; for Exact weight they come in
// lexicographic order.
inline std::vector<Assignment> search_solutions(const Instance& inst,
                                                std::size_t limit) {
  if (limit == 0) return {};
  return detail::BacktrackSearch(inst).run(limit);
}

inline std::optional<Assignment> search_solve(const Instance& inst) {
  auto all = search_solutions(inst, 1);
  if (all.empty()) return std::nullopt;
  return std::move(all.front());
}

inline std::string fresh_name(const std::unordered_set<std::string>& taken,
                              const std::string& stem) {
  std::string name = stem;
  for (int i = 1; taken.count(name); ++i) name = stem + "#" + std::to_string(i);
  return name;
}

// AtMost k0 -> Exact k0 by appending k0 padding variables that occur in no
// body constraint.
inline Instance lift_kle_to_k(const Instance& inst) {
  if (inst.weight().kind != WeightMode::AtMost)
    throw UsageError("lift_kle_to_k expects an at-most weight parameter");
  auto vars = inst.variables();
  std::unordered_set<std::string> taken(vars.begin(), vars.end());
  for (std::uint32_t i = 1; i <= inst.weight().k; ++i) {
    auto name = fresh_name(taken, "_pad" + std::to_string(i));
    taken.insert(name);
    vars.push_back(std::move(name));
  }
  return Instance(std::move(vars), {WeightMode::Exact, inst.weight().k},
                  inst.body());
}

// Rewrites every parity constraint so each variable keeps its multiplicity
// mod 2. An emptied Even constraint is dropped; an emptied Odd constraint
// makes the instance unsatisfiable, which is encoded as the pair
// W^even_1<v>, W^odd_1<v> on the first variable.
inline Instance reduce_parity_multiplicity(const Instance& inst) {
  std::vector<Constraint> body;
  bool contradiction = false;
  for (std::size_t i = 0; i < inst.body().size(); ++i) {
    const auto& c = inst.body()[i];
    const auto* w = c.relation.as_w();
    if (!w || (w->weights.kind() != WeightKind::Even &&
               w->weights.kind() != WeightKind::Odd))
      throw UsageError("constraint " + std::to_string(i) +
                       " is not a parity relation");
    std::vector<VarId> order;
    std::unordered_map<VarId, std::size_t> count;
    for (VarId v : c.scope)
      if (count[v]++ == 0) order.push_back(v);
    std::vector<VarId> scope;
    for (VarId v : order)
      if (count[v] % 2 == 1) scope.push_back(v);
    if (scope.empty()) {
      if (w->weights.kind() == WeightKind::Odd) contradiction = true;
      continue;
    }
    const auto arity = static_cast<std::uint32_t>(scope.size());
    body.push_back(Constraint{
        Relation::w(w->weights, arity, c.relation.index()), std::move(scope)});
  }
  if (contradiction) {
    body.push_back(Constraint{Relation::w(WeightSet::even(), 1), {0}});
    body.push_back(Constraint{Relation::w(WeightSet::odd(), 1), {0}});
  }
  return Instance(inst.variables(), inst.weight(), std::move(body));
}

}  // namespace pcsp
