#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "pcsp/errors.hpp"
#include "pcsp/instances.hpp"
#include "pcsp/machine.hpp"
#include "pcsp/partials.hpp"
#include "pcsp/relations.hpp"

namespace pcsp {

// Output of the completion reduction. Variables 0..original-1 are the source
// variables V1; the rest are the lambda variables V2.
struct CompletionReduction {
  Instance reduced;
  std::size_t original = 0;
  std::map<VarSet, VarId> lambda;  // E -> lambda_E
};

namespace detail {

// |E| first, then lexicographic; puts lambda_{} first.
struct BySizeThenLex {
  bool operator()(const VarSet& a, const VarSet& b) const {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  }
};

inline VarSet image(const Constraint& c, const PositionSet& t) {
  VarSet out;
  for (auto p : t) out.push_back(c.scope[p - 1]);
  return canonical_set(std::move(out));
}

inline void require_member_bound(const Instance& inst, std::uint32_t d) {
  for (std::size_t i = 0; i < inst.body().size(); ++i) {
    const auto& rel = inst.body()[i].relation;
    const auto size = max_member_size(rel);
    if (size && *size > d)
      throw UsageError("constraint " + std::to_string(i) + " (" +
                       rel.to_string() + ") has a member of size > " +
                       std::to_string(d));
  }
}

}  // namespace detail

// Rewrites I over a language whose members have size <= d into an instance
// over W and CW^{[2^d]}: lambda_E is forced true exactly when E is selected,
// and every partial tuple of a constraint must be completed.
inline CompletionReduction reduce_completion(
    const Instance& inst, std::uint32_t d,
    std::uint32_t bound = kDefaultPartialsArityBound) {
  if (d == 0) throw UsageError("the completion reduction needs d >= 1");
  if (d >= 31) throw UsageError("d is too large for CW^[2^d]");
  if (inst.weight().kind != WeightMode::Exact)
    throw UsageError("reduce_completion expects an exact weight");
  if (inst.num_variables() == 0)
    throw UsageError("reduce_completion needs at least one variable");
  const std::uint32_t k0 = inst.weight().k;
  if (k0 >= 31) throw UsageError("k0 is too large for k0 + 2^k0");
  detail::require_member_bound(inst, d);

  struct Requirement {
    VarSet partial;
    std::vector<VarSet> completions;
  };
  std::vector<Requirement> reqs;
  std::set<VarSet, detail::BySizeThenLex> keys;
  for (const auto& c : inst.body()) {
    const auto table = compute_partials(c.relation, bound);
    for (const auto& t : table.partials) {
      Requirement r{detail::image(c, t), {}};
      for (const auto& u : table.completions.at(t))
        r.completions.push_back(detail::image(c, u));
      std::sort(r.completions.begin(), r.completions.end(),
                detail::BySizeThenLex{});
      r.completions.erase(
          std::unique(r.completions.begin(), r.completions.end()),
          r.completions.end());
      keys.insert(r.partial);
      keys.insert(r.completions.begin(), r.completions.end());
      reqs.push_back(std::move(r));
    }
  }

  auto vars = inst.variables();
  std::unordered_set<std::string> taken(vars.begin(), vars.end());
  std::map<VarSet, VarId> lambda;
  for (const auto& e : keys) {
    std::string stem = "L:";
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (i) stem += ",";
      stem += inst.name(e[i]);
    }
    auto name = fresh_name(taken, stem);
    taken.insert(name);
    lambda.emplace(e, static_cast<VarId>(vars.size()));
    vars.push_back(std::move(name));
  }

  const auto cap = WeightSet::initial_segment(1u << d);
  const auto one = WeightSet::initial_segment(1);
  std::vector<Constraint> body;
  for (const auto& r : reqs) {
    std::vector<VarId> scope{lambda.at(r.partial)};
    for (const auto& u : r.completions) scope.push_back(lambda.at(u));
    const auto tail = static_cast<std::uint32_t>(scope.size() - 1);
    body.push_back(Constraint{Relation::cw(cap, 1, tail), std::move(scope)});
  }
  for (const auto& [e, lam] : lambda) {
    std::vector<VarId> scope(e.begin(), e.end());
    scope.push_back(lam);
    body.push_back(Constraint{
        Relation::cw(one, static_cast<std::uint32_t>(e.size()), 1), scope});
    for (VarId x : e)
      body.push_back(Constraint{Relation::cw(one, 1, 1), {lam, x}});
  }
  std::vector<VarId> v1(inst.num_variables());
  for (VarId v = 0; v < v1.size(); ++v) v1[v] = v;
  body.push_back(Constraint{
      Relation::w(WeightSet::finite({k0}),
                  static_cast<std::uint32_t>(v1.size())),
      std::move(v1)});

  return CompletionReduction{
      Instance(std::move(vars), {WeightMode::AtMost, k0 + (1u << k0)},
               std::move(body)),
      inst.num_variables(), std::move(lambda)};
}

// lambda_E in Q iff E inside D, for an assignment D u Q of the reduced
// instance.
inline bool binding_holds(const CompletionReduction& red,
                          const Assignment& a) {
  for (const auto& [e, lam] : red.lambda) {
    const bool all = std::all_of(e.begin(), e.end(),
                                 [&](VarId v) { return a.contains(v); });
    if (a.contains(lam) != all) return false;
  }
  return true;
}

// W^A_m with A inside [0, d] as an explicit member list.
inline Relation explicit_form(const Relation& rel, std::uint32_t d) {
  const auto* w = rel.as_w();
  if (!w) throw UsageError("explicit_form expects a W relation");
  std::vector<PositionSet> members;
  PositionSet cur;
  auto rec = [&](auto&& self, std::uint32_t from) -> void {
    if (w->weights.contains(cur.size())) members.push_back(cur);
    if (cur.size() == d) return;
    for (std::uint32_t p = from; p <= w->arity; ++p) {
      cur.push_back(p);
      self(self, p + 1);
      cur.pop_back();
    }
  };
  rec(rec, 1);
  return Relation::explicit_members(w->arity, std::move(members), rel.index());
}

struct PipelineStats {
  std::size_t reduced_variables = 0;
  std::size_t reduced_constraints = 0;
  std::uint64_t budget = 0;
  SimulationResult simulation;
};

// The W-part and the CW-part of a lifted reduced instance, each over the full
// variable list.
struct SplitInstance {
  Instance w_part;
  Instance cw_part;
};

inline SplitInstance split_w_cw(const Instance& lifted, std::uint32_t d) {
  const auto cap = WeightSet::initial_segment(1u << d);
  std::vector<Constraint> w_body, cw_body;
  for (const auto& c : lifted.body()) {
    if (c.relation.as_w()) {
      w_body.push_back(c);
      continue;
    }
    const auto* r = c.relation.as_cw();
    if (!r) throw UsageError("reduced instance has a non-W, non-CW relation");
    // With one tail position, CW^{[1]} and CW^{[2^d]} are the same relation.
    if (r->tail == 1 && r->weights == WeightSet::initial_segment(1))
      cw_body.push_back(
          Constraint{Relation::cw(cap, r->head, 1, c.relation.index()), c.scope});
    else
      cw_body.push_back(c);
  }
  return SplitInstance{Instance(lifted.variables(), lifted.weight(), w_body),
                       Instance(lifted.variables(), lifted.weight(), cw_body)};
}

// CSP(W^d)_k decided through the completion reduction, the k<= lift, and the
// combined appearance and table machines.
inline std::optional<Assignment> solve_wd_pipeline(
    const Instance& inst, std::uint32_t d, PipelineStats* stats = nullptr,
    const CostModel& cm = {}) {
  if (inst.weight().kind != WeightMode::Exact)
    throw UsageError("the W^d pipeline expects an exact weight");
  for (std::size_t i = 0; i < inst.body().size(); ++i) {
    const auto* w = inst.body()[i].relation.as_w();
    if (!w)
      throw UsageError("constraint " + std::to_string(i) +
                       " is not a W relation");
    if (w->weights.kind() != WeightKind::Finite ||
        (!w->weights.values().empty() && w->weights.values().back() > d))
      throw UsageError("constraint " + std::to_string(i) + " has weights " +
                       w->weights.to_string() + " not inside [0," +
                       std::to_string(d) + "]");
  }
  const std::uint32_t k0 = inst.weight().k;
  if (d == 0) {
    // Every relation admits at most the empty tuple, so only variables
    // outside every scope may be set.
    std::vector<char> used(inst.num_variables(), 0);
    for (const auto& c : inst.body()) {
      if (!c.relation.contains_unchecked({})) return std::nullopt;
      for (VarId v : c.scope) used[v] = 1;
    }
    Assignment a;
    for (VarId v = 0; v < inst.num_variables() && a.size() < k0; ++v)
      if (!used[v]) a.trueset.push_back(v);
    if (a.size() < k0) return std::nullopt;
    return a;
  }
  if (k0 > inst.num_variables()) return std::nullopt;

  std::vector<Constraint> body;
  for (const auto& c : inst.body())
    body.push_back(Constraint{explicit_form(c.relation, d), c.scope});
  const Instance expl(inst.variables(), inst.weight(), std::move(body));

  const auto red = reduce_completion(expl, d);
  const auto lifted = lift_kle_to_k(red.reduced);
  const auto parts = split_w_cw(lifted, d);
  const auto machine =
      combine_machines(reduce_appearance(parts.w_part, cm), reduce_cw(parts.cw_part));

  SimulateOptions opt;
  opt.prune = true;
  auto sim = simulate(machine, opt);
  if (stats) {
    stats->reduced_variables = red.reduced.num_variables();
    stats->reduced_constraints = red.reduced.body().size();
    stats->budget = machine.budget;
    stats->simulation = sim;
  }
  if (!sim.accepted) return std::nullopt;
  Assignment out;
  for (VarId v : sim.witness->trueset)
    if (v < red.original) out.trueset.push_back(v);
  return out;
}

}  // namespace pcsp
