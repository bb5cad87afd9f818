#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "pcsp/errors.hpp"
#include "pcsp/instances.hpp"
#include "pcsp/relations.hpp"

namespace pcsp {

// The weight set shared by every body constraint; all must be W relations.
// nullopt for an empty body.
inline std::optional<WeightSet> shared_weightset(const Instance& inst) {
  std::optional<WeightSet> e;
  for (std::size_t i = 0; i < inst.body().size(); ++i) {
    const auto* w = inst.body()[i].relation.as_w();
    if (!w)
      throw UsageError("constraint " + std::to_string(i) +
                       " is not a W relation");
    if (!e)
      e = w->weights;
    else if (!(*e == w->weights))
      throw UsageError("body mixes weight sets " + e->to_string() + " and " +
                       w->weights.to_string());
  }
  return e;
}

// h = min{e(I), max E, max(N0 \ E)} over the terms that are defined.
inline std::uint64_t compute_h(const Instance& inst, const WeightSet& e_set) {
  for (std::size_t i = 0; i < inst.body().size(); ++i) {
    const auto* w = inst.body()[i].relation.as_w();
    if (!w || !(w->weights == e_set))
      throw UsageError("constraint " + std::to_string(i) +
                       " is not W^" + e_set.to_string());
  }
  std::uint64_t h = param_e(inst);
  if (auto m = e_set.max_member()) h = std::min<std::uint64_t>(h, *m);
  if (auto m = e_set.max_excluded()) h = std::min<std::uint64_t>(h, *m);
  return h;
}

// Variables sharing an occurrence profile: per body constraint, the
// multiplicity capped at h, with h + 1 standing for "more than h".
struct ProfileClass {
  std::vector<std::uint32_t> profile;
  std::vector<VarId> representatives;  // increasing

  std::size_t count() const noexcept { return representatives.size(); }
};

struct FptStats {
  std::uint64_t h = 0;
  std::size_t classes = 0;
  std::uint64_t multisets = 0;  // candidate multisets examined
  bool pruned = false;          // decided by the (k,t) counting bound
};

inline std::vector<ProfileClass> profile_classes(const Instance& inst,
                                                 std::uint64_t h) {
  const auto over = static_cast<std::uint32_t>(h + 1);
  std::vector<std::vector<std::uint32_t>> prof(
      inst.num_variables(), std::vector<std::uint32_t>(inst.body().size(), 0));
  for (std::size_t i = 0; i < inst.body().size(); ++i)
    for (VarId v : inst.body()[i].scope)
      prof[v][i] = std::min(prof[v][i] + 1, over);

  std::map<std::vector<std::uint32_t>, std::size_t> slot;
  std::vector<ProfileClass> classes;
  for (VarId v = 0; v < inst.num_variables(); ++v) {
    auto [it, fresh] = slot.emplace(prof[v], classes.size());
    if (fresh) classes.push_back(ProfileClass{prof[v], {}});
    classes[it->second].representatives.push_back(v);
  }
  return classes;
}

namespace detail {

class MultisetSearch {
 public:
  MultisetSearch(const std::vector<ProfileClass>& classes,
                 std::optional<WeightSet> e_set, std::uint64_t h,
                 std::size_t constraints, FptStats& stats)
      : classes_(classes),
        e_set_(std::move(e_set)),
        over_(static_cast<std::uint32_t>(h + 1)),
        constraints_(constraints),
        counts_(classes.size(), 0),
        stats_(stats) {}

  std::optional<Assignment> find(std::size_t weight) {
    if (!rec(0, weight)) return witness();
    return std::nullopt;
  }

 private:
  // Returns false once a feasible multiset has been found.
  bool rec(std::size_t cls, std::size_t remaining) {
    if (remaining == 0) {
      ++stats_.multisets;
      return !feasible();
    }
    if (cls == classes_.size()) return true;
    const auto top = std::min(remaining, classes_[cls].count());
    for (std::size_t c = top + 1; c-- > 0;) {
      counts_[cls] = c;
      if (!rec(cls + 1, remaining - c)) return false;
    }
    counts_[cls] = 0;
    return true;
  }

  bool feasible() const {
    for (std::size_t i = 0; i < constraints_; ++i) {
      std::uint64_t sum = 0;
      bool over = false;
      for (std::size_t j = 0; j < classes_.size(); ++j) {
        if (!counts_[j]) continue;
        const auto mult = classes_[j].profile[i];
        if (mult == over_)
          over = true;
        else
          sum += counts_[j] * std::uint64_t{mult};
      }
      // A multiplicity above h exceeds max E (finite E) or every excluded
      // weight (cofinite E).
      const bool ok = over ? e_set_->kind() == WeightKind::Cofinite
                           : e_set_->contains(sum);
      if (!ok) return false;
    }
    return true;
  }

  Assignment witness() const {
    Assignment a;
    for (std::size_t j = 0; j < classes_.size(); ++j)
      for (std::size_t c = 0; c < counts_[j]; ++c)
        a.trueset.push_back(classes_[j].representatives[c]);
    std::sort(a.trueset.begin(), a.trueset.end());
    return a;
  }

  const std::vector<ProfileClass>& classes_;
  std::optional<WeightSet> e_set_;
  std::uint32_t over_;
  std::size_t constraints_;
  std::vector<std::size_t> counts_;
  FptStats& stats_;
};

}  // namespace detail

// CSP(W^E) with parameters (k, u, e), and (k, u) when E or its complement is
// finite. Variables with equal occurrence profiles are interchangeable, so
// it suffices to enumerate how many are drawn from each profile class.
inline std::optional<Assignment> solve_w_kue(const Instance& inst,
                                             FptStats* stats = nullptr) {
  FptStats local;
  FptStats& st = stats ? *stats : local;
  std::optional<WeightSet> e_set;
  try {
    e_set = shared_weightset(inst);
  } catch (const UsageError& err) {
    throw NotApplicable(err.what());
  }
  st.h = e_set ? compute_h(inst, *e_set) : 0;
  const auto classes = profile_classes(inst, st.h);
  st.classes = classes.size();

  detail::MultisetSearch search(classes, e_set, st.h, inst.body().size(), st);
  const auto& w = inst.weight();
  if (w.kind == WeightMode::Exact) {
    if (w.k > inst.num_variables()) return std::nullopt;
    return search.find(w.k);
  }
  const auto top = std::min<std::size_t>(w.k, inst.num_variables());
  for (std::size_t weight = 0; weight <= top; ++weight)
    if (auto a = search.find(weight)) return a;
  return std::nullopt;
}

// CSP(W^E) with parameters (k, t) for 0 not in E: every body constraint needs
// a selected variable, and k selected variables reach at most t*k of them.
inline std::optional<Assignment> solve_w_kt(const Instance& inst,
                                            FptStats* stats = nullptr) {
  std::optional<WeightSet> e_set;
  try {
    e_set = shared_weightset(inst);
  } catch (const UsageError& err) {
    throw NotApplicable(err.what());
  }
  if (e_set && e_set->contains(0))
    throw UsageError("the (k,t) bound requires 0 not in E, got " +
                     e_set->to_string());
  const std::uint64_t reach =
      std::uint64_t{param_t(inst)} * inst.weight().k;
  if (inst.body().size() > reach) {
    if (stats) stats->pruned = true;
    return std::nullopt;
  }
  return solve_w_kue(inst, stats);
}

}  // namespace pcsp
