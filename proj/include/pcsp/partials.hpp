#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <unordered_set>
#include <vector>

#include "pcsp/errors.hpp"
#include "pcsp/relations.hpp"

namespace pcsp {

// Arity limit for the 2^arity enumerations below.
inline constexpr std::uint32_t kDefaultPartialsArityBound = 12;
inline constexpr std::uint32_t kMaxPartialsArityBound = 24;

// partl(R) together with completion_R(T) for every partial T. All lists are in
// canonical order (lexicographic over sorted position sequences).
struct PartialsTable {
  Relation relation;
  std::vector<PositionSet> partials;
  std::map<PositionSet, std::vector<PositionSet>> completions;
};

namespace detail {

using Mask = std::uint32_t;

inline Mask to_mask(const PositionSet& s) {
  Mask m = 0;
  for (auto p : s) m |= Mask{1} << (p - 1);
  return m;
}

inline PositionSet from_mask(Mask m) {
  PositionSet s;
  for (std::uint32_t p = 1; m; ++p, m >>= 1)
    if (m & 1) s.push_back(p);
  return s;
}

inline bool mask_subset(Mask a, Mask b) { return (a & ~b) == 0; }

inline void check_bound(const Relation& rel, std::uint32_t bound) {
  if (bound > kMaxPartialsArityBound)
    throw UsageError("partials arity bound exceeds " +
                     std::to_string(kMaxPartialsArityBound));
  if (rel.arity() > bound)
    throw CapacityError("relation arity " + std::to_string(rel.arity()) +
                        " exceeds the partials enumeration bound " +
                        std::to_string(bound));
}

inline std::vector<Mask> member_masks(const Relation& rel) {
  std::vector<Mask> out;
  if (auto* r = rel.as_explicit()) {
    for (const auto& m : r->members) out.push_back(to_mask(m));
    return out;
  }
  const Mask full = rel.arity() == 32 ? ~Mask{0} : (Mask{1} << rel.arity()) - 1;
  for (Mask m = 0;; ++m) {
    if (rel.contains_unchecked(from_mask(m))) out.push_back(m);
    if (m == full) break;
  }
  return out;
}

// Minimal members strictly containing t.
inline std::vector<Mask> minimal_supersets(const std::vector<Mask>& members,
                                           Mask t) {
  std::vector<Mask> cands;
  for (Mask m : members)
    if (m != t && mask_subset(t, m)) cands.push_back(m);
  std::vector<Mask> out;
  for (Mask m : cands) {
    const bool minimal = std::none_of(cands.begin(), cands.end(), [&](Mask o) {
      return o != m && mask_subset(o, m);
    });
    if (minimal) out.push_back(m);
  }
  return out;
}

inline std::vector<PositionSet> canonical_list(const std::vector<Mask>& masks) {
  std::vector<PositionSet> out;
  out.reserve(masks.size());
  for (Mask m : masks) out.push_back(from_mask(m));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// The minimal supersets U of T with U in R.
inline std::vector<PositionSet> completions(
    const Relation& rel, const PositionSet& t,
    std::uint32_t bound = kDefaultPartialsArityBound) {
  check_position_set(rel, t);
  if (rel.contains_unchecked(t))
    throw UsageError("completions are defined only for non-members; " +
                     set_to_string(t) + " is in " + rel.to_string());
  if (auto* r = rel.as_explicit()) {
    std::vector<PositionSet> cands;
    for (const auto& m : r->members)
      if (m != t && is_subset(t, m)) cands.push_back(m);
    std::vector<PositionSet> out;
    for (const auto& m : cands)
      if (std::none_of(cands.begin(), cands.end(), [&](const PositionSet& o) {
            return o != m && is_subset(o, m);
          }))
        out.push_back(m);
    return out;  // members are already canonical
  }
  detail::check_bound(rel, bound);
  return detail::canonical_list(
      detail::minimal_supersets(detail::member_masks(rel), detail::to_mask(t)));
}

// Classifies subsets of [arity] by increasing cardinality: T is partial iff
// T is not in R and every smaller partial T2 inside T has a completion inside
// T.
inline PartialsTable compute_partials(
    const Relation& rel, std::uint32_t bound = kDefaultPartialsArityBound) {
  using detail::Mask;
  detail::check_bound(rel, bound);
  const std::uint32_t q = rel.arity();
  const auto members = detail::member_masks(rel);
  std::unordered_set<Mask> member_set(members.begin(), members.end());

  std::vector<std::vector<Mask>> by_size(q + 1);
  for (Mask m = 0; m < (Mask{1} << q); ++m)
    by_size[std::popcount(m)].push_back(m);

  std::vector<Mask> partials;
  std::vector<std::vector<Mask>> comps;
  for (const auto& level : by_size) {
    std::vector<Mask> new_partials;
    for (Mask t : level) {
      if (member_set.count(t)) continue;
      bool partial = true;
      for (std::size_t i = 0; i < partials.size() && partial; ++i) {
        if (!detail::mask_subset(partials[i], t)) continue;
        partial = std::any_of(comps[i].begin(), comps[i].end(),
                              [&](Mask u) { return detail::mask_subset(u, t); });
      }
      if (partial) new_partials.push_back(t);
    }
    for (Mask t : new_partials) {
      partials.push_back(t);
      comps.push_back(detail::minimal_supersets(members, t));
    }
  }

  PartialsTable table{rel, {}, {}};
  for (std::size_t i = 0; i < partials.size(); ++i) {
    auto key = detail::from_mask(partials[i]);
    table.completions.emplace(key, detail::canonical_list(comps[i]));
    table.partials.push_back(std::move(key));
  }
  std::sort(table.partials.begin(), table.partials.end());
  return table;
}

// D in R iff every partial T inside D has a completion inside D.
inline bool characterize_membership(const PartialsTable& table,
                                    const PositionSet& d) {
  check_position_set(table.relation, d);
  for (const auto& t : table.partials) {
    if (!is_subset(t, d)) continue;
    const auto& us = table.completions.at(t);
    if (std::none_of(us.begin(), us.end(),
                     [&](const PositionSet& u) { return is_subset(u, d); }))
      return false;
  }
  return true;
}

}  // namespace pcsp
