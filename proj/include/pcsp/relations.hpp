#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pcsp/errors.hpp"

namespace pcsp {

// A tuple over {0,1}^q, identified with its set of 1-positions. Positions are
// 1-based and strictly increasing.
using PositionSet = std::vector<std::uint32_t>;

inline bool is_canonical_set(const PositionSet& s) {
  return std::adjacent_find(s.begin(), s.end(),
                            [](auto a, auto b) { return a >= b; }) == s.end();
}

inline PositionSet canonical_set(PositionSet s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

// Both arguments sorted.
template <class Set>
bool is_subset(const Set& small, const Set& big) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

inline std::string set_to_string(const PositionSet& s) {
  std::string out = "{";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "}";
}

enum class WeightKind { Finite, Cofinite, Even, Odd };

// The set of permitted tuple weights. Finite lists its members, Cofinite lists
// the excluded weights; parity sets carry no values.
class WeightSet {
 public:
  static WeightSet finite(std::vector<std::uint32_t> members) {
    return WeightSet(WeightKind::Finite, std::move(members));
  }
  static WeightSet cofinite(std::vector<std::uint32_t> excluded) {
    return WeightSet(WeightKind::Cofinite, std::move(excluded));
  }
  static WeightSet even() { return WeightSet(WeightKind::Even, {}); }
  static WeightSet odd() { return WeightSet(WeightKind::Odd, {}); }
  // [b] = {1, ..., b}; empty for b = 0.
  static WeightSet initial_segment(std::uint32_t b) {
    std::vector<std::uint32_t> v(b);
    for (std::uint32_t i = 0; i < b; ++i) v[i] = i + 1;
    return finite(std::move(v));
  }
  // The positive integers (every nonempty tuple), i.e. disjunction.
  static WeightSet positive() { return cofinite({0}); }

  WeightSet() : WeightSet(WeightKind::Finite, {}) {}

  WeightKind kind() const noexcept { return kind_; }
  const std::vector<std::uint32_t>& values() const noexcept { return values_; }

  bool contains(std::uint64_t w) const noexcept {
    switch (kind_) {
      case WeightKind::Finite:
        return std::binary_search(values_.begin(), values_.end(), w);
      case WeightKind::Cofinite:
        return !std::binary_search(values_.begin(), values_.end(), w);
      case WeightKind::Even:
        return w % 2 == 0;
      case WeightKind::Odd:
        return w % 2 == 1;
    }
    return false;
  }

  // Largest member; defined only for nonempty finite sets.
  std::optional<std::uint32_t> max_member() const {
    if (kind_ == WeightKind::Finite && !values_.empty()) return values_.back();
    return std::nullopt;
  }

  // Largest excluded weight; defined only for cofinite sets that exclude
  // something.
  std::optional<std::uint32_t> max_excluded() const {
    if (kind_ == WeightKind::Cofinite && !values_.empty()) return values_.back();
    return std::nullopt;
  }

  // Largest w <= bound with contains(w).
  std::optional<std::uint64_t> max_member_up_to(std::uint64_t bound) const {
    switch (kind_) {
      case WeightKind::Finite: {
        auto it = std::upper_bound(values_.begin(), values_.end(), bound);
        if (it == values_.begin()) return std::nullopt;
        return *std::prev(it);
      }
      case WeightKind::Cofinite: {
        for (std::uint64_t w = bound;; --w) {
          if (contains(w)) return w;
          if (w == 0) return std::nullopt;
        }
      }
      case WeightKind::Even:
        return bound % 2 == 0 ? bound : bound - 1;
      case WeightKind::Odd:
        if (bound == 0) return std::nullopt;
        return bound % 2 == 1 ? bound : bound - 1;
    }
    return std::nullopt;
  }

  std::string to_string() const {
    switch (kind_) {
      case WeightKind::Even:
        return "even";
      case WeightKind::Odd:
        return "odd";
      default:
        break;
    }
    std::string out = kind_ == WeightKind::Finite ? "{" : "N0\\{";
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (i) out += ",";
      out += std::to_string(values_[i]);
    }
    return out + "}";
  }

  friend bool operator==(const WeightSet&, const WeightSet&) = default;

 private:
  WeightSet(WeightKind kind, std::vector<std::uint32_t> values)
      : kind_(kind), values_(std::move(values)) {
    std::sort(values_.begin(), values_.end());
    values_.erase(std::unique(values_.begin(), values_.end()), values_.end());
    if ((kind_ == WeightKind::Even || kind_ == WeightKind::Odd) &&
        !values_.empty())
      throw DomainError("parity weight sets carry no values");
  }

  WeightKind kind_;
  std::vector<std::uint32_t> values_;
};

inline bool weightset_contains(const WeightSet& ws, std::uint64_t w) {
  return ws.contains(w);
}

// W^A_m: the subsets of [m] whose size lies in A.
struct WRel {
  WeightSet weights;
  std::uint32_t arity = 1;
  friend bool operator==(const WRel&, const WRel&) = default;
};

// CW^A_{d,m}: if the whole head [d] is selected, the number of selected tail
// positions [d+1, d+m] must lie in A.
struct CWRel {
  WeightSet weights;
  std::uint32_t head = 0;
  std::uint32_t tail = 0;
  friend bool operator==(const CWRel&, const CWRel&) = default;
};

// A relation given by its member list.
struct ExplicitRel {
  std::uint32_t arity = 1;
  std::vector<PositionSet> members;  // canonical: sorted, duplicate free
  friend bool operator==(const ExplicitRel&, const ExplicitRel&) = default;
};

class Relation {
 public:
  using Shape = std::variant<WRel, CWRel, ExplicitRel>;

  static Relation w(WeightSet weights, std::uint32_t arity,
                    std::uint64_t index = 1) {
    return Relation(WRel{std::move(weights), arity}, index);
  }
  static Relation cw(WeightSet weights, std::uint32_t head, std::uint32_t tail,
                     std::uint64_t index = 1) {
    return Relation(CWRel{std::move(weights), head, tail}, index);
  }
  static Relation explicit_members(std::uint32_t arity,
                                   std::vector<PositionSet> members,
                                   std::uint64_t index = 1) {
    for (auto& m : members) {
      m = canonical_set(std::move(m));
      if (!m.empty() && (m.front() < 1 || m.back() > arity))
        throw DomainError("explicit member " + set_to_string(m) +
                          " outside [" + std::to_string(arity) + "]");
    }
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    return Relation(ExplicitRel{arity, std::move(members)}, index);
  }

  const Shape& shape() const noexcept { return shape_; }
  std::uint64_t index() const noexcept { return index_; }

  const WRel* as_w() const noexcept { return std::get_if<WRel>(&shape_); }
  const CWRel* as_cw() const noexcept { return std::get_if<CWRel>(&shape_); }
  const ExplicitRel* as_explicit() const noexcept {
    return std::get_if<ExplicitRel>(&shape_);
  }

  std::uint32_t arity() const noexcept {
    if (auto* r = as_w()) return r->arity;
    if (auto* r = as_cw()) return r->head + r->tail;
    return as_explicit()->arity;
  }

  // Membership of a canonical position set already known to lie in [arity].
  bool contains_unchecked(const PositionSet& t) const {
    if (auto* r = as_w()) return r->weights.contains(t.size());
    if (auto* r = as_cw()) {
      const bool head_full =
          r->head == 0 || (t.size() >= r->head && t[r->head - 1] == r->head);
      if (!head_full) return true;
      return r->weights.contains(t.size() - r->head);
    }
    const auto& m = as_explicit()->members;
    return std::binary_search(m.begin(), m.end(), t);
  }

  std::string to_string() const {
    if (auto* r = as_w())
      return "W^" + r->weights.to_string() + "_" + std::to_string(r->arity);
    if (auto* r = as_cw())
      return "CW^" + r->weights.to_string() + "_{" + std::to_string(r->head) +
             "," + std::to_string(r->tail) + "}";
    auto* r = as_explicit();
    std::string out = "R_" + std::to_string(r->arity) + "[";
    for (std::size_t i = 0; i < r->members.size(); ++i) {
      if (i) out += " ";
      out += set_to_string(r->members[i]);
    }
    return out + "]";
  }

  friend bool operator==(const Relation&, const Relation&) = default;

 private:
  Relation(Shape shape, std::uint64_t index)
      : shape_(std::move(shape)), index_(index) {
    if (index_ == 0) throw DomainError("relation index must be positive");
    if (arity() == 0) throw DomainError("relation arity must be positive");
  }

  Shape shape_;
  std::uint64_t index_ = 1;
};

inline void check_position_set(const Relation& rel, const PositionSet& t) {
  if (!is_canonical_set(t))
    throw DomainError("position set " + set_to_string(t) +
                      " is not strictly increasing");
  if (!t.empty() && (t.front() < 1 || t.back() > rel.arity()))
    throw DomainError("position set " + set_to_string(t) + " not within [" +
                      std::to_string(rel.arity()) + "]");
}

inline bool relation_membership(const Relation& rel, const PositionSet& t) {
  check_position_set(rel, t);
  return rel.contains_unchecked(t);
}

// Size of the largest member, or nullopt when the relation is empty.
inline std::optional<std::uint64_t> max_member_size(const Relation& rel) {
  if (auto* r = rel.as_w()) return r->weights.max_member_up_to(r->arity);
  if (auto* r = rel.as_cw()) {
    std::optional<std::uint64_t> best;
    if (r->head > 0) best = r->head - 1 + std::uint64_t{r->tail};
    if (auto w = r->weights.max_member_up_to(r->tail)) {
      const std::uint64_t full = r->head + *w;
      if (!best || full > *best) best = full;
    }
    return best;
  }
  std::optional<std::uint64_t> best;
  for (const auto& m : rel.as_explicit()->members)
    if (!best || m.size() > *best) best = m.size();
  return best;
}

// Step accounting for membership checks: f(|T|) * ceil(log2(i + 1))^c with a
// linear checker cost f(w) = slope * w + intercept.
struct CostModel {
  std::uint32_t exponent = 1;
  std::uint64_t slope = 1;
  std::uint64_t intercept = 1;

  std::uint64_t checker_cost(std::uint64_t weight) const {
    return slope * weight + intercept;
  }

  static std::uint64_t index_bits(std::uint64_t index) {
    return static_cast<std::uint64_t>(std::bit_width(index));
  }

  std::uint64_t cost(std::uint64_t index, std::uint64_t weight) const {
    std::uint64_t factor = 1;
    const auto bits = index_bits(index);
    for (std::uint32_t i = 0; i < exponent; ++i) factor *= bits;
    return checker_cost(weight) * factor;
  }

  friend bool operator==(const CostModel&, const CostModel&) = default;
};

inline std::uint64_t membership_cost(const CostModel& cm, const Relation& rel,
                                     const PositionSet& t) {
  check_position_set(rel, t);
  return cm.cost(rel.index(), t.size());
}

}  // namespace pcsp
