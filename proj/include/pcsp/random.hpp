#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pcsp/errors.hpp"
#include "pcsp/instances.hpp"
#include "pcsp/relations.hpp"

namespace pcsp {

// mt19937_64's output sequence is fixed by the standard; the distributions are
// not, so bounded draws are done here to keep generated corpora identical
// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw UsageError("Rng::below(0)");
    return engine_() % bound;
  }
  std::uint64_t between(std::uint64_t lo, std::uint64_t hi) {
    return lo + below(hi - lo + 1);
  }
  bool chance(std::uint32_t percent) { return below(100) < percent; }

 private:
  std::mt19937_64 engine_;
};

enum class LanguageProfile {
  WFinite,    // one shared finite weight set for the whole body
  WCofinite,  // one shared cofinite weight set
  WEven,
  WOdd,
  WMixed,    // independent W^A per constraint
  Parity,    // W^even / W^odd per constraint
  CW,        // CW^{[b]} with shared b
  Explicit,  // explicit relations with members of size <= member_bound
  Mixed,     // any of the above per constraint
  ExactOne,  // W^{{1}} everywhere (weighted exact CNF)
};

struct GenConfig {
  std::uint32_t n = 6;
  std::uint32_t k = 2;
  WeightMode weight = WeightMode::Exact;
  LanguageProfile profile = LanguageProfile::WFinite;
  std::uint32_t min_body = 0;
  std::uint32_t max_body = 4;
  std::uint32_t min_arity = 1;
  std::uint32_t max_arity = 4;
  std::uint32_t repeat_percent = 20;  // chance a scope slot reuses a variable
  std::uint32_t cw_bound = 1;         // b of CW^{[b]}
  std::uint32_t member_bound = 2;     // d for Explicit
  std::uint32_t max_weight = 4;       // largest weight drawn into W^A sets
};

namespace detail {

inline WeightSet random_weightset(Rng& rng, WeightKind kind,
                                  std::uint32_t max_weight) {
  std::vector<std::uint32_t> values;
  switch (kind) {
    case WeightKind::Finite:
      for (std::uint32_t w = 0; w <= max_weight; ++w)
        if (rng.chance(40)) values.push_back(w);
      if (values.empty())
        values.push_back(static_cast<std::uint32_t>(rng.between(0, max_weight)));
      return WeightSet::finite(std::move(values));
    case WeightKind::Cofinite:
      for (std::uint32_t w = 0; w <= max_weight; ++w)
        if (rng.chance(40)) values.push_back(w);
      return WeightSet::cofinite(std::move(values));
    case WeightKind::Even:
      return WeightSet::even();
    case WeightKind::Odd:
      return WeightSet::odd();
  }
  return WeightSet::even();
}

inline Relation random_explicit(Rng& rng, std::uint32_t arity,
                                std::uint32_t member_bound) {
  std::vector<PositionSet> members;
  const auto count = rng.between(0, 2 * arity);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto size = rng.between(0, std::min(member_bound, arity));
    PositionSet m;
    while (m.size() < size) {
      const auto p = static_cast<std::uint32_t>(rng.between(1, arity));
      if (std::find(m.begin(), m.end(), p) == m.end()) m.push_back(p);
    }
    members.push_back(std::move(m));
  }
  return Relation::explicit_members(arity, std::move(members));
}

}  // namespace detail

// Deterministic in (seed, config).
inline Instance random_instance(std::uint64_t seed, const GenConfig& cfg) {
  if (cfg.n == 0 && cfg.max_body > 0)
    throw UsageError("a nonempty body needs at least one variable");
  if (cfg.min_arity == 0 || cfg.min_arity > cfg.max_arity)
    throw UsageError("arity bounds must satisfy 1 <= min_arity <= max_arity");
  if (cfg.min_body > cfg.max_body)
    throw UsageError("body bounds must satisfy min_body <= max_body");

  Rng rng(seed);
  std::vector<std::string> vars;
  for (std::uint32_t i = 1; i <= cfg.n; ++i)
    vars.push_back("x" + std::to_string(i));

  const auto shared_finite =
      detail::random_weightset(rng, WeightKind::Finite, cfg.max_weight);
  const auto shared_cofinite =
      detail::random_weightset(rng, WeightKind::Cofinite, cfg.max_weight);

  auto make_relation = [&](LanguageProfile profile,
                           std::uint32_t arity) -> Relation {
    switch (profile) {
      case LanguageProfile::WFinite:
        return Relation::w(shared_finite, arity);
      case LanguageProfile::WCofinite:
        return Relation::w(shared_cofinite, arity);
      case LanguageProfile::WEven:
        return Relation::w(WeightSet::even(), arity);
      case LanguageProfile::WOdd:
        return Relation::w(WeightSet::odd(), arity);
      case LanguageProfile::WMixed:
        return Relation::w(
            detail::random_weightset(
                rng, static_cast<WeightKind>(rng.below(4)), cfg.max_weight),
            arity);
      case LanguageProfile::Parity:
        return Relation::w(rng.chance(50) ? WeightSet::even() : WeightSet::odd(),
                           arity);
      case LanguageProfile::CW: {
        const auto head = static_cast<std::uint32_t>(
            rng.between(0, std::min<std::uint32_t>(2, arity)));
        return Relation::cw(WeightSet::initial_segment(cfg.cw_bound), head,
                            arity - head);
      }
      case LanguageProfile::Explicit:
        return detail::random_explicit(rng, arity, cfg.member_bound);
      case LanguageProfile::ExactOne:
        return Relation::w(WeightSet::finite({1}), arity);
      case LanguageProfile::Mixed:
        break;
    }
    return Relation::w(WeightSet::even(), arity);
  };

  std::vector<Constraint> body;
  const auto body_len = rng.between(cfg.min_body, cfg.max_body);
  for (std::uint64_t c = 0; c < body_len; ++c) {
    const auto arity =
        static_cast<std::uint32_t>(rng.between(cfg.min_arity, cfg.max_arity));
    auto profile = cfg.profile;
    if (profile == LanguageProfile::Mixed) {
      static constexpr LanguageProfile kChoices[] = {
          LanguageProfile::WMixed, LanguageProfile::CW,
          LanguageProfile::Explicit};
      profile = kChoices[rng.below(3)];
    }
    Relation rel = make_relation(profile, arity);
    std::vector<VarId> scope;
    for (std::uint32_t j = 0; j < arity; ++j) {
      if (!scope.empty() && rng.chance(cfg.repeat_percent))
        scope.push_back(scope[rng.below(scope.size())]);
      else
        scope.push_back(static_cast<VarId>(rng.below(cfg.n)));
    }
    body.push_back(Constraint{std::move(rel), std::move(scope)});
  }
  return Instance(std::move(vars), {cfg.weight, cfg.k}, std::move(body));
}

}  // namespace pcsp
