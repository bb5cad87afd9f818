#include <gtest/gtest.h>

#include "pcsp/partials.hpp"
#include "pcsp/random.hpp"

using namespace pcsp;

namespace {

std::vector<PositionSet> all_subsets(std::uint32_t m) {
  std::vector<PositionSet> out;
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    PositionSet s;
    for (std::uint32_t p = 1; p <= m; ++p)
      if (mask & (1u << (p - 1))) s.push_back(p);
    out.push_back(s);
  }
  return out;
}

bool proper_subset(const PositionSet& a, const PositionSet& b) {
  return a.size() < b.size() && is_subset(a, b);
}

}  // namespace

TEST(Completions, Examples) {
  const auto odd3 = Relation::w(WeightSet::odd(), 3);
  EXPECT_EQ(completions(odd3, {}),
            (std::vector<PositionSet>{{1}, {2}, {3}}));
  EXPECT_EQ(completions(odd3, {1, 2}), (std::vector<PositionSet>{{1, 2, 3}}));
  const auto r = Relation::explicit_members(4, {{1}, {2, 3}});
  EXPECT_TRUE(completions(r, {4}).empty());
}

TEST(Completions, MemberIsUsageError) {
  EXPECT_THROW(completions(Relation::w(WeightSet::odd(), 3), {1}), UsageError);
}

TEST(Completions, MatchMinimalSupersetScan) {
  Rng rng(3);
  for (int round = 0; round < 150; ++round) {
    const auto q = static_cast<std::uint32_t>(rng.between(1, 6));
    const Relation rel =
        round % 2 ? detail::random_explicit(rng, q, 4)
                  : Relation::w(detail::random_weightset(
                                    rng, static_cast<WeightKind>(rng.below(4)), 4),
                                q);
    const auto subs = all_subsets(q);
    for (const auto& t : subs) {
      if (relation_membership(rel, t)) continue;
      std::vector<PositionSet> want;
      for (const auto& u : subs) {
        if (!proper_subset(t, u) || !relation_membership(rel, u)) continue;
        bool minimal = true;
        for (const auto& v : subs)
          if (proper_subset(t, v) && proper_subset(v, u) && relation_membership(rel, v))
            minimal = false;
        if (minimal) want.push_back(u);
      }
      std::sort(want.begin(), want.end());
      EXPECT_EQ(completions(rel, t), want);
    }
  }
}

TEST(Partials, EmptySetIsPartialWhenExcluded) {
  const auto table = compute_partials(Relation::w(WeightSet::finite({1}), 3));
  ASSERT_FALSE(table.partials.empty());
  EXPECT_EQ(table.partials.front(), PositionSet{});
  EXPECT_EQ(table.completions.at({}), (std::vector<PositionSet>{{1}, {2}, {3}}));
}

TEST(Partials, TableInvariants) {
  Rng rng(17);
  for (int round = 0; round < 120; ++round) {
    const auto q = static_cast<std::uint32_t>(rng.between(1, 7));
    const auto rel = detail::random_explicit(rng, q, 3);
    const auto table = compute_partials(rel);
    EXPECT_TRUE(std::is_sorted(table.partials.begin(), table.partials.end()));
    for (const auto& t : table.partials) {
      EXPECT_FALSE(relation_membership(rel, t));
      for (const auto& u : table.completions.at(t)) {
        EXPECT_TRUE(relation_membership(rel, u));
        EXPECT_TRUE(proper_subset(t, u));
      }
      EXPECT_EQ(table.completions.at(t), completions(rel, t));
    }
    if (!relation_membership(rel, {}))
      EXPECT_EQ(table.partials.front(), PositionSet{});
  }
}

TEST(Partials, PartialDefinitionByDirectCheck) {
  // T is partial iff T not in R and each partial proper subset has a
  // completion inside T; checked by recomputing over all subsets.
  Rng rng(23);
  for (int round = 0; round < 60; ++round) {
    const auto q = static_cast<std::uint32_t>(rng.between(1, 6));
    const auto rel = detail::random_explicit(rng, q, 3);
    const auto table = compute_partials(rel);
    std::vector<PositionSet> subs = all_subsets(q);
    std::stable_sort(subs.begin(), subs.end(),
                     [](const auto& a, const auto& b) { return a.size() < b.size(); });
    std::vector<PositionSet> partial;
    for (const auto& t : subs) {
      if (relation_membership(rel, t)) continue;
      bool ok = true;
      for (const auto& t2 : partial) {
        if (!proper_subset(t2, t)) continue;
        const auto us = completions(rel, t2);
        ok = ok && std::any_of(us.begin(), us.end(),
                               [&](const auto& u) { return is_subset(u, t); });
      }
      if (ok) partial.push_back(t);
    }
    std::sort(partial.begin(), partial.end());
    EXPECT_EQ(table.partials, partial);
  }
}

TEST(Partials, CharacterizationMatchesMembership) {
  Rng rng(29);
  for (int round = 0; round < 80; ++round) {
    const auto q = static_cast<std::uint32_t>(rng.between(1, 8));
    const Relation rel =
        round % 3 == 0
            ? Relation::cw(WeightSet::initial_segment(1),
                           static_cast<std::uint32_t>(1 + rng.below(q)), 0)
            : detail::random_explicit(rng, q, 4);
    const auto table = compute_partials(rel);
    for (const auto& d : all_subsets(rel.arity()))
      EXPECT_EQ(characterize_membership(table, d), relation_membership(rel, d));
  }
}

TEST(Partials, CapacityBound) {
  EXPECT_THROW(compute_partials(Relation::w(WeightSet::odd(), 13)), CapacityError);
  EXPECT_NO_THROW(compute_partials(Relation::w(WeightSet::odd(), 13), 13));
  EXPECT_THROW(compute_partials(Relation::w(WeightSet::odd(), 3), 25), UsageError);
}

TEST(Partials, Examples) {
  const auto even2 = compute_partials(Relation::w(WeightSet::even(), 2));
  EXPECT_TRUE(std::find(even2.partials.begin(), even2.partials.end(), PositionSet{}) ==
              even2.partials.end());

  const auto odd3 = compute_partials(Relation::w(WeightSet::odd(), 3));
  for (const PositionSet& t :
       {PositionSet{}, PositionSet{1, 2}, PositionSet{1, 3}, PositionSet{2, 3}})
    EXPECT_TRUE(odd3.completions.count(t)) << set_to_string(t);
  EXPECT_EQ(odd3.completions.at({1, 2}), (std::vector<PositionSet>{{1, 2, 3}}));

  EXPECT_FALSE(characterize_membership(odd3, {1, 2}));
  EXPECT_TRUE(characterize_membership(even2, {}));
}

TEST(Partials, MinimalNonMembersArePartial) {
  Rng rng(31);
  for (int round = 0; round < 80; ++round) {
    const auto q = static_cast<std::uint32_t>(rng.between(1, 6));
    const auto rel = detail::random_explicit(rng, q, 3);
    const auto table = compute_partials(rel);
    const auto subs = all_subsets(q);
    for (const auto& t : subs) {
      if (relation_membership(rel, t)) continue;
      const bool minimal = std::none_of(subs.begin(), subs.end(), [&](const auto& s) {
        return proper_subset(s, t) && !relation_membership(rel, s);
      });
      if (minimal) EXPECT_TRUE(table.completions.count(t)) << set_to_string(t);
    }
  }
}

TEST(Partials, CompletionsRespectMemberBound) {
  Rng rng(37);
  for (int round = 0; round < 80; ++round) {
    const auto q = static_cast<std::uint32_t>(rng.between(1, 7));
    const std::uint32_t d = static_cast<std::uint32_t>(rng.between(1, 3));
    const auto rel = detail::random_explicit(rng, q, d);
    const auto table = compute_partials(rel);
    for (const auto& t : table.partials) {
      for (const auto& u : table.completions.at(t)) EXPECT_LE(u.size(), d);
      if (t.size() >= d) EXPECT_TRUE(table.completions.at(t).empty());
    }
  }
}

TEST(Partials, EveryMemberContainsACompletionOfItsNonMemberSubsets) {
  Rng rng(41);
  for (int round = 0; round < 60; ++round) {
    const auto q = static_cast<std::uint32_t>(rng.between(1, 6));
    const auto rel = detail::random_explicit(rng, q, 4);
    for (const auto& w : all_subsets(q)) {
      if (!relation_membership(rel, w)) continue;
      for (const auto& t : all_subsets(q)) {
        if (!proper_subset(t, w) || relation_membership(rel, t)) continue;
        const auto us = completions(rel, t);
        EXPECT_TRUE(std::any_of(us.begin(), us.end(),
                                [&](const auto& u) { return is_subset(u, w); }));
      }
    }
  }
}
