#include <gtest/gtest.h>

#include <set>

#include "pcsp/machine.hpp"
#include "pcsp/random.hpp"

using namespace pcsp;

namespace {

const WeightParameter kExact1{WeightMode::Exact, 1};

GenConfig mixed_config(std::uint64_t seed) {
  GenConfig cfg;
  cfg.profile = LanguageProfile::Mixed;
  cfg.n = static_cast<std::uint32_t>(1 + seed % 12);
  cfg.k = static_cast<std::uint32_t>(seed % 4);
  cfg.max_arity = 4;
  cfg.repeat_percent = 25;
  return cfg;
}

GenConfig cw_config(std::uint64_t seed) {
  GenConfig cfg;
  cfg.profile = LanguageProfile::CW;
  cfg.n = static_cast<std::uint32_t>(1 + seed % 12);
  cfg.k = static_cast<std::uint32_t>(seed % 4);
  cfg.cw_bound = static_cast<std::uint32_t>(seed % 3);
  cfg.max_body = 5;
  cfg.max_arity = 4;
  cfg.repeat_percent = 25;
  return cfg;
}

SimulateOptions pruned() {
  SimulateOptions o;
  o.prune = true;
  return o;
}

// The union of Delta_{B,{v}} over v in A, by scanning the body.
std::set<std::size_t> direct_union(const Instance& inst, const VarSet& head,
                                   const VarSet& a) {
  std::set<std::size_t> out;
  for (VarId v : a)
    for (auto i : delta_set(inst, head, {v})) out.insert(i);
  return out;
}

}  // namespace

TEST(Appearance, RequiredSetAndAlwaysReject) {
  const Instance one({"x", "y"}, kExact1,
                     {{Relation::w(WeightSet::finite({1}), 2), {0, 1}},
                      {Relation::w(WeightSet::even(), 2), {0, 1}}});
  const auto m = reduce_appearance(one);
  const auto& chk = std::get<AppearanceChecker>(m.checker);
  EXPECT_EQ(chk.required, (std::vector<std::size_t>{0}));
  EXPECT_EQ(chk.touching[0], (std::vector<std::size_t>{0, 1}));

  const auto r = Relation::w(WeightSet::finite({1}), 1);
  const Instance three({"x", "y", "z"}, kExact1, {{r, {0}}, {r, {1}}, {r, {2}}});
  EXPECT_EQ(param_t(three), 1u);
  const auto rej = reduce_appearance(three);
  EXPECT_TRUE(std::holds_alternative<AlwaysReject>(rej.checker));
  EXPECT_EQ(rej.budget, 0u);
  const auto sim = simulate(rej);
  EXPECT_FALSE(sim.accepted);
  EXPECT_EQ(sim.max_branch_steps, 0u);
}

TEST(Appearance, AtMostIsUsageError) {
  const Instance inst({"x"}, {WeightMode::AtMost, 1}, {});
  EXPECT_THROW(reduce_appearance(inst), UsageError);
}

TEST(Appearance, TouchingSetsBoundedByT) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto inst = random_instance(seed, mixed_config(seed));
    const auto m = reduce_appearance(inst);
    if (auto* chk = std::get_if<AppearanceChecker>(&m.checker)) {
      for (const auto& ev : chk->touching) EXPECT_LE(ev.size(), param_t(inst));
    } else {
      EXPECT_TRUE(std::holds_alternative<AlwaysReject>(m.checker));
    }
  }
}

TEST(Appearance, MatchesOracle) {
  int sat = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto inst = random_instance(seed, mixed_config(seed));
    const auto m = reduce_appearance(inst);
    const auto want = brute_force_solve(inst);
    const auto got = simulate(m, pruned());
    ASSERT_EQ(got.accepted, want.has_value()) << seed;
    if (!got.accepted) continue;
    ++sat;
    EXPECT_TRUE(satisfies(inst, *got.witness));
    EXPECT_EQ(got.witness, want);
    EXPECT_LE(got.max_branch_steps, m.budget);
  }
  EXPECT_GT(sat, 50);
}

TEST(Appearance, ExhaustiveAndPrunedAgree) {
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    const auto inst = random_instance(seed, mixed_config(seed));
    const auto m = reduce_appearance(inst);
    const auto a = simulate(m);
    const auto b = simulate(m, pruned());
    EXPECT_EQ(a.accepted, b.accepted);
    EXPECT_EQ(a.witness, b.witness);
    EXPECT_LE(b.branches, a.branches);
  }
}

TEST(Appearance, EveryBranchWithinBudget) {
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    auto cfg = mixed_config(seed);
    cfg.max_body = 6;
    const auto inst = random_instance(seed, cfg);
    CostModel cm;
    cm.exponent = static_cast<std::uint32_t>(seed % 3);
    const auto m = reduce_appearance(inst, cm);
    SimulateOptions all;
    all.stop_at_first_accept = false;
    EXPECT_LE(simulate(m, all).max_branch_steps, m.budget) << seed;
  }
}

TEST(Appearance, BudgetFormula) {
  CostModel cm;
  // 1 + 3*6 + 6 * (6 + 1) * bit_width(5)
  EXPECT_EQ(appearance_budget(3, 2, cm, 5), 1u + 18u + 6u * 7u * 3u);
  EXPECT_EQ(appearance_budget(0, 4, cm, 1), 1u);
}

TEST(DeltaSet, Examples) {
  const auto cw = Relation::cw(WeightSet::initial_segment(1), 1, 2);
  const Instance inst({"x", "y", "z", "w"}, kExact1,
                      {{cw, {0, 1, 2}}, {cw, {0, 2, 3}}, {cw, {1, 0, 0}}});
  EXPECT_EQ(delta_set(inst, {0}, {}), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(delta_set(inst, {0}, {2}), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(delta_set(inst, {0}, {1}), (std::vector<std::size_t>{0}));
  EXPECT_EQ(delta_set(inst, {1}, {0}), (std::vector<std::size_t>{2}));
  EXPECT_TRUE(delta_set(inst, {3}, {}).empty());
}

TEST(DeltaSet, NonCwIsUsageError) {
  const Instance inst({"x"}, kExact1, {{Relation::w(WeightSet::even(), 1), {0}}});
  EXPECT_THROW(delta_set(inst, {}, {}), UsageError);
  const Instance mixed_b({"x"}, kExact1,
                         {{Relation::cw(WeightSet::initial_segment(1), 0, 1), {0}},
                          {Relation::cw(WeightSet::initial_segment(2), 0, 1), {0}}});
  EXPECT_THROW(reduce_cw(mixed_b), UsageError);
  const Instance not_segment({"x"}, kExact1,
                             {{Relation::cw(WeightSet::finite({2}), 0, 1), {0}}});
  EXPECT_THROW(reduce_cw(not_segment), UsageError);
}

TEST(Tables, SingleConstraintKeys) {
  const Instance inst({"x", "y", "z"}, {WeightMode::Exact, 2},
                      {{Relation::cw(WeightSet::initial_segment(1), 1, 2), {0, 1, 2}}});
  const auto t = build_cw_tables(inst, 2);
  std::vector<std::string> keys;
  for (const auto& [k, _] : t.delta_sizes) keys.push_back(encode_key(k.head, k.group));
  EXPECT_EQ(keys, (std::vector<std::string>{"0|", "0|1", "0|1,2", "0|2"}));
  EXPECT_EQ(lookup(t.lambda, {0}, {1, 2}), 2u);
  EXPECT_EQ(lookup(t.lambda, {0}, {}), 0u);
  EXPECT_EQ(lookup(t.delta_sizes, {1}, {2}), 0u);
  EXPECT_EQ(t.delta_empty.at({0}), 1u);

  // k0 = 1 caps |G| at 1 and |B| at 1.
  const auto small = build_cw_tables(inst, 1);
  EXPECT_EQ(small.delta_sizes.size(), 3u);
  EXPECT_TRUE(build_cw_tables(inst, 0).delta_sizes.empty());
}

TEST(Tables, LambdaCountsTailMultiplicity) {
  const Instance inst({"x", "y"}, {WeightMode::Exact, 2},
                      {{Relation::cw(WeightSet::initial_segment(2), 1, 3), {0, 1, 1, 1}},
                       {Relation::cw(WeightSet::initial_segment(2), 1, 1), {0, 1}}});
  const auto t = build_cw_tables(inst, 2);
  EXPECT_EQ(lookup(t.lambda, {0}, {1}), 3u);
  EXPECT_EQ(lookup(t.delta_sizes, {0}, {1}), 2u);
}

TEST(Tables, KeyRoundTrip) {
  EXPECT_EQ(decode_key("0,2|1"), (TableKey{{0, 2}, {1}}));
  EXPECT_EQ(decode_key("|"), (TableKey{{}, {}}));
  EXPECT_THROW(decode_key("2,0|"), DomainError);
  EXPECT_THROW(decode_key("0"), DomainError);
  EXPECT_THROW(decode_key("a|"), DomainError);
}

TEST(Tables, CardinalityBound) {
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    auto cfg = cw_config(seed);
    cfg.max_body = 8;
    const auto inst = random_instance(seed, cfg);
    const auto t = build_cw_tables(inst, cfg.k);
    EXPECT_LE(t.delta_sizes.size(), cw_table_capacity(input_size(inst), t.b));
    for (const auto& [k, _] : t.delta_sizes) {
      EXPECT_LE(k.head.size(), cfg.k);
      EXPECT_LE(k.group.size(), std::min(t.b + 1, cfg.k));
    }
  }
}

TEST(InclusionExclusion, Trivial) {
  const Instance inst({"x", "y"}, kExact1,
                      {{Relation::cw(WeightSet::initial_segment(1), 1, 1), {0, 1}}});
  const auto t = build_cw_tables(inst, 2);
  EXPECT_EQ(inclusion_exclusion_union(t, {0}, {}, 1), 0);
  EXPECT_EQ(inclusion_exclusion_union(t, {0}, {1}, 0), 0);
  EXPECT_EQ(inclusion_exclusion_union(t, {0}, {1}, 1), 1);
}

TEST(InclusionExclusion, SumEqualsDirectUnion) {
  Rng rng(99);
  int checked = 0;
  for (std::uint64_t seed = 0; checked < 400 && seed < 20000; ++seed) {
    auto cfg = cw_config(seed);
    cfg.cw_bound = static_cast<std::uint32_t>(1 + seed % 3);
    cfg.k = 3;
    cfg.n = static_cast<std::uint32_t>(3 + seed % 8);
    const auto inst = random_instance(seed, cfg);
    const auto t = build_cw_tables(inst, cfg.k);
    std::vector<VarId> a;
    for (VarId v = 0; v < cfg.n; ++v)
      if (a.size() < cfg.k && rng.chance(40)) a.push_back(v);
    for (const auto& [head, _] : t.delta_empty) {
      bool premise = true;
      for (auto i : delta_set(inst, head, {})) {
        const auto& c = inst.body()[i];
        const auto d = c.relation.as_cw()->head;
        std::uint64_t hits = 0;
        for (std::size_t j = d; j < c.scope.size(); ++j)
          hits += std::binary_search(a.begin(), a.end(), c.scope[j]);
        premise = premise && hits <= t.b;
      }
      if (!premise) continue;
      ++checked;
      EXPECT_EQ(inclusion_exclusion_union(t, head, a, t.b),
                static_cast<std::int64_t>(direct_union(inst, head, a).size()));
    }
  }
  EXPECT_EQ(checked, 400);
}

TEST(InclusionExclusion, FullUnionIffEveryTailHit) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto inst = random_instance(seed, cw_config(seed));
    const auto n = static_cast<VarId>(inst.num_variables());
    Rng rng(seed);
    VarSet a;
    for (VarId v = 0; v < n; ++v)
      if (rng.chance(40)) a.push_back(v);
    std::set<VarSet> heads;
    for (const auto& c : inst.body()) heads.insert(detail::cw_shape(c).head);
    for (const auto& head : heads) {
      const auto all = delta_set(inst, head, {});
      bool every = true;
      for (auto i : all) {
        const auto s = detail::cw_shape(inst.body()[i]);
        every = every && std::any_of(s.tail.begin(), s.tail.end(), [&](VarId v) {
                  return std::binary_search(a.begin(), a.end(), v);
                });
      }
      EXPECT_EQ(direct_union(inst, head, a).size() == all.size(), every);
    }
  }
}

TEST(Cw, MatchesOracle) {
  int sat = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto inst = random_instance(seed, cw_config(seed));
    const auto m = reduce_cw(inst);
    const auto want = brute_force_solve(inst);
    const auto got = simulate(m, pruned());
    ASSERT_EQ(got.accepted, want.has_value()) << seed;
    if (!got.accepted) continue;
    ++sat;
    EXPECT_TRUE(satisfies(inst, *got.witness));
    EXPECT_EQ(got.witness, want);
    EXPECT_EQ(got.max_branch_steps, m.budget);
  }
  EXPECT_GT(sat, 50);
}

TEST(Cw, ExhaustiveAndPrunedAgree) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto inst = random_instance(seed, cw_config(seed));
    const auto m = reduce_cw(inst);
    SimulateOptions all;
    all.stop_at_first_accept = false;
    const auto a = simulate(m, all);
    const auto b = simulate(m, pruned());
    EXPECT_EQ(a.accepted, b.accepted) << seed;
    EXPECT_EQ(a.witness, b.witness) << seed;
    EXPECT_LE(a.max_branch_steps, m.budget);
  }
}

TEST(Cw, AcceptedGuessesAreExactlyTheSolutions) {
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    auto cfg = cw_config(seed);
    cfg.n = static_cast<std::uint32_t>(1 + seed % 7);
    const auto inst = random_instance(seed, cfg);
    const auto m = reduce_cw(inst);
    const auto checker = detail::compile(m);
    const auto k = inst.weight().k;
    for_each_subset_lex(inst.num_variables(), k, k, [&](const std::vector<VarId>& a) {
      std::vector<char> mask(inst.num_variables(), 0);
      for (VarId v : a) mask[v] = 1;
      const auto run = checker->run(a, mask);
      EXPECT_EQ(run.accepted, satisfies(inst, Assignment{a})) << seed;
      EXPECT_LE(run.steps, m.budget);
      return true;
    });
  }
}

TEST(Cw, AtMostIsUsageError) {
  const Instance inst({"x"}, {WeightMode::AtMost, 1}, {});
  EXPECT_THROW(reduce_cw(inst), UsageError);
}

TEST(Cw, BudgetIsFullRunCost) {
  // One branch that passes both steps charges every lookup.
  const Instance inst({"x", "y", "z"}, {WeightMode::Exact, 3}, {});
  const auto m = reduce_cw(inst);
  const auto r = simulate(m);
  ASSERT_TRUE(r.accepted);
  EXPECT_EQ(r.max_branch_steps, m.budget);
  EXPECT_EQ(m.budget, cw_budget(3, 0));
  // k0 = 1, b = 0: B in {{}, {a}}; step 2 has G in {{}, {a}}, step 3 only the
  // Delta_{B,{}} lookup and comparison.
  EXPECT_EQ(cw_budget(1, 0), 1u + (2 + 3) + (3 + 4) + 2 + 3);
}

TEST(Combine, WithAlwaysRejectRejectsEverything) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto inst = random_instance(seed, mixed_config(seed));
    const auto m = reduce_appearance(inst);
    GuessCheckMachine rej{m.universe, m.k0, 0, AlwaysReject{}};
    const auto c = combine_machines(m, rej);
    EXPECT_FALSE(simulate(c).accepted);
    EXPECT_EQ(c.budget, m.budget + m.k0 + 1);
  }
}

TEST(Combine, IdempotentOnAcceptance) {
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    const auto inst = random_instance(seed, cw_config(seed));
    const auto m = reduce_cw(inst);
    const auto c = combine_machines(m, m);
    const auto a = simulate(m, pruned());
    const auto b = simulate(c, pruned());
    EXPECT_EQ(a.accepted, b.accepted);
    EXPECT_EQ(a.witness, b.witness);
    if (b.accepted) EXPECT_EQ(b.max_branch_steps, 2 * m.budget + m.k0 + 1);
  }
}

TEST(Combine, MismatchIsUsageError) {
  GuessCheckMachine a{{"x"}, 1, 0, AlwaysReject{}};
  GuessCheckMachine b{{"y"}, 1, 0, AlwaysReject{}};
  GuessCheckMachine c{{"x"}, 2, 0, AlwaysReject{}};
  EXPECT_THROW(combine_machines(a, b), UsageError);
  EXPECT_THROW(combine_machines(a, c), UsageError);
}

TEST(Combine, AppearanceAndCwOverOneInstance) {
  // A CW body read both ways: the combined machine accepts iff both do.
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    const auto inst = random_instance(seed, cw_config(seed));
    const auto c = combine_machines(reduce_appearance(inst), reduce_cw(inst));
    const auto r = simulate(c, pruned());
    EXPECT_EQ(r.accepted, brute_force_solve(inst).has_value()) << seed;
  }
}

TEST(Simulate, BranchLimit) {
  const Instance inst({"a", "b", "c", "d", "e"}, {WeightMode::Exact, 2},
                      {{Relation::w(WeightSet::finite({0}), 1), {0}},
                       {Relation::w(WeightSet::finite({0}), 1), {1}},
                       {Relation::w(WeightSet::finite({0}), 1), {2}},
                       {Relation::w(WeightSet::finite({0}), 1), {3}},
                       {Relation::w(WeightSet::finite({0}), 1), {4}}});
  SimulateOptions o;
  o.branch_limit = 3;
  EXPECT_THROW(simulate(reduce_appearance(inst), o), CapacityError);
}

TEST(Simulate, UnsatisfiableRejectsEveryBranch) {
  // Both-or-neither around a triangle; no single variable fits.
  const auto r = Relation::w(WeightSet::finite({0, 2}), 2);
  const Instance inst({"x", "y", "z"}, {WeightMode::Exact, 1},
                      {{r, {0, 1}}, {r, {1, 2}}, {r, {0, 2}}});
  ASSERT_FALSE(brute_force_solve(inst));
  SimulateOptions all;
  all.stop_at_first_accept = false;
  const auto s = simulate(reduce_appearance(inst), all);
  EXPECT_FALSE(s.accepted);
  EXPECT_EQ(s.branches, 4u);  // {}, {x}, {y}, {z}
}
