#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>

#include "evasion/error.hpp"
#include "evasion/evoattack.hpp"
#include "evasion/random.hpp"
#include "toy.hpp"

namespace evasion {
namespace {

using test::FnDetector;

FeatureVector malware(const char* bits) {
  return {BitVector::from_string(bits), Label::Malware};
}

Individual with_fitness(const char* delta, double f) {
  return Individual{Perturbation(BitVector::from_string(delta)), f, false, Proba{}};
}

// Logistic score that drops by `weights[i]` for every set bit i.
FnDetector linear_detector(std::vector<double> weights, double bias) {
  const std::size_t n = weights.size();
  return FnDetector(n, [weights = std::move(weights), bias](const BitVector& x) {
    double z = bias;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (x.test(i)) z -= weights[i];
    }
    return 1.0 / (1.0 + std::exp(-z));
  });
}

AttackConfig config_for(const char* mask) {
  AttackConfig c;
  c.perturbable_mask = BitVector::from_string(mask);
  return c;
}

TEST(Fitness, ArithmeticExample) {
  FnDetector d(3, [](const BitVector&) { return 0.3; });
  const auto x = malware("100");
  EXPECT_DOUBLE_EQ(fitness(d, x, Perturbation(BitVector::from_string("011")), 100, 1), 32.0);
}

TEST(Fitness, IdentityAndSizeMonotone) {
  FnDetector d(4, [](const BitVector& b) { return b.test(0) ? 0.7 : 0.2; });
  const auto x = malware("1000");
  EXPECT_EQ(fitness(d, x, Perturbation(4), 100, 5), 100 * 0.7);
  FnDetector flat(4, [](const BitVector&) { return 0.4; });
  double prev = -1;
  for (const char* delta : {"0000", "0100", "0110", "0111"}) {
    const double f = fitness(flat, x, Perturbation(BitVector::from_string(delta)), 100, 1);
    EXPECT_GT(f, prev);
    prev = f;
  }
}

TEST(FitnessEvaluator, MemoizesAndCountsQueries) {
  auto calls = std::make_shared<int>(0);
  FnDetector d(3, [calls](const BitVector&) { ++*calls; return 0.9; });
  const auto x = malware("100");
  FitnessEvaluator memo(d, x, 100, 1, true, std::nullopt);
  const Perturbation p(BitVector::from_string("010"));
  memo.evaluate(p);
  memo.evaluate(p);
  EXPECT_EQ(memo.query_count(), 1u);
  FitnessEvaluator plain(d, x, 100, 1, false, 2);
  EXPECT_TRUE(plain.evaluate(p));
  EXPECT_TRUE(plain.evaluate(p));
  EXPECT_FALSE(plain.evaluate(p));
  EXPECT_TRUE(plain.budget_exhausted());
  EXPECT_EQ(plain.query_count(), 2u);
  EXPECT_EQ(*calls, 3);
}

TEST(InitializePopulation, SizesAndForcedZeroIndividual) {
  auto c = config_for("01111110");
  c.population_size = 150;
  c.init_prob = 0.5;
  const auto x = malware("01000000");
  const auto pop = initialize_population(x, c);
  ASSERT_EQ(pop.size(), 150u);
  EXPECT_EQ(pop[0].num(), 0u);
  bool any = false;
  for (const auto& ind : pop) {
    check_perturbation(x, ind.perturbation, c.perturbable_mask);
    any = any || ind.num() > 0;
  }
  EXPECT_TRUE(any);

  c.init_prob = 0.0;
  for (const auto& ind : initialize_population(x, c)) EXPECT_EQ(ind.num(), 0u);
}

TEST(InitializePopulation, NothingToPerturb) {
  auto c = config_for("110");
  EXPECT_THROW(initialize_population(malware("110"), c), PreconditionError);
}

TEST(Mutate, ZeroProbabilityIsIdentity) {
  Rng rng(1);
  const auto ind = with_fitness("0100", 3.0);
  const auto out = mutate(ind, {1, 2, 3}, 0.0, rng);
  EXPECT_EQ(out.perturbation, ind.perturbation);
}

TEST(Mutate, ProbabilityOneFlipsEveryEligibleBit) {
  Rng rng(1);
  const auto out = mutate(with_fitness("000", 1.0), {0, 1, 2}, 1.0, rng);
  EXPECT_EQ(out.perturbation.delta.to_string(), "111");
  EXPECT_FALSE(out.fitness);
  // Previously added bits flip back.
  const auto back = mutate(out, {0, 1, 2}, 1.0, rng);
  EXPECT_EQ(back.perturbation.delta.to_string(), "000");
}

TEST(Crossover, IdenticalParentsGiveIdenticalChildren) {
  Rng rng(3);
  const auto p = with_fitness("0110", 1.0);
  const auto [a, b] = crossover(p, p, rng);
  EXPECT_EQ(a.perturbation, p.perturbation);
  EXPECT_EQ(b.perturbation, p.perturbation);
}

TEST(Crossover, TwoBitEnumeration) {
  const std::set<std::pair<std::string, std::string>> allowed{
      {"10", "01"}, {"11", "00"}, {"01", "10"}, {"00", "11"}};
  std::set<std::pair<std::string, std::string>> seen;
  for (std::uint64_t s = 0; s < 200; ++s) {
    Rng rng(s);
    const auto [a, b] = crossover(with_fitness("10", 1), with_fitness("01", 2), rng);
    const std::pair<std::string, std::string> got{a.perturbation.delta.to_string(),
                                                  b.perturbation.delta.to_string()};
    EXPECT_TRUE(allowed.count(got)) << got.first << "," << got.second;
    seen.insert(got);
  }
  EXPECT_EQ(seen, allowed);
}

TEST(Crossover, ChildBitsComeFromParents) {
  Rng gen(8);
  for (int trial = 0; trial < 500; ++trial) {
    BitVector pa(40), pb(40);
    for (std::size_t j = 0; j < 40; ++j) {
      if (bernoulli(gen, 0.3)) pa.set(j);
      if (bernoulli(gen, 0.3)) pb.set(j);
    }
    Rng rng(trial);
    const auto [a, b] = crossover(Individual{Perturbation(pa), {}, {}, {}},
                                  Individual{Perturbation(pb), {}, {}, {}}, rng);
    for (std::size_t j = 0; j < 40; ++j) {
      const bool ca = a.perturbation.delta.test(j);
      const bool cb = b.perturbation.delta.test(j);
      EXPECT_TRUE(ca == pa.test(j) || ca == pb.test(j));
      EXPECT_EQ(ca != cb, pa.test(j) != pb.test(j));
    }
  }
}

TEST(Select, TournamentReturnsBestOfDraws) {
  const std::vector<Individual> pop{with_fitness("001", 20), with_fitness("010", 5),
                                    with_fitness("100", 10)};
  Rng rng(4), replay(4);
  const auto winners = select(pop, rng, 3);
  ASSERT_EQ(winners.size(), pop.size());
  for (auto w : winners) {
    std::size_t best = uniform_index(replay, 3);
    for (int k = 1; k < 3; ++k) {
      const std::size_t c = uniform_index(replay, 3);
      if (*pop[c].fitness < *pop[best].fitness) best = c;
    }
    EXPECT_EQ(w, best);
  }
}

TEST(Select, EqualFitnessIsUniform) {
  std::vector<Individual> pop(10, with_fitness("01", 1.0));
  std::vector<double> copies(10, 0.0);
  const int rounds = 2000;
  for (int r = 0; r < rounds; ++r) {
    Rng rng(r);
    for (auto w : select(pop, rng)) copies[w] += 1.0;
  }
  for (double c : copies) EXPECT_NEAR(c / rounds, 1.0, 0.1);
}

TEST(Better, FitnessThenSizeThenLex) {
  EXPECT_TRUE(better(with_fitness("11", 1), with_fitness("00", 2)));
  EXPECT_TRUE(better(with_fitness("01", 1), with_fitness("11", 1)));
  EXPECT_TRUE(better(with_fitness("01", 1), with_fitness("10", 1)));
  EXPECT_FALSE(better(with_fitness("01", 1), with_fitness("01", 1)));
}

// Malware iff bit0 = 1 and bit1 = 0.
FnDetector and_not_toy() {
  return FnDetector(2, [](const BitVector& b) { return b.test(0) && !b.test(1) ? 1.0 : 0.0; });
}

TEST(Attack, ToyDetectorFindsTheUniqueEvader) {
  const auto model = and_not_toy();
  const auto result = attack(model, malware("10"), config_for("01"));
  EXPECT_TRUE(result.success);
  EXPECT_EQ(result.best.perturbation.delta.to_string(), "01");
  EXPECT_EQ(result.num_added, 1u);
  EXPECT_LT(result.final_proba[1], 0.5);
}

TEST(Attack, AlreadyBenignIsRejected) {
  const auto model = and_not_toy();
  EXPECT_THROW(attack(model, malware("00"), config_for("01")), PreconditionError);
}

TEST(BruteForce, Examples) {
  FnDetector benign(3, [](const BitVector&) { return 0.1; });
  auto d = brute_force_min_perturbation(benign, malware("100"), BitVector::from_string("011"));
  ASSERT_TRUE(d);
  EXPECT_EQ(d->num(), 0u);

  FnDetector stubborn(3, [](const BitVector&) { return 0.9; });
  EXPECT_FALSE(brute_force_min_perturbation(stubborn, malware("100"),
                                            BitVector::from_string("011")));

  const auto toy = and_not_toy();
  d = brute_force_min_perturbation(toy, malware("10"), BitVector::from_string("01"));
  ASSERT_TRUE(d);
  EXPECT_EQ(d->delta.to_string(), "01");

  FnDetector wide(30, [](const BitVector&) { return 0.9; });
  EXPECT_THROW(brute_force_min_perturbation(wide, FeatureVector{BitVector(30), Label::Malware},
                                            BitVector::from_string(std::string(21, '1') +
                                                                   std::string(9, '0'))),
               PreconditionError);
}

TEST(BruteForce, LexicographicWithinSize) {
  // Any two of bits 1..3 evade; the first pair in lexicographic order is {1, 2}.
  FnDetector pairs(4, [](const BitVector& b) {
    const int n = b.test(1) + b.test(2) + b.test(3);
    return n >= 2 ? 0.1 : 0.9;
  });
  auto d = brute_force_min_perturbation(pairs, malware("1000"), BitVector::from_string("0111"));
  ASSERT_TRUE(d);
  EXPECT_EQ(d->delta.to_string(), "0110");
}

// 12 eligible bits with distinct weights; several need combining.
FnDetector twelve_bit_model() {
  return linear_detector({0, 0.9, 1.3, 0.4, 2.1, 0.2, 0.7, 1.1, 0.3, 1.7, 0.5, 0.6, 0.8}, 3.0);
}

TEST(Attack, MatchesOracleOnSmallLinearModel) {
  const auto model = twelve_bit_model();
  const auto x = malware("1000000000000");
  auto c = config_for("0111111111111");
  c.init_prob = 0.05;
  const auto oracle = brute_force_min_perturbation(model, x, c.perturbable_mask);
  ASSERT_TRUE(oracle);
  int matches = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    c.rng_seed = s;
    const auto r = attack(model, x, c);
    ASSERT_TRUE(r.success);
    EXPECT_GE(r.num_added, oracle->num());
    matches += r.num_added == oracle->num();
  }
  EXPECT_GE(matches, 18);
}

TEST(Attack, DeterministicForSeed) {
  const auto model = twelve_bit_model();
  const auto x = malware("1000000000000");
  auto c = config_for("0111111111111");
  c.rng_seed = 42;
  const auto a = attack(model, x, c);
  const auto b = attack(model, x, c);
  EXPECT_EQ(a.best.perturbation, b.best.perturbation);
  EXPECT_EQ(a.fitness_trajectory, b.fitness_trajectory);
  EXPECT_EQ(a.query_count, b.query_count);
}

TEST(Attack, TrajectoryIsNonIncreasingAndSuccessIsConsistent) {
  const auto model = twelve_bit_model();
  const auto x = malware("1000000000000");
  auto c = config_for("0111111111111");
  for (std::uint64_t s = 0; s < 30; ++s) {
    c.rng_seed = s;
    c.crossover = s % 2 == 0;
    const auto r = attack(model, x, c);
    for (std::size_t g = 1; g < r.fitness_trajectory.size(); ++g) {
      EXPECT_LE(r.fitness_trajectory[g], r.fitness_trajectory[g - 1]);
    }
    EXPECT_EQ(r.generations_run, r.fitness_trajectory.size());
    if (r.success) {
      EXPECT_EQ(model.classify(apply_perturbation(x, r.best.perturbation)), Label::Benign);
    }
  }
}

TEST(Attack, ExcludedFeaturesAreNeverAdded) {
  const auto model = twelve_bit_model();
  const auto x = malware("1000000000000");
  auto c = config_for("0111111111111");
  c.excluded_features = {4, 9};
  c.init_prob = 0.2;
  const auto r = attack(model, x, c, [&](const Individual& ind) {
    EXPECT_FALSE(ind.perturbation.delta.test(4));
    EXPECT_FALSE(ind.perturbation.delta.test(9));
  });
  EXPECT_TRUE(r.success);
}

TEST(Attack, QueryBudgetIsRespected) {
  const auto model = linear_detector({0, 0.01, 0.01, 0.01}, 5.0);
  const auto x = malware("1000");
  auto c = config_for("0111");
  c.query_budget = 3;
  const auto r = attack(model, x, c);
  EXPECT_LE(r.query_count, 3u);
  EXPECT_TRUE(r.budget_exhausted);
  EXPECT_FALSE(r.success);
}

TEST(Attack, QueryCountMatchesModelCallsWithoutMemoization) {
  auto calls = std::make_shared<std::size_t>(0);
  const auto inner = twelve_bit_model();
  FnDetector counted(13, [calls, &inner](const BitVector& b) {
    ++*calls;
    return inner.predict_proba(b)[1];
  });
  auto c = config_for("0111111111111");
  c.memoize = false;
  c.population_size = 20;
  c.max_iterations = 5;
  const auto r = attack(counted, malware("1000000000000"), c);
  // One extra call is the initial classification of x.
  EXPECT_EQ(*calls, r.query_count + 1);
}

TEST(AttackProperty, RandomizedTrialsRespectConstraints) {
  Rng gen(2024);
  std::size_t violations = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 8 + uniform_index(gen, 40);
    FeatureVector x{BitVector(n), Label::Malware};
    AttackConfig c;
    c.perturbable_mask = BitVector(n);
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (bernoulli(gen, 0.3)) x.bits.set(i);
      if (bernoulli(gen, 0.6)) c.perturbable_mask.set(i);
      w[i] = uniform01(gen);
    }
    x.bits.set(0);
    c.perturbable_mask.reset(0);
    c.perturbable_mask.set(n - 1);
    x.bits.reset(n - 1);
    for (std::size_t i = 1; i < n - 1; ++i) {
      if (bernoulli(gen, 0.1)) c.excluded_features.push_back(i);
    }
    c.population_size = 20;
    c.max_iterations = 10;
    c.init_prob = 0.2;
    c.rng_seed = trial;
    const auto model = linear_detector(w, 1.0 + uniform01(gen) * 2.0);
    if (model.classify(x) != Label::Malware) continue;
    attack(model, x, c, [&](const Individual& ind) {
      const auto& d = ind.perturbation.delta;
      bool bad = d.intersects(x.bits) || !d.subset_of(c.perturbable_mask);
      for (auto e : c.excluded_features) bad = bad || d.test(e);
      violations += bad;
    });
  }
  EXPECT_EQ(violations, 0u);
}

TEST(MutateProperty, OriginalBitsNeverChange) {
  Rng gen(5);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 4 + uniform_index(gen, 60);
    FeatureVector x{BitVector(n), Label::Malware};
    AttackConfig c;
    c.perturbable_mask = BitVector(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (bernoulli(gen, 0.3)) x.bits.set(i);
      if (bernoulli(gen, 0.7)) c.perturbable_mask.set(i);
    }
    c.mutation_prob = uniform01(gen);
    Individual ind{Perturbation(n), {}, {}, {}};
    Rng rng(trial);
    for (int step = 0; step < 3; ++step) ind = mutate(ind, x, c, rng);
    ASSERT_FALSE(ind.perturbation.delta.intersects(x.bits));
    ASSERT_TRUE(ind.perturbation.delta.subset_of(c.perturbable_mask));
  }
}

TEST(AttackConfig, AutoMutationRateAndValidation) {
  AttackConfig c;
  EXPECT_DOUBLE_EQ(effective_mutation_prob(c, 4), 0.25);
  c.mutation_prob = 0.005;
  EXPECT_DOUBLE_EQ(effective_mutation_prob(c, 4), 0.005);
  c.mutation_prob = 1.5;
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(AttackParams, TableFourDefaults) {
  const auto s1 = AttackParams::defaults_for(Category::S1);
  const auto s2 = AttackParams::defaults_for(Category::S2);
  EXPECT_EQ(s1.population_size, 150u);
  EXPECT_EQ(s1.max_iterations, 50u);
  EXPECT_DOUBLE_EQ(s1.init_prob, 0.01);
  EXPECT_DOUBLE_EQ(s2.init_prob, 0.0001);
  EXPECT_DOUBLE_EQ(*AttackParams::fixed_rate_defaults_for(Category::S1).mutation_prob, 0.30);
  EXPECT_DOUBLE_EQ(*AttackParams::fixed_rate_defaults_for(Category::S2).mutation_prob, 0.005);
}

TEST(AttackParams, ResolveBuildsMaskAndExclusions) {
  const auto vocab = Vocabulary::from_features(
      {{Category::S1, "h"}, {Category::S2, "a"}, {Category::S2, "b"}, {Category::S5, "c"}});
  auto p = AttackParams::defaults_for(Category::S2);
  p.excluded = {"b", "missing"};
  const auto c = resolve(p, vocab);
  EXPECT_EQ(c.perturbable_mask.to_string(), "0110");
  EXPECT_EQ(c.excluded_features, std::vector<std::size_t>{2});
}

}  // namespace
}  // namespace evasion
