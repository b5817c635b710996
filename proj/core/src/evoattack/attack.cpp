#include "evasion/evoattack/attack.hpp"

#include <algorithm>

#include "evasion/error.hpp"

namespace evasion {
namespace {

bool evades(const Proba& p) { return label_from_proba(p) == Label::Benign; }

}  // namespace

bool better(const Individual& a, const Individual& b) {
  if (*a.fitness != *b.fitness) return *a.fitness < *b.fitness;
  const std::size_t na = a.num();
  const std::size_t nb = b.num();
  if (na != nb) return na < nb;
  return lex_less(a.perturbation.delta, b.perturbation.delta);
}

bool fewer_added(const Individual& a, const Individual& b) {
  const std::size_t na = a.num();
  const std::size_t nb = b.num();
  if (na != nb) return na < nb;
  return better(a, b);
}

std::vector<std::size_t> eligible_indices(const FeatureVector& x,
                                          const AttackConfig& config) {
  if (config.perturbable_mask.size() != x.size()) {
    throw PreconditionError("perturbable mask width does not match the sample");
  }
  std::vector<std::size_t> out;
  config.perturbable_mask.for_each_set([&](std::size_t i) {
    if (x.bits.test(i)) return;
    if (std::binary_search(config.excluded_features.begin(),
                           config.excluded_features.end(), i)) {
      return;
    }
    out.push_back(i);
  });
  return out;
}

double fitness(const Detector& model, const FeatureVector& x,
               const Perturbation& d, double w1, double w2) {
  const Proba p = model.predict_proba(apply_perturbation(x, d).bits);
  return w1 * p[1] + w2 * static_cast<double>(d.num());
}

FitnessEvaluator::FitnessEvaluator(const Detector& model,
                                   const FeatureVector& x, double w1,
                                   double w2, bool memoize,
                                   std::optional<std::size_t> query_budget)
    : model_(model),
      x_(x),
      w1_(w1),
      w2_(w2),
      memoize_(memoize),
      budget_(query_budget) {}

std::optional<FitnessEvaluator::Evaluation> FitnessEvaluator::evaluate(
    const Perturbation& d) {
  Proba p;
  auto hit = memoize_ ? cache_.find(d.delta) : cache_.end();
  if (hit != cache_.end()) {
    p = hit->second;
  } else {
    if (budget_ && queries_ >= *budget_) {
      exhausted_ = true;
      return std::nullopt;
    }
    p = model_.predict_proba(apply_perturbation(x_, d).bits);
    ++queries_;
    if (memoize_) cache_.emplace(d.delta, p);
  }
  return Evaluation{w1_ * p[1] + w2_ * static_cast<double>(d.num()), p,
                    evades(p)};
}

std::vector<Individual> initialize_population(const FeatureVector& x,
                                              const AttackConfig& config) {
  const auto eligible = eligible_indices(x, config);
  if (eligible.empty()) throw PreconditionError("nothing to perturb");
  std::vector<Individual> pop;
  pop.reserve(config.population_size);
  for (std::size_t i = 0; i < config.population_size; ++i) {
    Individual ind{Perturbation(x.size()), {}, {}, {}};
    if (i > 0) {
      Rng rng(derive_seed(config.rng_seed, "init", i));
      for_each_bernoulli(eligible.size(), config.init_prob, rng,
                         [&](std::size_t k) { ind.perturbation.delta.set(eligible[k]); });
    }
    pop.push_back(std::move(ind));
  }
  return pop;
}

Individual mutate(const Individual& ind,
                  const std::vector<std::size_t>& eligible, double p,
                  Rng& rng) {
  Individual out{ind.perturbation, {}, {}, {}};
  bool changed = false;
  for_each_bernoulli(eligible.size(), p, rng, [&](std::size_t k) {
    out.perturbation.delta.flip(eligible[k]);
    changed = true;
  });
  if (!changed) out = ind;
  return out;
}

Individual mutate(const Individual& ind, const FeatureVector& x,
                  const AttackConfig& config, Rng& rng) {
  const auto eligible = eligible_indices(x, config);
  return mutate(ind, eligible, effective_mutation_prob(config, eligible.size()), rng);
}

std::pair<Individual, Individual> crossover(const Individual& a,
                                            const Individual& b, Rng& rng) {
  Individual ca{a.perturbation, {}, {}, {}};
  Individual cb{b.perturbation, {}, {}, {}};
  const BitVector diff = a.perturbation.delta ^ b.perturbation.delta;
  diff.for_each_set([&](std::size_t j) {
    if (bernoulli(rng, 0.5)) {
      ca.perturbation.delta.flip(j);
      cb.perturbation.delta.flip(j);
    }
  });
  if (ca.perturbation == a.perturbation) ca = a;
  if (cb.perturbation == b.perturbation) cb = b;
  return {std::move(ca), std::move(cb)};
}

std::vector<std::size_t> select(const std::vector<Individual>& population,
                                Rng& rng, std::size_t tournament_size) {
  std::vector<std::size_t> winners;
  winners.reserve(population.size());
  for (std::size_t m = 0; m < population.size(); ++m) {
    std::size_t best = uniform_index(rng, population.size());
    for (std::size_t k = 1; k < tournament_size; ++k) {
      const std::size_t c = uniform_index(rng, population.size());
      if (better(population[c], population[best])) best = c;
    }
    winners.push_back(best);
  }
  return winners;
}

AttackResult attack(const Detector& model, const FeatureVector& x,
                    const AttackConfig& config,
                    const IndividualObserver& observer) {
  validate(config);
  if (model.classify(x) != Label::Malware) {
    throw PreconditionError("nothing to evade: sample is already classified benign");
  }
  const auto eligible = eligible_indices(x, config);
  std::vector<Individual> pop = initialize_population(x, config);
  FitnessEvaluator evaluator(model, x, config.w1, config.w2, config.memoize,
                             config.query_budget);

  AttackResult result;
  std::optional<Individual> best_ever;
  std::optional<Individual> best_evader;
  std::size_t stale = 0;
  const std::size_t M = config.population_size;

  for (std::size_t gen = 0; gen < config.max_iterations; ++gen) {
    std::size_t evaluated = 0;
    for (auto& ind : pop) {
      if (observer) observer(ind);
      if (!ind.fitness) {
        auto e = evaluator.evaluate(ind.perturbation);
        if (!e) break;
        ind.fitness = e->fitness;
        ind.evades = e->evades;
        ind.proba = e->proba;
      }
      ++evaluated;
    }
    pop.resize(evaluated);
    if (pop.empty()) break;

    bool improved = false;
    for (const auto& ind : pop) {
      if (!best_ever || better(ind, *best_ever)) {
        improved = improved || !best_ever || *ind.fitness < *best_ever->fitness;
        best_ever = ind;
      }
      if (*ind.evades && (!best_evader || fewer_added(ind, *best_evader))) {
        best_evader = ind;
      }
    }
    result.fitness_trajectory.push_back(*best_ever->fitness);
    stale = improved ? 0 : stale + 1;

    if (evaluator.budget_exhausted()) break;
    if (best_evader && stale >= config.early_stop_patience) break;
    if (gen + 1 == config.max_iterations) break;

    // Next generation: elite copy, then tournament parents paired for
    // crossover and mutated.
    const std::uint64_t gen_seed = derive_seed(config.rng_seed, "generation", gen);
    Rng select_rng(derive_seed(gen_seed, "select"));
    const auto parents = select(pop, select_rng, config.tournament_size);

    const double mutation_prob = effective_mutation_prob(config, eligible.size());
    std::vector<Individual> next;
    next.reserve(M);
    next.push_back(*std::min_element(
        pop.begin(), pop.end(),
        [](const Individual& a, const Individual& b) { return better(a, b); }));
    for (std::size_t k = 0; next.size() < M; ++k) {
      const Individual& pa = pop[parents[(2 * k) % parents.size()]];
      const Individual& pb = pop[parents[(2 * k + 1) % parents.size()]];
      std::pair<Individual, Individual> kids{pa, pb};
      if (config.crossover) {
        Rng cross_rng(derive_seed(gen_seed, "crossover", k));
        kids = crossover(pa, pb, cross_rng);
      }
      for (Individual* kid : {&kids.first, &kids.second}) {
        if (next.size() >= M) break;
        Rng mut_rng(derive_seed(gen_seed, "mutate", next.size()));
        next.push_back(mutate(*kid, eligible, mutation_prob, mut_rng));
      }
    }
    pop = std::move(next);
  }

  result.generations_run = result.fitness_trajectory.size();
  result.query_count = evaluator.query_count();
  result.budget_exhausted = evaluator.budget_exhausted();
  if (best_evader) {
    result.success = true;
    result.best = *best_evader;
  } else if (best_ever) {
    result.best = *best_ever;
  } else {
    result.best = Individual{Perturbation(x.size()), {}, {}, {}};
  }
  result.num_added = result.best.num();
  result.final_proba =
      result.best.proba ? *result.best.proba : model.predict_proba(x);
  return result;
}

std::optional<Perturbation> brute_force_min_perturbation(
    const Detector& model, const FeatureVector& x, const BitVector& mask) {
  if (mask.size() != x.size()) {
    throw PreconditionError("mask width does not match the sample");
  }
  std::vector<std::size_t> eligible;
  mask.for_each_set([&](std::size_t i) {
    if (!x.bits.test(i)) eligible.push_back(i);
  });
  if (eligible.size() > 20) throw PreconditionError("oracle too large");

  const std::size_t n = eligible.size();
  for (std::size_t k = 0; k <= n; ++k) {
    // Lexicographic k-combinations of positions 0..n-1.
    std::vector<std::size_t> comb(k);
    for (std::size_t i = 0; i < k; ++i) comb[i] = i;
    while (true) {
      Perturbation d(x.size());
      for (auto c : comb) d.delta.set(eligible[c]);
      if (evades(model.predict_proba(apply_perturbation(x, d).bits))) return d;
      std::size_t i = k;
      while (i > 0 && comb[i - 1] == n - k + i - 1) --i;
      if (i == 0) break;
      ++comb[i - 1];
      for (std::size_t j = i; j < k; ++j) comb[j] = comb[j - 1] + 1;
    }
  }
  return std::nullopt;
}

}  // namespace evasion
