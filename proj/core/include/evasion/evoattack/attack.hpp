#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "evasion/detectors/detector.hpp"
#include "evasion/evoattack/attack_config.hpp"
#include "evasion/featurespace/perturbation.hpp"
#include "evasion/random.hpp"

namespace evasion {

/// One GA candidate.
struct Individual {
  Perturbation perturbation;
  std::optional<double> fitness;
  std::optional<bool> evades;
  std::optional<Proba> proba;

  std::size_t num() const noexcept { return perturbation.num(); }
};

/// Total order used for every "best" decision: fitness, then fewer added
/// features, then lexicographically smaller delta. Both must be evaluated.
bool better(const Individual& a, const Individual& b);

/// Order for choosing the returned evader: fewer added features, then
/// `better`.
bool fewer_added(const Individual& a, const Individual& b);

/// Indices that may be switched on: mask AND NOT x AND NOT excluded.
std::vector<std::size_t> eligible_indices(const FeatureVector& x,
                                          const AttackConfig& config);

/// w1 * F1(x + d) + w2 * num(d). One predict_proba query.
double fitness(const Detector& model, const FeatureVector& x,
               const Perturbation& d, double w1, double w2);

/// Memoizing, query-counting fitness oracle around a black-box detector.
class FitnessEvaluator {
 public:
  struct Evaluation {
    double fitness;
    Proba proba;
    bool evades;
  };

  FitnessEvaluator(const Detector& model, const FeatureVector& x, double w1,
                   double w2, bool memoize,
                   std::optional<std::size_t> query_budget);

  /// nullopt when the query budget is exhausted.
  std::optional<Evaluation> evaluate(const Perturbation& d);

  std::size_t query_count() const noexcept { return queries_; }
  bool budget_exhausted() const noexcept { return exhausted_; }

 private:
  const Detector& model_;
  const FeatureVector& x_;
  double w1_;
  double w2_;
  bool memoize_;
  std::optional<std::size_t> budget_;
  std::size_t queries_ = 0;
  bool exhausted_ = false;
  std::unordered_map<BitVector, Proba, BitVectorHash> cache_;
};

/// M individuals; individual 0 is all-zero, the rest set each eligible
/// bit with probability init_prob. Throws PreconditionError("nothing to
/// perturb") when no bit is eligible.
std::vector<Individual> initialize_population(const FeatureVector& x,
                                              const AttackConfig& config);

/// Flips each eligible position with probability p (0->1 adds a feature,
/// 1->0 drops a previously added one). Fitness is reset.
Individual mutate(const Individual& ind,
                  const std::vector<std::size_t>& eligible, double p, Rng& rng);
Individual mutate(const Individual& ind, const FeatureVector& x,
                  const AttackConfig& config, Rng& rng);

/// Uniform crossover: every position where the parents differ goes to
/// either child with probability 1/2; children are complementary.
std::pair<Individual, Individual> crossover(const Individual& a,
                                            const Individual& b, Rng& rng);

/// M tournaments of `tournament_size` uniform draws (with replacement);
/// returns indices of the winners.
std::vector<std::size_t> select(const std::vector<Individual>& population,
                                Rng& rng, std::size_t tournament_size = 3);

struct AttackResult {
  bool success = false;
  Individual best;
  std::size_t num_added = 0;
  std::size_t generations_run = 0;
  std::size_t query_count = 0;
  /// Best-ever fitness after each generation; non-increasing.
  std::vector<double> fitness_trajectory;
  Proba final_proba{};
  bool budget_exhausted = false;
};

/// Sees every individual the attack creates, before evaluation.
using IndividualObserver = std::function<void(const Individual&)>;

/// Genetic search for a minimal add-only perturbation that makes `model`
/// label x benign. Throws PreconditionError("nothing to evade") when x is
/// already classified benign. Deterministic for a given config.rng_seed.
AttackResult attack(const Detector& model, const FeatureVector& x,
                    const AttackConfig& config,
                    const IndividualObserver& observer = {});

/// Exhaustive search over subsets of the eligible bits (mask AND NOT x) by
/// increasing size, lexicographic within a size. Returns the first that
/// evades, or nullopt. Throws PreconditionError("oracle too large") above
/// 20 eligible bits.
std::optional<Perturbation> brute_force_min_perturbation(
    const Detector& model, const FeatureVector& x, const BitVector& mask);

}  // namespace evasion
