#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evasion/featurespace/bit_vector.hpp"
#include "evasion/featurespace/category.hpp"
#include "evasion/featurespace/vocabulary.hpp"

namespace evasion {

/// Fully resolved attack settings for one vocabulary.
struct AttackConfig {
  std::size_t population_size = 150;
  std::size_t max_iterations = 50;
  double init_prob = 0.0001;
  /// Per-bit flip probability; unset = 1 / (number of eligible bits).
  std::optional<double> mutation_prob;
  double w1 = 100.0;
  double w2 = 1.0;
  BitVector perturbable_mask;
  std::vector<std::size_t> excluded_features;
  std::size_t early_stop_patience = 10;
  std::uint64_t rng_seed = 0;
  std::optional<std::size_t> query_budget;
  bool crossover = true;
  bool memoize = true;
  std::size_t tournament_size = 3;
};

/// Throws ConfigError on an invalid configuration.
void validate(const AttackConfig& config);

/// The per-bit mutation probability used over `eligible` bits.
double effective_mutation_prob(const AttackConfig& config, std::size_t eligible);

/// File-level attack settings: everything except the vocabulary-dependent
/// mask, which is derived from `category`, and exclusions given by name.
struct AttackParams {
  Category category = Category::S2;
  std::size_t population_size = 150;
  std::size_t max_iterations = 50;
  double init_prob = 0.0001;
  std::optional<double> mutation_prob;
  double w1 = 100.0;
  double w2 = 1.0;
  std::size_t early_stop_patience = 10;
  std::uint64_t seed = 0;
  std::optional<std::size_t> query_budget;
  bool crossover = true;
  bool memoize = true;
  /// Feature names within `category` that may never be added.
  std::vector<std::string> excluded;

  /// Population 150, 50 iterations, init 0.01 for S1 and 0.0001 otherwise,
  /// automatic mutation rate.
  static AttackParams defaults_for(Category c);
  /// Same, with the fixed mutation rates 0.30 (S1) and 0.005 (others).
  static AttackParams fixed_rate_defaults_for(Category c);
};

void to_json(nlohmann::json& j, const AttackParams& p);
/// Missing keys fall back to defaults_for(category). Throws ConfigError.
void from_json(const nlohmann::json& j, AttackParams& p);

/// Resolves category and exclusion names against a vocabulary. Unknown
/// excluded names are ignored (they cannot be added anyway).
AttackConfig resolve(const AttackParams& params, const Vocabulary& vocab);

}  // namespace evasion
