#pragma once

#include <cstddef>
#include <cstdint>

#include <nlohmann/json_fwd.hpp>

namespace evasion {

struct MlpParams {
  std::size_t hidden = 200;
  std::size_t epochs = 5;
  std::size_t batch_size = 256;
  double learning_rate = 0.3;
};

struct LogRegParams {
  double c = 1.0;        // inverse L2 strength
  double tol = 1e-4;     // stop when max |gradient| <= tol
  std::size_t max_iter = 10;
};

struct TreeParams {
  std::size_t max_depth = 0;  // 0 = unlimited
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  /// Candidate features per split; 0 = all features, kSqrtFeatures = sqrt(n).
  std::size_t max_features = 0;
  static constexpr std::size_t kSqrtFeatures = static_cast<std::size_t>(-1);
};

struct ForestParams {
  std::size_t n_trees = 10;
  bool bootstrap = true;
  TreeParams tree;
};

struct TrainConfig {
  std::uint64_t seed = 0;
  MlpParams mlp;
  LogRegParams logreg;
  TreeParams decision_tree{15, 2, 10, 0};
  ForestParams random_forest{20, true, {0, 2, 20, 0}};
  ForestParams extra_trees{10, false, {50, 2, 1, TreeParams::kSqrtFeatures}};
};

void to_json(nlohmann::json& j, const TrainConfig& c);
/// Missing keys keep their defaults. Throws ConfigError on invalid values.
void from_json(const nlohmann::json& j, TrainConfig& c);
void validate(const TrainConfig& c);

}  // namespace evasion
