#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evasion/detectors/train.hpp"
#include "evasion/detectors/train_config.hpp"
#include "evasion/evoattack/attack_config.hpp"
#include "evasion/hardening/distill.hpp"
#include "evasion/harness/report.hpp"
#include "evasion/harness/synth.hpp"

namespace evasion {

struct ExperimentConfig {
  std::uint64_t seed = 0;
  /// Either a synthetic corpus spec or a pair of manifests.
  std::optional<SynthSpec> synth;
  std::filesystem::path train_manifest;
  std::filesystem::path test_manifest;
  std::vector<DetectorKind> models{kAllDetectorKinds.begin(),
                                   kAllDetectorKinds.end()};
  TrainConfig train;
  /// Empty = pick the top two manifest categories from the importance
  /// ranking restricted to {S1, S2}.
  std::vector<Category> categories{Category::S1, Category::S2};
  std::map<Category, AttackParams> attack{
      {Category::S1, AttackParams::defaults_for(Category::S1)},
      {Category::S2, AttackParams::defaults_for(Category::S2)}};
  std::size_t attacked_samples = 100;
  bool importance = true;
  bool importance_per_feature = false;

  struct Exclusion {
    bool enabled = false;
    std::size_t top_k = 5;
    std::vector<DetectorKind> models{DetectorKind::Mlp};
    std::vector<Category> categories{Category::S2};
  } exclusion;

  struct Distillation {
    bool enabled = false;
    DistillConfig config;
    std::vector<Category> categories{Category::S2};
  } distillation;

  std::filesystem::path output_dir = "out";
  /// Worker threads for per-sample attacks; 0 = worker_count().
  std::size_t workers = 0;
};

/// Throws ConfigError on unknown keys' values or inconsistent settings.
ExperimentConfig experiment_from_json(const nlohmann::json& j,
                                      const std::filesystem::path& base_dir = {});
nlohmann::json experiment_to_json(const ExperimentConfig& c);
ExperimentConfig load_experiment(const std::filesystem::path& path);

/// A loaded or generated corpus and the vocabulary built from its training
/// split over all categories.
struct PreparedData {
  Vocabulary vocab;
  Dataset train;
  Dataset test;
};

/// Checks that every path the experiment needs exists. Throws ConfigError.
void check_resolvable(const ExperimentConfig& config);

struct CorpusSplits {
  std::vector<CorpusEntry> train;
  std::vector<CorpusEntry> test;
};

/// Generates or loads the corpus named by the config.
CorpusSplits load_splits(const ExperimentConfig& config);

PreparedData prepare_data(const ExperimentConfig& config);
/// Vectorizes the corpus against an existing vocabulary (features outside
/// it are dropped).
PreparedData prepare_data(const ExperimentConfig& config, const Vocabulary& vocab);

/// Attacks the first `count` held-out malware samples (app id order) that
/// `model` currently flags. Per-sample seeds depend on (seed, model,
/// category, sample), not on the variant, so reruns attack identically.
AttackSummary attack_samples(const Detector& model, const std::string& model_name,
                             const Dataset& test, const Vocabulary& vocab,
                             const AttackParams& params, std::size_t count,
                             std::uint64_t seed, const std::string& variant,
                             std::size_t workers = 0);

/// synth/load -> train -> evaluate -> importance -> attacks -> exclusion
/// rerun -> distilled rerun.
ExperimentReport run_experiment(const ExperimentConfig& config);

}  // namespace evasion
