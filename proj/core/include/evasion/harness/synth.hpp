#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evasion/featurespace/category.hpp"
#include "evasion/featurespace/feature_file.hpp"

namespace evasion {

/// Generative model for a planted stand-in corpus. Each category owns
/// `malware_planted[c]` malware-indicative and `benign_planted[c]`
/// benign-indicative features. A malware-indicative feature is set with
/// probability `malware_high` in malware and `malware_low` in benign
/// samples; benign-indicative features use `benign_high` in benign and
/// `benign_low` in malware samples. Every other feature is set at
/// `background_rate` regardless of class.
struct SynthSpec {
  std::size_t n_benign = 700;
  std::size_t n_malware = 700;
  /// Samples in the training split; the rest are held out.
  std::size_t n_train = 1000;
  std::array<std::size_t, kNumCategories> category_sizes{72, 3812, 96, 48,
                                                         96, 48,   48, 32};
  std::array<std::size_t, kNumCategories> malware_planted{1, 2, 0, 0,
                                                          1, 0, 0, 0};
  std::array<std::size_t, kNumCategories> benign_planted{0, 16, 0, 0,
                                                         0, 0,  0, 0};
  double malware_high = 0.3;
  double malware_low = 0.1;
  double benign_high = 0.5;
  double benign_low = 0.0;
  double background_rate = 0.01;
  std::uint64_t seed = 0;
};

/// Throws ConfigError for rates outside [0, 1], a non-positive rate gap,
/// no planted features, or planted counts above their category size.
void validate(const SynthSpec& spec);
void to_json(nlohmann::json& j, const SynthSpec& s);
void from_json(const nlohmann::json& j, SynthSpec& s);

struct SynthCorpus {
  std::vector<CorpusEntry> train;
  std::vector<CorpusEntry> test;
  std::vector<Feature> malware_planted;
  std::vector<Feature> benign_planted;
};

/// Deterministic for a given spec (including seed).
SynthCorpus generate_synthetic_corpus(const SynthSpec& spec);

/// Name of the k-th synthetic feature of a category.
std::string synthetic_feature_name(Category c, std::size_t k);

/// Writes features/<app_id>.txt plus train_manifest.csv and
/// test_manifest.csv under dir.
void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir);

}  // namespace evasion
