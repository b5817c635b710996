#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "evasion/detectors/detector.hpp"
#include "evasion/detectors/train_config.hpp"
#include "evasion/featurespace/vocabulary.hpp"

namespace evasion {

/// Trains one detector family. Throws PreconditionError when the dataset
/// is empty, single-class, unlabeled or of mixed widths.
std::unique_ptr<Detector> train(DetectorKind kind, const Dataset& data,
                                const TrainConfig& config,
                                std::uint64_t vocab_hash);

void check_training_set(const Dataset& data);

/// Where a distilled model came from.
struct Provenance {
  std::uint64_t teacher_hash = 0;
  double temperature = 1.0;
};

/// Versioned JSON document: format tag, kind, vocabulary hash and size,
/// parameters and optional provenance.
nlohmann::json model_to_json(const Detector& model,
                             const std::optional<Provenance>& provenance = {});
std::string serialize_model(const Detector& model,
                            const std::optional<Provenance>& provenance = {});

/// Throws ParseError on a malformed document and ConfigError when the
/// document was trained against a different vocabulary.
std::unique_ptr<Detector> model_from_json(const nlohmann::json& j,
                                          const Vocabulary& vocab);
std::unique_ptr<Detector> deserialize_model(const std::string& text,
                                            const Vocabulary& vocab);

std::optional<Provenance> provenance_of(const std::string& text);

/// FNV-1a of the serialized model.
std::uint64_t model_hash(const Detector& model);

void save_model(const std::filesystem::path& path, const Detector& model,
                const std::optional<Provenance>& provenance = {});
std::unique_ptr<Detector> load_model(const std::filesystem::path& path,
                                     const Vocabulary& vocab);

std::string hex64(std::uint64_t v);

}  // namespace evasion
