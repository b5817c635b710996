#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "evasion/featurespace/bit_vector.hpp"
#include "evasion/featurespace/feature_vector.hpp"

namespace evasion {

enum class DetectorKind { Mlp, LogReg, DecisionTree, RandomForest, ExtraTrees };

inline constexpr std::array<DetectorKind, 5> kAllDetectorKinds = {
    DetectorKind::Mlp, DetectorKind::LogReg, DetectorKind::DecisionTree,
    DetectorKind::RandomForest, DetectorKind::ExtraTrees};

/// "mlp", "logreg", "dt", "rf", "et".
std::string_view detector_tag(DetectorKind kind) noexcept;
std::optional<DetectorKind> detector_from_tag(std::string_view tag) noexcept;
/// "NN", "LR", "DT", "RF", "ET" as used in result tables.
std::string_view detector_short_name(DetectorKind kind) noexcept;

/// [F0, F1]: benign and malware probability.
using Proba = std::array<double, 2>;

/// Trained classifier seen through its probability output only. The
/// attack never looks past this interface.
class Detector {
 public:
  Detector(std::size_t vocab_size, std::uint64_t vocab_hash)
      : vocab_size_(vocab_size), vocab_hash_(vocab_hash) {}
  virtual ~Detector() = default;

  virtual DetectorKind kind() const noexcept = 0;

  std::size_t vocab_size() const noexcept { return vocab_size_; }
  std::uint64_t vocab_hash() const noexcept { return vocab_hash_; }

  /// Throws PreconditionError on a length mismatch. F0 is computed as
  /// 1 - F1, so F1 < 0.5 exactly when F1 < F0.
  Proba predict_proba(const BitVector& x) const;
  Proba predict_proba(const FeatureVector& x) const {
    return predict_proba(x.bits);
  }

  /// Argmax of predict_proba; F0 == F1 counts as malware.
  Label classify(const BitVector& x) const;
  Label classify(const FeatureVector& x) const { return classify(x.bits); }

  /// Kind-specific trained state, used by model serialization.
  virtual nlohmann::json parameters() const = 0;

  virtual std::unique_ptr<Detector> clone() const = 0;

 protected:
  /// F1 for an input already checked to have the right width.
  virtual double malware_probability(const BitVector& x) const = 0;

 private:
  std::size_t vocab_size_;
  std::uint64_t vocab_hash_;
};

inline Label label_from_proba(const Proba& p) noexcept {
  return p[1] >= p[0] ? Label::Malware : Label::Benign;
}

}  // namespace evasion
