#include "evasion/detectors/detector.hpp"

#include <string>

#include "evasion/error.hpp"

namespace evasion {
namespace {

struct KindNames {
  DetectorKind kind;
  std::string_view tag;
  std::string_view short_name;
};

constexpr KindNames kNames[] = {
    {DetectorKind::Mlp, "mlp", "NN"},
    {DetectorKind::LogReg, "logreg", "LR"},
    {DetectorKind::DecisionTree, "dt", "DT"},
    {DetectorKind::RandomForest, "rf", "RF"},
    {DetectorKind::ExtraTrees, "et", "ET"},
};

}  // namespace

std::string_view detector_tag(DetectorKind kind) noexcept {
  for (const auto& n : kNames) {
    if (n.kind == kind) return n.tag;
  }
  return "?";
}

std::string_view detector_short_name(DetectorKind kind) noexcept {
  for (const auto& n : kNames) {
    if (n.kind == kind) return n.short_name;
  }
  return "?";
}

std::optional<DetectorKind> detector_from_tag(std::string_view tag) noexcept {
  for (const auto& n : kNames) {
    if (n.tag == tag || n.short_name == tag) return n.kind;
  }
  return std::nullopt;
}

Proba Detector::predict_proba(const BitVector& x) const {
  if (x.size() != vocab_size_) {
    throw PreconditionError("input width " + std::to_string(x.size()) +
                            " does not match model width " +
                            std::to_string(vocab_size_));
  }
  const double f1 = malware_probability(x);
  return {1.0 - f1, f1};
}

Label Detector::classify(const BitVector& x) const {
  return label_from_proba(predict_proba(x));
}

}  // namespace evasion
