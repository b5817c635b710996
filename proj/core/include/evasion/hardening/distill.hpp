#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evasion/detectors/mlp.hpp"
#include "evasion/detectors/train.hpp"

namespace evasion {

struct DistillConfig {
  double temperature = 10.0;
  std::size_t epochs = 5;
  std::size_t batch_size = 256;
  double learning_rate = 0.3;
  /// Start the student from the teacher's weights instead of a fresh init.
  bool init_from_teacher = false;
  std::uint64_t seed = 0;
};

void validate(const DistillConfig& config);
void to_json(nlohmann::json& j, const DistillConfig& c);
void from_json(const nlohmann::json& j, DistillConfig& c);

/// softmax(teacher logits / T) per input.
std::vector<std::array<double, 2>> soft_labels(
    const Mlp& teacher, std::span<const BitVector* const> inputs,
    double temperature);

struct DistillResult {
  std::unique_ptr<Mlp> student;
  Provenance provenance;
  double teacher_accuracy = 0.0;
  double student_accuracy = 0.0;
  /// Student accuracy fell more than 2 points below the teacher's.
  bool accuracy_regression = false;
};

/// Trains a same-shape student on the teacher's temperature-T soft labels
/// (loss at temperature T, gradients scaled by T^2); the student predicts
/// at temperature 1. Accuracies are measured on `holdout` when it is
/// non-empty, otherwise on `train`.
DistillResult distill(const Detector& teacher, const Dataset& train,
                      const Dataset& holdout, const DistillConfig& config);

}  // namespace evasion
