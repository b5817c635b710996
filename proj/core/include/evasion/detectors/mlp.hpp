#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "evasion/detectors/detector.hpp"
#include "evasion/detectors/train_config.hpp"

namespace evasion {

/// Two ReLU hidden layers and a two-way softmax head.
class Mlp final : public Detector {
 public:
  struct Weights {
    std::size_t input = 0;
    std::size_t hidden = 0;
    std::vector<double> w1;  // input x hidden, row per input feature
    std::vector<double> b1;  // hidden
    std::vector<double> w2;  // hidden x hidden, row per source unit
    std::vector<double> b2;  // hidden
    std::vector<double> w3;  // hidden x 2
    std::vector<double> b3;  // 2
  };

  /// Zero-initialized network.
  Mlp(std::size_t input, std::size_t hidden, std::uint64_t vocab_hash);
  Mlp(Weights w, std::uint64_t vocab_hash);

  DetectorKind kind() const noexcept override { return DetectorKind::Mlp; }
  nlohmann::json parameters() const override;
  std::unique_ptr<Detector> clone() const override {
    return std::make_unique<Mlp>(*this);
  }
  static Mlp from_parameters(const nlohmann::json& j, std::size_t vocab_size,
                             std::uint64_t vocab_hash);

  /// Pre-softmax outputs.
  std::array<double, 2> logits(const BitVector& x) const;

  /// Uniform He-style initialization, limit sqrt(6 / fan_in), zero biases.
  void initialize(std::uint64_t seed);

  Weights& weights() noexcept { return w_; }
  const Weights& weights() const noexcept { return w_; }

 protected:
  double malware_probability(const BitVector& x) const override;

 private:
  Weights w_;
};

/// softmax(z / temperature).
std::array<double, 2> softmax2(const std::array<double, 2>& z,
                               double temperature = 1.0);

struct MlpTrainOptions {
  std::size_t epochs = 5;
  std::size_t batch_size = 256;
  double learning_rate = 0.05;
  double temperature = 1.0;
  /// Multiplies every gradient; distillation uses temperature^2.
  double gradient_scale = 1.0;
  std::uint64_t seed = 0;
};

/// Mean cross-entropy between targets and softmax(logits / temperature)
/// over the batch. When grad is non-null it receives d(loss)/d(weights)
/// in the same layout as the network weights.
double mlp_loss(const Mlp& net, std::span<const BitVector* const> inputs,
                std::span<const std::array<double, 2>> targets,
                double temperature, Mlp::Weights* grad);

/// Mini-batch SGD on soft or one-hot targets.
void sgd_train(Mlp& net, std::span<const BitVector* const> inputs,
               std::span<const std::array<double, 2>> targets,
               const MlpTrainOptions& options);

}  // namespace evasion
