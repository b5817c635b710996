#pragma once

#include <vector>

#include "evasion/detectors/detector.hpp"
#include "evasion/detectors/train_config.hpp"

namespace evasion {

class LogisticRegression final : public Detector {
 public:
  LogisticRegression(std::vector<double> weights, double bias,
                     std::uint64_t vocab_hash);

  DetectorKind kind() const noexcept override { return DetectorKind::LogReg; }
  nlohmann::json parameters() const override;
  std::unique_ptr<Detector> clone() const override {
    return std::make_unique<LogisticRegression>(*this);
  }
  static LogisticRegression from_parameters(const nlohmann::json& j,
                                            std::size_t vocab_size,
                                            std::uint64_t vocab_hash);

  double score(const BitVector& x) const;
  const std::vector<double>& weights() const noexcept { return w_; }
  double bias() const noexcept { return b_; }

  /// L2-penalized log-loss minimized with L-BFGS; the intercept is not
  /// penalized.
  static LogisticRegression fit(const Dataset& data, const LogRegParams& p,
                                std::uint64_t vocab_hash);

 protected:
  double malware_probability(const BitVector& x) const override;

 private:
  std::vector<double> w_;
  double b_;
};

}  // namespace evasion
