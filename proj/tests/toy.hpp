#pragma once

#include <functional>
#include <memory>

#include <nlohmann/json.hpp>

#include "evasion/detectors/detector.hpp"

namespace evasion::test {

// Detector backed by an arbitrary F1 function.
class FnDetector final : public Detector {
 public:
  using Fn = std::function<double(const BitVector&)>;
  FnDetector(std::size_t width, Fn f1) : Detector(width, 0), f1_(std::move(f1)) {}
  DetectorKind kind() const noexcept override { return DetectorKind::LogReg; }
  nlohmann::json parameters() const override { return nlohmann::json::object(); }
  std::unique_ptr<Detector> clone() const override {
    return std::make_unique<FnDetector>(*this);
  }

 protected:
  double malware_probability(const BitVector& x) const override { return f1_(x); }

 private:
  Fn f1_;
};

}  // namespace evasion::test
