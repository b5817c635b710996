#pragma once

#include <cstddef>

#include "evasion/detectors/detector.hpp"

namespace evasion {

/// Confusion counts with malware as the positive class.
struct EvalMetrics {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  double accuracy = 0.0;
  double precision = 0.0;  // 1.0 when nothing was flagged
  double recall = 0.0;     // 1.0 when there are no positives

  static EvalMetrics from_counts(std::size_t tp, std::size_t fp,
                                 std::size_t fn, std::size_t tn);
};

/// Throws PreconditionError on an empty dataset.
EvalMetrics evaluate(const Detector& model, const Dataset& data);

}  // namespace evasion
