#include "evasion/detectors/metrics.hpp"

#include "evasion/error.hpp"

namespace evasion {

EvalMetrics EvalMetrics::from_counts(std::size_t tp, std::size_t fp,
                                     std::size_t fn, std::size_t tn) {
  EvalMetrics m{tp, fp, fn, tn};
  const auto d = [](std::size_t v) { return static_cast<double>(v); };
  const std::size_t total = tp + fp + fn + tn;
  m.accuracy = total == 0 ? 0.0 : d(tp + tn) / d(total);
  m.precision = tp + fp == 0 ? 1.0 : d(tp) / d(tp + fp);
  m.recall = tp + fn == 0 ? 1.0 : d(tp) / d(tp + fn);
  return m;
}

EvalMetrics evaluate(const Detector& model, const Dataset& data) {
  if (data.empty()) throw PreconditionError("evaluation set is empty");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (const auto& s : data.samples) {
    if (!s.label) throw PreconditionError("evaluation sample is unlabeled");
    const bool predicted = model.classify(s.bits) == Label::Malware;
    const bool actual = *s.label == Label::Malware;
    if (predicted && actual) ++tp;
    else if (predicted) ++fp;
    else if (actual) ++fn;
    else ++tn;
  }
  return EvalMetrics::from_counts(tp, fp, fn, tn);
}

}  // namespace evasion
