#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "evasion/featurespace/bit_vector.hpp"
#include "evasion/featurespace/feature.hpp"
#include "evasion/featurespace/vocabulary.hpp"

namespace evasion {

enum class Label : int { Benign = 0, Malware = 1 };

struct FeatureVector {
  BitVector bits;
  std::optional<Label> label;

  std::size_t size() const noexcept { return bits.size(); }
};

/// Bit i set iff vocab.entry(i) is in features. Features outside the
/// vocabulary are dropped.
FeatureVector vectorize(const FeatureSet& features, const Vocabulary& vocab,
                        std::optional<Label> label = std::nullopt);

/// Inverse of vectorize for the bits that are set.
FeatureSet devectorize(const BitVector& bits, const Vocabulary& vocab);

/// Labeled vectors sharing one vocabulary, with app ids kept alongside.
struct Dataset {
  std::vector<FeatureVector> samples;
  std::vector<std::string> app_ids;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  void add(std::string app_id, FeatureVector v) {
    app_ids.push_back(std::move(app_id));
    samples.push_back(std::move(v));
  }
  std::size_t count(Label l) const {
    std::size_t n = 0;
    for (const auto& s : samples) n += (s.label == l);
    return n;
  }
};

}  // namespace evasion
