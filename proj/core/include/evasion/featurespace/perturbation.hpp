#pragma once

#include <cstddef>

#include "evasion/featurespace/bit_vector.hpp"
#include "evasion/featurespace/feature_vector.hpp"

namespace evasion {

/// Add-only change to a feature vector: the set of features to switch on.
struct Perturbation {
  BitVector delta;

  Perturbation() = default;
  explicit Perturbation(std::size_t width) : delta(width) {}
  explicit Perturbation(BitVector bits) : delta(std::move(bits)) {}

  /// num(delta): number of added features.
  std::size_t num() const noexcept { return delta.count(); }

  friend bool operator==(const Perturbation&, const Perturbation&) = default;
};

/// Throws InvariantError unless d is the same width as x, shares no bit
/// with x and stays inside `allowed`.
void check_perturbation(const FeatureVector& x, const Perturbation& d,
                        const BitVector& allowed);

/// x.bits OR d.delta. Throws InvariantError if d re-adds a present feature
/// or the widths differ.
FeatureVector apply_perturbation(const FeatureVector& x, const Perturbation& d);

/// As above, additionally rejecting bits outside `allowed`.
FeatureVector apply_perturbation(const FeatureVector& x, const Perturbation& d,
                                 const BitVector& allowed);

}  // namespace evasion
