#include "evasion/featurespace/feature_vector.hpp"
#include "evasion/featurespace/perturbation.hpp"

#include "evasion/error.hpp"

namespace evasion {

FeatureVector vectorize(const FeatureSet& features, const Vocabulary& vocab,
                        std::optional<Label> label) {
  FeatureVector v{BitVector(vocab.size()), label};
  for (const auto& f : features) {
    if (auto i = vocab.find(f)) v.bits.set(*i);
  }
  return v;
}

FeatureSet devectorize(const BitVector& bits, const Vocabulary& vocab) {
  FeatureSet out;
  bits.for_each_set([&](std::size_t i) { out.insert(vocab.entry(i)); });
  return out;
}

void check_perturbation(const FeatureVector& x, const Perturbation& d,
                        const BitVector& allowed) {
  if (d.delta.size() != x.size() || allowed.size() != x.size()) {
    throw InvariantError("perturbation width " +
                         std::to_string(d.delta.size()) +
                         " does not match vector width " +
                         std::to_string(x.size()));
  }
  if (d.delta.intersects(x.bits)) {
    throw InvariantError("perturbation adds a feature that is already present");
  }
  if (!d.delta.subset_of(allowed)) {
    throw InvariantError("perturbation sets a bit outside the perturbable range");
  }
}

FeatureVector apply_perturbation(const FeatureVector& x,
                                 const Perturbation& d) {
  if (d.delta.size() != x.size()) {
    throw InvariantError("perturbation width does not match vector width");
  }
  if (d.delta.intersects(x.bits)) {
    throw InvariantError("perturbation adds a feature that is already present");
  }
  return FeatureVector{x.bits | d.delta, x.label};
}

FeatureVector apply_perturbation(const FeatureVector& x, const Perturbation& d,
                                 const BitVector& allowed) {
  check_perturbation(x, d, allowed);
  return FeatureVector{x.bits | d.delta, x.label};
}

}  // namespace evasion
