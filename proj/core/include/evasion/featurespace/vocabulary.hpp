#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evasion/featurespace/bit_vector.hpp"
#include "evasion/featurespace/feature.hpp"

namespace evasion {

/// Half-open index interval [begin, end).
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool empty() const noexcept { return begin == end; }
  bool contains(std::size_t i) const noexcept { return i >= begin && i < end; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// Ordered feature -> index map. Categories occupy contiguous ranges in
/// S1..S8 order and names are sorted within a category, so the same set of
/// features always produces the same indices.
class Vocabulary {
 public:
  Vocabulary() = default;

  /// Builds from an arbitrary collection of features (duplicates allowed).
  static Vocabulary from_features(const FeatureSet& features);

  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<Feature>& entries() const noexcept { return entries_; }
  const Feature& entry(std::size_t i) const { return entries_.at(i); }

  std::optional<std::size_t> find(const Feature& f) const;
  IndexRange range(Category c) const noexcept { return ranges_[index_of(c)]; }

  /// Mask with every index of the given categories set.
  BitVector mask(std::span<const Category> categories) const;

  /// CSV `index,category,name` with a header row.
  std::string to_csv() const;
  static Vocabulary from_csv(const std::string& text);

  /// FNV-1a of to_csv(); models record it to refuse mismatched vocabularies.
  std::uint64_t hash() const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<Feature> entries_;
  std::map<Feature, std::size_t> index_;
  std::array<IndexRange, kNumCategories> ranges_{};
};

/// Union of the corpus features restricted to `categories`.
/// Throws PreconditionError on an empty corpus or an empty union.
Vocabulary build_vocabulary(std::span<const FeatureSet> corpus,
                            std::span<const Category> categories);

}  // namespace evasion
