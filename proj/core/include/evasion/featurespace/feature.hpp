#pragma once

#include <compare>
#include <set>
#include <string>

#include "evasion/featurespace/category.hpp"

namespace evasion {

struct Feature {
  Category category = Category::S1;
  std::string name;

  friend auto operator<=>(const Feature&, const Feature&) = default;
  friend bool operator==(const Feature&, const Feature&) = default;
};

/// One app's features. Ordered by (category, name); duplicates collapse.
using FeatureSet = std::set<Feature>;

}  // namespace evasion
