#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evasion/detectors/detector.hpp"
#include "evasion/detectors/tree.hpp"
#include "evasion/featurespace/vocabulary.hpp"

namespace evasion {

struct OobError {
  double error = 0.0;
  std::size_t evaluated = 0;
  /// Samples drawn into every tree's bootstrap, hence never out of bag.
  std::size_t skipped = 0;
};

/// Returns the ensemble if it is a forest with bootstrap records, else
/// throws PreconditionError.
const TreeEnsemble& require_bootstrap_forest(const Detector& model);

/// Each sample is scored by the mean prediction of the trees whose
/// bootstrap excluded it. `data` must be the forest's training set.
OobError oob_error(const Detector& forest, const Dataset& data);

/// Out-of-bag error of one tree over its own OOB rows (0 when it has none).
double tree_oob_error(const TreeEnsemble& forest, std::size_t tree,
                      const Dataset& data);

/// Mean over trees of (OOB error after permuting `columns` jointly across
/// the tree's OOB rows) minus (OOB error before). Positive = important.
double permutation_importance(const Detector& forest, const Dataset& data,
                              std::span<const std::size_t> columns,
                              std::uint64_t seed);

struct ImportanceReport {
  std::map<Category, double> per_category;
  std::map<std::size_t, double> per_feature;
  double oob_error_base = 0.0;
  std::size_t oob_skipped = 0;
};

/// Category importance for every category with vocabulary entries, and
/// optionally per-feature importance for every split feature (features the
/// forest never splits on have importance 0 and are omitted).
ImportanceReport compute_importance(const Detector& forest,
                                    const Dataset& data,
                                    const Vocabulary& vocab,
                                    std::uint64_t seed,
                                    bool per_feature = false);

/// Manifest-derived categories from `allowed`, by importance descending;
/// equal importances keep S1..S4 order.
std::vector<Category> select_perturbable_categories(
    const ImportanceReport& report, std::span<const Category> allowed);

/// CSV `category,importance`.
std::string importance_csv(const ImportanceReport& report);
nlohmann::json importance_json(const ImportanceReport& report,
                               const Vocabulary& vocab);

}  // namespace evasion
