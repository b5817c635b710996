#include "evasion/importance/importance.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "evasion/error.hpp"
#include "evasion/random.hpp"

namespace evasion {
namespace {

void check_rows(const TreeEnsemble& forest, const Dataset& data) {
  for (const auto& bag : forest.in_bag()) {
    if (bag.size() != data.size()) {
      throw PreconditionError(
          "bootstrap records cover " + std::to_string(bag.size()) +
          " rows but the dataset has " + std::to_string(data.size()));
    }
  }
  for (const auto& s : data.samples) {
    if (!s.label) throw PreconditionError("importance needs labeled samples");
    if (s.size() != forest.vocab_size()) {
      throw PreconditionError("sample width does not match forest width");
    }
  }
}

std::vector<std::size_t> oob_rows(const TreeEnsemble& forest, std::size_t t) {
  std::vector<std::size_t> rows;
  const auto& bag = forest.in_bag()[t];
  for (std::size_t r = 0; r < bag.size(); ++r) {
    if (bag[r] == 0) rows.push_back(r);
  }
  return rows;
}

bool wrong(double f1, Label truth) {
  const Label predicted = f1 >= 0.5 ? Label::Malware : Label::Benign;
  return predicted != truth;
}

// Error delta for one tree; 0 when the tree never splits on `columns`.
double tree_term(const TreeEnsemble& forest, std::size_t t,
                 const Dataset& data, std::span<const std::size_t> columns,
                 std::uint64_t seed) {
  const DecisionTree& tree = forest.trees()[t];
  const auto used = tree.split_features();
  std::vector<std::size_t> active;
  for (auto c : columns) {
    if (std::binary_search(used.begin(), used.end(), c)) active.push_back(c);
  }
  if (active.empty()) return 0.0;
  const auto rows = oob_rows(forest, t);
  if (rows.empty()) return 0.0;

  std::vector<std::size_t> source(rows);
  Rng rng(derive_seed(seed, "permute", t));
  shuffle(source.begin(), source.end(), rng);

  std::size_t before = 0;
  std::size_t after = 0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& sample = data.samples[rows[k]];
    before += wrong(tree.predict(sample.bits), *sample.label);
    BitVector permuted = sample.bits;
    const BitVector& donor = data.samples[source[k]].bits;
    for (auto c : active) permuted.assign(c, donor.test(c));
    after += wrong(tree.predict(permuted), *sample.label);
  }
  return (static_cast<double>(after) - static_cast<double>(before)) /
         static_cast<double>(rows.size());
}

}  // namespace

const TreeEnsemble& require_bootstrap_forest(const Detector& model) {
  const auto* forest = dynamic_cast<const TreeEnsemble*>(&model);
  if (forest == nullptr || !forest->has_bootstrap_records()) {
    throw PreconditionError("forest trained without bootstrap records");
  }
  return *forest;
}

OobError oob_error(const Detector& model, const Dataset& data) {
  const TreeEnsemble& forest = require_bootstrap_forest(model);
  check_rows(forest, data);
  OobError out;
  std::size_t wrong_count = 0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    double sum = 0.0;
    std::size_t votes = 0;
    for (std::size_t t = 0; t < forest.trees().size(); ++t) {
      if (forest.in_bag()[t][r] != 0) continue;
      sum += forest.trees()[t].predict(data.samples[r].bits);
      ++votes;
    }
    if (votes == 0) {
      ++out.skipped;
      continue;
    }
    ++out.evaluated;
    wrong_count += wrong(sum / static_cast<double>(votes), *data.samples[r].label);
  }
  out.error = out.evaluated == 0 ? 0.0
                                 : static_cast<double>(wrong_count) /
                                       static_cast<double>(out.evaluated);
  return out;
}

double tree_oob_error(const TreeEnsemble& forest, std::size_t tree,
                      const Dataset& data) {
  check_rows(forest, data);
  const auto rows = oob_rows(forest, tree);
  if (rows.empty()) return 0.0;
  std::size_t errors = 0;
  for (auto r : rows) {
    errors += wrong(forest.trees()[tree].predict(data.samples[r].bits),
                    *data.samples[r].label);
  }
  return static_cast<double>(errors) / static_cast<double>(rows.size());
}

double permutation_importance(const Detector& model, const Dataset& data,
                              std::span<const std::size_t> columns,
                              std::uint64_t seed) {
  const TreeEnsemble& forest = require_bootstrap_forest(model);
  if (columns.empty()) throw PreconditionError("importance target is empty");
  check_rows(forest, data);
  double sum = 0.0;
  for (std::size_t t = 0; t < forest.trees().size(); ++t) {
    sum += tree_term(forest, t, data, columns, seed);
  }
  return sum / static_cast<double>(forest.trees().size());
}

ImportanceReport compute_importance(const Detector& model, const Dataset& data,
                                    const Vocabulary& vocab,
                                    std::uint64_t seed, bool per_feature) {
  const TreeEnsemble& forest = require_bootstrap_forest(model);
  ImportanceReport report;
  const OobError base = oob_error(forest, data);
  report.oob_error_base = base.error;
  report.oob_skipped = base.skipped;

  for (Category c : kAllCategories) {
    const IndexRange r = vocab.range(c);
    if (r.empty()) continue;
    std::vector<std::size_t> cols(r.size());
    std::iota(cols.begin(), cols.end(), r.begin);
    report.per_category[c] = permutation_importance(
        forest, data, cols, derive_seed(seed, category_code(c)));
  }
  if (per_feature) {
    std::vector<std::size_t> used;
    for (const auto& t : forest.trees()) {
      auto f = t.split_features();
      used.insert(used.end(), f.begin(), f.end());
    }
    std::sort(used.begin(), used.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());
    for (auto f : used) {
      const std::size_t col[] = {f};
      report.per_feature[f] =
          permutation_importance(forest, data, col, derive_seed(seed, "feature", f));
    }
  }
  return report;
}

std::vector<Category> select_perturbable_categories(
    const ImportanceReport& report, std::span<const Category> allowed) {
  std::vector<Category> out;
  for (Category c : kAllCategories) {
    if (!is_manifest_derived(c)) continue;
    if (std::find(allowed.begin(), allowed.end(), c) == allowed.end()) continue;
    out.push_back(c);
  }
  const auto importance = [&](Category c) {
    auto it = report.per_category.find(c);
    return it == report.per_category.end() ? 0.0 : it->second;
  };
  std::stable_sort(out.begin(), out.end(), [&](Category a, Category b) {
    return importance(a) > importance(b);
  });
  return out;
}

std::string importance_csv(const ImportanceReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "category,importance\n";
  for (const auto& [c, v] : report.per_category) {
    out << category_code(c) << ',' << v << '\n';
  }
  return out.str();
}

nlohmann::json importance_json(const ImportanceReport& report,
                               const Vocabulary& vocab) {
  nlohmann::json cats = nlohmann::json::array();
  for (const auto& [c, v] : report.per_category) {
    cats.push_back({{"category", category_code(c)},
                    {"description", category_description(c)},
                    {"importance", v}});
  }
  nlohmann::json feats = nlohmann::json::array();
  for (const auto& [i, v] : report.per_feature) {
    const Feature& f = vocab.entry(i);
    feats.push_back({{"index", i},
                     {"category", category_code(f.category)},
                     {"name", f.name},
                     {"importance", v}});
  }
  return {{"oob_error", report.oob_error_base},
          {"oob_skipped", report.oob_skipped},
          {"categories", cats},
          {"features", feats}};
}

}  // namespace evasion
