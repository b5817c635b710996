#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "evasion/detectors/detector.hpp"
#include "evasion/detectors/train_config.hpp"
#include "evasion/random.hpp"

namespace evasion {

/// Binary-feature CART tree. An internal node sends bit==0 left and
/// bit==1 right; a leaf stores its class-1 fraction.
class DecisionTree {
 public:
  struct Node {
    std::int32_t feature = -1;  // -1 for leaves
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;         // class-1 fraction of training weight
    double weight = 0.0;        // training weight reaching the node
  };

  DecisionTree() = default;
  explicit DecisionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

  double predict(const BitVector& x) const;
  std::size_t depth() const;
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  /// Sorted, deduplicated split features.
  std::vector<std::size_t> split_features() const;

  /// Gini-impurity tree over the rows with non-zero weight. Ties between
  /// equally good splits go to the lowest feature index.
  static DecisionTree fit(std::span<const BitVector* const> rows,
                          std::span<const Label> labels,
                          std::span<const double> weights,
                          std::size_t n_features, const TreeParams& params,
                          Rng& rng);

 private:
  std::vector<Node> nodes_;
};

class DecisionTreeDetector final : public Detector {
 public:
  DecisionTreeDetector(DecisionTree tree, std::size_t vocab_size,
                       std::uint64_t vocab_hash)
      : Detector(vocab_size, vocab_hash), tree_(std::move(tree)) {}

  DetectorKind kind() const noexcept override {
    return DetectorKind::DecisionTree;
  }
  nlohmann::json parameters() const override;
  std::unique_ptr<Detector> clone() const override {
    return std::make_unique<DecisionTreeDetector>(*this);
  }
  static DecisionTreeDetector from_parameters(const nlohmann::json& j,
                                              std::size_t vocab_size,
                                              std::uint64_t vocab_hash);

  const DecisionTree& tree() const noexcept { return tree_; }

  static DecisionTreeDetector fit(const Dataset& data, const TreeParams& p,
                                  std::uint64_t seed, std::uint64_t vocab_hash);

 protected:
  double malware_probability(const BitVector& x) const override {
    return tree_.predict(x);
  }

 private:
  DecisionTree tree_;
};

/// Random forest (bootstrap) or extra-trees (full set, random candidate
/// features) ensemble. F1 is the mean of per-tree leaf fractions.
class TreeEnsemble final : public Detector {
 public:
  TreeEnsemble(DetectorKind kind, std::vector<DecisionTree> trees,
               std::vector<std::vector<std::uint16_t>> in_bag,
               std::size_t vocab_size, std::uint64_t vocab_hash);

  DetectorKind kind() const noexcept override { return kind_; }
  nlohmann::json parameters() const override;
  std::unique_ptr<Detector> clone() const override {
    return std::make_unique<TreeEnsemble>(*this);
  }
  static TreeEnsemble from_parameters(DetectorKind kind,
                                      const nlohmann::json& j,
                                      std::size_t vocab_size,
                                      std::uint64_t vocab_hash);

  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }

  /// Per tree, how many times each training row was drawn. Empty when
  /// the ensemble was trained without bootstrap.
  const std::vector<std::vector<std::uint16_t>>& in_bag() const noexcept {
    return in_bag_;
  }
  bool has_bootstrap_records() const noexcept { return !in_bag_.empty(); }

  static TreeEnsemble fit(DetectorKind kind, const Dataset& data,
                          const ForestParams& p, std::uint64_t seed,
                          std::uint64_t vocab_hash);

 protected:
  double malware_probability(const BitVector& x) const override;

 private:
  DetectorKind kind_;
  std::vector<DecisionTree> trees_;
  std::vector<std::vector<std::uint16_t>> in_bag_;
};

}  // namespace evasion
