#include "evasion/detectors/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "evasion/error.hpp"

namespace evasion {
namespace {

double gini(double pos, double total) {
  if (total <= 0.0) return 0.0;
  const double p = pos / total;
  return 2.0 * p * (1.0 - p);
}

struct Pending {
  std::vector<std::uint32_t> rows;
  std::size_t depth;
  std::int32_t node;
};

nlohmann::json tree_to_json(const DecisionTree& t) {
  std::vector<std::int32_t> feature, left, right;
  std::vector<double> value, weight;
  for (const auto& n : t.nodes()) {
    feature.push_back(n.feature);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
    weight.push_back(n.weight);
  }
  return nlohmann::json{{"feature", feature}, {"left", left},
                        {"right", right},     {"value", value},
                        {"weight", weight}};
}

DecisionTree tree_from_json(const nlohmann::json& j, std::size_t vocab_size) {
  auto feature = j.at("feature").get<std::vector<std::int32_t>>();
  auto left = j.at("left").get<std::vector<std::int32_t>>();
  auto right = j.at("right").get<std::vector<std::int32_t>>();
  auto value = j.at("value").get<std::vector<double>>();
  auto weight = j.at("weight").get<std::vector<double>>();
  const std::size_t n = feature.size();
  if (left.size() != n || right.size() != n || value.size() != n ||
      weight.size() != n || n == 0) {
    throw ParseError("tree node arrays have inconsistent sizes");
  }
  std::vector<DecisionTree::Node> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes[i] = {feature[i], left[i], right[i], value[i], weight[i]};
    if (feature[i] >= 0) {
      const auto in_range = [&](std::int32_t c) {
        return c > static_cast<std::int32_t>(i) &&
               c < static_cast<std::int32_t>(n);
      };
      if (static_cast<std::size_t>(feature[i]) >= vocab_size ||
          !in_range(left[i]) || !in_range(right[i])) {
        throw ParseError("tree node " + std::to_string(i) + " is malformed");
      }
    }
  }
  return DecisionTree(std::move(nodes));
}

}  // namespace

double DecisionTree::predict(const BitVector& x) const {
  std::int32_t i = 0;
  while (nodes_[i].feature >= 0) {
    i = x.test(static_cast<std::size_t>(nodes_[i].feature)) ? nodes_[i].right
                                                            : nodes_[i].left;
  }
  return nodes_[i].value;
}

std::size_t DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t best = 0;
  // Children always have larger ids than their parent.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes_[i].feature >= 0) {
      d[nodes_[i].left] = d[i] + 1;
      d[nodes_[i].right] = d[i] + 1;
    }
  }
  return best;
}

std::vector<std::size_t> DecisionTree::split_features() const {
  std::vector<std::size_t> out;
  for (const auto& n : nodes_) {
    if (n.feature >= 0) out.push_back(static_cast<std::size_t>(n.feature));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

DecisionTree DecisionTree::fit(std::span<const BitVector* const> rows,
                               std::span<const Label> labels,
                               std::span<const double> weights,
                               std::size_t n_features, const TreeParams& params,
                               Rng& rng) {
  std::vector<Node> nodes;
  std::vector<Pending> stack;
  {
    Pending root{{}, 0, 0};
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (weights[r] > 0.0) root.rows.push_back(static_cast<std::uint32_t>(r));
    }
    nodes.emplace_back();
    stack.push_back(std::move(root));
  }

  std::size_t k_features = params.max_features;
  if (k_features == TreeParams::kSqrtFeatures) {
    k_features = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::sqrt(static_cast<double>(n_features))));
  }

  std::vector<double> ones(n_features);
  std::vector<double> ones_pos(n_features);
  std::vector<std::size_t> candidates;

  while (!stack.empty()) {
    Pending work = std::move(stack.back());
    stack.pop_back();

    double total = 0.0;
    double pos = 0.0;
    for (auto r : work.rows) {
      total += weights[r];
      if (labels[r] == Label::Malware) pos += weights[r];
    }
    Node& node = nodes[work.node];
    node.value = total > 0.0 ? pos / total : 0.0;
    node.weight = total;

    const bool depth_capped =
        params.max_depth != 0 && work.depth >= params.max_depth;
    if (depth_capped || total < static_cast<double>(params.min_samples_split) ||
        pos == 0.0 || pos == total ||
        total < 2.0 * static_cast<double>(params.min_samples_leaf)) {
      continue;
    }

    std::fill(ones.begin(), ones.end(), 0.0);
    std::fill(ones_pos.begin(), ones_pos.end(), 0.0);
    for (auto r : work.rows) {
      const double w = weights[r];
      const bool malware = labels[r] == Label::Malware;
      rows[r]->for_each_set([&](std::size_t f) {
        ones[f] += w;
        if (malware) ones_pos[f] += w;
      });
    }
    candidates.clear();
    for (std::size_t f = 0; f < n_features; ++f) {
      if (ones[f] > 0.0 && ones[f] < total) candidates.push_back(f);
    }
    if (k_features != 0 && candidates.size() > k_features) {
      // Uniform subset of the non-constant features.
      for (std::size_t i = 0; i < k_features; ++i) {
        const auto j = i + uniform_index(rng, candidates.size() - i);
        std::swap(candidates[i], candidates[j]);
      }
      candidates.resize(k_features);
      std::sort(candidates.begin(), candidates.end());
    }

    const double min_leaf = static_cast<double>(params.min_samples_leaf);
    const double parent = total * gini(pos, total);
    double best = parent;
    std::int64_t best_feature = -1;
    for (auto f : candidates) {
      const double right_w = ones[f];
      const double left_w = total - right_w;
      if (right_w < min_leaf || left_w < min_leaf) continue;
      const double right_p = ones_pos[f];
      const double left_p = pos - right_p;
      const double impurity =
          left_w * gini(left_p, left_w) + right_w * gini(right_p, right_w);
      if (impurity < best - 1e-12) {
        best = impurity;
        best_feature = static_cast<std::int64_t>(f);
      }
    }
    if (best_feature < 0) continue;

    Pending left{{}, work.depth + 1, 0};
    Pending right{{}, work.depth + 1, 0};
    for (auto r : work.rows) {
      (rows[r]->test(static_cast<std::size_t>(best_feature)) ? right : left)
          .rows.push_back(r);
    }
    const auto left_id = static_cast<std::int32_t>(nodes.size());
    const auto right_id = left_id + 1;
    node.feature = static_cast<std::int32_t>(best_feature);
    node.left = left_id;
    node.right = right_id;
    nodes.emplace_back();
    nodes.emplace_back();
    left.node = left_id;
    right.node = right_id;
    stack.push_back(std::move(right));
    stack.push_back(std::move(left));
  }
  return DecisionTree(std::move(nodes));
}

nlohmann::json DecisionTreeDetector::parameters() const {
  return tree_to_json(tree_);
}

DecisionTreeDetector DecisionTreeDetector::from_parameters(
    const nlohmann::json& j, std::size_t vocab_size, std::uint64_t vocab_hash) {
  return DecisionTreeDetector(tree_from_json(j, vocab_size), vocab_size,
                              vocab_hash);
}

namespace {

struct Columns {
  std::vector<const BitVector*> rows;
  std::vector<Label> labels;
};

Columns columns_of(const Dataset& data) {
  Columns c;
  for (const auto& s : data.samples) {
    c.rows.push_back(&s.bits);
    c.labels.push_back(*s.label);
  }
  return c;
}

}  // namespace

DecisionTreeDetector DecisionTreeDetector::fit(const Dataset& data,
                                               const TreeParams& p,
                                               std::uint64_t seed,
                                               std::uint64_t vocab_hash) {
  const auto cols = columns_of(data);
  const std::vector<double> weights(data.size(), 1.0);
  const std::size_t width = data.samples.front().size();
  Rng rng(seed);
  return DecisionTreeDetector(
      DecisionTree::fit(cols.rows, cols.labels, weights, width, p, rng), width,
      vocab_hash);
}

TreeEnsemble::TreeEnsemble(DetectorKind kind, std::vector<DecisionTree> trees,
                           std::vector<std::vector<std::uint16_t>> in_bag,
                           std::size_t vocab_size, std::uint64_t vocab_hash)
    : Detector(vocab_size, vocab_hash),
      kind_(kind),
      trees_(std::move(trees)),
      in_bag_(std::move(in_bag)) {
  if (trees_.empty()) throw PreconditionError("ensemble has no trees");
  if (!in_bag_.empty() && in_bag_.size() != trees_.size()) {
    throw PreconditionError("one bootstrap record per tree required");
  }
}

double TreeEnsemble::malware_probability(const BitVector& x) const {
  double sum = 0.0;
  for (const auto& t : trees_) sum += t.predict(x);
  return sum / static_cast<double>(trees_.size());
}

nlohmann::json TreeEnsemble::parameters() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) trees.push_back(tree_to_json(t));
  nlohmann::json j{{"trees", trees}};
  if (!in_bag_.empty()) j["in_bag"] = in_bag_;
  return j;
}

TreeEnsemble TreeEnsemble::from_parameters(DetectorKind kind,
                                           const nlohmann::json& j,
                                           std::size_t vocab_size,
                                           std::uint64_t vocab_hash) {
  std::vector<DecisionTree> trees;
  for (const auto& t : j.at("trees")) {
    trees.push_back(tree_from_json(t, vocab_size));
  }
  std::vector<std::vector<std::uint16_t>> in_bag;
  if (j.contains("in_bag")) {
    j.at("in_bag").get_to(in_bag);
  }
  return TreeEnsemble(kind, std::move(trees), std::move(in_bag), vocab_size,
                      vocab_hash);
}

TreeEnsemble TreeEnsemble::fit(DetectorKind kind, const Dataset& data,
                               const ForestParams& p, std::uint64_t seed,
                               std::uint64_t vocab_hash) {
  const auto cols = columns_of(data);
  const std::size_t n = data.size();
  const std::size_t width = data.samples.front().size();
  std::vector<DecisionTree> trees;
  std::vector<std::vector<std::uint16_t>> in_bag;
  std::vector<double> weights(n);
  for (std::size_t t = 0; t < p.n_trees; ++t) {
    Rng rng(derive_seed(seed, "tree", t));
    if (p.bootstrap) {
      std::vector<std::uint16_t> counts(n, 0);
      for (std::size_t k = 0; k < n; ++k) ++counts[uniform_index(rng, n)];
      for (std::size_t r = 0; r < n; ++r) weights[r] = counts[r];
      in_bag.push_back(std::move(counts));
    } else {
      std::fill(weights.begin(), weights.end(), 1.0);
    }
    trees.push_back(
        DecisionTree::fit(cols.rows, cols.labels, weights, width, p.tree, rng));
  }
  return TreeEnsemble(kind, std::move(trees), std::move(in_bag), width,
                      vocab_hash);
}

}  // namespace evasion
