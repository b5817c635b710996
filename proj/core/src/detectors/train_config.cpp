#include "evasion/detectors/train_config.hpp"

#include <nlohmann/json.hpp>

#include "evasion/error.hpp"

namespace evasion {
namespace {

using nlohmann::json;

json tree_json(const TreeParams& t) {
  json j{{"max_depth", t.max_depth},
         {"min_samples_split", t.min_samples_split},
         {"min_samples_leaf", t.min_samples_leaf}};
  if (t.max_features == TreeParams::kSqrtFeatures) {
    j["max_features"] = "sqrt";
  } else {
    j["max_features"] = t.max_features;
  }
  return j;
}

void read_tree(const json& j, TreeParams& t) {
  t.max_depth = j.value("max_depth", t.max_depth);
  t.min_samples_split = j.value("min_samples_split", t.min_samples_split);
  t.min_samples_leaf = j.value("min_samples_leaf", t.min_samples_leaf);
  if (j.contains("max_features")) {
    const auto& mf = j.at("max_features");
    if (mf.is_string()) {
      if (mf.get<std::string>() != "sqrt") {
        throw ConfigError("max_features must be a count or \"sqrt\"");
      }
      t.max_features = TreeParams::kSqrtFeatures;
    } else {
      t.max_features = mf.get<std::size_t>();
    }
  }
}

json forest_json(const ForestParams& f) {
  return json{{"n_trees", f.n_trees},
              {"bootstrap", f.bootstrap},
              {"tree", tree_json(f.tree)}};
}

void read_forest(const json& j, ForestParams& f) {
  f.n_trees = j.value("n_trees", f.n_trees);
  f.bootstrap = j.value("bootstrap", f.bootstrap);
  if (j.contains("tree")) read_tree(j.at("tree"), f.tree);
}

}  // namespace

void to_json(json& j, const TrainConfig& c) {
  j = json{{"seed", c.seed},
           {"mlp",
            {{"hidden", c.mlp.hidden},
             {"epochs", c.mlp.epochs},
             {"batch_size", c.mlp.batch_size},
             {"learning_rate", c.mlp.learning_rate}}},
           {"logreg",
            {{"c", c.logreg.c},
             {"tol", c.logreg.tol},
             {"max_iter", c.logreg.max_iter}}},
           {"decision_tree", tree_json(c.decision_tree)},
           {"random_forest", forest_json(c.random_forest)},
           {"extra_trees", forest_json(c.extra_trees)}};
}

void from_json(const json& j, TrainConfig& c) {
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("mlp")) {
      const auto& m = j.at("mlp");
      c.mlp.hidden = m.value("hidden", c.mlp.hidden);
      c.mlp.epochs = m.value("epochs", c.mlp.epochs);
      c.mlp.batch_size = m.value("batch_size", c.mlp.batch_size);
      c.mlp.learning_rate = m.value("learning_rate", c.mlp.learning_rate);
    }
    if (j.contains("logreg")) {
      const auto& l = j.at("logreg");
      c.logreg.c = l.value("c", c.logreg.c);
      c.logreg.tol = l.value("tol", c.logreg.tol);
      c.logreg.max_iter = l.value("max_iter", c.logreg.max_iter);
    }
    if (j.contains("decision_tree")) read_tree(j.at("decision_tree"), c.decision_tree);
    if (j.contains("random_forest")) read_forest(j.at("random_forest"), c.random_forest);
    if (j.contains("extra_trees")) read_forest(j.at("extra_trees"), c.extra_trees);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  validate(c);
}

void validate(const TrainConfig& c) {
  if (c.mlp.hidden == 0 || c.mlp.epochs == 0 || c.mlp.batch_size == 0) {
    throw ConfigError("mlp hidden/epochs/batch_size must be positive");
  }
  if (!(c.mlp.learning_rate > 0.0)) {
    throw ConfigError("mlp learning_rate must be positive");
  }
  if (!(c.logreg.c > 0.0) || c.logreg.max_iter == 0 || c.logreg.tol < 0.0) {
    throw ConfigError("logreg c and max_iter must be positive");
  }
  for (const TreeParams* t :
       {&c.decision_tree, &c.random_forest.tree, &c.extra_trees.tree}) {
    if (t->min_samples_leaf == 0 || t->min_samples_split < 2) {
      throw ConfigError("tree min_samples_leaf >= 1 and min_samples_split >= 2");
    }
  }
  if (c.random_forest.n_trees == 0 || c.extra_trees.n_trees == 0) {
    throw ConfigError("ensembles need at least one tree");
  }
}

}  // namespace evasion
