#include "evasion/harness/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "evasion/detectors/metrics.hpp"
#include "evasion/error.hpp"
#include "evasion/evoattack/attack.hpp"
#include "evasion/harness/parallel.hpp"
#include "evasion/importance/importance.hpp"
#include "evasion/random.hpp"

namespace evasion {
namespace {

using nlohmann::json;

std::vector<DetectorKind> parse_models(const json& j) {
  std::vector<DetectorKind> out;
  for (const auto& t : j) {
    const auto tag = t.get<std::string>();
    auto k = detector_from_tag(tag);
    if (!k) throw ConfigError("unknown model '" + tag + "'");
    out.push_back(*k);
  }
  return out;
}

std::vector<Category> parse_categories(const json& j) {
  std::vector<Category> out;
  for (const auto& t : j) {
    const auto code = t.get<std::string>();
    auto c = category_from_code(code);
    if (!c) throw ConfigError("unknown category '" + code + "'");
    out.push_back(*c);
  }
  return out;
}

json model_tags(const std::vector<DetectorKind>& v) {
  json out = json::array();
  for (auto k : v) out.push_back(detector_tag(k));
  return out;
}

json category_codes(const std::vector<Category>& v) {
  json out = json::array();
  for (auto c : v) out.push_back(category_code(c));
  return out;
}

std::filesystem::path resolve_path(const std::filesystem::path& base,
                                   const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

Dataset subset_ordered(const Dataset& d) {
  // Held-out samples in app id order.
  std::vector<std::size_t> order(d.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return d.app_ids[a] < d.app_ids[b];
  });
  Dataset out;
  for (auto i : order) out.add(d.app_ids[i], d.samples[i]);
  return out;
}

}  // namespace

ExperimentConfig experiment_from_json(const json& j,
                                      const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("corpus")) {
      const auto& corpus = j.at("corpus");
      if (corpus.contains("synth")) {
        SynthSpec spec;
        spec.seed = derive_seed(c.seed, "synth");
        from_json(corpus.at("synth"), spec);
        c.synth = spec;
      } else {
        c.train_manifest =
            resolve_path(base_dir, corpus.at("train_manifest").get<std::string>());
        c.test_manifest =
            resolve_path(base_dir, corpus.at("test_manifest").get<std::string>());
      }
    } else {
      SynthSpec spec;
      spec.seed = derive_seed(c.seed, "synth");
      c.synth = spec;
    }
    if (j.contains("models")) c.models = parse_models(j.at("models"));
    c.train.seed = derive_seed(c.seed, "train");
    if (j.contains("train")) from_json(j.at("train"), c.train);
    if (j.contains("categories")) {
      const auto& cats = j.at("categories");
      c.categories = cats.is_string() && cats.get<std::string>() == "auto"
                         ? std::vector<Category>{}
                         : parse_categories(cats);
    }
    for (auto& [cat, params] : c.attack) params.seed = derive_seed(c.seed, "attack");
    if (j.contains("attack")) {
      for (const auto& [code, body] : j.at("attack").items()) {
        auto cat = category_from_code(code);
        if (!cat || !is_manifest_derived(*cat)) {
          throw ConfigError("attack settings for unknown or non-manifest category '" +
                            code + "'");
        }
        AttackParams p = AttackParams::defaults_for(*cat);
        p.seed = derive_seed(c.seed, "attack");
        json body_with_cat = body;
        body_with_cat["category"] = code;
        from_json(body_with_cat, p);
        c.attack[*cat] = p;
      }
    }
    c.attacked_samples = j.value("attacked_samples", c.attacked_samples);
    if (j.contains("importance")) {
      const auto& imp = j.at("importance");
      c.importance = imp.value("enabled", c.importance);
      c.importance_per_feature = imp.value("per_feature", c.importance_per_feature);
    }
    if (j.contains("exclusion")) {
      const auto& ex = j.at("exclusion");
      c.exclusion.enabled = ex.value("enabled", true);
      c.exclusion.top_k = ex.value("top_k", c.exclusion.top_k);
      if (ex.contains("models")) c.exclusion.models = parse_models(ex.at("models"));
      if (ex.contains("categories")) {
        c.exclusion.categories = parse_categories(ex.at("categories"));
      }
    }
    if (j.contains("distillation")) {
      const auto& d = j.at("distillation");
      c.distillation.enabled = d.value("enabled", true);
      c.distillation.config.seed = derive_seed(c.seed, "distill");
      from_json(d, c.distillation.config);
      if (d.contains("categories")) {
        c.distillation.categories = parse_categories(d.at("categories"));
      }
    }
    if (j.contains("output_dir")) {
      c.output_dir = resolve_path(base_dir, j.at("output_dir").get<std::string>());
    }
    c.workers = j.value("workers", c.workers);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  if (c.models.empty()) throw ConfigError("experiment lists no models");
  for (Category cat : c.categories) {
    if (!c.attack.count(cat)) {
      throw ConfigError("no attack settings for category " +
                        std::string(category_code(cat)));
    }
  }
  if (c.categories.empty() && !c.importance) {
    throw ConfigError("automatic category selection needs importance enabled");
  }
  return c;
}

json experiment_to_json(const ExperimentConfig& c) {
  json j{{"seed", c.seed},
         {"models", model_tags(c.models)},
         {"train", c.train},
         {"attacked_samples", c.attacked_samples},
         {"importance",
          {{"enabled", c.importance}, {"per_feature", c.importance_per_feature}}},
         {"exclusion",
          {{"enabled", c.exclusion.enabled},
           {"top_k", c.exclusion.top_k},
           {"models", model_tags(c.exclusion.models)},
           {"categories", category_codes(c.exclusion.categories)}}},
         {"output_dir", c.output_dir.generic_string()},
         {"workers", c.workers}};
  if (c.synth) {
    j["corpus"] = {{"synth", *c.synth}};
  } else {
    j["corpus"] = {{"train_manifest", c.train_manifest.generic_string()},
                   {"test_manifest", c.test_manifest.generic_string()}};
  }
  if (c.categories.empty()) {
    j["categories"] = "auto";
  } else {
    j["categories"] = category_codes(c.categories);
  }
  json attack = json::object();
  for (const auto& [cat, p] : c.attack) attack[std::string(category_code(cat))] = p;
  j["attack"] = attack;
  json distill = c.distillation.config;
  distill["enabled"] = c.distillation.enabled;
  distill["categories"] = category_codes(c.distillation.categories);
  j["distillation"] = distill;
  return j;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open experiment config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return experiment_from_json(j, path.parent_path());
}

void check_resolvable(const ExperimentConfig& config) {
  if (config.synth) return;
  for (const auto& p : {config.train_manifest, config.test_manifest}) {
    if (p.empty() || !std::filesystem::exists(p)) {
      throw ConfigError("corpus manifest not found: " + p.string());
    }
  }
}

CorpusSplits load_splits(const ExperimentConfig& config) {
  check_resolvable(config);
  CorpusSplits out;
  if (config.synth) {
    auto corpus = generate_synthetic_corpus(*config.synth);
    out.train = std::move(corpus.train);
    out.test = std::move(corpus.test);
  } else {
    out.train = load_corpus(config.train_manifest);
    out.test = load_corpus(config.test_manifest);
  }
  return out;
}

PreparedData prepare_data(const ExperimentConfig& config) {
  CorpusSplits splits = load_splits(config);
  std::vector<FeatureSet> sets;
  sets.reserve(splits.train.size());
  for (const auto& e : splits.train) sets.push_back(e.features);
  PreparedData out;
  out.vocab = build_vocabulary(sets, kAllCategories);
  out.train = vectorize_corpus(splits.train, out.vocab);
  out.test = vectorize_corpus(splits.test, out.vocab);
  return out;
}

PreparedData prepare_data(const ExperimentConfig& config, const Vocabulary& vocab) {
  CorpusSplits splits = load_splits(config);
  PreparedData out;
  out.vocab = vocab;
  out.train = vectorize_corpus(splits.train, out.vocab);
  out.test = vectorize_corpus(splits.test, out.vocab);
  return out;
}

AttackSummary attack_samples(const Detector& model, const std::string& model_name,
                             const Dataset& test, const Vocabulary& vocab,
                             const AttackParams& params, std::size_t count,
                             std::uint64_t seed, const std::string& variant,
                             std::size_t workers) {
  AttackSummary summary;
  summary.model = model_name;
  summary.category = params.category;
  summary.variant = variant;
  summary.excluded = params.excluded;

  const Dataset ordered = subset_ordered(test);
  std::vector<std::size_t> targets;
  for (std::size_t i = 0; i < ordered.size() && targets.size() < count; ++i) {
    const auto& s = ordered.samples[i];
    if (s.label != Label::Malware) continue;
    if (model.classify(s) != Label::Malware) continue;
    targets.push_back(i);
  }

  const AttackConfig base = resolve(params, vocab);
  const std::string stage = "attack:" + model_name + ":" +
                            std::string(category_code(params.category));
  summary.records.resize(targets.size());
  parallel_for(
      targets.size(),
      [&](std::size_t k) {
        const std::size_t i = targets[k];
        AttackConfig cfg = base;
        cfg.rng_seed = derive_seed(seed ^ params.seed, stage, fnv1a64(ordered.app_ids[i]));
        const AttackResult r = attack(model, ordered.samples[i], cfg);
        SampleRecord rec;
        rec.app_id = ordered.app_ids[i];
        rec.success = r.success;
        rec.num_added = r.num_added;
        r.best.perturbation.delta.for_each_set([&](std::size_t f) {
          rec.added_features.push_back(vocab.entry(f).name);
        });
        rec.query_count = r.query_count;
        rec.generations_run = r.generations_run;
        rec.final_proba = r.final_proba;
        rec.fitness_trajectory = r.fitness_trajectory;
        rec.best_fitness = r.best.fitness.value_or(0.0);
        rec.budget_exhausted = r.budget_exhausted;
        summary.records[k] = std::move(rec);
      },
      workers == 0 ? worker_count() : workers);
  summarize(summary);
  return summary;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  check_resolvable(config);
  const PreparedData data = prepare_data(config);
  ExperimentReport report;
  report.seed = config.seed;

  std::vector<std::unique_ptr<Detector>> models;
  for (DetectorKind kind : config.models) {
    models.push_back(train(kind, data.train, config.train, data.vocab.hash()));
    report.detection.push_back(
        {std::string(detector_short_name(kind)), evaluate(*models.back(), data.test)});
  }

  std::vector<Category> categories = config.categories;
  if (config.importance) {
    std::unique_ptr<Detector> forest;
    const Detector* rf = nullptr;
    for (const auto& m : models) {
      if (m->kind() == DetectorKind::RandomForest) rf = m.get();
    }
    if (rf == nullptr) {
      forest = train(DetectorKind::RandomForest, data.train, config.train,
                     data.vocab.hash());
      rf = forest.get();
    }
    report.importance =
        compute_importance(*rf, data.train, data.vocab,
                           derive_seed(config.seed, "importance"),
                           config.importance_per_feature);
    if (categories.empty()) {
      const Category allowed[] = {Category::S1, Category::S2};
      categories = select_perturbable_categories(*report.importance, allowed);
    }
  }
  report.selected_categories = categories;

  const std::uint64_t attack_seed = derive_seed(config.seed, "attacks");
  for (std::size_t m = 0; m < models.size(); ++m) {
    const std::string name(detector_short_name(config.models[m]));
    for (Category cat : categories) {
      const AttackParams& params = config.attack.at(cat);
      report.attacks.push_back(attack_samples(*models[m], name, data.test,
                                              data.vocab, params,
                                              config.attacked_samples,
                                              attack_seed, "baseline",
                                              config.workers));
    }
  }

  if (config.exclusion.enabled) {
    const std::size_t n_baseline = report.attacks.size();
    for (std::size_t m = 0; m < models.size(); ++m) {
      const DetectorKind kind = config.models[m];
      if (std::find(config.exclusion.models.begin(), config.exclusion.models.end(),
                    kind) == config.exclusion.models.end()) {
        continue;
      }
      const std::string name(detector_short_name(kind));
      for (Category cat : config.exclusion.categories) {
        const AttackSummary* baseline = nullptr;
        for (std::size_t i = 0; i < n_baseline; ++i) {
          if (report.attacks[i].model == name && report.attacks[i].category == cat) {
            baseline = &report.attacks[i];
          }
        }
        if (baseline == nullptr) continue;
        AttackParams params = config.attack.at(cat);
        for (std::size_t i = 0;
             i < baseline->most_added.size() && i < config.exclusion.top_k; ++i) {
          params.excluded.push_back(baseline->most_added[i].first);
        }
        report.attacks.push_back(attack_samples(*models[m], name, data.test,
                                                data.vocab, params,
                                                config.attacked_samples,
                                                attack_seed, "exclusion",
                                                config.workers));
      }
    }
  }

  if (config.distillation.enabled) {
    const Detector* teacher = nullptr;
    for (const auto& m : models) {
      if (m->kind() == DetectorKind::Mlp) teacher = m.get();
    }
    std::unique_ptr<Detector> own_teacher;
    if (teacher == nullptr) {
      own_teacher = train(DetectorKind::Mlp, data.train, config.train, data.vocab.hash());
      teacher = own_teacher.get();
    }
    DistillResult d = distill(*teacher, data.train, data.test, config.distillation.config);
    report.distillation = DistillationSummary{config.distillation.config.temperature,
                                              d.teacher_accuracy, d.student_accuracy,
                                              d.accuracy_regression};
    const std::string name(detector_short_name(DetectorKind::Mlp));
    for (Category cat : config.distillation.categories) {
      auto it = config.attack.find(cat);
      if (it == config.attack.end()) continue;
      report.attacks.push_back(attack_samples(*d.student, name, data.test, data.vocab,
                                              it->second, config.attacked_samples,
                                              attack_seed, "distilled",
                                              config.workers));
    }
  }
  return report;
}

}  // namespace evasion
