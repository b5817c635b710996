#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "evasion/detectors.hpp"
#include "evasion/error.hpp"
#include "evasion/evoattack.hpp"
#include "evasion/hardening.hpp"
#include "evasion/harness.hpp"
#include "evasion/importance.hpp"
#include "evasion/random.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace evasion;

namespace {

enum Exit { kOk = 0, kConfigError = 1, kRuntimeError = 2 };

struct Common {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out = "out";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Master seed (overrides the config)");
  cmd->add_option("--config", c.config, "Experiment config (JSON)");
  cmd->add_option("--out", c.out, "Output directory");
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

ExperimentConfig load_config(const Common& c) {
  json j = json::object();
  fs::path base;
  if (!c.config.empty()) {
    j = read_json(c.config);
    base = fs::path(c.config).parent_path();
  }
  if (c.seed) j["seed"] = *c.seed;
  ExperimentConfig config = experiment_from_json(j, base);
  config.output_dir = c.out;
  return config;
}

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw IoError("cannot write " + path.string());
}

Vocabulary load_vocabulary(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open vocabulary " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), {});
  return Vocabulary::from_csv(text);
}

// Models either come from a `train` output directory or are trained here.
struct Workspace {
  PreparedData data;
  std::vector<std::pair<DetectorKind, std::unique_ptr<Detector>>> models;
};

Workspace open_workspace(const ExperimentConfig& config, const std::string& models_dir,
                         const std::vector<DetectorKind>& kinds) {
  Workspace ws;
  if (models_dir.empty()) {
    ws.data = prepare_data(config);
    for (DetectorKind k : kinds) {
      ws.models.emplace_back(k, train(k, ws.data.train, config.train, ws.data.vocab.hash()));
    }
    return ws;
  }
  const fs::path dir(models_dir);
  ws.data = prepare_data(config, load_vocabulary(dir / "vocabulary.csv"));
  for (DetectorKind k : kinds) {
    const fs::path path = dir / "models" / (std::string(detector_tag(k)) + ".json");
    if (!fs::exists(path)) throw ConfigError("missing model " + path.string());
    ws.models.emplace_back(k, load_model(path, ws.data.vocab));
  }
  return ws;
}

std::vector<DetectorKind> parse_kinds(const std::vector<std::string>& tags,
                                      const std::vector<DetectorKind>& fallback) {
  if (tags.empty()) return fallback;
  std::vector<DetectorKind> out;
  for (const auto& t : tags) {
    auto k = detector_from_tag(t);
    if (!k) throw ConfigError("unknown model '" + t + "'");
    out.push_back(*k);
  }
  return out;
}

std::vector<Category> parse_categories(const std::vector<std::string>& codes,
                                       const std::vector<Category>& fallback) {
  if (codes.empty()) return fallback;
  std::vector<Category> out;
  for (const auto& code : codes) {
    auto c = category_from_code(code);
    if (!c) throw ConfigError("unknown category '" + code + "'");
    out.push_back(*c);
  }
  return out;
}

const AttackParams& params_for(const ExperimentConfig& config, Category c) {
  auto it = config.attack.find(c);
  if (it == config.attack.end()) {
    throw ConfigError("no attack settings for category " + std::string(category_code(c)));
  }
  return it->second;
}

int run_synth(const Common& common) {
  const ExperimentConfig config = load_config(common);
  if (!config.synth) throw ConfigError("synth needs a synthetic corpus spec");
  const SynthCorpus corpus = generate_synthetic_corpus(*config.synth);
  const fs::path out(common.out);
  write_corpus(corpus, out);
  json spec = *config.synth;
  write_text(out / "synth.json", spec.dump(2) + "\n");
  std::cout << "wrote " << corpus.train.size() << " training and " << corpus.test.size()
            << " held-out samples to " << out.string() << "\n";
  return kOk;
}

int run_train(const Common& common, const std::vector<std::string>& tags) {
  const ExperimentConfig config = load_config(common);
  const auto kinds = parse_kinds(tags, config.models);
  const PreparedData data = prepare_data(config);
  const fs::path out(common.out);
  write_text(out / "vocabulary.csv", data.vocab.to_csv());
  write_text(out / "train_config.json", json(config.train).dump(2) + "\n");
  fs::create_directories(out / "models");
  for (DetectorKind k : kinds) {
    auto model = train(k, data.train, config.train, data.vocab.hash());
    save_model(out / "models" / (std::string(detector_tag(k)) + ".json"), *model);
    std::cout << detector_tag(k) << " trained\n";
  }
  return kOk;
}

int run_evaluate(const Common& common, const std::string& models_dir,
                 const std::vector<std::string>& tags) {
  const ExperimentConfig config = load_config(common);
  Workspace ws = open_workspace(config, models_dir, parse_kinds(tags, config.models));
  ExperimentReport report;
  report.seed = config.seed;
  for (const auto& [kind, model] : ws.models) {
    report.detection.push_back(
        {std::string(detector_short_name(kind)), evaluate(*model, ws.data.test)});
  }
  const std::string csv = detection_csv(report);
  write_text(fs::path(common.out) / "detection_metrics.csv", csv);
  std::cout << csv;
  return kOk;
}

int run_importance(const Common& common, const std::string& models_dir,
                   bool per_feature) {
  const ExperimentConfig config = load_config(common);
  Workspace ws = open_workspace(config, models_dir, {DetectorKind::RandomForest});
  const ImportanceReport report =
      compute_importance(*ws.models.front().second, ws.data.train, ws.data.vocab,
                         derive_seed(config.seed, "importance"), per_feature);
  const Category allowed[] = {Category::S1, Category::S2};
  json j = importance_json(report, ws.data.vocab);
  json selected = json::array();
  for (Category c : select_perturbable_categories(report, allowed)) {
    selected.push_back(category_code(c));
  }
  j["selected_categories"] = selected;
  const fs::path out(common.out);
  write_text(out / "importance.csv", importance_csv(report));
  write_text(out / "importance.json", j.dump(2) + "\n");
  std::cout << importance_csv(report);
  return kOk;
}

int run_attack(const Common& common, const std::string& models_dir,
               const std::vector<std::string>& tags,
               const std::vector<std::string>& codes,
               std::optional<std::size_t> samples) {
  const ExperimentConfig config = load_config(common);
  Workspace ws = open_workspace(config, models_dir, parse_kinds(tags, config.models));
  const auto categories = parse_categories(
      codes, config.categories.empty() ? std::vector<Category>{Category::S2}
                                       : config.categories);
  ExperimentReport report;
  report.seed = config.seed;
  const std::uint64_t seed = derive_seed(config.seed, "attacks");
  for (const auto& [kind, model] : ws.models) {
    for (Category c : categories) {
      report.attacks.push_back(attack_samples(
          *model, std::string(detector_short_name(kind)), ws.data.test, ws.data.vocab,
          params_for(config, c), samples.value_or(config.attacked_samples), seed,
          "baseline", config.workers));
    }
  }
  const fs::path out(common.out);
  write_text(out / "attack_results.csv", attack_csv(report));
  write_text(out / "records.jsonl", records_jsonl(report));
  write_text(out / "fitness_trajectories.csv", trajectory_csv(report));
  write_text(out / "fitness_boxplot.csv", boxplot_csv(report));
  write_text(out / "most_added.csv", most_added_csv(report));
  std::cout << attack_csv(report);
  return kOk;
}

int run_distill(const Common& common, const std::string& models_dir) {
  const ExperimentConfig config = load_config(common);
  Workspace ws = open_workspace(config, models_dir, {DetectorKind::Mlp});
  const Detector& teacher = *ws.models.front().second;
  DistillResult result =
      distill(teacher, ws.data.train, ws.data.test, config.distillation.config);
  const fs::path out(common.out);
  fs::create_directories(out / "models");
  save_model(out / "models" / "mlp_distilled.json", *result.student, result.provenance);
  json j{{"temperature", config.distillation.config.temperature},
         {"teacher_hash", hex64(result.provenance.teacher_hash)},
         {"teacher_accuracy", result.teacher_accuracy},
         {"student_accuracy", result.student_accuracy},
         {"accuracy_regression", result.accuracy_regression}};
  write_text(out / "distillation.json", j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  if (result.accuracy_regression) {
    std::cerr << "warning: student accuracy regressed by more than 2 points\n";
  }
  return kOk;
}

int run_report(const Common& common) {
  const ExperimentConfig config = load_config(common);
  const ExperimentReport report = run_experiment(config);
  const PreparedData data = prepare_data(config);
  const fs::path out(common.out);
  const auto written = emit_report(report, out, &data.vocab);
  write_text(out / "experiment.json", experiment_to_json(config).dump(2) + "\n");
  for (const auto& p : written) std::cout << p.string() << "\n";
  return kOk;
}

// Ranks the sample's addable features by the drop in F1 they cause alone
// and keeps the strongest `bits`, then compares the exhaustive minimum
// over that set with the genetic attack restricted to it.
int run_oracle(const Common& common, const std::string& models_dir,
               const std::string& tag, const std::string& code,
               const std::string& app_id, std::size_t bits) {
  const ExperimentConfig config = load_config(common);
  Workspace ws = open_workspace(config, models_dir, parse_kinds({tag}, {DetectorKind::LogReg}));
  const Detector& model = *ws.models.front().second;
  const Category category = parse_categories({code}, {})[0];
  if (bits == 0 || bits > 20) throw ConfigError("--bits must be in 1..20");

  std::optional<std::size_t> row;
  for (std::size_t i = 0; i < ws.data.test.size(); ++i) {
    const auto& s = ws.data.test.samples[i];
    if (app_id.empty() ? (s.label == Label::Malware && model.classify(s) == Label::Malware)
                       : ws.data.test.app_ids[i] == app_id) {
      row = i;
      break;
    }
  }
  if (!row) throw ConfigError("no matching held-out sample");
  const FeatureVector& x = ws.data.test.samples[*row];

  AttackConfig attack_config = resolve(params_for(config, category), ws.data.vocab);
  std::vector<std::pair<double, std::size_t>> ranked;
  const double base = model.predict_proba(x)[1];
  for (std::size_t f : eligible_indices(x, attack_config)) {
    FeatureVector y = x;
    y.bits.set(f);
    ranked.emplace_back(model.predict_proba(y)[1] - base, f);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  BitVector mask(ws.data.vocab.size());
  for (std::size_t k = 0; k < ranked.size() && k < bits; ++k) mask.set(ranked[k].second);
  attack_config.perturbable_mask = mask;
  attack_config.rng_seed = derive_seed(config.seed, "oracle");

  const auto optimum = brute_force_min_perturbation(model, x, mask);
  const AttackResult ga = attack(model, x, attack_config);
  json j{{"app_id", ws.data.test.app_ids[*row]},
         {"model", detector_tag(ws.models.front().first)},
         {"category", category_code(category)},
         {"candidate_bits", mask.count()},
         {"oracle_num", optimum ? json(optimum->num()) : json(nullptr)},
         {"attack_success", ga.success},
         {"attack_num", ga.num_added},
         {"attack_queries", ga.query_count}};
  write_text(fs::path(common.out) / "oracle.json", j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Genetic-algorithm evasion attacks against malware detectors"};
  app.require_subcommand(1);

  Common common;
  std::string models_dir;
  std::vector<std::string> model_tags;
  std::vector<std::string> category_codes;
  std::optional<std::size_t> samples;
  bool per_feature = false;
  std::string oracle_model = "logreg";
  std::string oracle_category = "S2";
  std::string oracle_app;
  std::size_t oracle_bits = 12;

  auto* synth = app.add_subcommand("synth", "Write a synthetic feature-file corpus");
  auto* train_cmd = app.add_subcommand("train", "Train detectors and save them");
  auto* eval_cmd = app.add_subcommand("evaluate", "Held-out detection metrics");
  auto* imp_cmd = app.add_subcommand("importance", "Category permutation importance");
  auto* attack_cmd = app.add_subcommand("attack", "Attack held-out malware");
  auto* distill_cmd = app.add_subcommand("distill", "Distill the MLP at temperature T");
  auto* report_cmd = app.add_subcommand("report", "Run the full experiment and emit the report");
  auto* oracle_cmd = app.add_subcommand("oracle", "Compare the attack with exhaustive search");
  for (auto* cmd : {synth, train_cmd, eval_cmd, imp_cmd, attack_cmd, distill_cmd,
                    report_cmd, oracle_cmd}) {
    add_common(cmd, common);
  }
  for (auto* cmd : {eval_cmd, imp_cmd, attack_cmd, distill_cmd, oracle_cmd}) {
    cmd->add_option("--models", models_dir, "Directory written by `train`");
  }
  for (auto* cmd : {train_cmd, eval_cmd, attack_cmd}) {
    cmd->add_option("--model", model_tags, "Detector tags (mlp, logreg, dt, rf, et)");
  }
  attack_cmd->add_option("--category", category_codes, "Perturbable categories");
  attack_cmd->add_option("--samples", samples, "Malware samples to attack");
  imp_cmd->add_flag("--per-feature", per_feature, "Also rank single features");
  oracle_cmd->add_option("--model", oracle_model, "Detector tag");
  oracle_cmd->add_option("--category", oracle_category, "Perturbable category");
  oracle_cmd->add_option("--sample", oracle_app, "Held-out app id (default: first flagged malware)");
  oracle_cmd->add_option("--bits", oracle_bits, "Candidate features searched exhaustively");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*synth) return run_synth(common);
    if (*train_cmd) return run_train(common, model_tags);
    if (*eval_cmd) return run_evaluate(common, models_dir, model_tags);
    if (*imp_cmd) return run_importance(common, models_dir, per_feature);
    if (*attack_cmd) return run_attack(common, models_dir, model_tags, category_codes, samples);
    if (*distill_cmd) return run_distill(common, models_dir);
    if (*report_cmd) return run_report(common);
    if (*oracle_cmd) {
      return run_oracle(common, models_dir, oracle_model, oracle_category, oracle_app,
                        oracle_bits);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kOk;
}
