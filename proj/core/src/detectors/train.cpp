#include "evasion/detectors/train.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "evasion/detectors/logistic.hpp"
#include "evasion/detectors/mlp.hpp"
#include "evasion/detectors/tree.hpp"
#include "evasion/error.hpp"
#include "evasion/random.hpp"

namespace evasion {
namespace {

constexpr const char* kFormat = "evasion-model";
constexpr int kVersion = 1;

std::unique_ptr<Detector> train_mlp(const Dataset& data, const MlpParams& p,
                                    std::uint64_t seed,
                                    std::uint64_t vocab_hash) {
  auto net = std::make_unique<Mlp>(data.samples.front().size(), p.hidden,
                                   vocab_hash);
  net->initialize(derive_seed(seed, "mlp-init"));
  std::vector<const BitVector*> inputs;
  std::vector<std::array<double, 2>> targets;
  for (const auto& s : data.samples) {
    inputs.push_back(&s.bits);
    targets.push_back(*s.label == Label::Malware
                          ? std::array<double, 2>{0.0, 1.0}
                          : std::array<double, 2>{1.0, 0.0});
  }
  MlpTrainOptions opt;
  opt.epochs = p.epochs;
  opt.batch_size = p.batch_size;
  opt.learning_rate = p.learning_rate;
  opt.seed = derive_seed(seed, "mlp-sgd");
  sgd_train(*net, inputs, targets, opt);
  return net;
}

}  // namespace

void check_training_set(const Dataset& data) {
  if (data.empty()) throw PreconditionError("training set is empty");
  const std::size_t width = data.samples.front().size();
  bool benign = false;
  bool malware = false;
  for (const auto& s : data.samples) {
    if (s.size() != width) {
      throw PreconditionError("training vectors have different lengths");
    }
    if (!s.label) throw PreconditionError("training sample is unlabeled");
    (*s.label == Label::Malware ? malware : benign) = true;
  }
  if (!benign || !malware) {
    throw PreconditionError("training set must contain both classes");
  }
}

std::unique_ptr<Detector> train(DetectorKind kind, const Dataset& data,
                                const TrainConfig& config,
                                std::uint64_t vocab_hash) {
  check_training_set(data);
  validate(config);
  const std::uint64_t seed = derive_seed(config.seed, detector_tag(kind));
  switch (kind) {
    case DetectorKind::Mlp:
      return train_mlp(data, config.mlp, seed, vocab_hash);
    case DetectorKind::LogReg:
      return std::make_unique<LogisticRegression>(
          LogisticRegression::fit(data, config.logreg, vocab_hash));
    case DetectorKind::DecisionTree:
      return std::make_unique<DecisionTreeDetector>(DecisionTreeDetector::fit(
          data, config.decision_tree, seed, vocab_hash));
    case DetectorKind::RandomForest:
      return std::make_unique<TreeEnsemble>(TreeEnsemble::fit(
          kind, data, config.random_forest, seed, vocab_hash));
    case DetectorKind::ExtraTrees:
      return std::make_unique<TreeEnsemble>(TreeEnsemble::fit(
          kind, data, config.extra_trees, seed, vocab_hash));
  }
  throw PreconditionError("unknown detector kind");
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

nlohmann::json model_to_json(const Detector& model,
                             const std::optional<Provenance>& provenance) {
  nlohmann::json j{{"format", kFormat},
                   {"version", kVersion},
                   {"kind", detector_tag(model.kind())},
                   {"vocab_hash", hex64(model.vocab_hash())},
                   {"vocab_size", model.vocab_size()},
                   {"parameters", model.parameters()}};
  if (provenance) {
    j["provenance"] = {{"teacher_hash", hex64(provenance->teacher_hash)},
                       {"temperature", provenance->temperature}};
  }
  return j;
}

std::string serialize_model(const Detector& model,
                            const std::optional<Provenance>& provenance) {
  return model_to_json(model, provenance).dump();
}

std::unique_ptr<Detector> model_from_json(const nlohmann::json& j,
                                          const Vocabulary& vocab) {
  try {
    if (j.value("format", std::string()) != kFormat) {
      throw ParseError("not an evasion-model document");
    }
    if (j.at("version").get<int>() != kVersion) {
      throw ParseError("unsupported model version " +
                       std::to_string(j.at("version").get<int>()));
    }
    const auto tag = j.at("kind").get<std::string>();
    const auto kind = detector_from_tag(tag);
    if (!kind) throw ParseError("unknown model kind '" + tag + "'");
    const auto hash = j.at("vocab_hash").get<std::string>();
    const auto size = j.at("vocab_size").get<std::size_t>();
    if (hash != hex64(vocab.hash()) || size != vocab.size()) {
      throw ConfigError("model was trained against vocabulary " + hash +
                        ", refusing to load against " + hex64(vocab.hash()));
    }
    const auto& params = j.at("parameters");
    switch (*kind) {
      case DetectorKind::Mlp:
        return std::make_unique<Mlp>(
            Mlp::from_parameters(params, size, vocab.hash()));
      case DetectorKind::LogReg:
        return std::make_unique<LogisticRegression>(
            LogisticRegression::from_parameters(params, size, vocab.hash()));
      case DetectorKind::DecisionTree:
        return std::make_unique<DecisionTreeDetector>(
            DecisionTreeDetector::from_parameters(params, size, vocab.hash()));
      case DetectorKind::RandomForest:
      case DetectorKind::ExtraTrees:
        return std::make_unique<TreeEnsemble>(TreeEnsemble::from_parameters(
            *kind, params, size, vocab.hash()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model document: ") + e.what());
  } catch (const PreconditionError& e) {
    throw ParseError(std::string("model document: ") + e.what());
  }
  throw ParseError("unknown model kind");
}

std::unique_ptr<Detector> deserialize_model(const std::string& text,
                                            const Vocabulary& vocab) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model document: ") + e.what());
  }
  return model_from_json(j, vocab);
}

std::optional<Provenance> provenance_of(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.contains("provenance")) return std::nullopt;
    const auto& p = j.at("provenance");
    return Provenance{
        std::stoull(p.at("teacher_hash").get<std::string>(), nullptr, 16),
        p.at("temperature").get<double>()};
  } catch (const std::exception& e) {
    throw ParseError(std::string("model provenance: ") + e.what());
  }
}

std::uint64_t model_hash(const Detector& model) {
  return fnv1a64(serialize_model(model));
}

void save_model(const std::filesystem::path& path, const Detector& model,
                const std::optional<Provenance>& provenance) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << serialize_model(model, provenance);
  if (!out) throw IoError("write failed for " + path.string());
}

std::unique_ptr<Detector> load_model(const std::filesystem::path& path,
                                     const Vocabulary& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str(), vocab);
}

}  // namespace evasion
