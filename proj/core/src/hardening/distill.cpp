#include "evasion/hardening/distill.hpp"

#include <nlohmann/json.hpp>

#include "evasion/detectors/metrics.hpp"
#include "evasion/error.hpp"
#include "evasion/random.hpp"

namespace evasion {

void validate(const DistillConfig& c) {
  if (!(c.temperature >= 1.0)) throw ConfigError("temperature must be >= 1");
  if (c.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(c.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
}

void to_json(nlohmann::json& j, const DistillConfig& c) {
  j = nlohmann::json{{"temperature", c.temperature},
                     {"epochs", c.epochs},
                     {"batch_size", c.batch_size},
                     {"learning_rate", c.learning_rate},
                     {"init_from_teacher", c.init_from_teacher},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, DistillConfig& c) {
  try {
    c.temperature = j.value("temperature", c.temperature);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.init_from_teacher = j.value("init_from_teacher", c.init_from_teacher);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("distill config: ") + e.what());
  }
  validate(c);
}

std::vector<std::array<double, 2>> soft_labels(
    const Mlp& teacher, std::span<const BitVector* const> inputs,
    double temperature) {
  std::vector<std::array<double, 2>> out;
  out.reserve(inputs.size());
  for (const BitVector* x : inputs) {
    out.push_back(softmax2(teacher.logits(*x), temperature));
  }
  return out;
}

DistillResult distill(const Detector& teacher_model, const Dataset& train,
                      const Dataset& holdout, const DistillConfig& config) {
  validate(config);
  const auto* teacher = dynamic_cast<const Mlp*>(&teacher_model);
  if (teacher == nullptr) {
    throw PreconditionError("distillation is defined for the MLP detector only");
  }
  check_training_set(train);
  if (train.samples.front().size() != teacher->vocab_size()) {
    throw PreconditionError("teacher and training set use different vocabularies");
  }

  std::vector<const BitVector*> inputs;
  for (const auto& s : train.samples) inputs.push_back(&s.bits);
  const auto targets = soft_labels(*teacher, inputs, config.temperature);

  auto student = std::make_unique<Mlp>(*teacher);
  if (!config.init_from_teacher) {
    student->initialize(derive_seed(config.seed, "student-init"));
  }
  MlpTrainOptions opt;
  opt.epochs = config.epochs;
  opt.batch_size = config.batch_size;
  opt.learning_rate = config.learning_rate;
  opt.temperature = config.temperature;
  opt.gradient_scale = config.temperature * config.temperature;
  opt.seed = derive_seed(config.seed, "student-sgd");
  sgd_train(*student, inputs, targets, opt);

  DistillResult result;
  const Dataset& eval = holdout.empty() ? train : holdout;
  result.teacher_accuracy = evaluate(*teacher, eval).accuracy;
  result.student_accuracy = evaluate(*student, eval).accuracy;
  result.accuracy_regression =
      result.student_accuracy < result.teacher_accuracy - 0.02;
  result.provenance = {model_hash(*teacher), config.temperature};
  result.student = std::move(student);
  return result;
}

}  // namespace evasion
