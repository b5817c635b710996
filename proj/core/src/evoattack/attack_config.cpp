#include "evasion/evoattack/attack_config.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "evasion/error.hpp"

namespace evasion {

void validate(const AttackConfig& c) {
  if (c.population_size < 2) throw ConfigError("population_size must be >= 2");
  if (c.max_iterations == 0) throw ConfigError("max_iterations must be positive");
  if (!(c.init_prob >= 0.0 && c.init_prob <= 1.0)) {
    throw ConfigError("init_prob must be in [0, 1]");
  }
  if (c.mutation_prob && !(*c.mutation_prob >= 0.0 && *c.mutation_prob <= 1.0)) {
    throw ConfigError("mutation_prob must be in [0, 1]");
  }
  if (!(c.w2 >= 0.0) || !(c.w1 > c.w2)) {
    throw ConfigError("weights must satisfy w1 > w2 >= 0");
  }
  if (c.tournament_size == 0) throw ConfigError("tournament_size must be positive");
  if (c.query_budget && *c.query_budget == 0) {
    throw ConfigError("query_budget must be positive when set");
  }
}

double effective_mutation_prob(const AttackConfig& c, std::size_t eligible) {
  if (c.mutation_prob) return *c.mutation_prob;
  return eligible == 0 ? 0.0 : 1.0 / static_cast<double>(eligible);
}

AttackParams AttackParams::defaults_for(Category c) {
  AttackParams p;
  p.category = c;
  p.init_prob = c == Category::S1 ? 0.01 : 0.0001;
  return p;
}

AttackParams AttackParams::fixed_rate_defaults_for(Category c) {
  AttackParams p = defaults_for(c);
  p.mutation_prob = c == Category::S1 ? 0.30 : 0.005;
  return p;
}

void to_json(nlohmann::json& j, const AttackParams& p) {
  j = nlohmann::json{{"category", category_code(p.category)},
                     {"population_size", p.population_size},
                     {"max_iterations", p.max_iterations},
                     {"init_prob", p.init_prob},
                     {"mutation_prob", p.mutation_prob ? nlohmann::json(*p.mutation_prob)
                                                       : nlohmann::json("auto")},
                     {"w1", p.w1},
                     {"w2", p.w2},
                     {"early_stop_patience", p.early_stop_patience},
                     {"seed", p.seed},
                     {"crossover", p.crossover},
                     {"memoize", p.memoize},
                     {"excluded", p.excluded}};
  if (p.query_budget) {
    j["query_budget"] = *p.query_budget;
  } else {
    j["query_budget"] = nullptr;
  }
}

void from_json(const nlohmann::json& j, AttackParams& p) {
  try {
    Category cat = p.category;
    if (j.contains("category")) {
      const auto code = j.at("category").get<std::string>();
      auto c = category_from_code(code);
      if (!c) throw ConfigError("unknown category '" + code + "'");
      cat = *c;
    }
    if (!is_manifest_derived(cat)) {
      throw ConfigError("only manifest categories S1..S4 are perturbable");
    }
    AttackParams d = AttackParams::defaults_for(cat);
    d.population_size = j.value("population_size", d.population_size);
    d.max_iterations = j.value("max_iterations", d.max_iterations);
    d.init_prob = j.value("init_prob", d.init_prob);
    if (j.contains("mutation_prob")) {
      const auto& m = j.at("mutation_prob");
      if (m.is_null() || (m.is_string() && m.get<std::string>() == "auto")) {
        d.mutation_prob.reset();
      } else {
        d.mutation_prob = m.get<double>();
      }
    }
    d.w1 = j.value("w1", d.w1);
    d.w2 = j.value("w2", d.w2);
    d.early_stop_patience = j.value("early_stop_patience", d.early_stop_patience);
    d.seed = j.value("seed", d.seed);
    d.crossover = j.value("crossover", d.crossover);
    d.memoize = j.value("memoize", d.memoize);
    if (j.contains("query_budget") && !j.at("query_budget").is_null()) {
      d.query_budget = j.at("query_budget").get<std::size_t>();
    }
    if (j.contains("excluded")) j.at("excluded").get_to(d.excluded);
    p = std::move(d);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("attack config: ") + e.what());
  }
}

AttackConfig resolve(const AttackParams& p, const Vocabulary& vocab) {
  AttackConfig c;
  c.population_size = p.population_size;
  c.max_iterations = p.max_iterations;
  c.init_prob = p.init_prob;
  c.mutation_prob = p.mutation_prob;
  c.w1 = p.w1;
  c.w2 = p.w2;
  c.early_stop_patience = p.early_stop_patience;
  c.rng_seed = p.seed;
  c.query_budget = p.query_budget;
  c.crossover = p.crossover;
  c.memoize = p.memoize;
  const Category cats[] = {p.category};
  c.perturbable_mask = vocab.mask(cats);
  for (const auto& name : p.excluded) {
    if (auto i = vocab.find(Feature{p.category, name})) {
      c.excluded_features.push_back(*i);
    }
  }
  std::sort(c.excluded_features.begin(), c.excluded_features.end());
  validate(c);
  return c;
}

}  // namespace evasion
