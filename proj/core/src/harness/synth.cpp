#include "evasion/harness/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>

#include "evasion/error.hpp"
#include "evasion/random.hpp"

namespace evasion {
namespace {

constexpr const char* kNamePatterns[] = {
    "android.hardware.synth.hw%04zu",      "android.permission.SYNTH_%04zu",
    "com.synth.app.Component%04zu",        "android.intent.action.SYNTH_%04zu",
    "android/synth/Api;->call%04zu",       "android.permission.USED_%04zu",
    "Ljava/synth/Suspicious;->op%04zu",    "host%04zu.synth.example"};

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

std::string synthetic_feature_name(Category c, std::size_t k) {
  char buf[96];
  std::snprintf(buf, sizeof buf, kNamePatterns[index_of(c)], k);
  return buf;
}

void validate(const SynthSpec& s) {
  for (double r : {s.malware_high, s.malware_low, s.benign_high, s.benign_low,
                   s.background_rate}) {
    if (!in_unit(r)) throw ConfigError("synthetic corpus rates must lie in [0, 1]");
  }
  if (!(s.malware_high > s.malware_low) || !(s.benign_high > s.benign_low)) {
    throw ConfigError("informative rate gap must be positive");
  }
  std::size_t planted = 0;
  for (std::size_t c = 0; c < kNumCategories; ++c) {
    if (s.malware_planted[c] + s.benign_planted[c] > s.category_sizes[c]) {
      throw ConfigError("planted features exceed the size of category " +
                        std::string(category_code(kAllCategories[c])));
    }
    planted += s.malware_planted[c] + s.benign_planted[c];
  }
  if (planted == 0) {
    throw ConfigError("zero planted features: the corpus would be unlearnable");
  }
  if (s.n_train > s.n_benign + s.n_malware) {
    throw ConfigError("n_train exceeds the number of samples");
  }
}

void to_json(nlohmann::json& j, const SynthSpec& s) {
  nlohmann::json sizes, malware, benign;
  for (Category c : kAllCategories) {
    const std::string code(category_code(c));
    sizes[code] = s.category_sizes[index_of(c)];
    malware[code] = s.malware_planted[index_of(c)];
    benign[code] = s.benign_planted[index_of(c)];
  }
  j = nlohmann::json{{"n_benign", s.n_benign},
                     {"n_malware", s.n_malware},
                     {"n_train", s.n_train},
                     {"category_sizes", sizes},
                     {"malware_planted", malware},
                     {"benign_planted", benign},
                     {"malware_high", s.malware_high},
                     {"malware_low", s.malware_low},
                     {"benign_high", s.benign_high},
                     {"benign_low", s.benign_low},
                     {"background_rate", s.background_rate},
                     {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, SynthSpec& s) {
  try {
    s.n_benign = j.value("n_benign", s.n_benign);
    s.n_malware = j.value("n_malware", s.n_malware);
    s.n_train = j.value("n_train", s.n_train);
    s.malware_high = j.value("malware_high", s.malware_high);
    s.malware_low = j.value("malware_low", s.malware_low);
    s.benign_high = j.value("benign_high", s.benign_high);
    s.benign_low = j.value("benign_low", s.benign_low);
    s.background_rate = j.value("background_rate", s.background_rate);
    s.seed = j.value("seed", s.seed);
    const std::pair<const char*, std::array<std::size_t, kNumCategories>*> tables[] = {
        {"category_sizes", &s.category_sizes},
        {"malware_planted", &s.malware_planted},
        {"benign_planted", &s.benign_planted}};
    for (const auto& [key, table] : tables) {
      if (!j.contains(key)) continue;
      auto& target = *table;
      for (const auto& [code, value] : j.at(key).items()) {
        auto c = category_from_code(code);
        if (!c) throw ConfigError("unknown category '" + code + "'");
        target[index_of(*c)] = value.get<std::size_t>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth spec: ") + e.what());
  }
  validate(s);
}

SynthCorpus generate_synthetic_corpus(const SynthSpec& spec) {
  validate(spec);
  SynthCorpus out;

  // Per category: which local indices are planted for each class, and the
  // remaining background indices.
  struct CategoryPlan {
    std::vector<std::size_t> malware;
    std::vector<std::size_t> benign;
    std::vector<std::size_t> background;
  };
  std::array<CategoryPlan, kNumCategories> plans;
  for (Category c : kAllCategories) {
    const std::size_t ci = index_of(c);
    std::vector<std::size_t> idx(spec.category_sizes[ci]);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(derive_seed(spec.seed, "planted", ci));
    shuffle(idx.begin(), idx.end(), rng);
    const std::size_t pm = spec.malware_planted[ci];
    const std::size_t pb = spec.benign_planted[ci];
    auto& plan = plans[ci];
    plan.malware.assign(idx.begin(), idx.begin() + pm);
    plan.benign.assign(idx.begin() + pm, idx.begin() + pm + pb);
    plan.background.assign(idx.begin() + pm + pb, idx.end());
    std::sort(plan.malware.begin(), plan.malware.end());
    std::sort(plan.benign.begin(), plan.benign.end());
    std::sort(plan.background.begin(), plan.background.end());
    for (auto k : plan.malware) out.malware_planted.push_back({c, synthetic_feature_name(c, k)});
    for (auto k : plan.benign) out.benign_planted.push_back({c, synthetic_feature_name(c, k)});
  }

  const std::size_t total = spec.n_benign + spec.n_malware;
  std::vector<Label> labels(spec.n_benign, Label::Benign);
  labels.resize(total, Label::Malware);
  {
    Rng rng(derive_seed(spec.seed, "labels"));
    shuffle(labels.begin(), labels.end(), rng);
  }

  for (std::size_t i = 0; i < total; ++i) {
    Rng rng(derive_seed(spec.seed, "sample", i));
    CorpusEntry e;
    char id[32];
    std::snprintf(id, sizeof id, "app%05zu", i);
    e.app_id = id;
    e.label = labels[i];
    const bool malware = labels[i] == Label::Malware;
    for (Category c : kAllCategories) {
      const auto& plan = plans[index_of(c)];
      for (auto k : plan.malware) {
        if (bernoulli(rng, malware ? spec.malware_high : spec.malware_low)) {
          e.features.insert({c, synthetic_feature_name(c, k)});
        }
      }
      for (auto k : plan.benign) {
        if (bernoulli(rng, malware ? spec.benign_low : spec.benign_high)) {
          e.features.insert({c, synthetic_feature_name(c, k)});
        }
      }
      for_each_bernoulli(plan.background.size(), spec.background_rate, rng,
                         [&](std::size_t j) {
                           e.features.insert(
                               {c, synthetic_feature_name(c, plan.background[j])});
                         });
    }
    (i < spec.n_train ? out.train : out.test).push_back(std::move(e));
  }
  return out;
}

void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "features", ec);
  if (ec) throw IoError("cannot create " + (dir / "features").string());
  auto write_split = [&](const std::vector<CorpusEntry>& split,
                         const char* manifest) {
    std::vector<ManifestEntry> entries;
    for (const auto& e : split) {
      const std::filesystem::path rel =
          std::filesystem::path("features") / (e.app_id + ".txt");
      write_feature_file(dir / rel, e.features);
      entries.push_back({e.app_id, rel, e.label});
    }
    write_manifest(dir / manifest, entries);
  };
  write_split(corpus.train, "train_manifest.csv");
  write_split(corpus.test, "test_manifest.csv");
}

}  // namespace evasion
