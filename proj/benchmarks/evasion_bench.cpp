#include <benchmark/benchmark.h>

#include <memory>

#include "evasion/detectors.hpp"
#include "evasion/evoattack.hpp"
#include "evasion/harness.hpp"

namespace {

using namespace evasion;

struct Fixture {
  PreparedData data;
  std::vector<std::unique_ptr<Detector>> models;
  std::vector<std::size_t> flagged;  // per model: first held-out malware it flags

  Fixture() {
    ExperimentConfig c;
    SynthSpec s;
    s.seed = 1;
    c.synth = s;
    data = prepare_data(c);
    for (DetectorKind k : kAllDetectorKinds) {
      models.push_back(train(k, data.train, TrainConfig{}, data.vocab.hash()));
      std::size_t i = 0;
      while (data.test.samples[i].label != Label::Malware ||
             models.back()->classify(data.test.samples[i]) != Label::Malware) {
        ++i;
      }
      flagged.push_back(i);
    }
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_PredictProba(benchmark::State& state) {
  const auto& f = fixture();
  const auto& model = *f.models[static_cast<std::size_t>(state.range(0))];
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.predict_proba(f.data.test.samples[i]));
    i = (i + 1) % f.data.test.size();
  }
  state.SetLabel(std::string(detector_tag(model.kind())));
}
BENCHMARK(BM_PredictProba)->DenseRange(0, 4);

void BM_Fitness(benchmark::State& state) {
  const auto& f = fixture();
  const auto& model = *f.models[static_cast<std::size_t>(state.range(0))];
  const auto& x = f.data.test.samples[f.flagged[static_cast<std::size_t>(state.range(0))]];
  AttackConfig c = resolve(AttackParams::defaults_for(Category::S2), f.data.vocab);
  const auto eligible = eligible_indices(x, c);
  Perturbation d(x.size());
  for (std::size_t k = 0; k < 5; ++k) d.delta.set(eligible[k * 97 % eligible.size()]);
  for (auto _ : state) benchmark::DoNotOptimize(fitness(model, x, d, 100.0, 1.0));
  state.SetLabel(std::string(detector_tag(model.kind())));
}
BENCHMARK(BM_Fitness)->DenseRange(0, 4);

void BM_MutateS2(benchmark::State& state) {
  const auto& f = fixture();
  const auto& x = f.data.test.samples[f.flagged[0]];
  AttackConfig c = resolve(AttackParams::defaults_for(Category::S2), f.data.vocab);
  const auto eligible = eligible_indices(x, c);
  Individual ind{Perturbation(x.size()), {}, {}, {}};
  Rng rng(1);
  const double p = state.range(0) == 0 ? effective_mutation_prob(c, eligible.size()) : 0.005;
  for (auto _ : state) benchmark::DoNotOptimize(mutate(ind, eligible, p, rng));
}
BENCHMARK(BM_MutateS2)->Arg(0)->Arg(1);

void BM_AttackS2(benchmark::State& state) {
  const auto& f = fixture();
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto& x = f.data.test.samples[f.flagged[m]];
  AttackConfig c = resolve(AttackParams::defaults_for(Category::S2), f.data.vocab);
  std::uint64_t seed = 0;
  std::size_t queries = 0;
  for (auto _ : state) {
    c.rng_seed = seed++;
    const auto r = attack(*f.models[m], x, c);
    queries += r.query_count;
  }
  state.counters["queries"] =
      benchmark::Counter(static_cast<double>(queries), benchmark::Counter::kAvgIterations);
  state.SetLabel(std::string(detector_tag(f.models[m]->kind())));
}
BENCHMARK(BM_AttackS2)->DenseRange(0, 4)->Unit(benchmark::kMillisecond);

void BM_Train(benchmark::State& state) {
  const auto& f = fixture();
  const auto kind = kAllDetectorKinds[static_cast<std::size_t>(state.range(0))];
  for (auto _ : state) {
    benchmark::DoNotOptimize(train(kind, f.data.train, TrainConfig{}, f.data.vocab.hash()));
  }
  state.SetLabel(std::string(detector_tag(kind)));
}
BENCHMARK(BM_Train)->DenseRange(0, 4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
