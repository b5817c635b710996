#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include <nlohmann/json.hpp>

#include "evasion/detectors.hpp"
#include "evasion/error.hpp"
#include "evasion/random.hpp"
#include "toy.hpp"

namespace evasion {
namespace {

FeatureVector fv(const char* bits, Label l) {
  return {BitVector::from_string(bits), l};
}

// Malware iff bit0 = 1, every 2-bit input repeated `copies` times.
Dataset bit0_toy(std::size_t copies) {
  Dataset d;
  const char* inputs[] = {"00", "01", "10", "11"};
  for (std::size_t c = 0; c < copies; ++c) {
    for (const char* in : inputs) {
      d.add("s", fv(in, in[0] == '1' ? Label::Malware : Label::Benign));
    }
  }
  return d;
}

Dataset random_dataset(std::size_t n, std::size_t width, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    BitVector b(width);
    for (std::size_t j = 0; j < width; ++j) {
      if (bernoulli(rng, 0.3)) b.set(j);
    }
    // Label follows a noisy rule on the first three bits.
    const bool m = (b.test(0) || b.test(1)) != bernoulli(rng, 0.1);
    d.add("r" + std::to_string(i), {b, m ? Label::Malware : Label::Benign});
  }
  return d;
}

Vocabulary width_vocab(std::size_t width) {
  FeatureSet fs;
  for (std::size_t i = 0; i < width; ++i) {
    char name[16];
    std::snprintf(name, sizeof name, "f%04zu", i);
    fs.insert({Category::S2, name});
  }
  return Vocabulary::from_features(fs);
}

TrainConfig small_config() {
  TrainConfig c;
  c.seed = 5;
  c.mlp.hidden = 16;
  c.mlp.epochs = 20;
  c.mlp.batch_size = 32;
  return c;
}

TEST(Train, LogRegSeparatesToyExhaustively) {
  const auto data = bit0_toy(10);
  auto m = train(DetectorKind::LogReg, data, TrainConfig{}, 0);
  for (const char* in : {"00", "01", "10", "11"}) {
    const Label want = in[0] == '1' ? Label::Malware : Label::Benign;
    EXPECT_EQ(m->classify(BitVector::from_string(in)), want) << in;
  }
  EXPECT_DOUBLE_EQ(evaluate(*m, data).accuracy, 1.0);
}

TEST(Train, DecisionTreeIsOneSplitOnBit0) {
  auto m = train(DetectorKind::DecisionTree, bit0_toy(10), TrainConfig{}, 0);
  const auto& tree = dynamic_cast<const DecisionTreeDetector&>(*m).tree();
  EXPECT_EQ(tree.depth(), 1u);
  EXPECT_EQ(tree.split_features(), std::vector<std::size_t>{0});
  for (const char* in : {"00", "01", "10", "11"}) {
    const Label want = in[0] == '1' ? Label::Malware : Label::Benign;
    EXPECT_EQ(m->classify(BitVector::from_string(in)), want) << in;
  }
}

TEST(Train, SingleClassDatasetThrows) {
  Dataset d;
  d.add("a", fv("01", Label::Benign));
  d.add("b", fv("10", Label::Benign));
  for (DetectorKind k : kAllDetectorKinds) {
    EXPECT_THROW(train(k, d, TrainConfig{}, 0), PreconditionError);
  }
}

TEST(Train, MixedWidthsThrow) {
  Dataset d;
  d.add("a", fv("01", Label::Benign));
  d.add("b", fv("100", Label::Malware));
  EXPECT_THROW(train(DetectorKind::LogReg, d, TrainConfig{}, 0), PreconditionError);
}

TEST(PredictProba, ZeroWeightMlpIsUniform) {
  Mlp net(4, 3, 0);
  const Proba p = net.predict_proba(BitVector::from_string("1010"));
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(PredictProba, SingleLeafTreeGivesLeafFraction) {
  // Identical rows leave no split, so the root is the only leaf.
  Dataset d;
  d.add("m1", fv("101", Label::Malware));
  d.add("m2", fv("101", Label::Malware));
  d.add("m3", fv("101", Label::Malware));
  d.add("b1", fv("101", Label::Benign));
  auto m = DecisionTreeDetector::fit(d, TreeParams{0, 2, 1, 0}, 1, 0);
  EXPECT_EQ(m.tree().nodes().size(), 1u);
  for (const char* in : {"000", "101", "111"}) {
    EXPECT_DOUBLE_EQ(m.predict_proba(BitVector::from_string(in))[1], 0.75);
  }
}

TEST(PredictProba, LengthMismatchThrows) {
  Mlp net(4, 3, 0);
  EXPECT_THROW(net.predict_proba(BitVector(5)), PreconditionError);
}

TEST(Classify, TieBreaksToMalware) {
  auto at = [](double f1) {
    test::FnDetector d(1, [f1](const BitVector&) { return f1; });
    return d.classify(BitVector(1));
  };
  EXPECT_EQ(at(0.2), Label::Benign);
  EXPECT_EQ(at(0.8), Label::Malware);
  EXPECT_EQ(at(0.5), Label::Malware);
}

TEST(Evaluate, PerfectAndConstantClassifiers) {
  Dataset d;
  for (int i = 0; i < 10; ++i) d.add("b", fv("0", Label::Benign));
  for (int i = 0; i < 10; ++i) d.add("m", fv("1", Label::Malware));
  test::FnDetector perfect(1, [](const BitVector& x) { return x.test(0) ? 1.0 : 0.0; });
  auto e = evaluate(perfect, d);
  EXPECT_EQ(e.tp, 10u);
  EXPECT_EQ(e.tn, 10u);
  EXPECT_DOUBLE_EQ(e.accuracy, 1.0);

  test::FnDetector benign(1, [](const BitVector&) { return 0.0; });
  e = evaluate(benign, d);
  EXPECT_EQ(e.tp, 0u);
  EXPECT_EQ(e.fn, 10u);
  EXPECT_DOUBLE_EQ(e.recall, 0.0);
  EXPECT_DOUBLE_EQ(e.precision, 1.0);
  EXPECT_THROW(evaluate(benign, Dataset{}), PreconditionError);
}

TEST(Evaluate, TableThreeCountsGiveReportedAccuracy) {
  const auto e = EvalMetrics::from_counts(40770, 0, 74, 1726);
  EXPECT_NEAR(e.accuracy, 0.9983, 5e-5);
  EXPECT_DOUBLE_EQ(e.precision, 1.0);
}

class EveryFamily : public ::testing::TestWithParam<DetectorKind> {};

TEST_P(EveryFamily, ProbabilitiesNormalizedOnRandomInputs) {
  const auto data = random_dataset(200, 30, 1);
  auto m = train(GetParam(), data, small_config(), 0);
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    BitVector b(30);
    for (std::size_t j = 0; j < 30; ++j) {
      if (bernoulli(rng, 0.5)) b.set(j);
    }
    const Proba p = m->predict_proba(b);
    EXPECT_GE(p[0], 0.0);
    EXPECT_GE(p[1], 0.0);
    EXPECT_NEAR(p[0] + p[1], 1.0, 1e-9);
  }
}

TEST_P(EveryFamily, SameSeedSameModel) {
  const auto data = random_dataset(200, 30, 2);
  auto a = train(GetParam(), data, small_config(), 0);
  auto b = train(GetParam(), data, small_config(), 0);
  const auto probe = random_dataset(50, 30, 3);
  for (const auto& s : probe.samples) {
    EXPECT_NEAR(a->predict_proba(s)[1], b->predict_proba(s)[1], 1e-12);
  }
}

TEST_P(EveryFamily, BeatsMajorityBaseline) {
  const auto data = random_dataset(300, 30, 4);
  auto m = train(GetParam(), data, small_config(), 0);
  const double majority =
      static_cast<double>(std::max(data.count(Label::Benign), data.count(Label::Malware))) /
      static_cast<double>(data.size());
  EXPECT_GT(evaluate(*m, data).accuracy, majority);
}

TEST_P(EveryFamily, SerializationRoundTrip) {
  const auto vocab = width_vocab(30);
  const auto data = random_dataset(200, 30, 5);
  auto m = train(GetParam(), data, small_config(), vocab.hash());
  const std::string text = serialize_model(*m);
  auto back = deserialize_model(text, vocab);
  EXPECT_EQ(back->kind(), m->kind());
  EXPECT_EQ(serialize_model(*back), text);
  for (const auto& s : data.samples) {
    EXPECT_EQ(back->predict_proba(s), m->predict_proba(s));
  }
}

TEST_P(EveryFamily, VocabularyMismatchIsRejected) {
  const auto data = random_dataset(100, 30, 6);
  auto m = train(GetParam(), data, small_config(), width_vocab(30).hash());
  FeatureSet other;
  for (int i = 0; i < 30; ++i) other.insert({Category::S1, "g" + std::to_string(i)});
  EXPECT_THROW(deserialize_model(serialize_model(*m), Vocabulary::from_features(other)),
               ConfigError);
}

INSTANTIATE_TEST_SUITE_P(Detectors, EveryFamily, ::testing::ValuesIn(kAllDetectorKinds),
                         [](const auto& info) {
                           return std::string(detector_tag(info.param));
                         });

TEST(Serialization, MalformedDocument) {
  const auto vocab = width_vocab(3);
  EXPECT_THROW(deserialize_model("{\"format\": \"nope\"}", vocab), ParseError);
  EXPECT_THROW(deserialize_model("not json", vocab), ParseError);
}

TEST(Forest, BootstrapRecordsOnlyForRandomForest) {
  const auto data = random_dataset(100, 10, 8);
  auto rf = train(DetectorKind::RandomForest, data, TrainConfig{}, 0);
  auto et = train(DetectorKind::ExtraTrees, data, TrainConfig{}, 0);
  const auto& f = dynamic_cast<const TreeEnsemble&>(*rf);
  ASSERT_TRUE(f.has_bootstrap_records());
  EXPECT_EQ(f.trees().size(), 20u);
  for (const auto& bag : f.in_bag()) {
    std::size_t drawn = 0;
    for (auto c : bag) drawn += c;
    EXPECT_EQ(drawn, data.size());
  }
  EXPECT_FALSE(dynamic_cast<const TreeEnsemble&>(*et).has_bootstrap_records());
}

// Relative error ||a - n|| / (||a|| + ||n||) between the analytic gradient and
// central differences, over every parameter of a small network.
TEST(MlpGradient, MatchesCentralDifferences) {
  Mlp net(12, 8, 0);
  net.initialize(17);
  Rng rng(4);
  for (auto* b : {&net.weights().b1, &net.weights().b2, &net.weights().b3}) {
    for (auto& v : *b) v = 0.1 * (2.0 * uniform01(rng) - 1.0);
  }
  std::vector<BitVector> xs;
  std::vector<std::array<double, 2>> ys;
  for (int i = 0; i < 5; ++i) {
    BitVector b(12);
    for (std::size_t j = 0; j < 12; ++j) {
      if (bernoulli(rng, 0.5)) b.set(j);
    }
    xs.push_back(b);
    const double t = uniform01(rng);
    ys.push_back({1.0 - t, t});
  }
  std::vector<const BitVector*> ptrs;
  for (const auto& x : xs) ptrs.push_back(&x);

  for (double temperature : {1.0, 10.0}) {
    Mlp::Weights grad;
    mlp_loss(net, ptrs, ys, temperature, &grad);
    auto& w = net.weights();
    std::vector<std::vector<double>*> params{&w.w1, &w.b1, &w.w2, &w.b2, &w.w3, &w.b3};
    std::vector<const std::vector<double>*> grads{&grad.w1, &grad.b1, &grad.w2,
                                                  &grad.b2, &grad.w3, &grad.b3};
    const double h = 1e-4;
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
      ASSERT_EQ(params[p]->size(), grads[p]->size());
      for (std::size_t i = 0; i < params[p]->size(); ++i) {
        double& v = (*params[p])[i];
        const double saved = v;
        v = saved + h;
        const double up = mlp_loss(net, ptrs, ys, temperature, nullptr);
        v = saved - h;
        const double down = mlp_loss(net, ptrs, ys, temperature, nullptr);
        v = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double analytic = (*grads[p])[i];
        diff2 += (analytic - numeric) * (analytic - numeric);
        a2 += analytic * analytic;
        n2 += numeric * numeric;
      }
    }
    const double rel = std::sqrt(diff2) / (std::sqrt(a2) + std::sqrt(n2));
    EXPECT_LE(rel, 1e-3) << "temperature " << temperature;
  }
}

TEST(MlpTraining, SgdReducesLoss) {
  const auto data = random_dataset(200, 20, 9);
  Mlp net(20, 16, 0);
  net.initialize(1);
  std::vector<const BitVector*> in;
  std::vector<std::array<double, 2>> t;
  for (const auto& s : data.samples) {
    in.push_back(&s.bits);
    t.push_back(*s.label == Label::Malware ? std::array<double, 2>{0, 1}
                                           : std::array<double, 2>{1, 0});
  }
  const double before = mlp_loss(net, in, t, 1.0, nullptr);
  MlpTrainOptions o;
  o.epochs = 20;
  o.batch_size = 32;
  o.learning_rate = 0.1;
  sgd_train(net, in, t, o);
  EXPECT_LT(mlp_loss(net, in, t, 1.0, nullptr), before);
}

}  // namespace
}  // namespace evasion
