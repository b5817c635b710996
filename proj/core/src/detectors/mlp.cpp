#include "evasion/detectors/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "evasion/error.hpp"
#include "evasion/random.hpp"

namespace evasion {
namespace {

struct Activations {
  std::vector<double> h1;  // pre-activation, layer 1
  std::vector<double> a1;
  std::vector<double> h2;
  std::vector<double> a2;
  std::array<double, 2> z{};
};

void forward(const Mlp::Weights& w, const BitVector& x, Activations& act) {
  const std::size_t H = w.hidden;
  act.h1.assign(w.b1.begin(), w.b1.end());
  x.for_each_set([&](std::size_t i) {
    const double* row = &w.w1[i * H];
    for (std::size_t k = 0; k < H; ++k) act.h1[k] += row[k];
  });
  act.a1.resize(H);
  for (std::size_t k = 0; k < H; ++k) act.a1[k] = std::max(0.0, act.h1[k]);

  act.h2.assign(w.b2.begin(), w.b2.end());
  for (std::size_t j = 0; j < H; ++j) {
    const double a = act.a1[j];
    if (a == 0.0) continue;
    const double* row = &w.w2[j * H];
    for (std::size_t k = 0; k < H; ++k) act.h2[k] += a * row[k];
  }
  act.a2.resize(H);
  for (std::size_t k = 0; k < H; ++k) act.a2[k] = std::max(0.0, act.h2[k]);

  act.z = {w.b3[0], w.b3[1]};
  for (std::size_t j = 0; j < H; ++j) {
    act.z[0] += act.a2[j] * w.w3[j * 2];
    act.z[1] += act.a2[j] * w.w3[j * 2 + 1];
  }
}

void check_shape(const Mlp::Weights& w) {
  const std::size_t H = w.hidden;
  if (w.w1.size() != w.input * H || w.b1.size() != H ||
      w.w2.size() != H * H || w.b2.size() != H || w.w3.size() != H * 2 ||
      w.b3.size() != 2) {
    throw PreconditionError("mlp weight arrays have inconsistent sizes");
  }
}

Mlp::Weights zero_weights(std::size_t input, std::size_t hidden) {
  Mlp::Weights w;
  w.input = input;
  w.hidden = hidden;
  w.w1.assign(input * hidden, 0.0);
  w.b1.assign(hidden, 0.0);
  w.w2.assign(hidden * hidden, 0.0);
  w.b2.assign(hidden, 0.0);
  w.w3.assign(hidden * 2, 0.0);
  w.b3.assign(2, 0.0);
  return w;
}

template <typename Fn>
void for_each_tensor(Mlp::Weights& a, const Mlp::Weights& b, Fn&& fn) {
  fn(a.w1, b.w1);
  fn(a.b1, b.b1);
  fn(a.w2, b.w2);
  fn(a.b2, b.b2);
  fn(a.w3, b.w3);
  fn(a.b3, b.b3);
}

}  // namespace

Mlp::Mlp(std::size_t input, std::size_t hidden, std::uint64_t vocab_hash)
    : Detector(input, vocab_hash), w_(zero_weights(input, hidden)) {}

Mlp::Mlp(Weights w, std::uint64_t vocab_hash)
    : Detector(w.input, vocab_hash), w_(std::move(w)) {
  check_shape(w_);
}

void Mlp::initialize(std::uint64_t seed) {
  Rng rng(seed);
  auto fill = [&](std::vector<double>& v, std::size_t fan_in) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& x : v) x = (2.0 * uniform01(rng) - 1.0) * limit;
  };
  fill(w_.w1, w_.input);
  fill(w_.w2, w_.hidden);
  fill(w_.w3, w_.hidden);
  std::fill(w_.b1.begin(), w_.b1.end(), 0.0);
  std::fill(w_.b2.begin(), w_.b2.end(), 0.0);
  std::fill(w_.b3.begin(), w_.b3.end(), 0.0);
}

std::array<double, 2> Mlp::logits(const BitVector& x) const {
  thread_local Activations act;
  forward(w_, x, act);
  return act.z;
}

double Mlp::malware_probability(const BitVector& x) const {
  const auto z = logits(x);
  return 1.0 / (1.0 + std::exp(z[0] - z[1]));
}

std::array<double, 2> softmax2(const std::array<double, 2>& z,
                               double temperature) {
  const double p1 = 1.0 / (1.0 + std::exp((z[0] - z[1]) / temperature));
  return {1.0 - p1, p1};
}

nlohmann::json Mlp::parameters() const {
  return nlohmann::json{{"input", w_.input}, {"hidden", w_.hidden},
                        {"w1", w_.w1},       {"b1", w_.b1},
                        {"w2", w_.w2},       {"b2", w_.b2},
                        {"w3", w_.w3},       {"b3", w_.b3}};
}

Mlp Mlp::from_parameters(const nlohmann::json& j, std::size_t vocab_size,
                         std::uint64_t vocab_hash) {
  Weights w;
  w.input = j.at("input").get<std::size_t>();
  w.hidden = j.at("hidden").get<std::size_t>();
  if (w.input != vocab_size) {
    throw ParseError("mlp input width does not match vocabulary size");
  }
  j.at("w1").get_to(w.w1);
  j.at("b1").get_to(w.b1);
  j.at("w2").get_to(w.w2);
  j.at("b2").get_to(w.b2);
  j.at("w3").get_to(w.w3);
  j.at("b3").get_to(w.b3);
  return Mlp(std::move(w), vocab_hash);
}

double mlp_loss(const Mlp& net, std::span<const BitVector* const> inputs,
                std::span<const std::array<double, 2>> targets,
                double temperature, Mlp::Weights* grad) {
  if (inputs.size() != targets.size() || inputs.empty()) {
    throw PreconditionError("mlp_loss needs one target per input");
  }
  const Mlp::Weights& w = net.weights();
  const std::size_t H = w.hidden;
  if (grad != nullptr) *grad = zero_weights(w.input, H);

  const double inv_n = 1.0 / static_cast<double>(inputs.size());
  Activations act;
  std::vector<double> da(H);
  std::vector<double> dh2(H);
  std::vector<double> dh1(H);
  double loss = 0.0;

  for (std::size_t s = 0; s < inputs.size(); ++s) {
    const BitVector& x = *inputs[s];
    forward(w, x, act);
    // log-softmax of z / T
    const double u0 = act.z[0] / temperature;
    const double u1 = act.z[1] / temperature;
    const double m = std::max(u0, u1);
    const double lse = m + std::log(std::exp(u0 - m) + std::exp(u1 - m));
    const std::array<double, 2> logp = {u0 - lse, u1 - lse};
    loss -= (targets[s][0] * logp[0] + targets[s][1] * logp[1]) * inv_n;
    if (grad == nullptr) continue;

    std::array<double, 2> dz;
    for (int k = 0; k < 2; ++k) {
      dz[k] = (std::exp(logp[k]) - targets[s][k]) / temperature * inv_n;
    }
    Mlp::Weights& g = *grad;
    g.b3[0] += dz[0];
    g.b3[1] += dz[1];
    for (std::size_t j = 0; j < H; ++j) {
      g.w3[j * 2] += act.a2[j] * dz[0];
      g.w3[j * 2 + 1] += act.a2[j] * dz[1];
      const double d = w.w3[j * 2] * dz[0] + w.w3[j * 2 + 1] * dz[1];
      dh2[j] = act.h2[j] > 0.0 ? d : 0.0;
    }
    for (std::size_t k = 0; k < H; ++k) g.b2[k] += dh2[k];
    for (std::size_t j = 0; j < H; ++j) {
      const double a = act.a1[j];
      const double* wrow = &w.w2[j * H];
      double* grow = &g.w2[j * H];
      double back = 0.0;
      for (std::size_t k = 0; k < H; ++k) {
        if (a != 0.0) grow[k] += a * dh2[k];
        back += wrow[k] * dh2[k];
      }
      dh1[j] = act.h1[j] > 0.0 ? back : 0.0;
    }
    for (std::size_t k = 0; k < H; ++k) g.b1[k] += dh1[k];
    x.for_each_set([&](std::size_t i) {
      double* grow = &g.w1[i * H];
      for (std::size_t k = 0; k < H; ++k) grow[k] += dh1[k];
    });
  }
  return loss;
}

void sgd_train(Mlp& net, std::span<const BitVector* const> inputs,
               std::span<const std::array<double, 2>> targets,
               const MlpTrainOptions& options) {
  if (inputs.size() != targets.size()) {
    throw PreconditionError("sgd_train needs one target per input");
  }
  if (inputs.empty() || options.epochs == 0) return;
  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  Rng rng(options.seed);
  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<const BitVector*> bx;
  std::vector<std::array<double, 2>> by;
  Mlp::Weights grad;
  const double step = options.learning_rate * options.gradient_scale;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      bx.clear();
      by.clear();
      for (std::size_t i = start; i < end; ++i) {
        bx.push_back(inputs[order[i]]);
        by.push_back(targets[order[i]]);
      }
      mlp_loss(net, bx, by, options.temperature, &grad);
      for_each_tensor(net.weights(), grad,
                      [&](std::vector<double>& p, const std::vector<double>& g) {
                        for (std::size_t k = 0; k < p.size(); ++k) {
                          p[k] -= step * g[k];
                        }
                      });
    }
  }
}

}  // namespace evasion
