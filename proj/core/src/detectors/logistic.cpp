#include "evasion/detectors/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include <nlohmann/json.hpp>

#include "evasion/error.hpp"

namespace evasion {
namespace {

double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

// log(1 + exp(s)) without overflow.
double softplus(double s) {
  return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}

// Parameter vector layout: [w_0 .. w_{n-1}, bias].
class Objective {
 public:
  Objective(const Dataset& data, double c) : data_(data), c_(c) {}

  double operator()(const std::vector<double>& theta,
                    std::vector<double>& grad) const {
    const std::size_t n = theta.size() - 1;
    grad.assign(theta.size(), 0.0);
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      f += 0.5 * theta[i] * theta[i];
      grad[i] = theta[i];
    }
    for (const auto& s : data_.samples) {
      double score = theta[n];
      s.bits.for_each_set([&](std::size_t i) { score += theta[i]; });
      const double y = s.label == Label::Malware ? 1.0 : 0.0;
      f += c_ * (softplus(score) - y * score);
      const double r = c_ * (sigmoid(score) - y);
      s.bits.for_each_set([&](std::size_t i) { grad[i] += r; });
      grad[n] += r;
    }
    return f;
  }

 private:
  const Dataset& data_;
  double c_;
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

LogisticRegression::LogisticRegression(std::vector<double> weights,
                                       double bias, std::uint64_t vocab_hash)
    : Detector(weights.size(), vocab_hash), w_(std::move(weights)), b_(bias) {}

double LogisticRegression::score(const BitVector& x) const {
  double s = b_;
  x.for_each_set([&](std::size_t i) { s += w_[i]; });
  return s;
}

double LogisticRegression::malware_probability(const BitVector& x) const {
  return sigmoid(score(x));
}

nlohmann::json LogisticRegression::parameters() const {
  return nlohmann::json{{"weights", w_}, {"bias", b_}};
}

LogisticRegression LogisticRegression::from_parameters(
    const nlohmann::json& j, std::size_t vocab_size, std::uint64_t vocab_hash) {
  auto w = j.at("weights").get<std::vector<double>>();
  if (w.size() != vocab_size) {
    throw ParseError("logreg weight count does not match vocabulary size");
  }
  return LogisticRegression(std::move(w), j.at("bias").get<double>(),
                            vocab_hash);
}

LogisticRegression LogisticRegression::fit(const Dataset& data,
                                           const LogRegParams& p,
                                           std::uint64_t vocab_hash) {
  const std::size_t n = data.samples.front().size();
  const Objective objective(data, p.c);
  constexpr std::size_t kMemory = 10;

  std::vector<double> theta(n + 1, 0.0);
  std::vector<double> grad;
  double f = objective(theta, grad);

  std::deque<std::vector<double>> s_hist;
  std::deque<std::vector<double>> y_hist;
  std::deque<double> rho_hist;
  std::vector<double> dir(n + 1);
  std::vector<double> trial(n + 1);
  std::vector<double> trial_grad;

  for (std::size_t iter = 0; iter < p.max_iter; ++iter) {
    if (max_abs(grad) <= p.tol) break;

    // Two-loop recursion.
    dir = grad;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * dot(s_hist[k], dir);
      for (std::size_t i = 0; i <= n; ++i) dir[i] -= alpha[k] * y_hist[k][i];
    }
    double gamma = 1.0;
    if (!s_hist.empty()) {
      gamma = dot(s_hist.back(), y_hist.back()) /
              dot(y_hist.back(), y_hist.back());
    } else {
      gamma = 1.0 / std::max(1.0, std::sqrt(dot(grad, grad)));
    }
    for (double& d : dir) d *= gamma;
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * dot(y_hist[k], dir);
      for (std::size_t i = 0; i <= n; ++i) dir[i] += s_hist[k][i] * (alpha[k] - beta);
    }
    for (double& d : dir) d = -d;

    double slope = dot(grad, dir);
    if (slope >= 0.0) {
      // Not a descent direction: restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t i = 0; i <= n; ++i) dir[i] = -grad[i];
      slope = -dot(grad, grad);
    }

    // Backtracking line search with the Armijo condition.
    double step = 1.0;
    double f_trial = f;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      for (std::size_t i = 0; i <= n; ++i) trial[i] = theta[i] + step * dir[i];
      f_trial = objective(trial, trial_grad);
      if (f_trial <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    std::vector<double> s(n + 1);
    std::vector<double> y(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      s[i] = trial[i] - theta[i];
      y[i] = trial_grad[i] - grad[i];
    }
    const double sy = dot(s, y);
    theta.swap(trial);
    grad.swap(trial_grad);
    f = f_trial;
    if (sy > 1e-12) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > kMemory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
  }

  const double bias = theta[n];
  theta.pop_back();
  return LogisticRegression(std::move(theta), bias, vocab_hash);
}

}  // namespace evasion
