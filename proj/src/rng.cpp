#include "mssar/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace mssar {

double log_sum_exp(std::span<const double> v) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : v) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

double Rng::gamma(double shape) {
  return std::gamma_distribution<double>(shape, 1.0)(engine_);
}

double Rng::log_gamma_draw(double shape) {
  if (shape >= 1.0) return std::log(gamma(shape));
  // G(a) = G(a + 1) * U^(1/a)
  const double boosted = gamma(shape + 1.0);
  double u = uniform();
  while (u == 0.0) u = uniform();
  return std::log(boosted) + std::log(u) / shape;
}

double Rng::beta(double a, double b) {
  const double la = log_gamma_draw(a);
  const double lb = log_gamma_draw(b);
  const double hi = std::max(la, lb);
  const double ea = std::exp(la - hi);
  const double eb = std::exp(lb - hi);
  return ea / (ea + eb);
}

double Rng::inv_gamma(double shape, double rate) {
  return rate / gamma(shape);
}

Eigen::VectorXd Rng::dirichlet(const Eigen::VectorXd& alpha) {
  const auto K = alpha.size();
  Eigen::VectorXd logs(K);
  for (Eigen::Index k = 0; k < K; ++k) logs(k) = log_gamma_draw(alpha(k));
  const double norm = log_sum_exp(std::span<const double>(logs.data(), static_cast<std::size_t>(K)));
  Eigen::VectorXd out = (logs.array() - norm).exp();
  // absorb rounding into the largest entry so the row sums to 1 within 1e-15
  Eigen::Index top = 0;
  out.maxCoeff(&top);
  out(top) += 1.0 - out.sum();
  return out;
}

std::size_t Rng::categorical_log(std::span<const double> log_weights) {
  const double norm = log_sum_exp(log_weights);
  if (!std::isfinite(norm)) throw std::domain_error("categorical draw with no finite weight");
  std::vector<double> probs(log_weights.size());
  for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = std::exp(log_weights[i] - norm);
  return categorical(probs);
}

std::size_t Rng::categorical(std::span<const double> probs) {
  double total = 0.0;
  for (double p : probs) total += p;
  const double u = uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = i;
    acc += probs[i];
    if (u < acc) return i;
  }
  return last_positive;
}

}  // namespace mssar
