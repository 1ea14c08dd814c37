#include <cmath>
#include <vector>

#include "mssar/errors.hpp"
#include "mssar/sampler.hpp"

namespace mssar {

ForwardBackward forward_backward(const Matrix& per_state_logliks, const Matrix& xi) {
  const auto T = per_state_logliks.rows();
  const auto K = per_state_logliks.cols();
  ForwardBackward out;
  out.filtered.resize(T, K);
  out.smoothed.resize(T, K);
  if (T == 0) return out;

  // predicted(t, l) = P(s_t = l | y_1..y_{t-1}); the first row is the stationary law.
  Matrix predicted(T, K);
  predicted.row(0) = stationary_distribution(xi).transpose();
  std::vector<double> log_joint(static_cast<std::size_t>(K));

  for (Eigen::Index t = 0; t < T; ++t) {
    if (t > 0) predicted.row(t) = out.filtered.row(t - 1) * xi;
    for (Eigen::Index k = 0; k < K; ++k) {
      const double p = predicted(t, k);
      log_joint[static_cast<std::size_t>(k)] = p > 0.0 ? std::log(p) + per_state_logliks(t, k) : kLogZero;
    }
    const double norm = log_sum_exp(log_joint);
    if (!std::isfinite(norm)) {
      throw UnderflowCollapse("every regime is impossible at period " + std::to_string(t));
    }
    out.log_evidence += norm;
    for (Eigen::Index k = 0; k < K; ++k) {
      out.filtered(t, k) = std::exp(log_joint[static_cast<std::size_t>(k)] - norm);
    }
  }

  out.smoothed.row(T - 1) = out.filtered.row(T - 1);
  Vector ratio(K);
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    for (Eigen::Index l = 0; l < K; ++l) {
      const double p = predicted(t + 1, l);
      ratio(l) = p > 0.0 ? out.smoothed(t + 1, l) / p : 0.0;
    }
    for (Eigen::Index k = 0; k < K; ++k) {
      out.smoothed(t, k) = out.filtered(t, k) * xi.row(k).dot(ratio);
    }
    const double total = out.smoothed.row(t).sum();
    if (total > 0.0) out.smoothed.row(t) /= total;
  }
  return out;
}

FfbsResult ffbs_sample_states(const Matrix& per_state_logliks, const Matrix& xi, Rng& rng) {
  ForwardBackward fb = forward_backward(per_state_logliks, xi);
  const auto T = per_state_logliks.rows();
  const auto K = per_state_logliks.cols();
  std::vector<int> s(static_cast<std::size_t>(T));
  if (T > 0) {
    std::vector<double> probs(static_cast<std::size_t>(K));
    for (Eigen::Index k = 0; k < K; ++k) probs[static_cast<std::size_t>(k)] = fb.filtered(T - 1, k);
    s.back() = static_cast<int>(rng.categorical(probs));
    for (Eigen::Index t = T - 2; t >= 0; --t) {
      const int next = s[static_cast<std::size_t>(t + 1)];
      for (Eigen::Index k = 0; k < K; ++k) {
        probs[static_cast<std::size_t>(k)] = fb.filtered(t, k) * xi(k, next);
      }
      s[static_cast<std::size_t>(t)] = static_cast<int>(rng.categorical(probs));
    }
  }
  return {std::move(s), std::move(fb.filtered), std::move(fb.smoothed)};
}

}  // namespace mssar
