#include "mssar/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace mssar {

void TruthSpec::validate() const {
  if (N < 2 || T < 1 || K < 1) throw std::invalid_argument("truth needs N >= 2, T >= 1, K >= 1");
  if (xi.rows() != static_cast<Eigen::Index>(K) || xi.cols() != static_cast<Eigen::Index>(K)) {
    throw std::invalid_argument("truth transition matrix must be K x K");
  }
  for (Eigen::Index k = 0; k < xi.rows(); ++k) {
    if ((xi.row(k).array() < 0.0).any() || std::abs(xi.row(k).sum() - 1.0) > 1e-12) {
      throw std::invalid_argument("truth transition rows must be probability vectors");
    }
  }
  if (rhos.size() != K) throw std::invalid_argument("truth needs one rho per state");
  for (double r : rhos) {
    if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("truth rho must lie in (0,1)");
  }
  if (omegas.empty()) {
    if (link_prob.size() != K) throw std::invalid_argument("truth needs networks or one link probability per state");
    for (double p : link_prob) {
      if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("link probability must lie in [0,1]");
    }
  } else {
    if (omegas.size() != K) throw std::invalid_argument("truth needs one network per state");
    for (const auto& o : omegas) {
      if (o.size() != N) throw std::invalid_argument("truth network has the wrong size");
    }
  }
  if (beta.size() != static_cast<Eigen::Index>(M)) throw std::invalid_argument("truth beta must have length M");
  if (intercept && M == 0) throw std::invalid_argument("intercept requires M >= 1");
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("truth sigma2 must be nonnegative");
}

std::vector<int> simulate_chain(const Matrix& xi, std::size_t T, Rng& rng) {
  std::vector<int> s(T);
  if (T == 0) return s;
  const Vector pi = stationary_distribution(xi);
  s[0] = static_cast<int>(rng.categorical(std::span<const double>(pi.data(), static_cast<std::size_t>(pi.size()))));
  for (std::size_t t = 1; t < T; ++t) {
    const Vector row = xi.row(s[t - 1]).transpose();
    s[t] = static_cast<int>(rng.categorical(std::span<const double>(row.data(), static_cast<std::size_t>(row.size()))));
  }
  return s;
}

AdjacencyMatrix random_adjacency(std::size_t n, double p, Rng& rng) {
  AdjacencyMatrix omega(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && rng.bernoulli(p)) omega.set(i, j, 1);
    }
  }
  return omega;
}

SimulatedPanel simulate_panel(const TruthSpec& truth) {
  truth.validate();
  Rng rng(truth.seed);
  SimulatedPanel out;
  const auto N = static_cast<Eigen::Index>(truth.N);
  const auto M = static_cast<Eigen::Index>(truth.M);

  if (truth.omegas.empty()) {
    for (std::size_t k = 0; k < truth.K; ++k) out.omegas.push_back(random_adjacency(truth.N, truth.link_prob[k], rng));
  } else {
    out.omegas = truth.omegas;
  }
  std::vector<Matrix> multipliers;
  for (std::size_t k = 0; k < truth.K; ++k) {
    multipliers.push_back(spatial_multiplier(truth.rhos[k], row_normalize(out.omegas[k])));
  }

  out.s = simulate_chain(truth.xi, truth.T, rng);
  auto& data = out.data;
  data.y.resize(static_cast<Eigen::Index>(truth.T), N);
  data.z.reserve(truth.T);
  const double sd = std::sqrt(truth.sigma2);
  for (std::size_t t = 0; t < truth.T; ++t) {
    Matrix z(N, M);
    for (Eigen::Index i = 0; i < N; ++i) {
      for (Eigen::Index m = 0; m < M; ++m) z(i, m) = (truth.intercept && m == 0) ? 1.0 : rng.normal();
    }
    Vector shock(N);
    for (Eigen::Index i = 0; i < N; ++i) shock(i) = sd * rng.normal();
    Vector mean = Vector::Zero(N);
    if (M > 0) mean = z * truth.beta;
    data.y.row(static_cast<Eigen::Index>(t)) = (multipliers[static_cast<std::size_t>(out.s[t])] * (mean + shock)).transpose();
    data.z.push_back(std::move(z));
  }
  data.basket_weights = Matrix::Constant(static_cast<Eigen::Index>(truth.T), N, 1.0 / static_cast<double>(truth.N));

  char buf[32];
  for (std::size_t i = 0; i < truth.N; ++i) {
    std::snprintf(buf, sizeof buf, "u%02zu", i + 1);
    data.unit_labels.emplace_back(buf);
  }
  // monthly ISO-8601 labels starting 2000-01, so lexicographic order is time order
  for (std::size_t t = 0; t < truth.T; ++t) {
    std::snprintf(buf, sizeof buf, "%04zu-%02zu", 2000 + t / 12, t % 12 + 1);
    data.period_labels.emplace_back(buf);
  }
  return out;
}

}  // namespace mssar
