#include "mssar/model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mssar/errors.hpp"

namespace mssar {

namespace {

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace

void PanelData::validate() const {
  const auto T = periods();
  const auto N = units();
  if (T < 1) throw DataError("panel needs at least one period");
  if (N < 2) throw DataError("panel needs at least two units");
  if (z.size() != T) throw DataError("covariate list length differs from period count");
  if (!all_finite(y)) throw DataError("non-finite response value");
  const auto M = covariates();
  for (std::size_t t = 0; t < T; ++t) {
    if (static_cast<std::size_t>(z[t].rows()) != N || static_cast<std::size_t>(z[t].cols()) != M) {
      throw DataError("covariate matrix for period " + std::to_string(t) + " has wrong shape");
    }
    if (!all_finite(z[t])) throw DataError("non-finite covariate value");
  }
  if (M > 0) {
    Matrix stacked(static_cast<Eigen::Index>(T * N), static_cast<Eigen::Index>(M));
    for (std::size_t t = 0; t < T; ++t) stacked.middleRows(static_cast<Eigen::Index>(t * N), static_cast<Eigen::Index>(N)) = z[t];
    Eigen::ColPivHouseholderQR<Matrix> qr(stacked);
    if (static_cast<std::size_t>(qr.rank()) < M) throw DataError("stacked covariates are not of full column rank");
  }
  if (basket_weights) {
    const auto& w = *basket_weights;
    if (static_cast<std::size_t>(w.rows()) != T || static_cast<std::size_t>(w.cols()) != N) {
      throw DataError("basket weights must be T x N");
    }
    if (!all_finite(w) || (w.array() < 0.0).any()) throw DataError("basket weights must be finite and nonnegative");
  }
  if (!unit_labels.empty() && unit_labels.size() != N) throw DataError("unit label count differs from N");
  if (!period_labels.empty() && period_labels.size() != T) throw DataError("period label count differs from T");
}

AdjacencyMatrix::AdjacencyMatrix(std::size_t n)
    : entries_(Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))) {}

AdjacencyMatrix::AdjacencyMatrix(const Eigen::MatrixXi& entries) : entries_(entries) {
  if (entries_.rows() != entries_.cols()) throw std::invalid_argument("adjacency matrix must be square");
  for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
    if (entries_(i, i) != 0) throw std::invalid_argument("adjacency matrix has a self-loop");
    for (Eigen::Index j = 0; j < entries_.cols(); ++j) {
      if (entries_(i, j) != 0 && entries_(i, j) != 1) throw std::invalid_argument("adjacency entries must be 0 or 1");
    }
  }
}

void AdjacencyMatrix::set(std::size_t i, std::size_t j, int bit) {
  if (i == j) throw std::invalid_argument("cannot set a diagonal adjacency entry");
  if (bit != 0 && bit != 1) throw std::invalid_argument("adjacency entries must be 0 or 1");
  entries_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = bit;
}

WeightMatrix WeightMatrix::from_dense(const Matrix& w, double tol) {
  if (w.rows() != w.cols()) throw std::invalid_argument("weight matrix must be square");
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    if (w(i, i) != 0.0) throw std::invalid_argument("weight matrix diagonal must be zero");
    if ((w.row(i).array() < 0.0).any()) throw std::invalid_argument("weight matrix must be nonnegative");
    const double sum = w.row(i).sum();
    if (sum != 0.0 && std::abs(sum - 1.0) > tol) {
      throw std::invalid_argument("weight matrix rows must sum to 1 or 0");
    }
  }
  return WeightMatrix(w);
}

void ChainState::validate() const {
  const auto K = states();
  if (K == 0) throw std::invalid_argument("chain state has no regimes");
  if (omegas.size() != K || q.size() != K) throw std::invalid_argument("per-state containers disagree on K");
  if (xi.rows() != static_cast<Eigen::Index>(K) || xi.cols() != static_cast<Eigen::Index>(K)) {
    throw std::invalid_argument("transition matrix must be K x K");
  }
  for (Eigen::Index k = 0; k < xi.rows(); ++k) {
    if ((xi.row(k).array() < 0.0).any() || std::abs(xi.row(k).sum() - 1.0) > 1e-12) {
      throw std::invalid_argument("transition matrix rows must be probability vectors");
    }
  }
  for (double r : rhos) {
    if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("rho must lie in (0,1)");
  }
  for (int label : s) {
    if (label < 0 || static_cast<std::size_t>(label) >= K) throw std::invalid_argument("state label out of range");
  }
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
}

Hyperparams Hyperparams::defaults(std::size_t K, std::size_t M) {
  Hyperparams h;
  h.K = K;
  h.a_q.assign(K, 1.0);
  h.b_q.assign(K, 1.0);
  h.mu_beta = Vector::Zero(static_cast<Eigen::Index>(M));
  h.Sigma_beta = 100.0 * Matrix::Identity(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(M));
  return h;
}

void Hyperparams::validate() const {
  if (K < 1) throw std::invalid_argument("K must be at least 1");
  if (a_q.size() != K || b_q.size() != K) throw std::invalid_argument("a_q and b_q need one entry per state");
  for (std::size_t k = 0; k < K; ++k) {
    if (!(a_q[k] > 0.0) || !(b_q[k] > 0.0)) throw std::invalid_argument("link-probability shapes must be positive");
  }
  if (!(a_rho > 0.0) || !(b_rho > 0.0)) throw std::invalid_argument("rho shapes must be positive");
  if (!(a_xi > 0.0)) throw std::invalid_argument("Dirichlet concentration must be positive");
  if (!(a_sigma > 0.0) || !(b_sigma > 0.0)) throw std::invalid_argument("inverse-Gamma shapes must be positive");
  if (grid_size < 2) throw std::invalid_argument("grid size must be at least 2");
  if (!(harden_threshold >= 0.0 && harden_threshold <= 1.0)) {
    throw std::invalid_argument("hardening threshold must lie in [0,1]");
  }
  if (Sigma_beta.rows() != mu_beta.size() || Sigma_beta.cols() != mu_beta.size()) {
    throw std::invalid_argument("Sigma_beta must be M x M");
  }
  if (mu_beta.size() > 0) {
    if (!Sigma_beta.isApprox(Sigma_beta.transpose(), 1e-12)) throw std::invalid_argument("Sigma_beta must be symmetric");
    Eigen::LLT<Matrix> llt(Sigma_beta);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("Sigma_beta must be positive definite");
  }
}

WeightMatrix row_normalize(const AdjacencyMatrix& omega) {
  const auto n = static_cast<Eigen::Index>(omega.size());
  Matrix w = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int degree = omega.row_degree(static_cast<std::size_t>(i));
    if (degree == 0) continue;
    const double share = 1.0 / degree;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (omega.entries()(i, j) == 1) w(i, j) = share;
    }
  }
  return WeightMatrix(std::move(w));
}

Matrix spatial_filter(double rho, const WeightMatrix& w) {
  const auto n = static_cast<Eigen::Index>(w.size());
  return Matrix::Identity(n, n) - rho * w.matrix();
}

double log_det_positive(const Matrix& s) {
  Eigen::PartialPivLU<Matrix> lu(s);
  const Matrix& packed = lu.matrixLU();
  double log_det = 0.0;
  double sign = lu.permutationP().determinant();
  for (Eigen::Index i = 0; i < packed.rows(); ++i) {
    const double d = packed(i, i);
    if (d == 0.0 || !std::isfinite(d)) throw NumericalDegeneracy("singular spatial filter");
    if (d < 0.0) sign = -sign;
    log_det += std::log(std::abs(d));
  }
  if (sign <= 0.0) throw NumericalDegeneracy("spatial filter has a nonpositive determinant");
  return log_det;
}

double log_abs_det_filter(double rho, const WeightMatrix& w) {
  return log_det_positive(spatial_filter(rho, w));
}

Matrix spatial_multiplier(double rho, const WeightMatrix& w) {
  const Matrix s = spatial_filter(rho, w);
  Eigen::PartialPivLU<Matrix> lu(s);
  const Matrix& packed = lu.matrixLU();
  for (Eigen::Index i = 0; i < packed.rows(); ++i) {
    if (packed(i, i) == 0.0) throw NumericalDegeneracy("singular spatial filter");
  }
  return lu.inverse();
}

double obs_loglik_with_logdet(const Vector& y_t, const Matrix& z_t, const Vector& beta,
                              double sigma2, double rho, const WeightMatrix& w, double log_det) {
  const double n = static_cast<double>(y_t.size());
  Vector resid = y_t - rho * (w.matrix() * y_t);
  if (beta.size() > 0) resid.noalias() -= z_t * beta;
  return -0.5 * n * std::log(2.0 * std::numbers::pi * sigma2) + log_det -
         0.5 * resid.squaredNorm() / sigma2;
}

double obs_loglik(const Vector& y_t, const Matrix& z_t, const Vector& beta, double sigma2,
                  double rho, const WeightMatrix& w) {
  return obs_loglik_with_logdet(y_t, z_t, beta, sigma2, rho, w, log_abs_det_filter(rho, w));
}

Vector stationary_distribution(const Matrix& xi) {
  const auto K = xi.rows();
  if (K == 1) return Vector::Ones(1);
  const Matrix a = xi.transpose() - Matrix::Identity(K, K);
  Eigen::FullPivLU<Matrix> rank_check(a);
  rank_check.setThreshold(1e-10);
  if (rank_check.rank() < K - 1) return Vector::Constant(K, 1.0 / static_cast<double>(K));

  Matrix system = a;
  system.row(K - 1).setOnes();
  Vector rhs = Vector::Zero(K);
  rhs(K - 1) = 1.0;
  Vector pi = system.fullPivLu().solve(rhs);
  pi = pi.cwiseMax(0.0);
  const double total = pi.sum();
  if (!(total > 0.0)) return Vector::Constant(K, 1.0 / static_cast<double>(K));
  return pi / total;
}

Matrix per_state_logliks(const PanelData& data, const std::vector<WeightMatrix>& weights,
                         const std::vector<double>& rhos, const Vector& beta, double sigma2) {
  const auto T = static_cast<Eigen::Index>(data.periods());
  const auto K = static_cast<Eigen::Index>(rhos.size());
  Matrix out(T, K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto& w = weights[static_cast<std::size_t>(k)];
    const double rho = rhos[static_cast<std::size_t>(k)];
    const double log_det = log_abs_det_filter(rho, w);
    for (Eigen::Index t = 0; t < T; ++t) {
      out(t, k) = obs_loglik_with_logdet(data.response(static_cast<std::size_t>(t)),
                                         data.z[static_cast<std::size_t>(t)], beta, sigma2, rho, w, log_det);
    }
  }
  return out;
}

Eigen::MatrixXi transition_counts(const std::vector<int>& s, std::size_t K) {
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
  for (std::size_t t = 1; t < s.size(); ++t) counts(s[t - 1], s[t]) += 1;
  return counts;
}

double complete_loglik(const PanelData& data, const ChainState& state) {
  const auto K = state.states();
  std::vector<WeightMatrix> weights;
  weights.reserve(K);
  std::vector<double> log_dets(K);
  for (std::size_t k = 0; k < K; ++k) {
    weights.push_back(row_normalize(state.omegas[k]));
    log_dets[k] = log_abs_det_filter(state.rhos[k], weights[k]);
  }

  double total = 0.0;
  for (std::size_t t = 0; t < data.periods(); ++t) {
    const auto k = static_cast<std::size_t>(state.s[t]);
    total += obs_loglik_with_logdet(data.response(t), data.z[t], state.beta, state.sigma2,
                                    state.rhos[k], weights[k], log_dets[k]);
  }

  const Eigen::MatrixXi counts = transition_counts(state.s, K);
  for (Eigen::Index k = 0; k < counts.rows(); ++k) {
    for (Eigen::Index l = 0; l < counts.cols(); ++l) {
      if (counts(k, l) == 0) continue;
      if (state.xi(k, l) <= 0.0) return kLogZero;
      total += counts(k, l) * std::log(state.xi(k, l));
    }
  }
  if (!state.s.empty()) {
    const double p0 = stationary_distribution(state.xi)(state.s.front());
    if (p0 <= 0.0) return kLogZero;
    total += std::log(p0);
  }
  return total;
}

}  // namespace mssar
