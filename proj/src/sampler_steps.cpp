#include <cmath>
#include <stdexcept>
#include <vector>

#include "mssar/errors.hpp"
#include "mssar/sampler.hpp"

namespace mssar {

// ---- Griddy-Gibbs --------------------------------------------------------

Vector griddy_rho_log_probs(std::size_t k, const PanelData& data, std::span<const int> s,
                            const WeightMatrix& w_k, const Vector& beta, double sigma2,
                            const Hyperparams& hyper, std::span<const double> grid) {
  // With c_t = y_t - Z_t beta and b_t = W y_t the residual is c_t - rho b_t,
  // so the sum of squares is quadratic in rho.
  std::size_t periods = 0;
  double cc = 0.0;
  double cb = 0.0;
  double bb = 0.0;
  for (std::size_t t = 0; t < s.size(); ++t) {
    if (static_cast<std::size_t>(s[t]) != k) continue;
    ++periods;
    const Vector y = data.response(t);
    Vector c = y;
    if (beta.size() > 0) c.noalias() -= data.z[t] * beta;
    const Vector b = w_k.matrix() * y;
    cc += c.squaredNorm();
    cb += c.dot(b);
    bb += b.squaredNorm();
  }

  const auto G = static_cast<Eigen::Index>(grid.size());
  Vector log_probs(G);
  for (Eigen::Index g = 0; g < G; ++g) {
    const double rho = grid[static_cast<std::size_t>(g)];
    double lp = (hyper.a_rho - 1.0) * std::log(rho) + (hyper.b_rho - 1.0) * std::log1p(-rho);
    if (periods > 0) {
      const double ssr = cc - 2.0 * rho * cb + rho * rho * bb;
      lp += static_cast<double>(periods) * log_abs_det_filter(rho, w_k) - 0.5 * ssr / sigma2;
    }
    log_probs(g) = lp;
  }
  const double norm = log_sum_exp(std::span<const double>(log_probs.data(), grid.size()));
  return log_probs.array() - norm;
}

double griddy_gibbs_rho(std::size_t k, const PanelData& data, std::span<const int> s,
                        const WeightMatrix& w_k, const Vector& beta, double sigma2,
                        const Hyperparams& hyper, std::span<const double> grid, Rng& rng) {
  if (grid.size() == 1) return grid.front();
  const Vector lp = griddy_rho_log_probs(k, data, s, w_k, beta, sigma2, hyper, grid);
  return grid[rng.categorical_log(std::span<const double>(lp.data(), grid.size()))];
}

// ---- Edge updates --------------------------------------------------------

RegimeSuffStats regime_suff_stats(const PanelData& data, std::span<const int> s, std::size_t k,
                                  const Vector& beta) {
  const auto N = static_cast<Eigen::Index>(data.units());
  RegimeSuffStats st;
  st.gram = Matrix::Zero(N, N);
  st.cross = Matrix::Zero(N, N);
  st.c2 = Vector::Zero(N);
  for (std::size_t t = 0; t < s.size(); ++t) {
    if (static_cast<std::size_t>(s[t]) != k) continue;
    ++st.periods;
    const Vector y = data.response(t);
    Vector c = y;
    if (beta.size() > 0) c.noalias() -= data.z[t] * beta;
    st.gram.noalias() += y * y.transpose();
    st.cross.noalias() += c * y.transpose();
    st.c2.array() += c.array().square();
  }
  return st;
}

Vector toggled_row(const AdjacencyMatrix& omega, std::size_t i, std::size_t j, int new_bit) {
  const auto n = static_cast<Eigen::Index>(omega.size());
  Eigen::VectorXi bits = omega.entries().row(static_cast<Eigen::Index>(i)).transpose();
  bits(static_cast<Eigen::Index>(j)) = new_bit;
  const int degree = bits.sum();
  Vector row = Vector::Zero(n);
  if (degree > 0) {
    const double share = 1.0 / degree;
    for (Eigen::Index c = 0; c < n; ++c) {
      if (bits(c) == 1) row(c) = share;
    }
  }
  return row;
}

FilterTracker::FilterTracker(AdjacencyMatrix omega, double rho)
    : omega_(std::move(omega)), rho_(rho), w_(row_normalize(omega_).matrix()) {
  refresh();
}

void FilterTracker::refresh() {
  const auto n = w_.rows();
  const Matrix s = Matrix::Identity(n, n) - rho_ * w_;
  log_det_ = log_det_positive(s);
  inverse_ = s.partialPivLu().inverse();
  toggles_since_refresh_ = 0;
}

ToggleDelta FilterTracker::toggle_delta(std::size_t i, std::size_t j, int new_bit) const {
  const auto row = static_cast<Eigen::Index>(i);
  if (omega_(i, j) == new_bit) return {0.0, w_.row(row).transpose(), false};

  ToggleDelta out;
  out.updated_row = toggled_row(omega_, i, j, new_bit);
  // S' = S + e_i d' with d = -rho (w_new - w_old)
  const Vector d = -rho_ * (out.updated_row - w_.row(row).transpose());
  const double factor = 1.0 + d.dot(inverse_.col(row));
  if (std::abs(factor) < kSingularGuard) {
    const auto n = w_.rows();
    Matrix s = Matrix::Identity(n, n) - rho_ * w_;
    s.row(row) -= rho_ * (out.updated_row.transpose() - w_.row(row));
    out.log_det_delta = log_det_positive(s) - log_det_;
    out.refactorized = true;
    return out;
  }
  if (factor < 0.0) throw NumericalDegeneracy("edge toggle flips the sign of det(I - rho W)");
  out.log_det_delta = std::log(factor);
  return out;
}

void FilterTracker::apply(std::size_t i, std::size_t j, int new_bit, const ToggleDelta& delta) {
  if (omega_(i, j) == new_bit) return;
  const auto row = static_cast<Eigen::Index>(i);
  const Vector d = -rho_ * (delta.updated_row - w_.row(row).transpose());
  omega_.set(i, j, new_bit);
  w_.row(row) = delta.updated_row.transpose();
  if (delta.refactorized) {
    refresh();
    return;
  }
  // Sherman-Morrison on S^{-1}
  const Vector u = inverse_.col(row);
  const Eigen::RowVectorXd v = d.transpose() * inverse_;
  const double factor = 1.0 + v(row);
  inverse_.noalias() -= (u * v) / factor;
  log_det_ += delta.log_det_delta;
  if (++toggles_since_refresh_ >= kRefreshEvery) refresh();
}

ToggleDelta FilterTracker::row_delta(std::size_t i, const Eigen::VectorXi& bits) const {
  const auto row = static_cast<Eigen::Index>(i);
  const auto n = w_.rows();
  if (bits.size() != n || bits(row) != 0) throw std::invalid_argument("row_delta: bad row pattern");
  ToggleDelta out;
  out.updated_row = Vector::Zero(n);
  const int degree = bits.sum();
  for (Eigen::Index c = 0; c < n; ++c) {
    if (bits(c) == 1) out.updated_row(c) = 1.0 / degree;
  }
  const Vector d = -rho_ * (out.updated_row - w_.row(row).transpose());
  const double factor = 1.0 + d.dot(inverse_.col(row));
  if (std::abs(factor) < kSingularGuard) {
    Matrix s = Matrix::Identity(n, n) - rho_ * w_;
    s.row(row) = -rho_ * out.updated_row.transpose();
    s(row, row) += 1.0;
    out.log_det_delta = log_det_positive(s) - log_det_;
    out.refactorized = true;
    return out;
  }
  if (factor < 0.0) throw NumericalDegeneracy("row replacement flips the sign of det(I - rho W)");
  out.log_det_delta = std::log(factor);
  return out;
}

void FilterTracker::apply_row(std::size_t i, const Eigen::VectorXi& bits, const ToggleDelta& delta) {
  const auto row = static_cast<Eigen::Index>(i);
  const Vector d = -rho_ * (delta.updated_row - w_.row(row).transpose());
  for (std::size_t j = 0; j < omega_.size(); ++j) {
    if (j != i) omega_.set(i, j, bits(static_cast<Eigen::Index>(j)));
  }
  w_.row(row) = delta.updated_row.transpose();
  if (delta.refactorized) {
    refresh();
    return;
  }
  const Vector u = inverse_.col(row);
  const Eigen::RowVectorXd v = d.transpose() * inverse_;
  const double factor = 1.0 + v(row);
  inverse_.noalias() -= (u * v) / factor;
  log_det_ += delta.log_det_delta;
  if (++toggles_since_refresh_ >= kRefreshEvery) refresh();
}

namespace {

double row_ssr(const RegimeSuffStats& stats, std::size_t i, double rho, const Vector& row) {
  const auto r = static_cast<Eigen::Index>(i);
  return stats.c2(r) - 2.0 * rho * row.dot(stats.cross.row(r)) +
         rho * rho * row.dot(stats.gram * row);
}

}  // namespace

double omega_inclusion_probability(std::size_t i, std::size_t j, const FilterTracker& tracker,
                                   const RegimeSuffStats& stats, double q_ij, double sigma2) {
  double lp[2];
  for (int bit = 0; bit < 2; ++bit) {
    const double prior = bit == 1 ? q_ij : 1.0 - q_ij;
    if (prior <= 0.0) {
      lp[bit] = kLogZero;
      continue;
    }
    lp[bit] = std::log(prior);
    if (stats.periods == 0) continue;
    const ToggleDelta delta = tracker.toggle_delta(i, j, bit);
    const double log_det = tracker.log_det() + delta.log_det_delta;
    lp[bit] += static_cast<double>(stats.periods) * log_det -
               0.5 * row_ssr(stats, i, tracker.rho(), delta.updated_row) / sigma2;
  }
  if (lp[1] == kLogZero) return 0.0;
  if (lp[0] == kLogZero) return 1.0;
  return 1.0 / (1.0 + std::exp(lp[0] - lp[1]));
}

int sample_omega_entry(std::size_t i, std::size_t j, FilterTracker& tracker,
                       const RegimeSuffStats& stats, double q_ij, double sigma2, Rng& rng) {
  const double p = omega_inclusion_probability(i, j, tracker, stats, q_ij, sigma2);
  const int bit = rng.uniform() < p ? 1 : 0;
  if (bit != tracker.omega()(i, j)) tracker.apply(i, j, bit, tracker.toggle_delta(i, j, bit));
  return bit;
}

namespace {

// log P(row i empty) under independent Bernoulli(q_ij), j != i
double log_empty_prob(std::size_t i, const Matrix& q) {
  double lp = 0.0;
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (j != static_cast<Eigen::Index>(i)) lp += std::log1p(-q(static_cast<Eigen::Index>(i), j));
  }
  return lp;
}

// log(1 - exp(x)) for x <= 0
double log1m_exp(double x) { return x > -0.693 ? std::log(-std::expm1(x)) : std::log1p(-std::exp(x)); }

double row_data_term(std::size_t i, const Vector& row, double log_det, const FilterTracker& tracker,
                     const RegimeSuffStats& stats, double sigma2) {
  if (stats.periods == 0) return 0.0;
  return static_cast<double>(stats.periods) * log_det - 0.5 * row_ssr(stats, i, tracker.rho(), row) / sigma2;
}

}  // namespace

double row_jump_log_ratio(std::size_t i, const Eigen::VectorXi& bits, const FilterTracker& tracker,
                          const RegimeSuffStats& stats, const Matrix& q, double sigma2) {
  const auto r = static_cast<Eigen::Index>(i);
  const int from_degree = tracker.omega().row_degree(i);
  const int to_degree = bits.sum();
  if ((from_degree == 0) == (to_degree == 0)) throw std::invalid_argument("row jump must switch between empty and nonempty");
  const double log_p0 = log_empty_prob(i, q);
  if (log_p0 == kLogZero) return kLogZero;  // the empty row has no prior mass
  const ToggleDelta delta = tracker.row_delta(i, bits);
  const double before = row_data_term(i, tracker.weights().row(r).transpose(), tracker.log_det(), tracker, stats, sigma2);
  const double after = row_data_term(i, delta.updated_row, tracker.log_det() + delta.log_det_delta, tracker, stats, sigma2);
  // The Bernoulli prior of the occupied row cancels against its proposal density.
  const double odds = log_p0 - log1m_exp(log_p0);
  return (after - before) + (to_degree == 0 ? odds : -odds);
}

bool sample_omega_row_jump(std::size_t i, FilterTracker& tracker, const RegimeSuffStats& stats,
                           const Matrix& q, double sigma2, Rng& rng) {
  const auto r = static_cast<Eigen::Index>(i);
  const auto n = static_cast<Eigen::Index>(tracker.omega().size());
  const double log_p0 = log_empty_prob(i, q);
  if (log_p0 == kLogZero || log_p0 == 0.0) return false;  // row is forced full or forced empty

  Eigen::VectorXi bits = Eigen::VectorXi::Zero(n);
  if (tracker.omega().row_degree(i) == 0) {
    // Bernoulli(q) row conditioned on at least one edge: until the first edge is
    // placed, entry j is on with probability q_j / P(some edge among j..n-1).
    std::vector<double> tail(static_cast<std::size_t>(n) + 1, 0.0);
    for (Eigen::Index j = n - 1; j >= 0; --j) {
      tail[static_cast<std::size_t>(j)] = tail[static_cast<std::size_t>(j) + 1] + (j == r ? 0.0 : std::log1p(-q(r, j)));
    }
    bool placed = false;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == r) continue;
      const double qj = q(r, j);
      const double p = placed ? qj : qj / -std::expm1(tail[static_cast<std::size_t>(j)]);
      if (rng.uniform() < p) {
        bits(j) = 1;
        placed = true;
      }
    }
  }
  const double log_ratio = row_jump_log_ratio(i, bits, tracker, stats, q, sigma2);
  if (!(std::log(rng.uniform()) < log_ratio)) return false;
  tracker.apply_row(i, bits, tracker.row_delta(i, bits));
  return true;
}

// ---- Conjugate steps -----------------------------------------------------

double sample_q(int omega_ij, double a_q, double b_q, Rng& rng) {
  return rng.beta(a_q + omega_ij, b_q + (1 - omega_ij));
}

Vector xi_row_concentration(std::size_t k, std::span<const int> s, const Hyperparams& hyper) {
  Vector conc = Vector::Constant(static_cast<Eigen::Index>(hyper.K), hyper.a_xi);
  for (std::size_t t = 1; t < s.size(); ++t) {
    if (static_cast<std::size_t>(s[t - 1]) == k) conc(s[t]) += 1.0;
  }
  return conc;
}

Vector sample_xi_row(std::size_t k, std::span<const int> s, const Hyperparams& hyper, Rng& rng) {
  return rng.dirichlet(xi_row_concentration(k, s, hyper));
}

GaussianPosterior beta_posterior(const Matrix& ztz, const Vector& zt_sy, double sigma2,
                                 const Hyperparams& hyper) {
  Eigen::LLT<Matrix> prior(hyper.Sigma_beta);
  if (prior.info() != Eigen::Success) throw NumericalDegeneracy("prior covariance of beta is not positive definite");
  const auto M = hyper.mu_beta.size();
  const Matrix prior_precision = prior.solve(Matrix::Identity(M, M));
  GaussianPosterior post;
  post.precision = prior_precision + ztz / sigma2;
  Eigen::LLT<Matrix> llt(post.precision);
  if (llt.info() != Eigen::Success) throw NumericalDegeneracy("posterior precision of beta is not positive definite");
  post.mean = llt.solve(prior_precision * hyper.mu_beta + zt_sy / sigma2);
  return post;
}

Vector draw_gaussian(const GaussianPosterior& post, Rng& rng) {
  const auto M = post.mean.size();
  if (M == 0) return Vector();
  Eigen::LLT<Matrix> llt(post.precision);
  if (llt.info() != Eigen::Success) throw NumericalDegeneracy("posterior precision of beta is not positive definite");
  Vector z(M);
  for (Eigen::Index m = 0; m < M; ++m) z(m) = rng.normal();
  return post.mean + llt.matrixU().solve(z);
}

Vector sample_beta(const PanelData& data, std::span<const int> s,
                   const std::vector<WeightMatrix>& weights, const std::vector<double>& rhos,
                   double sigma2, const Hyperparams& hyper, Rng& rng) {
  const auto M = static_cast<Eigen::Index>(data.covariates());
  if (M == 0) return Vector();
  Matrix ztz = Matrix::Zero(M, M);
  Vector zt_sy = Vector::Zero(M);
  for (std::size_t t = 0; t < s.size(); ++t) {
    const auto k = static_cast<std::size_t>(s[t]);
    const Vector y = data.response(t);
    const Vector sy = y - rhos[k] * (weights[k].matrix() * y);
    ztz.noalias() += data.z[t].transpose() * data.z[t];
    zt_sy.noalias() += data.z[t].transpose() * sy;
  }
  return draw_gaussian(beta_posterior(ztz, zt_sy, sigma2, hyper), rng);
}

InvGammaParams sigma2_posterior(double ssr, std::size_t observations, const Hyperparams& hyper) {
  return {hyper.a_sigma + 0.5 * static_cast<double>(observations), hyper.b_sigma + 0.5 * ssr};
}

double sample_sigma2(const PanelData& data, std::span<const int> s,
                     const std::vector<WeightMatrix>& weights, const std::vector<double>& rhos,
                     const Vector& beta, const Hyperparams& hyper, Rng& rng) {
  double ssr = 0.0;
  for (std::size_t t = 0; t < s.size(); ++t) {
    const auto k = static_cast<std::size_t>(s[t]);
    const Vector y = data.response(t);
    Vector resid = y - rhos[k] * (weights[k].matrix() * y);
    if (beta.size() > 0) resid.noalias() -= data.z[t] * beta;
    ssr += resid.squaredNorm();
  }
  const InvGammaParams post = sigma2_posterior(ssr, s.size() * data.units(), hyper);
  return rng.inv_gamma(post.shape, post.rate);
}

}  // namespace mssar
