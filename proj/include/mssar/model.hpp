#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace mssar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Log-likelihood value used when a configuration has zero probability.
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// Observed panel. Row t of `y` is the response vector of period t.
struct PanelData {
  Matrix y;                             // T x N
  std::vector<Matrix> z;                // T matrices, each N x M
  std::optional<Matrix> basket_weights;  // T x N, nonnegative
  std::vector<std::string> unit_labels;
  std::vector<std::string> period_labels;

  std::size_t periods() const { return static_cast<std::size_t>(y.rows()); }
  std::size_t units() const { return static_cast<std::size_t>(y.cols()); }
  std::size_t covariates() const {
    return z.empty() ? 0 : static_cast<std::size_t>(z.front().cols());
  }
  Vector response(std::size_t t) const { return y.row(static_cast<Eigen::Index>(t)).transpose(); }

  // Throws DataError if any invariant is violated.
  void validate() const;
};

// Binary hidden network with zero diagonal.
class AdjacencyMatrix {
 public:
  AdjacencyMatrix() = default;
  explicit AdjacencyMatrix(std::size_t n);
  // Throws std::invalid_argument on non-binary entries or self-loops.
  explicit AdjacencyMatrix(const Eigen::MatrixXi& entries);

  std::size_t size() const { return static_cast<std::size_t>(entries_.rows()); }
  int operator()(std::size_t i, std::size_t j) const {
    return entries_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  void set(std::size_t i, std::size_t j, int bit);
  const Eigen::MatrixXi& entries() const { return entries_; }
  std::size_t edge_count() const { return static_cast<std::size_t>(entries_.sum()); }
  int row_degree(std::size_t i) const { return entries_.row(static_cast<Eigen::Index>(i)).sum(); }

  friend bool operator==(const AdjacencyMatrix& a, const AdjacencyMatrix& b) {
    return a.entries_.rows() == b.entries_.rows() && a.entries_ == b.entries_;
  }

 private:
  Eigen::MatrixXi entries_;
};

// Nonnegative, zero-diagonal matrix whose rows sum to 1 or are all zero.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  // Validates the invariants to within `tol` per row sum.
  static WeightMatrix from_dense(const Matrix& w, double tol = 1e-12);

  std::size_t size() const { return static_cast<std::size_t>(w_.rows()); }
  const Matrix& matrix() const { return w_; }
  double operator()(std::size_t i, std::size_t j) const {
    return w_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

 private:
  friend WeightMatrix row_normalize(const AdjacencyMatrix& omega);
  explicit WeightMatrix(Matrix w) : w_(std::move(w)) {}
  Matrix w_;
};

// One full set of sampler unknowns. State labels are 0-based in memory.
struct ChainState {
  std::vector<int> s;                    // length T, values in [0, K)
  std::vector<AdjacencyMatrix> omegas;   // K
  std::vector<double> rhos;              // K, each in (0,1)
  std::vector<Matrix> q;                 // K link-probability matrices, diagonal ignored
  Matrix xi;                             // K x K row-stochastic
  Vector beta;                           // M
  double sigma2 = 1.0;

  std::size_t states() const { return rhos.size(); }
  void validate() const;
};

struct Hyperparams {
  std::size_t K = 2;
  std::vector<double> a_q{1.0, 1.0};
  std::vector<double> b_q{1.0, 1.0};
  double a_rho = 1.0;
  double b_rho = 1.0;
  double a_xi = 1.0;
  Vector mu_beta;
  Matrix Sigma_beta;
  double a_sigma = 0.01;
  double b_sigma = 0.01;
  std::size_t grid_size = 100;
  double harden_threshold = 0.68;

  // Package defaults for K states and M covariates (mu 0, Sigma 100 I).
  static Hyperparams defaults(std::size_t K, std::size_t M);
  void validate() const;
};

WeightMatrix row_normalize(const AdjacencyMatrix& omega);

// I - rho W.
Matrix spatial_filter(double rho, const WeightMatrix& w);

// log det(I - rho W). Throws NumericalDegeneracy if the LU factorization
// yields a nonpositive determinant.
double log_abs_det_filter(double rho, const WeightMatrix& w);
double log_det_positive(const Matrix& s);

// (I - rho W)^{-1}.
Matrix spatial_multiplier(double rho, const WeightMatrix& w);

// Log density of y_t under one regime, including the Jacobian term.
double obs_loglik(const Vector& y_t, const Matrix& z_t, const Vector& beta, double sigma2,
                  double rho, const WeightMatrix& w);

// Same, with the log-determinant already known.
double obs_loglik_with_logdet(const Vector& y_t, const Matrix& z_t, const Vector& beta,
                              double sigma2, double rho, const WeightMatrix& w, double log_det);

// Solves pi Xi = pi with sum(pi) = 1. Falls back to uniform 1/K when the
// stationary distribution is not unique.
Vector stationary_distribution(const Matrix& xi);

// T x K matrix of obs_loglik evaluated under every regime.
Matrix per_state_logliks(const PanelData& data, const std::vector<WeightMatrix>& weights,
                         const std::vector<double>& rhos, const Vector& beta, double sigma2);

// Complete-data log-likelihood: observation terms under s, transition
// counts times log xi, plus log of the stationary probability of s_1.
// Returns kLogZero when a realised transition has zero probability.
double complete_loglik(const PanelData& data, const ChainState& state);

// Transition counts N_kl over consecutive pairs of s.
Eigen::MatrixXi transition_counts(const std::vector<int>& s, std::size_t K);

}  // namespace mssar
