#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mssar/model.hpp"
#include "mssar/rng.hpp"

namespace mssar {

enum class InitStrategy { PriorDraw, KSegments };

struct SamplerConfig {
  std::size_t n_iter = 10000;
  std::size_t n_burn = 5000;
  std::size_t thin = 5;
  std::uint64_t seed = 1;
  std::vector<double> rho_grid = midpoint_grid(100);
  InitStrategy init_strategy = InitStrategy::KSegments;
  // Forces every likelihood contribution to zero; the chain then samples the prior.
  bool ignore_likelihood = false;

  // G midpoints of an equal partition of (0,1).
  static std::vector<double> midpoint_grid(std::size_t g);
  std::size_t retained_count() const { return (n_iter - n_burn) / thin; }
  void validate() const;
};

struct Draw {
  std::size_t iteration = 0;  // 0-based sweep index
  ChainState state;
  double loglik = 0.0;        // complete-data log-likelihood at this state
};

struct DrawStore {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::size_t n_iter = 0;
  std::size_t n_burn = 0;
  std::size_t thin = 1;
  std::vector<Draw> draws;        // retained sweeps only
  std::vector<double> trace;      // complete-data log-likelihood of every sweep

  std::size_t states() const { return draws.empty() ? 0 : draws.front().state.states(); }
  friend bool operator==(const DrawStore&, const DrawStore&);
};

bool operator==(const ChainState& a, const ChainState& b);

// ---- Step 1: hidden regime path ----------------------------------------

struct ForwardBackward {
  Matrix filtered;  // T x K, P(s_t = k | y_1..y_t)
  Matrix smoothed;  // T x K, P(s_t = k | y_1..y_T)
  double log_evidence = 0.0;
};

// Log-space forward filter started from the stationary distribution of xi,
// followed by the backward smoothing recursion.
ForwardBackward forward_backward(const Matrix& per_state_logliks, const Matrix& xi);

struct FfbsResult {
  std::vector<int> s;
  Matrix filtered;
  Matrix smoothed;
};

FfbsResult ffbs_sample_states(const Matrix& per_state_logliks, const Matrix& xi, Rng& rng);

// ---- Step 2: Griddy-Gibbs for rho_k --------------------------------------

// Normalised log-probabilities of each grid point for regime k.
Vector griddy_rho_log_probs(std::size_t k, const PanelData& data, std::span<const int> s,
                            const WeightMatrix& w_k, const Vector& beta, double sigma2,
                            const Hyperparams& hyper, std::span<const double> grid);

double griddy_gibbs_rho(std::size_t k, const PanelData& data, std::span<const int> s,
                        const WeightMatrix& w_k, const Vector& beta, double sigma2,
                        const Hyperparams& hyper, std::span<const double> grid, Rng& rng);

// ---- Step 3: edge-wise network updates -----------------------------------

// Data summaries for the periods assigned to one regime, with c_t = y_t - Z_t beta:
// gram = sum y_t y_t', cross.row(i) = sum c_ti y_t', c2(i) = sum c_ti^2.
struct RegimeSuffStats {
  std::size_t periods = 0;
  Matrix gram;
  Matrix cross;
  Vector c2;
};

RegimeSuffStats regime_suff_stats(const PanelData& data, std::span<const int> s, std::size_t k,
                                  const Vector& beta);

struct ToggleDelta {
  double log_det_delta = 0.0;
  Vector updated_row;  // row i of W after the toggle
  bool refactorized = false;
};

// Network, weights and the inverse of S = I - rho W for one regime. Toggling a
// single edge changes only row i of W, so S moves by a rank-one term e_i d'
// and the determinant lemma gives the log-det change from column i of S^{-1}.
class FilterTracker {
 public:
  static constexpr std::size_t kRefreshEvery = 250;
  static constexpr double kSingularGuard = 1e-12;

  FilterTracker(AdjacencyMatrix omega, double rho);

  ToggleDelta toggle_delta(std::size_t i, std::size_t j, int new_bit) const;
  void apply(std::size_t i, std::size_t j, int new_bit, const ToggleDelta& delta);
  // Whole-row replacement; still a single rank-one change of S.
  ToggleDelta row_delta(std::size_t i, const Eigen::VectorXi& bits) const;
  void apply_row(std::size_t i, const Eigen::VectorXi& bits, const ToggleDelta& delta);
  void refresh();

  const AdjacencyMatrix& omega() const { return omega_; }
  const Matrix& weights() const { return w_; }
  const Matrix& inverse() const { return inverse_; }
  double rho() const { return rho_; }
  double log_det() const { return log_det_; }

 private:
  AdjacencyMatrix omega_;
  double rho_;
  Matrix w_;
  Matrix inverse_;
  double log_det_ = 0.0;
  std::size_t toggles_since_refresh_ = 0;
};

// Row i of W after setting omega_ij = new_bit and renormalising.
Vector toggled_row(const AdjacencyMatrix& omega, std::size_t i, std::size_t j, int new_bit);

// Posterior probability that omega_ij = 1 given everything else.
double omega_inclusion_probability(std::size_t i, std::size_t j, const FilterTracker& tracker,
                                   const RegimeSuffStats& stats, double q_ij, double sigma2);

// Draws omega_ij and applies it to the tracker. Returns the new bit.
int sample_omega_entry(std::size_t i, std::size_t j, FilterTracker& tracker,
                       const RegimeSuffStats& stats, double q_ij, double sigma2, Rng& rng);

// Metropolis-Hastings jump between an occupied row i and the empty row.
// Single-edge moves must pass through a one-neighbour row to empty a row,
// which can be very unlikely under row normalisation. The kill move proposes
// the empty row; the birth move draws a row from the Bernoulli(q) prior
// conditioned on being nonempty. Returns true if the jump was accepted.
bool sample_omega_row_jump(std::size_t i, FilterTracker& tracker, const RegimeSuffStats& stats,
                           const Matrix& q, double sigma2, Rng& rng);

// Log acceptance ratio of the jump from the current row i to `bits`.
double row_jump_log_ratio(std::size_t i, const Eigen::VectorXi& bits, const FilterTracker& tracker,
                          const RegimeSuffStats& stats, const Matrix& q, double sigma2);

// ---- Steps 4-7: conjugate updates ----------------------------------------

double sample_q(int omega_ij, double a_q, double b_q, Rng& rng);

Vector xi_row_concentration(std::size_t k, std::span<const int> s, const Hyperparams& hyper);
Vector sample_xi_row(std::size_t k, std::span<const int> s, const Hyperparams& hyper, Rng& rng);

struct GaussianPosterior {
  Vector mean;
  Matrix precision;
};

// Posterior from the sufficient statistics sum Z'Z and sum Z'S y.
GaussianPosterior beta_posterior(const Matrix& ztz, const Vector& zt_sy, double sigma2,
                                 const Hyperparams& hyper);
Vector draw_gaussian(const GaussianPosterior& post, Rng& rng);

Vector sample_beta(const PanelData& data, std::span<const int> s,
                   const std::vector<WeightMatrix>& weights, const std::vector<double>& rhos,
                   double sigma2, const Hyperparams& hyper, Rng& rng);

struct InvGammaParams {
  double shape;
  double rate;
};

InvGammaParams sigma2_posterior(double ssr, std::size_t observations, const Hyperparams& hyper);

double sample_sigma2(const PanelData& data, std::span<const int> s,
                     const std::vector<WeightMatrix>& weights, const std::vector<double>& rhos,
                     const Vector& beta, const Hyperparams& hyper, Rng& rng);

// ---- Chain driver --------------------------------------------------------

ChainState init_chain(const PanelData& data, const Hyperparams& hyper, const SamplerConfig& config,
                      Rng& rng);

// Called after every sweep with (0-based sweep, total sweeps).
using ProgressHook = std::function<void(std::size_t, std::size_t)>;

// Runs one full sweep of the seven updates in place.
void gibbs_sweep(const PanelData& data, const Hyperparams& hyper, const SamplerConfig& config,
                 ChainState& state, Rng& rng);

// Stable 16-hex-digit FNV-1a digest of every setting that shapes the chain.
std::string config_fingerprint(const Hyperparams& hyper, const SamplerConfig& config);

DrawStore run_gibbs(const PanelData& data, const Hyperparams& hyper, const SamplerConfig& config,
                    const ProgressHook& progress = {});

}  // namespace mssar
