#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mssar/model.hpp"
#include "mssar/sampler.hpp"

namespace mssar {

// Permutes regimes in every draw so that rho is sorted in descending order,
// carrying s, omega, Q and the rows and columns of Xi along. Ties keep the
// original label order.
DrawStore relabel_draws(DrawStore store);
ChainState relabel_state(const ChainState& state);

// Posterior mean over draws of the forward-backward smoothed probabilities.
Matrix smoothed_state_probabilities(const DrawStore& store, const PanelData& data);

// Fraction of draws containing each edge, per regime. Diagonal is 0.
std::vector<Matrix> edge_inclusion(const DrawStore& store);

// Keeps edge (i,j) iff inclusion(i,j) > threshold.
AdjacencyMatrix harden_adjacency(const Matrix& inclusion, double threshold = 0.68);

// Percentage of the N(N-1) possible directed links that are present.
double link_density(const AdjacencyMatrix& omega);

// 100 x mean entry over the N(N-1) off-diagonal positions of W or rho W.
double network_density(const Matrix& w_like);

struct Effects {
  Vector direct;     // delta
  Vector spillover;  // zeta
  Vector total;      // tau
};

// Basket-weighted decomposition of the spatial multiplier (I - rho W)^{-1}:
// direct_j = w_j M_jj, spillover_j = sum_{i != j} w_i M_ij, total = w' M.
Effects effects(double rho, const WeightMatrix& w, const Vector& weights);

struct StateEffects {
  std::vector<std::size_t> periods;  // periods with smoothed probability > 0.5
  std::vector<Effects> per_period;
  Effects average;
};

struct EffectsReport {
  // Empty entry when the regime dominates no period.
  std::vector<std::optional<StateEffects>> states;
};

// Posterior-mean rho with the hardened, re-normalised network per regime.
struct RegimeEstimate {
  double rho_mean = 0.0;
  double rho_std = 0.0;
  Matrix inclusion;
  AdjacencyMatrix hardened;
  WeightMatrix weights;
};

std::vector<RegimeEstimate> regime_estimates(const DrawStore& store, double threshold = 0.68);

// Basket weights of period t, or uniform 1/N when the panel has none.
Vector period_weights(const PanelData& data, std::size_t t);

EffectsReport state_averaged_effects(const DrawStore& store, const PanelData& data,
                                     double threshold = 0.68);
EffectsReport state_averaged_effects(const std::vector<RegimeEstimate>& regimes,
                                     const Matrix& smoothed, const PanelData& data);

struct NetworkStats {
  double link_density = 0.0;
  double network_density_w = 0.0;
  double network_density_rho_w = 0.0;
  double rho_mean = 0.0;
  double rho_std = 0.0;
};

std::vector<NetworkStats> network_stats(const std::vector<RegimeEstimate>& regimes);

// Plug-in parameters: posterior means, hardened networks, smoothed-argmax path.
ChainState plugin_state(const DrawStore& store, const PanelData& data, double threshold = 0.68);

// -4 E[log L_c] + 2 log L_c(plug-in).
double dic5(const DrawStore& store, const PanelData& data, double threshold = 0.68);

struct SummaryRow {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double p05 = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
};

// Linear-interpolation percentile (p in [0,1]) of an unsorted sample.
double percentile(std::vector<double> values, double p);

// One row per scalar unknown: rho, xi, beta, sigma2, then off-diagonal q.
std::vector<SummaryRow> posterior_summary(const DrawStore& store);

}  // namespace mssar
