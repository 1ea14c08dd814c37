#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mssar/model.hpp"
#include "mssar/rng.hpp"

namespace mssar {

// Ground truth for the data-generating process.
struct TruthSpec {
  std::size_t N = 8;
  std::size_t T = 100;
  std::size_t M = 2;
  std::size_t K = 2;
  Matrix xi;
  // Either explicit networks or a per-state link probability.
  std::vector<AdjacencyMatrix> omegas;
  std::vector<double> link_prob;
  std::vector<double> rhos;
  Vector beta;
  double sigma2 = 1.0;
  // First covariate column is a constant 1 when set; the rest are iid N(0,1).
  bool intercept = false;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SimulatedPanel {
  PanelData data;
  std::vector<int> s;
  std::vector<AdjacencyMatrix> omegas;
};

// s_1 from the stationary law of xi, then Markov transitions.
std::vector<int> simulate_chain(const Matrix& xi, std::size_t T, Rng& rng);

// Draws an adjacency matrix with iid Bernoulli(p) off-diagonal entries.
AdjacencyMatrix random_adjacency(std::size_t n, double p, Rng& rng);

// y_t = (I - rho W)^{-1} (Z_t beta + eps_t), eps_t ~ N(0, sigma2 I).
// Basket weights are uniform 1/N. Deterministic given truth.seed.
SimulatedPanel simulate_panel(const TruthSpec& truth);

}  // namespace mssar
