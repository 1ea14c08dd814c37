#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "mssar/errors.hpp"
#include "mssar/sampler.hpp"
#include "mssar/simulate.hpp"

namespace mssar {

std::vector<double> SamplerConfig::midpoint_grid(std::size_t g) {
  std::vector<double> grid(g);
  for (std::size_t i = 0; i < g; ++i) grid[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(g);
  return grid;
}

void SamplerConfig::validate() const {
  if (n_iter == 0) throw std::invalid_argument("n_iter must be positive");
  if (n_burn >= n_iter) throw std::invalid_argument("n_burn must be smaller than n_iter");
  if (thin < 1) throw std::invalid_argument("thin must be at least 1");
  if (rho_grid.empty()) throw std::invalid_argument("rho grid is empty");
  for (std::size_t g = 0; g < rho_grid.size(); ++g) {
    if (!(rho_grid[g] > 0.0 && rho_grid[g] < 1.0)) throw std::invalid_argument("rho grid must lie inside (0,1)");
    if (g > 0 && !(rho_grid[g] > rho_grid[g - 1])) throw std::invalid_argument("rho grid must be strictly increasing");
  }
}

bool operator==(const ChainState& a, const ChainState& b) {
  if (a.s != b.s || a.omegas != b.omegas || a.rhos != b.rhos || a.sigma2 != b.sigma2) return false;
  if (a.q.size() != b.q.size()) return false;
  for (std::size_t k = 0; k < a.q.size(); ++k) {
    if (a.q[k].rows() != b.q[k].rows() || a.q[k].cols() != b.q[k].cols() || a.q[k] != b.q[k]) return false;
  }
  return a.xi.rows() == b.xi.rows() && a.xi.cols() == b.xi.cols() && a.xi == b.xi &&
         a.beta.size() == b.beta.size() && a.beta == b.beta;
}

bool operator==(const DrawStore& a, const DrawStore& b) {
  if (a.seed != b.seed || a.config_hash != b.config_hash || a.n_iter != b.n_iter ||
      a.n_burn != b.n_burn || a.thin != b.thin || a.trace != b.trace || a.draws.size() != b.draws.size()) {
    return false;
  }
  for (std::size_t d = 0; d < a.draws.size(); ++d) {
    const auto& x = a.draws[d];
    const auto& y = b.draws[d];
    if (x.iteration != y.iteration || !(x.state == y.state)) return false;
    if (x.loglik != y.loglik && !(std::isinf(x.loglik) && x.loglik == y.loglik)) return false;
  }
  return true;
}

namespace {

std::vector<WeightMatrix> weights_of(const ChainState& state) {
  std::vector<WeightMatrix> w;
  w.reserve(state.states());
  for (const auto& omega : state.omegas) w.push_back(row_normalize(omega));
  return w;
}

}  // namespace

ChainState init_chain(const PanelData& data, const Hyperparams& hyper, const SamplerConfig& config,
                      Rng& rng) {
  const std::size_t K = hyper.K;
  const std::size_t N = data.units();
  const std::size_t T = data.periods();
  ChainState st;

  st.xi.resize(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
  for (std::size_t k = 0; k < K; ++k) {
    st.xi.row(static_cast<Eigen::Index>(k)) =
        rng.dirichlet(Vector::Constant(static_cast<Eigen::Index>(K), hyper.a_xi)).transpose();
  }

  if (config.init_strategy == InitStrategy::KSegments) {
    st.s.resize(T);
    for (std::size_t t = 0; t < T; ++t) st.s[t] = static_cast<int>(t * K / T);
  } else {
    st.s = simulate_chain(st.xi, T, rng);
  }

  // rho comes from the prior as the sampler sees it: discretised on the grid
  std::vector<double> prior_lp(config.rho_grid.size());
  for (std::size_t g = 0; g < prior_lp.size(); ++g) {
    const double r = config.rho_grid[g];
    prior_lp[g] = (hyper.a_rho - 1.0) * std::log(r) + (hyper.b_rho - 1.0) * std::log1p(-r);
  }

  for (std::size_t k = 0; k < K; ++k) {
    Matrix q = Matrix::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    AdjacencyMatrix omega(N);
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = 0; j < N; ++j) {
        if (i == j) continue;
        const double p = rng.beta(hyper.a_q[k], hyper.b_q[k]);
        q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = p;
        omega.set(i, j, rng.bernoulli(p) ? 1 : 0);
      }
    }
    st.q.push_back(std::move(q));
    st.omegas.push_back(std::move(omega));
    st.rhos.push_back(config.rho_grid[rng.categorical_log(prior_lp)]);
  }

  const auto M = static_cast<Eigen::Index>(data.covariates());
  if (M > 0) {
    GaussianPosterior prior;
    prior.mean = hyper.mu_beta;
    prior.precision = hyper.Sigma_beta.llt().solve(Matrix::Identity(M, M));
    st.beta = draw_gaussian(prior, rng);
  }
  const double log_sigma2 = std::log(hyper.b_sigma) - rng.log_gamma_draw(hyper.a_sigma);
  st.sigma2 = std::exp(std::clamp(log_sigma2, -690.0, 690.0));
  return st;
}

void gibbs_sweep(const PanelData& data, const Hyperparams& hyper, const SamplerConfig& config,
                 ChainState& state, Rng& rng) {
  const std::size_t K = hyper.K;
  const std::size_t N = data.units();
  const std::size_t T = data.periods();
  std::vector<WeightMatrix> weights = weights_of(state);

  // 1. regime path
  const Matrix logliks = config.ignore_likelihood
                             ? Matrix::Zero(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(K)).eval()
                             : per_state_logliks(data, weights, state.rhos, state.beta, state.sigma2);
  state.s = ffbs_sample_states(logliks, state.xi, rng).s;
  // Under ignore_likelihood every data-dependent step sees no assigned periods.
  const std::span<const int> assigned =
      config.ignore_likelihood ? std::span<const int>() : std::span<const int>(state.s);

  // 2. spatial dependence per regime
  for (std::size_t k = 0; k < K; ++k) {
    state.rhos[k] = griddy_gibbs_rho(k, data, assigned, weights[k], state.beta, state.sigma2, hyper,
                                     config.rho_grid, rng);
  }

  // 3. network entries, row-major per regime
  for (std::size_t k = 0; k < K; ++k) {
    const RegimeSuffStats stats = regime_suff_stats(data, assigned, k, state.beta);
    FilterTracker tracker(std::move(state.omegas[k]), state.rhos[k]);
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = 0; j < N; ++j) {
        if (i == j) continue;
        sample_omega_entry(i, j, tracker, stats, state.q[k](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                           state.sigma2, rng);
      }
    }
    for (std::size_t i = 0; i < N; ++i) sample_omega_row_jump(i, tracker, stats, state.q[k], state.sigma2, rng);
    state.omegas[k] = tracker.omega();
    weights[k] = row_normalize(state.omegas[k]);
  }

  // 4. link probabilities
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = 0; j < N; ++j) {
        if (i == j) continue;
        state.q[k](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            sample_q(state.omegas[k](i, j), hyper.a_q[k], hyper.b_q[k], rng);
      }
    }
  }

  // 5. transition rows; the path prior is used even when the likelihood is off
  for (std::size_t k = 0; k < K; ++k) {
    state.xi.row(static_cast<Eigen::Index>(k)) = sample_xi_row(k, state.s, hyper, rng).transpose();
  }

  // 6-7. regression coefficients and innovation variance
  state.beta = sample_beta(data, assigned, weights, state.rhos, state.sigma2, hyper, rng);
  state.sigma2 = sample_sigma2(data, assigned, weights, state.rhos, state.beta, hyper, rng);
}

std::string config_fingerprint(const Hyperparams& hyper, const SamplerConfig& config) {
  std::string text;
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g;", v);
    text += buf;
  };
  put(static_cast<double>(hyper.K));
  for (double v : hyper.a_q) put(v);
  for (double v : hyper.b_q) put(v);
  put(hyper.a_rho);
  put(hyper.b_rho);
  put(hyper.a_xi);
  for (Eigen::Index m = 0; m < hyper.mu_beta.size(); ++m) put(hyper.mu_beta(m));
  for (Eigen::Index m = 0; m < hyper.Sigma_beta.size(); ++m) put(hyper.Sigma_beta.data()[m]);
  put(hyper.a_sigma);
  put(hyper.b_sigma);
  put(hyper.harden_threshold);
  put(static_cast<double>(config.n_iter));
  put(static_cast<double>(config.n_burn));
  put(static_cast<double>(config.thin));
  text += std::to_string(config.seed) + ";";
  for (double g : config.rho_grid) put(g);
  text += config.init_strategy == InitStrategy::KSegments ? "k-segments;" : "prior-draw;";
  if (config.ignore_likelihood) text += "prior-only;";

  std::uint64_t h = 14695981039346656037ULL;  // FNV-1a
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

DrawStore run_gibbs(const PanelData& data, const Hyperparams& hyper, const SamplerConfig& config,
                    const ProgressHook& progress) {
  data.validate();
  hyper.validate();
  config.validate();
  if (hyper.mu_beta.size() != static_cast<Eigen::Index>(data.covariates())) {
    throw std::invalid_argument("mu_beta length differs from the number of covariates");
  }

  DrawStore store;
  store.seed = config.seed;
  store.config_hash = config_fingerprint(hyper, config);
  store.n_iter = config.n_iter;
  store.n_burn = config.n_burn;
  store.thin = config.thin;
  store.trace.reserve(config.n_iter);
  store.draws.reserve(config.retained_count());

  Rng rng(config.seed);
  ChainState state = init_chain(data, hyper, config, rng);
  for (std::size_t sweep = 0; sweep < config.n_iter; ++sweep) {
    try {
      gibbs_sweep(data, hyper, config, state, rng);
      const double loglik = complete_loglik(data, state);
      store.trace.push_back(loglik);
      if (sweep >= config.n_burn && (sweep - config.n_burn + 1) % config.thin == 0) {
        store.draws.push_back({sweep, state, loglik});
      }
    } catch (const std::exception& e) {
      throw SweepError(sweep, e.what());
    }
    if (progress) progress(sweep, config.n_iter);
  }
  return store;
}

}  // namespace mssar
