#include "mssar/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mssar {

ChainState relabel_state(const ChainState& state) {
  const std::size_t K = state.states();
  std::vector<std::size_t> order(K);  // order[new] = old
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return state.rhos[a] > state.rhos[b]; });
  std::vector<int> new_label(K);
  for (std::size_t r = 0; r < K; ++r) new_label[order[r]] = static_cast<int>(r);

  ChainState out;
  out.s.reserve(state.s.size());
  for (int label : state.s) out.s.push_back(new_label[static_cast<std::size_t>(label)]);
  out.xi.resize(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
  for (std::size_t a = 0; a < K; ++a) {
    out.omegas.push_back(state.omegas[order[a]]);
    out.rhos.push_back(state.rhos[order[a]]);
    out.q.push_back(state.q[order[a]]);
    for (std::size_t b = 0; b < K; ++b) {
      out.xi(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          state.xi(static_cast<Eigen::Index>(order[a]), static_cast<Eigen::Index>(order[b]));
    }
  }
  out.beta = state.beta;
  out.sigma2 = state.sigma2;
  return out;
}

DrawStore relabel_draws(DrawStore store) {
  for (auto& draw : store.draws) draw.state = relabel_state(draw.state);
  return store;
}

namespace {

std::vector<WeightMatrix> weights_of(const ChainState& state) {
  std::vector<WeightMatrix> w;
  for (const auto& omega : state.omegas) w.push_back(row_normalize(omega));
  return w;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

Matrix smoothed_state_probabilities(const DrawStore& store, const PanelData& data) {
  const auto T = static_cast<Eigen::Index>(data.periods());
  const auto K = static_cast<Eigen::Index>(store.states());
  Matrix acc = Matrix::Zero(T, K);
  if (store.draws.empty()) return acc;
  for (const auto& draw : store.draws) {
    const auto& st = draw.state;
    const Matrix ll = per_state_logliks(data, weights_of(st), st.rhos, st.beta, st.sigma2);
    acc += forward_backward(ll, st.xi).smoothed;
  }
  acc /= static_cast<double>(store.draws.size());
  for (Eigen::Index t = 0; t < T; ++t) acc.row(t) /= acc.row(t).sum();
  return acc;
}

std::vector<Matrix> edge_inclusion(const DrawStore& store) {
  const std::size_t K = store.states();
  std::vector<Matrix> out;
  if (K == 0) return out;
  const auto N = static_cast<Eigen::Index>(store.draws.front().state.omegas.front().size());
  out.assign(K, Matrix::Zero(N, N));
  for (const auto& draw : store.draws) {
    for (std::size_t k = 0; k < K; ++k) out[k] += draw.state.omegas[k].entries().cast<double>();
  }
  for (auto& m : out) {
    m /= static_cast<double>(store.draws.size());
    m.diagonal().setZero();
  }
  return out;
}

AdjacencyMatrix harden_adjacency(const Matrix& inclusion, double threshold) {
  const auto N = inclusion.rows();
  Eigen::MatrixXi bits = Eigen::MatrixXi::Zero(N, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < N; ++j) {
      if (i != j && inclusion(i, j) > threshold) bits(i, j) = 1;
    }
  }
  return AdjacencyMatrix(bits);
}

double link_density(const AdjacencyMatrix& omega) {
  const auto n = static_cast<double>(omega.size());
  return 100.0 * static_cast<double>(omega.edge_count()) / (n * (n - 1.0));
}

double network_density(const Matrix& w_like) {
  const auto n = static_cast<double>(w_like.rows());
  const double off_diagonal = w_like.sum() - w_like.diagonal().sum();
  return 100.0 * off_diagonal / (n * (n - 1.0));
}

Effects effects(double rho, const WeightMatrix& w, const Vector& weights) {
  if (weights.size() != static_cast<Eigen::Index>(w.size())) {
    throw std::invalid_argument("basket weights length differs from N");
  }
  if ((weights.array() < 0.0).any()) throw std::invalid_argument("basket weights must be nonnegative");
  const Matrix multiplier = spatial_multiplier(rho, w);
  const Matrix diag_part = multiplier.diagonal().asDiagonal();
  Effects e;
  e.direct = (weights.transpose() * diag_part).transpose();
  e.spillover = (weights.transpose() * (multiplier - diag_part)).transpose();
  e.total = (weights.transpose() * multiplier).transpose();
  return e;
}

std::vector<RegimeEstimate> regime_estimates(const DrawStore& store, double threshold) {
  const std::size_t K = store.states();
  const std::vector<Matrix> inclusion = edge_inclusion(store);
  std::vector<RegimeEstimate> out;
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<double> rhos;
    rhos.reserve(store.draws.size());
    for (const auto& d : store.draws) rhos.push_back(d.state.rhos[k]);
    RegimeEstimate est;
    est.rho_mean = mean_of(rhos);
    est.rho_std = sd_of(rhos);
    est.inclusion = inclusion[k];
    est.hardened = harden_adjacency(inclusion[k], threshold);
    est.weights = row_normalize(est.hardened);
    out.push_back(std::move(est));
  }
  return out;
}

Vector period_weights(const PanelData& data, std::size_t t) {
  if (data.basket_weights) return data.basket_weights->row(static_cast<Eigen::Index>(t)).transpose();
  const auto N = static_cast<Eigen::Index>(data.units());
  return Vector::Constant(N, 1.0 / static_cast<double>(N));
}

EffectsReport state_averaged_effects(const std::vector<RegimeEstimate>& regimes,
                                     const Matrix& smoothed, const PanelData& data) {
  EffectsReport report;
  for (std::size_t k = 0; k < regimes.size(); ++k) {
    StateEffects se;
    const auto N = static_cast<Eigen::Index>(data.units());
    se.average = {Vector::Zero(N), Vector::Zero(N), Vector::Zero(N)};
    for (std::size_t t = 0; t < data.periods(); ++t) {
      if (!(smoothed(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) > 0.5)) continue;
      Effects e = effects(regimes[k].rho_mean, regimes[k].weights, period_weights(data, t));
      se.average.direct += e.direct;
      se.average.spillover += e.spillover;
      se.average.total += e.total;
      se.periods.push_back(t);
      se.per_period.push_back(std::move(e));
    }
    if (se.periods.empty()) {
      report.states.emplace_back(std::nullopt);
      continue;
    }
    const double n = static_cast<double>(se.periods.size());
    se.average.direct /= n;
    se.average.spillover /= n;
    se.average.total /= n;
    report.states.emplace_back(std::move(se));
  }
  return report;
}

EffectsReport state_averaged_effects(const DrawStore& store, const PanelData& data,
                                     double threshold) {
  return state_averaged_effects(regime_estimates(store, threshold),
                                smoothed_state_probabilities(store, data), data);
}

std::vector<NetworkStats> network_stats(const std::vector<RegimeEstimate>& regimes) {
  std::vector<NetworkStats> out;
  for (const auto& r : regimes) {
    NetworkStats ns;
    ns.link_density = link_density(r.hardened);
    ns.network_density_w = network_density(r.weights.matrix());
    ns.network_density_rho_w = network_density(r.rho_mean * r.weights.matrix());
    ns.rho_mean = r.rho_mean;
    ns.rho_std = r.rho_std;
    out.push_back(ns);
  }
  return out;
}

ChainState plugin_state(const DrawStore& store, const PanelData& data, double threshold) {
  if (store.draws.empty()) throw std::invalid_argument("plug-in estimate needs at least one draw");
  const std::size_t K = store.states();
  const double n = static_cast<double>(store.draws.size());
  const auto& first = store.draws.front().state;
  const std::vector<RegimeEstimate> regimes = regime_estimates(store, threshold);
  const Matrix smoothed = smoothed_state_probabilities(store, data);

  ChainState st;
  st.s.resize(data.periods());
  for (std::size_t t = 0; t < data.periods(); ++t) {
    Eigen::Index best = 0;
    smoothed.row(static_cast<Eigen::Index>(t)).maxCoeff(&best);
    st.s[t] = static_cast<int>(best);
  }
  st.xi = Matrix::Zero(first.xi.rows(), first.xi.cols());
  st.beta = Vector::Zero(first.beta.size());
  st.sigma2 = 0.0;
  st.q.assign(K, Matrix::Zero(first.q.front().rows(), first.q.front().cols()));
  for (const auto& d : store.draws) {
    st.xi += d.state.xi;
    st.beta += d.state.beta;
    st.sigma2 += d.state.sigma2;
    for (std::size_t k = 0; k < K; ++k) st.q[k] += d.state.q[k];
  }
  st.xi /= n;
  for (Eigen::Index k = 0; k < st.xi.rows(); ++k) st.xi.row(k) /= st.xi.row(k).sum();
  st.beta /= n;
  st.sigma2 /= n;
  for (auto& q : st.q) q /= n;
  for (const auto& r : regimes) {
    st.rhos.push_back(r.rho_mean);
    st.omegas.push_back(r.hardened);
  }
  return st;
}

double dic5(const DrawStore& store, const PanelData& data, double threshold) {
  std::vector<double> ll;
  ll.reserve(store.draws.size());
  for (const auto& d : store.draws) ll.push_back(d.loglik);
  return -4.0 * mean_of(ll) + 2.0 * complete_loglik(data, plugin_state(store, data, threshold));
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("percentile level must lie in [0,1]");
  const double h = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
  const double lower = values[lo];
  if (lo + 1 >= values.size()) return lower;
  const double upper = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
  return lower + (h - static_cast<double>(lo)) * (upper - lower);
}

std::vector<SummaryRow> posterior_summary(const DrawStore& store) {
  std::vector<SummaryRow> rows;
  if (store.draws.empty()) return rows;
  const auto& first = store.draws.front().state;
  const std::size_t K = first.states();
  const std::size_t M = static_cast<std::size_t>(first.beta.size());
  const std::size_t N = first.omegas.front().size();

  auto add = [&](std::string name, auto&& extract) {
    std::vector<double> v;
    v.reserve(store.draws.size());
    for (const auto& d : store.draws) v.push_back(extract(d.state));
    rows.push_back({std::move(name), mean_of(v), sd_of(v), percentile(v, 0.05), percentile(v, 0.50),
                    percentile(v, 0.95)});
  };

  for (std::size_t k = 0; k < K; ++k) {
    add("rho[" + std::to_string(k + 1) + "]", [k](const ChainState& s) { return s.rhos[k]; });
  }
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t l = 0; l < K; ++l) {
      add("xi[" + std::to_string(k + 1) + "," + std::to_string(l + 1) + "]", [k, l](const ChainState& s) {
        return s.xi(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
      });
    }
  }
  for (std::size_t m = 0; m < M; ++m) {
    add("beta[" + std::to_string(m + 1) + "]",
        [m](const ChainState& s) { return s.beta(static_cast<Eigen::Index>(m)); });
  }
  add("sigma2", [](const ChainState& s) { return s.sigma2; });
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = 0; j < N; ++j) {
        if (i == j) continue;
        add("q[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "," + std::to_string(k + 1) + "]",
            [=](const ChainState& s) {
              return s.q[k](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            });
      }
    }
  }
  return rows;
}

}  // namespace mssar
