#pragma once

#include <random>
#include <vector>

#include "mssar/model.hpp"
#include "oracles.hpp"

namespace fixture {

inline mssar::AdjacencyMatrix to_adjacency(const std::vector<std::vector<int>>& bits) {
  const auto n = static_cast<Eigen::Index>(bits.size());
  Eigen::MatrixXi m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = bits[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return mssar::AdjacencyMatrix(m);
}

inline oracle::Mat to_mat(const mssar::Matrix& m) {
  oracle::Mat out = oracle::zeros(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  return out;
}

inline oracle::Vec to_vec(const mssar::Vector& v) { return oracle::Vec(v.data(), v.data() + v.size()); }

inline double max_abs_diff(const mssar::Matrix& a, const oracle::Mat& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      worst = std::max(worst, std::abs(a(i, j) - b[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));
  return worst;
}

// Small random panel with iid normal responses and covariates.
inline mssar::PanelData random_panel(std::size_t T, std::size_t N, std::size_t M, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  mssar::PanelData d;
  d.y.resize(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(N));
  for (Eigen::Index t = 0; t < d.y.rows(); ++t)
    for (Eigen::Index i = 0; i < d.y.cols(); ++i) d.y(t, i) = nd(gen);
  for (std::size_t t = 0; t < T; ++t) {
    mssar::Matrix z(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(M));
    for (Eigen::Index i = 0; i < z.rows(); ++i)
      for (Eigen::Index m = 0; m < z.cols(); ++m) z(i, m) = nd(gen);
    d.z.push_back(z);
  }
  return d;
}

inline mssar::ChainState random_state(std::size_t T, std::size_t N, std::size_t M, std::size_t K, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.05, 0.9);
  std::normal_distribution<double> nd;
  mssar::ChainState st;
  std::uniform_int_distribution<int> lab(0, static_cast<int>(K) - 1);
  for (std::size_t t = 0; t < T; ++t) st.s.push_back(lab(gen));
  st.xi = mssar::Matrix(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
  for (std::size_t k = 0; k < K; ++k) {
    st.omegas.push_back(to_adjacency(oracle::random_bits(N, 0.3, gen)));
    st.rhos.push_back(u(gen));
    mssar::Matrix q = mssar::Matrix::Constant(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N), 0.3);
    q.diagonal().setZero();
    st.q.push_back(q);
    double sum = 0.0;
    for (std::size_t l = 0; l < K; ++l) sum += (st.xi(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = u(gen));
    st.xi.row(static_cast<Eigen::Index>(k)) /= sum;
  }
  st.beta = mssar::Vector(static_cast<Eigen::Index>(M));
  for (Eigen::Index m = 0; m < st.beta.size(); ++m) st.beta(m) = nd(gen);
  st.sigma2 = 0.7;
  return st;
}

}  // namespace fixture
