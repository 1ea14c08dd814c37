#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "mssar/errors.hpp"
#include "mssar/model.hpp"

using namespace mssar;

namespace {

AdjacencyMatrix swap2() {
  Eigen::MatrixXi m(2, 2);
  m << 0, 1, 1, 0;
  return AdjacencyMatrix(m);
}

}  // namespace

TEST_CASE("row_normalize splits each row evenly") {
  Eigen::MatrixXi m(4, 4);
  m << 0, 1, 1, 1,
       0, 0, 0, 0,
       1, 0, 0, 1,
       0, 0, 1, 0;
  const Matrix w = row_normalize(AdjacencyMatrix(m)).matrix();
  CHECK(w(0, 1) == doctest::Approx(1.0 / 3));
  CHECK(w(0, 3) == doctest::Approx(1.0 / 3));
  CHECK(w.row(1).isZero());
  CHECK(w(2, 0) == 0.5);
  CHECK(w(2, 3) == 0.5);
  CHECK(w(3, 2) == 1.0);
  CHECK(w.diagonal().isZero());
}

TEST_CASE("row sums are one or zero on random networks") {
  std::mt19937_64 gen(3);
  for (int rep = 0; rep < 200; ++rep) {
    const auto bits = oracle::random_bits(1 + rep % 15, 0.3, gen);
    const Matrix w = row_normalize(fixture::to_adjacency(bits)).matrix();
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      const double s = w.row(i).sum();
      CHECK((std::abs(s - 1.0) < 1e-15 || s == 0.0));
    }
  }
}

TEST_CASE("adjacency rejects self loops and non-binary entries") {
  Eigen::MatrixXi m = Eigen::MatrixXi::Zero(3, 3);
  m(1, 1) = 1;
  CHECK_THROWS_AS(AdjacencyMatrix{m}, std::invalid_argument);
  m(1, 1) = 0;
  m(0, 2) = 2;
  CHECK_THROWS_AS(AdjacencyMatrix{m}, std::invalid_argument);
  AdjacencyMatrix a(3);
  CHECK_THROWS(a.set(2, 2, 1));
  a.set(0, 1, 1);
  CHECK(a.edge_count() == 1);
  CHECK(a.row_degree(0) == 1);
}

TEST_CASE("weight matrix validation") {
  Matrix bad(2, 2);
  bad << 0, 0.6, 0.5, 0;
  CHECK_THROWS(WeightMatrix::from_dense(bad));
  Matrix ok(2, 2);
  ok << 0, 1, 0, 0;
  CHECK_NOTHROW(WeightMatrix::from_dense(ok));
}

TEST_CASE("filter and multiplier on the two-node swap") {
  const WeightMatrix w = row_normalize(swap2());
  const Matrix s = spatial_filter(0.5, w);
  CHECK(s(0, 0) == 1.0);
  CHECK(s(0, 1) == -0.5);
  CHECK(s(1, 0) == -0.5);
  const Matrix m = spatial_multiplier(0.5, w);
  CHECK(m(0, 0) == doctest::Approx(1.0 / 0.75).epsilon(1e-14));
  CHECK(m(0, 1) == doctest::Approx(0.5 / 0.75).epsilon(1e-14));
  CHECK(log_abs_det_filter(0.5, w) == doctest::Approx(std::log(0.75)).epsilon(1e-14));
  CHECK(log_abs_det_filter(0.5, w) == doctest::Approx(-0.287682).epsilon(1e-6));
}

TEST_CASE("empty network gives the identity") {
  const WeightMatrix w = row_normalize(AdjacencyMatrix(5));
  CHECK(spatial_filter(0.8, w).isIdentity());
  CHECK(spatial_multiplier(0.8, w).isIdentity());
  CHECK(log_abs_det_filter(0.8, w) == 0.0);
}

TEST_CASE("log det against cofactor expansion") {
  std::mt19937_64 gen(21);
  for (int rep = 0; rep < 20; ++rep) {
    const auto bits = oracle::random_bits(6, 0.4, gen);
    const WeightMatrix w = row_normalize(fixture::to_adjacency(bits));
    const double det = oracle::cofactor_det(oracle::filter(0.7, oracle::normalise_rows(bits)));
    REQUIRE(det > 0.0);
    CHECK(std::abs(log_abs_det_filter(0.7, w) - std::log(det)) < 1e-10);
  }
}

TEST_CASE("filter times multiplier is the identity") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int rep = 0; rep < 50; ++rep) {
    const WeightMatrix w = row_normalize(fixture::to_adjacency(oracle::random_bits(5, 0.5, gen)));
    const double rho = u(gen);
    const Matrix prod = spatial_filter(rho, w) * spatial_multiplier(rho, w);
    CHECK((prod - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-10);
    const auto inv = oracle::gauss_jordan_inverse(oracle::filter(rho, fixture::to_mat(w.matrix())));
    CHECK(fixture::max_abs_diff(spatial_multiplier(rho, w), inv) < 1e-10);
  }
}

TEST_CASE("multiplier matches a truncated power series") {
  std::mt19937_64 gen(8);
  const auto bits = oracle::random_bits(8, 0.35, gen);
  const WeightMatrix w = row_normalize(fixture::to_adjacency(bits));
  const auto series = oracle::neumann(0.6, oracle::normalise_rows(bits), 50);
  CHECK(fixture::max_abs_diff(spatial_multiplier(0.6, w), series) < 1e-10);
}

TEST_CASE("obs_loglik at the origin is the standard normal density") {
  const WeightMatrix w = row_normalize(AdjacencyMatrix(2));
  const Vector y = Vector::Zero(2);
  const Matrix z(2, 0);
  CHECK(obs_loglik(y, z, Vector(0), 1.0, 0.37, w) == doctest::Approx(-std::log(2 * std::numbers::pi)).epsilon(1e-15));
}

TEST_CASE("obs_loglik against the reduced-form normal density") {
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t N = 2 + rep % 5;
    const auto bits = oracle::random_bits(N, 0.4, gen);
    const WeightMatrix w = row_normalize(fixture::to_adjacency(bits));
    const PanelData d = fixture::random_panel(1, N, 2, 100 + rep);
    Vector beta(2);
    beta << u(gen), -u(gen);
    const double rho = u(gen);
    const double sigma2 = 0.3 + u(gen);
    const double mine = obs_loglik(d.response(0), d.z[0], beta, sigma2, rho, w);
    const double ref = std::log(oracle::reduced_form_density(fixture::to_vec(d.response(0)), fixture::to_mat(d.z[0]),
                                                             fixture::to_vec(beta), sigma2, rho, oracle::normalise_rows(bits)));
    CHECK(std::abs(std::exp(mine - ref) - 1.0) < 1e-10);
  }
}

TEST_CASE("quadrupling sigma2 with zero residual shifts by N log 2") {
  std::mt19937_64 gen(2);
  const std::size_t N = 6;
  const WeightMatrix w = row_normalize(fixture::to_adjacency(oracle::random_bits(N, 0.4, gen)));
  const Vector y = Vector::Zero(N);
  const Matrix z = Matrix::Zero(N, 1);
  const Vector beta = Vector::Ones(1);
  const double a = obs_loglik(y, z, beta, 0.5, 0.4, w);
  const double b = obs_loglik(y, z, beta, 2.0, 0.4, w);
  CHECK(a - b == doctest::Approx(N * std::log(2.0)).epsilon(1e-13));
}

TEST_CASE("stationary distribution") {
  Matrix xi(2, 2);
  xi << 0.9, 0.1, 0.3, 0.7;
  const Vector pi = stationary_distribution(xi);
  CHECK(pi(0) == doctest::Approx(0.75).epsilon(1e-13));
  CHECK(pi(1) == doctest::Approx(0.25).epsilon(1e-13));

  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Matrix x3(3, 3);
  for (Eigen::Index k = 0; k < 3; ++k) {
    for (Eigen::Index l = 0; l < 3; ++l) x3(k, l) = u(gen);
    x3.row(k) /= x3.row(k).sum();
  }
  const auto ref = oracle::stationary_power(fixture::to_mat(x3));
  const Vector got = stationary_distribution(x3);
  for (int k = 0; k < 3; ++k) CHECK(got(k) == doctest::Approx(ref[static_cast<std::size_t>(k)]).epsilon(1e-10));

  // reducible chain: not unique, falls back to uniform
  CHECK(stationary_distribution(Matrix::Identity(3, 3)).isApproxToConstant(1.0 / 3));
}

TEST_CASE("complete_loglik with one state has no transition term") {
  const PanelData d = fixture::random_panel(5, 4, 2, 9);
  ChainState st = fixture::random_state(5, 4, 2, 1, 10);
  double obs = 0.0;
  const WeightMatrix w = row_normalize(st.omegas[0]);
  for (std::size_t t = 0; t < 5; ++t) obs += obs_loglik(d.response(t), d.z[t], st.beta, st.sigma2, st.rhos[0], w);
  CHECK(st.xi(0, 0) == doctest::Approx(1.0));
  CHECK(complete_loglik(d, st) == doctest::Approx(obs).epsilon(1e-14));
}

TEST_CASE("complete_loglik on a two-period toy instance") {
  const PanelData d = fixture::random_panel(2, 3, 1, 31);
  ChainState st = fixture::random_state(2, 3, 1, 2, 32);
  st.s = {1, 0};
  st.xi << 0.8, 0.2, 0.4, 0.6;
  double by_hand = 0.0;
  for (std::size_t t = 0; t < 2; ++t) {
    const auto k = static_cast<std::size_t>(st.s[t]);
    by_hand += std::log(oracle::reduced_form_density(fixture::to_vec(d.response(t)), fixture::to_mat(d.z[t]),
                                                     fixture::to_vec(st.beta), st.sigma2, st.rhos[k],
                                                     fixture::to_mat(row_normalize(st.omegas[k]).matrix())));
  }
  by_hand += std::log(0.4);         // 1 -> 0
  by_hand += std::log(0.2 / 0.6);   // stationary mass of state 1
  CHECK(complete_loglik(d, st) == doctest::Approx(by_hand).epsilon(1e-11));
}

TEST_CASE("repeating the panel doubles the observation terms") {
  const PanelData d = fixture::random_panel(4, 5, 2, 41);
  ChainState st = fixture::random_state(4, 5, 2, 2, 42);
  st.xi = Matrix::Constant(2, 2, 0.5);  // transition terms are then a fixed count times log 0.5
  PanelData dd = d;
  dd.y.resize(8, 5);
  dd.y << d.y, d.y;
  dd.z.insert(dd.z.end(), d.z.begin(), d.z.end());
  ChainState st2 = st;
  st2.s.insert(st2.s.end(), st.s.begin(), st.s.end());
  const double obs1 = complete_loglik(d, st) - 3 * std::log(0.5) - std::log(0.5);
  const double obs2 = complete_loglik(dd, st2) - 7 * std::log(0.5) - std::log(0.5);
  CHECK(obs2 == doctest::Approx(2 * obs1).epsilon(1e-13));
}

TEST_CASE("complete_loglik is invariant to relabelling") {
  const PanelData d = fixture::random_panel(12, 5, 2, 51);
  const ChainState st = fixture::random_state(12, 5, 2, 3, 52);
  const std::vector<int> perm = {2, 0, 1};  // old label k becomes perm[k]
  ChainState p = st;
  for (std::size_t k = 0; k < 3; ++k) {
    p.omegas[perm[k]] = st.omegas[k];
    p.rhos[perm[k]] = st.rhos[k];
    p.q[perm[k]] = st.q[k];
    for (std::size_t l = 0; l < 3; ++l) p.xi(perm[k], perm[l]) = st.xi(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
  }
  for (auto& s : p.s) s = perm[static_cast<std::size_t>(s)];
  CHECK(complete_loglik(d, p) == doctest::Approx(complete_loglik(d, st)).epsilon(1e-12));
}

TEST_CASE("an impossible transition gives minus infinity") {
  const PanelData d = fixture::random_panel(3, 3, 1, 61);
  ChainState st = fixture::random_state(3, 3, 1, 2, 62);
  st.xi << 1.0, 0.0, 0.5, 0.5;
  st.s = {0, 1, 1};
  CHECK(complete_loglik(d, st) == kLogZero);
}

TEST_CASE("transition counts") {
  const Eigen::MatrixXi c = transition_counts({0, 0, 1, 1, 1, 0}, 2);
  CHECK(c(0, 0) == 1);
  CHECK(c(0, 1) == 1);
  CHECK(c(1, 1) == 2);
  CHECK(c(1, 0) == 1);
}

TEST_CASE("panel validation") {
  PanelData d = fixture::random_panel(4, 3, 2, 71);
  CHECK_NOTHROW(d.validate());
  d.y(1, 1) = std::nan("");
  CHECK_THROWS_AS(d.validate(), DataError);
  d = fixture::random_panel(4, 3, 2, 71);
  for (auto& z : d.z) z.col(1) = z.col(0);  // collinear covariates
  CHECK_THROWS_AS(d.validate(), DataError);
}

TEST_CASE("hyperparameter validation") {
  Hyperparams h = Hyperparams::defaults(2, 3);
  CHECK(h.mu_beta.isZero());
  CHECK(h.Sigma_beta.isApprox(100.0 * Matrix::Identity(3, 3)));
  CHECK_NOTHROW(h.validate());
  h.a_rho = 0.0;
  CHECK_THROWS(h.validate());
  h = Hyperparams::defaults(2, 3);
  h.grid_size = 1;
  CHECK_THROWS(h.validate());
  h = Hyperparams::defaults(2, 2);
  h.Sigma_beta << 1, 2, 2, 1;
  CHECK_THROWS(h.validate());
}
