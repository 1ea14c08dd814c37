#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>

namespace mssar {

// Seeded 64-bit Mersenne twister with the handful of draws the sampler
// needs. Copyable; a copy continues the same stream independently.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  bool bernoulli(double p) { return uniform() < p; }

  // Gamma with unit scale.
  double gamma(double shape);
  // log of a unit-scale Gamma draw; stays finite for very small shapes.
  double log_gamma_draw(double shape);
  double beta(double a, double b);
  // Inverse-Gamma with the given shape and rate (mean rate/(shape-1)).
  double inv_gamma(double shape, double rate);
  Eigen::VectorXd dirichlet(const Eigen::VectorXd& alpha);

  // Index drawn with probability proportional to exp(log_weights).
  std::size_t categorical_log(std::span<const double> log_weights);
  std::size_t categorical(std::span<const double> probs);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// log(sum(exp(v))) with the max shifted out.
double log_sum_exp(std::span<const double> v);

}  // namespace mssar
