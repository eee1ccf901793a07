#pragma once

#include <random>
#include <vector>

#include "car/estimator.hpp"
#include "car/linalg.hpp"

namespace fixture {

inline car::Matrix with_intercept(const car::Matrix& x) {
  car::Matrix d(x.rows(), x.cols() + 1);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    d(i, 0) = 1.0;
    for (std::size_t j = 0; j < x.cols(); ++j) d(i, j + 1) = x(i, j);
  }
  return d;
}

/// Random dataset with positive-mean predictors and Gaussian noise.
inline car::Dataset random_dataset(std::size_t n, std::size_t p, std::uint64_t seed,
                                   double noise = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u_law(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  car::Dataset d;
  d.u.resize(n);
  d.x_tilde = car::Matrix(n, p);
  d.y_tilde.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.u[i] = u_law(rng);
    double y = 0.5;
    for (std::size_t j = 0; j < p; ++j) {
      d.x_tilde(i, j) = 1.0 + j + z(rng);
      y += (j % 2 == 0 ? 1.5 : -0.7) * d.x_tilde(i, j);
    }
    d.y_tilde[i] = y + noise * z(rng);
  }
  return d;
}

/// Noiseless, undistorted y = 4 - x1 + 0.3 x2 + 3 x3.
inline car::Dataset exact_dataset(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u_law(2.0, 6.0);
  std::normal_distribution<double> x1(1.5, 0.7), x2(1.0, 1.2), x3(0.5, 1.0);
  car::Dataset d;
  d.u.resize(n);
  d.x_tilde = car::Matrix(n, 3);
  d.y_tilde.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.u[i] = u_law(rng);
    d.x_tilde(i, 0) = x1(rng);
    d.x_tilde(i, 1) = x2(rng);
    d.x_tilde(i, 2) = x3(rng);
    d.y_tilde[i] = 4.0 - d.x_tilde(i, 0) + 0.3 * d.x_tilde(i, 1) + 3.0 * d.x_tilde(i, 2);
  }
  return d;
}

inline const std::vector<double> kTrueGamma{4.0, -1.0, 0.3, 3.0};

}  // namespace fixture
