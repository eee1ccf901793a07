#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "car/estimator.hpp"
#include "car/inference.hpp"
#include "car/simulation.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace {

car::ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const car::CarError& e) {
    return e.code();
  }
  FAIL("no exception");
  return car::ErrorCode::InvalidInput;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("single bin collapses to global OLS") {
  const auto data = fixture::random_dataset(60, 3, 1);
  const auto fit = car::fit_car(data, {.m = 1});
  const auto ols =
      car::guarded_ols(fixture::with_intercept(data.x_tilde), data.y_tilde);
  REQUIRE(fit.bin_fits.size() == 1);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(std::abs(fit.bin_fits[0].beta[j] - ols.coefficients[j]) < 1e-12);
    CHECK(std::abs(fit.gamma_hat[j] - ols.coefficients[j]) < 1e-10);
  }
  CHECK(fit.n_fitted == 60);
}

TEST_CASE("noiseless undistorted data is recovered for any partition") {
  const auto data = fixture::exact_dataset(400, 3);
  for (std::size_t m : {1, 5, 20, 50}) {
    const auto fit = car::fit_car(data, {.m = m});
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(std::abs(fit.gamma_hat[j] - fixture::kTrueGamma[j]) < 1e-8);
  }
}

TEST_CASE("per-bin betas match a normal-equations oracle") {
  const auto data = fixture::random_dataset(30, 2, 42);
  const auto part = car::make_bins(data.u, 3);
  const auto set = car::fit_bins(data, part);
  REQUIRE(set.fits.size() == 3);
  for (const auto& bf : set.fits) {
    oracle::Dense x;
    std::vector<double> y;
    for (std::size_t i = 0; i < data.n(); ++i) {
      if (part.assignments[i] != bf.bin_index) continue;
      x.push_back({1.0, data.x_tilde(i, 0), data.x_tilde(i, 1)});
      y.push_back(data.y_tilde[i]);
    }
    REQUIRE(x.size() == bf.count);
    const auto ref = oracle::normal_equations(x, y);
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(bf.beta[j] - ref[j]) < 1e-9);
    for (std::size_t r = 0; r < 2; ++r) {
      double s = 0, sq = 0;
      for (const auto& row : x) {
        s += row[r + 1];
        sq += row[r + 1] * row[r + 1];
      }
      CHECK(bf.x_bar_bin[r] == doctest::Approx(s / x.size()));
      CHECK(bf.sum_x_sq_bin[r] == doctest::Approx(sq));
    }
  }
}

TEST_CASE("gamma is the count-weighted average of the bin estimates") {
  const auto data = fixture::random_dataset(200, 2, 9);
  const auto fit = car::fit_car(data, {.m = 8});
  std::vector<double> xbar(2, 0.0);
  for (std::size_t i = 0; i < data.n(); ++i)
    for (std::size_t r = 0; r < 2; ++r) xbar[r] += data.x_tilde(i, r) / data.n();
  double g0 = 0;
  std::vector<double> gr(2, 0.0);
  for (const auto& bf : fit.bin_fits) {
    const double w = static_cast<double>(bf.count) / fit.n_fitted;
    g0 += w * bf.beta[0];
    for (std::size_t r = 0; r < 2; ++r) gr[r] += w * bf.beta[r + 1] * bf.x_bar_bin[r] / xbar[r];
  }
  CHECK(fit.gamma_hat[0] == doctest::Approx(g0).epsilon(1e-12));
  CHECK(fit.gamma_hat[1] == doctest::Approx(gr[0]).epsilon(1e-12));
  CHECK(fit.gamma_hat[2] == doctest::Approx(gr[1]).epsilon(1e-12));
}

TEST_CASE("benchmark model at n=1600 lands within four standard errors") {
  const auto sample = car::generate(car::paper_model(), 1600, 20061, 0);
  const auto fit = car::fit_car(sample.observed, {.m = 50, .min_bin_size = 5});
  const auto var = car::estimate_variances(fit);
  const auto ci = car::car_intervals(fit, var, 0.95);
  for (std::size_t r = 0; r < 4; ++r) {
    REQUIRE(ci[r].std_error > 0.0);
    CHECK(std::abs(fit.gamma_hat[r] - fixture::kTrueGamma[r]) < 4.0 * ci[r].std_error);
  }
}

TEST_CASE("permuting observations leaves the fit unchanged") {
  const auto data = fixture::random_dataset(150, 3, 77);
  std::vector<std::size_t> perm(150);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(3);
  std::shuffle(perm.begin(), perm.end(), rng);
  car::Dataset shuffled;
  shuffled.x_tilde = car::Matrix(150, 3);
  for (std::size_t k = 0; k < 150; ++k) {
    shuffled.u.push_back(data.u[perm[k]]);
    shuffled.y_tilde.push_back(data.y_tilde[perm[k]]);
    for (std::size_t r = 0; r < 3; ++r) shuffled.x_tilde(k, r) = data.x_tilde(perm[k], r);
  }
  const auto a = car::fit_car(data, {.m = 6});
  const auto b = car::fit_car(shuffled, {.m = 6});
  for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(a.gamma_hat[j] - b.gamma_hat[j]) < 1e-9);
}

TEST_CASE("serial and parallel bin fits agree exactly") {
  const auto data = fixture::random_dataset(3000, 3, 12);
  const auto a = car::fit_car(data, {.m = 40, .exec = car::Execution::Serial});
  const auto b = car::fit_car(data, {.m = 40, .exec = car::Execution::Parallel});
  CHECK(a.gamma_hat == b.gamma_hat);
}

TEST_CASE("singular bins are skipped and weights renormalise") {
  auto data = fixture::random_dataset(40, 1, 5);
  // make the first half-range bin collinear: x constant there
  for (std::size_t i = 0; i < data.n(); ++i)
    if (data.u[i] < 0.5) data.x_tilde(i, 0) = 2.0;
  const auto part = car::make_bins(data.u, 2);
  const auto set = car::fit_bins(data, part);
  REQUIRE(set.skipped.size() == 1);
  CHECK(set.skipped[0].bin_index == 0);
  CHECK(set.skipped[0].reason == car::ErrorCode::SingularBin);
  const auto fit = car::estimate_gamma(set, data);
  CHECK(fit.n_fitted == part.counts[1]);
  CHECK(fit.gamma_hat[0] == doctest::Approx(set.fits[0].beta[0]));
}

TEST_CASE("all bins singular is an error") {
  auto data = fixture::random_dataset(20, 1, 5);
  for (std::size_t i = 0; i < data.n(); ++i) data.x_tilde(i, 0) = 1.0;
  CHECK(code_of([&] { car::fit_car(data, {.m = 2}); }) == car::ErrorCode::NoUsableBins);
}

TEST_CASE("near-zero predictor mean is rejected") {
  car::Dataset d;
  d.x_tilde = car::Matrix(6, 1);
  const double xs[] = {-1, 1, -2, 2, -0.5, 0.5};
  for (int i = 0; i < 6; ++i) {
    d.u.push_back(i);
    d.x_tilde(i, 0) = xs[i];
    d.y_tilde.push_back(1.0 + xs[i] + 0.1 * i);
  }
  CHECK(code_of([&] { car::fit_car(d, {.m = 1}); }) == car::ErrorCode::MeanNearZero);
}

TEST_CASE("raw coefficient export") {
  const auto data = fixture::exact_dataset(300, 4);
  const auto single = car::fit_car(data, {.m = 1});
  const auto rows1 = car::export_raw_coefficients(single, 0);
  REQUIRE(rows1.size() == 1);
  const double lo = *std::min_element(data.u.begin(), data.u.end());
  const double hi = *std::max_element(data.u.begin(), data.u.end());
  CHECK(rows1[0].midpoint == doctest::Approx(0.5 * (lo + hi)));
  CHECK(rows1[0].count == 300);

  const auto fit = car::fit_car(data, {.m = 10});
  const auto rows = car::export_raw_coefficients(fit, 1);
  REQUIRE(rows.size() == fit.bin_fits.size());
  for (const auto& row : rows) CHECK(std::abs(row.beta + 1.0) < 1e-8);
  CHECK(code_of([&] { car::export_raw_coefficients(fit, 4); }) == car::ErrorCode::IndexOutOfRange);
}

TEST_CASE("intercept curve follows psi at the bin midpoints") {
  const auto model = car::paper_model();
  const auto sample = car::generate(model, 1600, 555, 0);
  const auto fit = car::fit_car(sample.observed, {.m = 50, .min_bin_size = 5});
  const auto rows = car::export_raw_coefficients(fit, 0);
  std::vector<double> beta, psi;
  for (const auto& row : rows) {
    beta.push_back(row.beta);
    psi.push_back(model.distortions.psi(row.midpoint));
  }
  CHECK(correlation(beta, psi) > 0.9);
}

TEST_CASE("estimation error shrinks like n^-1/2") {
  const auto model = car::paper_model();
  std::vector<double> log_n, log_rmse;
  for (std::size_t n : {400, 1600, 6400}) {
    const std::size_t m = static_cast<std::size_t>(std::lround(2.0 * std::sqrt(n) / 2.0));
    double sq = 0;
    const int reps = 200;
    for (int k = 0; k < reps; ++k) {
      const auto s = car::generate(model, n, 99, k);
      const auto fit = car::fit_car(s.observed, {.m = m, .min_bin_size = 5});
      sq += std::pow(fit.gamma_hat[0] - 4.0, 2);
    }
    log_n.push_back(std::log(static_cast<double>(n)));
    log_rmse.push_back(0.5 * std::log(sq / reps));
  }
  const double slope = (log_rmse[2] - log_rmse[0]) / (log_n[2] - log_n[0]);
  CHECK(slope == doctest::Approx(-0.5).epsilon(0.3));
}

TEST_CASE("bin below p+1 rows is rejected up front") {
  auto data = fixture::random_dataset(10, 3, 1);
  for (std::size_t i = 0; i < 10; ++i) data.u[i] = static_cast<double>(i);
  const auto part = car::make_bins(data.u, 4);
  REQUIRE(part.counts[0] == 3);
  CHECK(code_of([&] { car::fit_bins(data, part); }) == car::ErrorCode::InsufficientData);
}
