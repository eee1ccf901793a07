#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "car/inference.hpp"
#include "car/simulation.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace {

// E f(U) for U ~ Uniform(a, b) by composite Simpson.
template <class F>
double uniform_expect(F f, double a, double b, int intervals = 4000) {
  const double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0 / (b - a);
}

// Limiting variances of the benchmark model from quadrature and normal moments.
std::vector<double> quadrature_oracle(const car::GenerativeModel& model) {
  const auto& d = model.distortions;
  const auto law = std::get<car::UniformLaw>(d.u_law);
  const std::size_t p = model.p();
  const double e_psi = uniform_expect(d.psi, law.a, law.b);
  const double e_psi2 = uniform_expect([&](double u) { return d.psi(u) * d.psi(u); }, law.a, law.b);
  const double var_psi = e_psi2 - e_psi * e_psi;

  oracle::Dense design(p + 1, std::vector<double>(p + 1, 0.0));
  design[0][0] = 1.0;
  for (std::size_t r = 0; r < p; ++r) {
    const auto& x = model.predictors[r];
    design[0][r + 1] = design[r + 1][0] = x.mean;
    for (std::size_t k = 0; k < p; ++k)
      design[r + 1][k + 1] = x.mean * model.predictors[k].mean + (r == k ? x.sd * x.sd : 0.0);
  }
  const auto inv = oracle::cofactor_inverse(design);
  const double s2 = model.noise_variance();

  std::vector<double> out(p + 1);
  out[0] = model.gamma[0] * model.gamma[0] * var_psi + s2 * inv[0][0] * e_psi2;
  for (std::size_t r = 0; r < p; ++r) {
    const double g = model.gamma[r + 1];
    const double ex = model.predictors[r].mean;
    const double vx = model.predictors[r].sd * model.predictors[r].sd;
    const double ex2 = vx + ex * ex;
    const auto& phi = d.phi[r];
    const double e_phi = uniform_expect(phi, law.a, law.b);
    const double e_phi2 = uniform_expect([&](double u) { return phi(u) * phi(u); }, law.a, law.b);
    const double e_psiphi = uniform_expect([&](double u) { return d.psi(u) * phi(u); }, law.a, law.b);
    const double var_xt = e_phi2 * ex2 - std::pow(e_phi * ex, 2);
    const double s11 = g * g * (ex * ex * var_psi + vx * e_psi2) + s2 * ex * ex * e_psi2 * inv[r + 1][r + 1];
    const double s12 = g * (e_psiphi * ex2 - ex * ex);
    const double a = 1.0 / ex, b = -g / ex;
    out[r + 1] = a * a * s11 + 2 * a * b * s12 + b * b * var_xt;
  }
  return out;
}

}  // namespace

TEST_CASE("generated benchmark data has the stated laws") {
  const auto model = car::paper_model();
  const auto s = car::generate(model, 100000, 17, 0);
  const auto& x = s.latent.x;
  double mx1 = 0, mpsi = 0;
  for (std::size_t i = 0; i < 100000; ++i) {
    mx1 += x(i, 0);
    mpsi += model.distortions.psi(s.observed.u[i]);
  }
  mx1 /= 100000;
  mpsi /= 100000;
  CHECK(std::abs(mx1 - 1.5) < 0.02);
  CHECK(std::abs(mpsi - 1.0) < 0.005);

  std::vector<double> a, b;
  for (std::size_t i = 0; i < 100000; ++i) {
    a.push_back(s.observed.x_tilde(i, 0));
    b.push_back(x(i, 0));
    CHECK(s.observed.x_tilde(i, 0) == model.distortions.phi[0](s.observed.u[i]) * x(i, 0));
  }
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / b.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  const double corr = sab / std::sqrt(saa * sbb);
  CHECK(corr > 0.0);
  CHECK(corr < 1.0);
}

TEST_CASE("noiseless identity model is exactly linear") {
  const auto s = car::generate(car::undistorted_paper_model(0.0), 200, 3, 0);
  const auto ols = car::guarded_ols(fixture::with_intercept(s.observed.x_tilde), s.observed.y_tilde);
  for (std::size_t j = 0; j < 4; ++j)
    CHECK(std::abs(ols.coefficients[j] - fixture::kTrueGamma[j]) < 1e-9);
}

TEST_CASE("generation is a function of seed and stream") {
  const auto model = car::paper_model();
  const auto a = car::generate(model, 50, 1, 4);
  const auto b = car::generate(model, 50, 1, 4);
  const auto c = car::generate(model, 50, 1, 5);
  CHECK(a.observed.y_tilde == b.observed.y_tilde);
  CHECK(a.observed.u == b.observed.u);
  CHECK(a.observed.y_tilde != c.observed.y_tilde);
}

TEST_CASE("a single replicate covers or does not") {
  car::SimulationConfig cfg{.n = 400, .replicates = 1, .m = 25, .level = 0.95, .seed = 8};
  const auto rep = car::run_monte_carlo(car::paper_model(), cfg);
  for (const auto& c : rep.coefficients)
    CHECK((c.coverage_fraction == 0.0 || c.coverage_fraction == 1.0));
}

TEST_CASE("vanishing level gives vanishing coverage") {
  car::SimulationConfig cfg{.n = 400, .replicates = 200, .m = 25, .level = 1e-9, .seed = 8};
  const auto rep = car::run_monte_carlo(car::paper_model(), cfg);
  for (const auto& c : rep.coefficients) CHECK(c.coverage_fraction < 0.01);
}

TEST_CASE("serial and parallel Monte Carlo are bit-identical") {
  car::SimulationConfig cfg{.n = 400, .replicates = 100, .m = 25, .level = 0.95, .seed = 123};
  const auto model = car::paper_model();
  const auto a = car::run_monte_carlo(model, cfg, car::Execution::Serial);
  const auto b = car::run_monte_carlo(model, cfg, car::Execution::Parallel);
  const auto c = car::run_monte_carlo(model, cfg, car::Execution::Parallel);
  for (std::size_t r = 0; r < 4; ++r) {
    CHECK(a.coefficients[r].coverage_fraction == b.coefficients[r].coverage_fraction);
    CHECK(a.coefficients[r].mean_ci_length == b.coefficients[r].mean_ci_length);
    CHECK(a.coefficients[r].mean_estimate == b.coefficients[r].mean_estimate);
    CHECK(a.coefficients[r].mean_sigma_sq == b.coefficients[r].mean_sigma_sq);
    CHECK(b.coefficients[r].scaled_variance == c.coefficients[r].scaled_variance);
  }
}

TEST_CASE("invalid simulation settings") {
  const auto model = car::paper_model();
  car::SimulationConfig cfg{.n = 400, .replicates = 10, .m = 25, .level = 1.5, .seed = 1};
  CHECK_THROWS_AS(car::run_monte_carlo(model, cfg), car::CarError);
  cfg.level = 0.95;
  cfg.m = 500;
  CHECK_THROWS_AS(car::run_monte_carlo(model, cfg), car::CarError);
}

TEST_CASE("oracle matches quadrature on the benchmark model") {
  const auto model = car::paper_model();
  const auto mc = car::theoretical_variance(model, 1000000, 11);
  const auto ref = quadrature_oracle(model);
  for (std::size_t r = 0; r < 4; ++r) {
    MESSAGE("r=" << r << " mc=" << mc.sigma_sq_true[r] << " quadrature=" << ref[r]);
    CHECK(mc.sigma_sq_true[r] == doctest::Approx(ref[r]).epsilon(0.02));
  }
  const auto exact = car::theoretical_variance_exact(model);
  for (std::size_t r = 0; r < 4; ++r)
    CHECK(exact.sigma_sq_true[r] == doctest::Approx(ref[r]).epsilon(1e-9));
  CHECK(ref[0] == doctest::Approx(1.0396).epsilon(1e-3));
  CHECK(ref[1] == doctest::Approx(0.28228).epsilon(1e-3));
  CHECK(ref[2] == doctest::Approx(0.065695).epsilon(1e-3));
  CHECK(ref[3] == doctest::Approx(2.0516).epsilon(1e-3));
}

TEST_CASE("identity distortions reduce the intercept variance to the noise term") {
  const auto model = car::undistorted_paper_model(0.3);
  const auto t = car::theoretical_variance(model, 200000, 2);
  CHECK(t.moments.psi_var == 0.0);
  CHECK(t.moments.psi_sq_mean == 1.0);
  CHECK(t.sigma_sq_true[0] ==
        doctest::Approx(model.noise_variance() * t.moments.design_inverse(0, 0)).epsilon(1e-12));
}

TEST_CASE("exact oracle over an empirical confounder law") {
  auto model = car::paper_model();
  model.distortions.u_law = car::EmpiricalLaw{{2.0, 3.0, 5.5, 6.0}};
  const auto t = car::theoretical_variance_exact(model);
  double psi = 0;
  for (double u : {2.0, 3.0, 5.5, 6.0}) psi += model.distortions.psi(u) / 4;
  CHECK(t.moments.psi_mean == doctest::Approx(psi).epsilon(1e-15));
  CHECK(t.moments.design(1, 1) == doctest::Approx(1.5 * 1.5 + 0.7 * 0.7));
}

TEST_CASE("oracle sample floor") {
  CHECK_THROWS_AS(car::theoretical_variance(car::paper_model(), 1000, 1), car::CarError);
}

TEST_CASE("zero coefficients leave only the noise term") {
  auto model = car::undistorted_paper_model(0.5);
  model.gamma = {0.0, 0.0, 0.0, 0.0};
  const auto t = car::theoretical_variance(model, 200000, 2);
  for (std::size_t r = 0; r <= 3; ++r)
    CHECK(t.sigma_sq_true[r] ==
          doctest::Approx(model.noise_variance() * t.moments.design_inverse(r, r)).epsilon(1e-12));
}

TEST_CASE("noiseless identity model standardises to zero") {
  const auto model = car::undistorted_paper_model(0.0);
  car::SimulationConfig cfg{.n = 400, .replicates = 500, .m = 10, .level = 0.95, .seed = 1};
  const auto oracle = car::theoretical_variance(model, 100000, 1);
  const auto rep = car::normality_check(model, cfg, oracle);
  CHECK(rep.failures == 0);
  CHECK(rep.max_abs_standardized < 1e-6);
}

TEST_CASE("bin count table") {
  CHECK(car::reference_bin_count(100) == 20);
  CHECK(car::reference_bin_count(400) == 25);
  CHECK(car::reference_bin_count(1600) == 50);
  CHECK(car::reference_bin_count(800) == 0);
}
