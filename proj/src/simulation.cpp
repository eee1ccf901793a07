#include "car/simulation.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "car/inference.hpp"

namespace car {

void GenerativeModel::validate() const {
  if (predictors.empty()) throw CarError(ErrorCode::ConfigError, "model needs at least one predictor");
  if (gamma.size() != predictors.size() + 1)
    throw CarError(ErrorCode::ConfigError, "model needs p+1 coefficients");
  if (distortions.p() != predictors.size() || !distortions.psi)
    throw CarError(ErrorCode::ConfigError, "distortions do not match the number of predictors");
  if (!(noise_sd >= 0.0)) throw CarError(ErrorCode::ConfigError, "noise sd must be >= 0");
  for (const auto& law : predictors)
    if (!(law.sd > 0.0) || !std::isfinite(law.mean))
      throw CarError(ErrorCode::ConfigError, "predictor laws need finite mean and sd > 0");
  for (double g : gamma)
    if (!std::isfinite(g)) throw CarError(ErrorCode::ConfigError, "non-finite coefficient");
}

GenerativeModel paper_model() {
  GenerativeModel m;
  m.gamma = {4.0, -1.0, 0.3, 3.0};
  m.predictors = {{1.5, 0.7}, {1.0, 1.2}, {0.5, 1.0}};
  m.noise_sd = 0.3;
  m.distortions = paper_distortions();
  return m;
}

GenerativeModel undistorted_paper_model(double noise_sd) {
  GenerativeModel m = paper_model();
  m.noise_sd = noise_sd;
  m.distortions = identity_distortions(3);
  return m;
}

GeneratedSample generate(const GenerativeModel& model, std::size_t n, std::uint64_t seed,
                         std::uint64_t stream) {
  model.validate();
  const std::size_t p = model.p();
  if (n < p + 2) throw CarError(ErrorCode::InsufficientData, "generate needs n >= p+2");

  Rng rng = make_stream(seed, stream);
  std::normal_distribution<double> z(0.0, 1.0);

  GeneratedSample s;
  s.observed.u.resize(n);
  s.observed.x_tilde = Matrix(n, p);
  s.observed.y_tilde.resize(n);
  s.latent.x = Matrix(n, p);
  s.latent.y.resize(n);
  s.latent.e.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = draw(model.distortions.u_law, rng);
    double y = model.gamma[0];
    for (std::size_t r = 0; r < p; ++r) {
      const double x = model.predictors[r].mean + model.predictors[r].sd * z(rng);
      s.latent.x(i, r) = x;
      s.observed.x_tilde(i, r) = model.distortions.phi[r](u) * x;
      y += model.gamma[r + 1] * x;
    }
    const double e = model.noise_sd * z(rng);
    y += e;
    s.observed.u[i] = u;
    s.observed.y_tilde[i] = model.distortions.psi(u) * y;
    s.latent.y[i] = y;
    s.latent.e[i] = e;
  }
  return s;
}

std::size_t reference_bin_count(std::size_t n) noexcept {
  switch (n) {
    case 100: return 20;
    case 400: return 25;
    case 1600: return 50;
    default: return 0;
  }
}

namespace {

void check_config(const GenerativeModel& model, const SimulationConfig& config) {
  model.validate();
  if (config.replicates < 1) throw CarError(ErrorCode::ConfigError, "replicates must be >= 1");
  if (config.m < 1) throw CarError(ErrorCode::ConfigError, "simulation needs an explicit m >= 1");
  if (config.n < model.p() + 2) throw CarError(ErrorCode::ConfigError, "n must be >= p+2");
  if (config.m > config.n) throw CarError(ErrorCode::ConfigError, "m must not exceed n");
  if (!(config.level > 0.0 && config.level < 1.0))
    throw CarError(ErrorCode::InvalidLevel, "confidence level must lie in (0, 1)");
}

std::size_t effective_min_bin_size(const GenerativeModel& model, const SimulationConfig& config) {
  return config.min_bin_size == 0 ? model.p() + 2 : config.min_bin_size;
}

ReplicateOutcome run_replicate(const GenerativeModel& model, const SimulationConfig& config,
                               std::size_t k) {
  ReplicateOutcome out;
  try {
    const GeneratedSample s = generate(model, config.n, config.seed, k);
    FitOptions opts;
    opts.m = config.m;
    opts.min_bin_size = effective_min_bin_size(model, config);
    opts.det_threshold = config.det_threshold;
    const CarFit fit = fit_car(s.observed, opts);
    const VarianceEstimates var = estimate_variances(fit);
    out.gamma_hat = fit.gamma_hat;
    out.sigma_sq = var.sigma_sq;
    out.n_fitted = fit.n_fitted;
    out.bins = fit.bin_fits.size();
    out.ok = true;
  } catch (const CarError& e) {
    out.ok = false;
    out.failure = e.code();
  }
  return out;
}

}  // namespace

std::vector<ReplicateOutcome> simulate_replicates(const GenerativeModel& model,
                                                  const SimulationConfig& config, Execution exec) {
  check_config(model, config);
  const std::size_t reps = config.replicates;
  std::vector<ReplicateOutcome> outcomes(reps);
  if (exec == Execution::Parallel) {
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(reps); ++k) {
      try {
        outcomes[k] = run_replicate(model, config, static_cast<std::size_t>(k));
      } catch (...) {
#pragma omp critical(car_replicate_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
  } else {
    for (std::size_t k = 0; k < reps; ++k) outcomes[k] = run_replicate(model, config, k);
  }
  return outcomes;
}

SimulationReport summarize(const std::vector<ReplicateOutcome>& outcomes,
                           const GenerativeModel& model, const SimulationConfig& config,
                           double level) {
  const std::size_t p = model.p();
  if (!(level > 0.0 && level < 1.0))
    throw CarError(ErrorCode::InvalidLevel, "confidence level must lie in (0, 1)");

  SimulationReport rep;
  rep.n = config.n;
  rep.replicates = outcomes.size();
  rep.m_used = config.m;
  rep.min_bin_size = effective_min_bin_size(model, config);
  rep.level = level;
  rep.seed = config.seed;
  rep.coefficients.assign(p + 1, CoefficientSummary{});

  std::vector<double> covered(p + 1, 0.0), length(p + 1, 0.0), sum(p + 1, 0.0), sum_sq(p + 1, 0.0),
      sig(p + 1, 0.0);
  std::size_t ok = 0;
  double bins = 0.0, points = 0.0;
  // Sequential reduction in replicate order keeps results independent of threading.
  for (const auto& o : outcomes) {
    if (!o.ok) {
      ++rep.failures;
      ++rep.failure_reasons[std::string(error_code_name(o.failure))];
      continue;
    }
    ++ok;
    bins += static_cast<double>(o.bins);
    points += static_cast<double>(o.n_fitted) / static_cast<double>(o.bins);
    for (std::size_t r = 0; r <= p; ++r) {
      const ConfidenceInterval ci = confidence_interval(o.gamma_hat[r], o.sigma_sq[r], o.n_fitted, level);
      const double est = o.gamma_hat[r];
      if (ci.lower <= model.gamma[r] && model.gamma[r] <= ci.upper) covered[r] += 1.0;
      length[r] += ci.upper - ci.lower;
      sum[r] += est;
      sum_sq[r] += est * est;
      sig[r] += o.sigma_sq[r];
    }
  }
  if (ok == 0) return rep;
  const double k = static_cast<double>(ok);
  rep.mean_bins = bins / k;
  rep.mean_points_per_bin = points / k;
  for (std::size_t r = 0; r <= p; ++r) {
    auto& c = rep.coefficients[r];
    c.coverage_fraction = covered[r] / k;
    c.mean_ci_length = length[r] / k;
    c.mean_estimate = sum[r] / k;
    c.mean_sigma_sq = sig[r] / k;
    if (ok > 1) {
      const double var = std::max(0.0, (sum_sq[r] - k * c.mean_estimate * c.mean_estimate) / (k - 1.0));
      c.sd_estimate = std::sqrt(var);
      c.scaled_variance = static_cast<double>(config.n) * var;
    }
  }
  return rep;
}

SimulationReport run_monte_carlo(const GenerativeModel& model, const SimulationConfig& config,
                                 Execution exec) {
  return summarize(simulate_replicates(model, config, exec), model, config, config.level);
}

namespace {

MomentEstimates monte_carlo_moments(const GenerativeModel& model, std::size_t oracle_samples,
                                    std::uint64_t seed) {
  if (oracle_samples < 100000)
    throw CarError(ErrorCode::ConfigError, "oracle needs at least 1e5 samples");
  const std::size_t p = model.p();
  const auto& dist = model.distortions;

  Rng rng = make_stream(seed, 0);
  std::normal_distribution<double> z(0.0, 1.0);

  Matrix second(p + 1, p + 1);  // running sums of (1, X)(1, X)^T
  double psi_sum = 0.0, psi_sq_sum = 0.0;
  std::vector<double> psi_phi_sum(p, 0.0), xt_sum(p, 0.0), xt_sq_sum(p, 0.0);
  std::vector<double> x(p + 1, 1.0);
  for (std::size_t s = 0; s < oracle_samples; ++s) {
    const double u = draw(dist.u_law, rng);
    for (std::size_t r = 0; r < p; ++r)
      x[r + 1] = model.predictors[r].mean + model.predictors[r].sd * z(rng);
    for (std::size_t i = 0; i <= p; ++i)
      for (std::size_t j = i; j <= p; ++j) second(i, j) += x[i] * x[j];
    const double psi = dist.psi(u);
    psi_sum += psi;
    psi_sq_sum += psi * psi;
    for (std::size_t r = 0; r < p; ++r) {
      const double phi = dist.phi[r](u);
      psi_phi_sum[r] += psi * phi;
      const double xt = phi * x[r + 1];
      xt_sum[r] += xt;
      xt_sq_sum[r] += xt * xt;
    }
  }
  const double ns = static_cast<double>(oracle_samples);

  MomentEstimates mom;
  mom.design = Matrix(p + 1, p + 1);
  for (std::size_t i = 0; i <= p; ++i)
    for (std::size_t j = i; j <= p; ++j) {
      mom.design(i, j) = second(i, j) / ns;
      mom.design(j, i) = mom.design(i, j);
    }
  mom.design(0, 0) = 1.0;
  mom.psi_mean = psi_sum / ns;
  mom.psi_sq_mean = psi_sq_sum / ns;
  mom.psi_var = std::max(0.0, mom.psi_sq_mean - mom.psi_mean * mom.psi_mean);
  for (std::size_t r = 0; r < p; ++r) {
    mom.mean_x.push_back(mom.design(0, r + 1));
    mom.mean_x_sq.push_back(mom.design(r + 1, r + 1));
    mom.psi_phi_mean.push_back(psi_phi_sum[r] / ns);
    const double m1 = xt_sum[r] / ns;
    mom.x_tilde_var.push_back(std::max(0.0, xt_sq_sum[r] / ns - m1 * m1));
  }
  return mom;
}

// Closed-form normal moments; the confounder expectations are integrals
// against the uniform density, or plain averages for an empirical law.
MomentEstimates exact_moments(const GenerativeModel& model) {
  const std::size_t p = model.p();
  const auto& dist = model.distortions;
  auto expect = [&](const auto& f) {
    if (const auto* uni = std::get_if<UniformLaw>(&dist.u_law)) {
      const double integral =
          boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, uni->a, uni->b, 15, 1e-14);
      return integral / (uni->b - uni->a);
    }
    const auto& sample = std::get<EmpiricalLaw>(dist.u_law).sample;
    double sum = 0.0;
    for (double u : sample) sum += f(u);
    return sum / static_cast<double>(sample.size());
  };

  MomentEstimates mom;
  mom.design = Matrix(p + 1, p + 1);
  mom.design(0, 0) = 1.0;
  for (std::size_t r = 0; r < p; ++r) {
    const auto& law = model.predictors[r];
    mom.design(0, r + 1) = mom.design(r + 1, 0) = law.mean;
    for (std::size_t k = 0; k < p; ++k)
      mom.design(r + 1, k + 1) = law.mean * model.predictors[k].mean + (r == k ? law.sd * law.sd : 0.0);
  }
  mom.psi_mean = expect([&](double u) { return dist.psi(u); });
  mom.psi_sq_mean = expect([&](double u) { return dist.psi(u) * dist.psi(u); });
  mom.psi_var = std::max(0.0, mom.psi_sq_mean - mom.psi_mean * mom.psi_mean);
  for (std::size_t r = 0; r < p; ++r) {
    const auto& phi = dist.phi[r];
    const double ex = model.predictors[r].mean;
    const double ex2 = mom.design(r + 1, r + 1);
    mom.mean_x.push_back(ex);
    mom.mean_x_sq.push_back(ex2);
    mom.psi_phi_mean.push_back(expect([&](double u) { return dist.psi(u) * phi(u); }));
    const double e_phi = expect([&](double u) { return phi(u); });
    const double e_phi2 = expect([&](double u) { return phi(u) * phi(u); });
    // U and X independent
    mom.x_tilde_var.push_back(std::max(0.0, e_phi2 * ex2 - e_phi * e_phi * ex * ex));
  }
  return mom;
}

TheoreticalVariance assemble(const GenerativeModel& model, MomentEstimates moments) {
  const std::size_t p = model.p();
  TheoreticalVariance out;
  out.moments = std::move(moments);
  MomentEstimates& mom = out.moments;
  const LuDecomposition lu(mom.design);
  if (lu.singular() || std::abs(lu.determinant()) <= 1e-10)
    throw CarError(ErrorCode::SingularDesignLimit, "limiting design matrix is singular");
  mom.design_inverse = lu.inverse();

  const double s2 = model.noise_variance();
  out.sigma_sq_true.assign(p + 1, 0.0);
  const double g0 = model.gamma[0];
  out.sigma_sq_true[0] = g0 * g0 * mom.psi_var + s2 * mom.design_inverse(0, 0) * mom.psi_sq_mean;

  for (std::size_t r = 0; r < p; ++r) {
    const double ex = mom.mean_x[r];
    if (std::abs(ex) <= kMeanNearZero)
      throw CarError(ErrorCode::MeanNearZero, "predictor mean is numerically zero");
    const double g = model.gamma[r + 1];
    const double var_x = mom.mean_x_sq[r] - ex * ex;
    const double s11 = g * g * (ex * ex * mom.psi_var + var_x * mom.psi_sq_mean) +
                       s2 * ex * ex * mom.psi_sq_mean * mom.design_inverse(r + 1, r + 1);
    const double s12 = g * (mom.psi_phi_mean[r] * mom.mean_x_sq[r] - ex * ex);
    const double s22 = mom.x_tilde_var[r];
    const double a = 1.0 / ex;
    const double b = -g / ex;
    const double v = a * a * s11 + 2.0 * a * b * s12 + b * b * s22;
    // exact cancellation (e.g. no noise, no distortion) leaves rounding residue
    const double scale = std::abs(a * a * s11) + std::abs(2.0 * a * b * s12) + std::abs(b * b * s22);
    out.sigma_sq_true[r + 1] = std::abs(v) <= 1e-12 * scale ? 0.0 : v;
  }
  return out;
}

}  // namespace

TheoreticalVariance theoretical_variance(const GenerativeModel& model, std::size_t oracle_samples,
                                         std::uint64_t seed) {
  model.validate();
  return assemble(model, monte_carlo_moments(model, oracle_samples, seed));
}

TheoreticalVariance theoretical_variance_exact(const GenerativeModel& model) {
  model.validate();
  return assemble(model, exact_moments(model));
}

NormalityReport normality_check(const GenerativeModel& model, const SimulationConfig& config,
                                const TheoreticalVariance& oracle, std::vector<double> levels,
                                Execution exec) {
  if (config.replicates < 500)
    throw CarError(ErrorCode::ConfigError, "normality check needs >= 500 replicates");
  const auto outcomes = simulate_replicates(model, config, exec);
  const std::size_t p = model.p();
  const double root_n = std::sqrt(static_cast<double>(config.n));

  NormalityReport rep;
  rep.levels = levels;
  rep.coverage.assign(p + 1, std::vector<double>(levels.size(), 0.0));
  std::vector<double> zs;
  for (double lv : levels) zs.push_back(normal_critical_value(lv));

  std::size_t ok = 0;
  for (const auto& o : outcomes) {
    if (!o.ok) {
      ++rep.failures;
      continue;
    }
    ++ok;
    for (std::size_t r = 0; r <= p; ++r) {
      const double dev = o.gamma_hat[r] - model.gamma[r];
      const double sigma = std::sqrt(oracle.sigma_sq_true[r]);
      double t;
      if (sigma > 0.0) {
        t = root_n * dev / sigma;
      } else {
        // zero limiting variance: exact recovery standardises to 0
        t = std::abs(dev) <= 1e-9 * std::max(1.0, std::abs(model.gamma[r]))
                ? 0.0
                : std::copysign(std::numeric_limits<double>::infinity(), dev);
      }
      rep.max_abs_standardized = std::max(rep.max_abs_standardized, std::abs(t));
      for (std::size_t l = 0; l < levels.size(); ++l)
        if (std::abs(t) <= zs[l]) rep.coverage[r][l] += 1.0;
    }
  }
  for (std::size_t r = 0; r <= p; ++r)
    for (std::size_t l = 0; l < levels.size(); ++l) {
      if (ok > 0) rep.coverage[r][l] /= static_cast<double>(ok);
      rep.max_abs_deviation = std::max(rep.max_abs_deviation, std::abs(rep.coverage[r][l] - levels[l]));
    }
  return rep;
}

}  // namespace car
