#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "car/distortion.hpp"
#include "car/estimator.hpp"
#include "car/linalg.hpp"
#include "car/parallel.hpp"

namespace car {

struct NormalLaw {
  double mean = 0.0;
  double sd = 1.0;
};

/// Y = gamma_0 + sum_r gamma_r X_r + e, with X_r, U and e independent; the
/// observed data are (U, phi_r(U) X_r, psi(U) Y).
struct GenerativeModel {
  std::vector<double> gamma;         // p+1
  std::vector<NormalLaw> predictors; // p
  double noise_sd = 0.0;
  DistortionSpec distortions;

  std::size_t p() const noexcept { return predictors.size(); }
  double noise_variance() const noexcept { return noise_sd * noise_sd; }

  /// Throws ConfigError on inconsistent sizes or non-positive spreads.
  void validate() const;
};

/// Y = 4 - X1 + 0.3 X2 + 3 X3 + e with X1 ~ N(1.5, 0.7), X2 ~ N(1, 1.2),
/// X3 ~ N(0.5, 1), e ~ N(0, 0.3) (second argument the standard deviation)
/// under paper_distortions().
GenerativeModel paper_model();

/// The paper_model regression with psi = phi_r = 1.
GenerativeModel undistorted_paper_model(double noise_sd);

struct LatentData {
  Matrix x;
  std::vector<double> y;
  std::vector<double> e;
};

struct GeneratedSample {
  Dataset observed;
  LatentData latent;
};

/// Deterministic in (seed, stream).
GeneratedSample generate(const GenerativeModel& model, std::size_t n, std::uint64_t seed,
                         std::uint64_t stream = 0);

struct SimulationConfig {
  std::size_t n = 0;
  std::size_t replicates = 0;
  std::size_t m = 0;
  double level = 0.95;
  std::uint64_t seed = 0;
  std::size_t min_bin_size = 0;  // 0 selects p+2
  double det_threshold = kDefaultDetThreshold;
};

/// Bin counts implied by the reported points-per-bin averages (5, 16, 32).
/// Returns 0 for any other n.
std::size_t reference_bin_count(std::size_t n) noexcept;

struct ReplicateOutcome {
  bool ok = false;
  ErrorCode failure = ErrorCode::NoUsableBins;
  std::vector<double> gamma_hat;
  std::vector<double> sigma_sq;
  std::size_t n_fitted = 0;
  std::size_t bins = 0;
};

/// Runs generate -> fit_car -> estimate_variances for every replicate;
/// replicate k draws from substream k of config.seed.
std::vector<ReplicateOutcome> simulate_replicates(const GenerativeModel& model,
                                                  const SimulationConfig& config,
                                                  Execution exec = Execution::Parallel);

struct CoefficientSummary {
  double coverage_fraction = 0.0;
  double mean_ci_length = 0.0;
  double mean_estimate = 0.0;
  double sd_estimate = 0.0;
  double mean_sigma_sq = 0.0;     // replicate average of the plug-in variance
  double scaled_variance = 0.0;   // n * sample variance of the estimates
};

struct SimulationReport {
  std::size_t n = 0;
  std::size_t replicates = 0;
  std::size_t m_used = 0;
  std::size_t min_bin_size = 0;
  double level = 0.95;
  std::uint64_t seed = 0;
  std::size_t failures = 0;
  std::map<std::string, std::size_t> failure_reasons;
  double mean_bins = 0.0;
  double mean_points_per_bin = 0.0;
  std::vector<CoefficientSummary> coefficients;
};

/// Aggregates outcomes at the given level. Failed replicates are left out of
/// every average and counted in `failures`.
SimulationReport summarize(const std::vector<ReplicateOutcome>& outcomes,
                           const GenerativeModel& model, const SimulationConfig& config,
                           double level);

SimulationReport run_monte_carlo(const GenerativeModel& model, const SimulationConfig& config,
                                 Execution exec = Execution::Parallel);

struct MomentEstimates {
  std::vector<double> mean_x;        // E X_r
  std::vector<double> mean_x_sq;     // E X_r^2
  double psi_mean = 0.0;
  double psi_sq_mean = 0.0;
  double psi_var = 0.0;
  std::vector<double> psi_phi_mean;  // E psi phi_r
  std::vector<double> x_tilde_var;   // var(phi_r X_r)
  Matrix design;                     // (p+1)x(p+1) second-moment matrix of (1, X)
  Matrix design_inverse;
};

struct TheoreticalVariance {
  std::vector<double> sigma_sq_true;  // limiting variances of sqrt(n)(gamma_hat_r - gamma_r)
  MomentEstimates moments;
};

/// Limiting variances from Monte Carlo moments of the model's laws.
/// Slopes use the delta method on (sum w b x, sum w x) with a = 1/E X_r and
/// b = -gamma_r / E X_r.
/// Moments by Monte Carlo over the model's laws.
TheoreticalVariance theoretical_variance(const GenerativeModel& model, std::size_t oracle_samples,
                                         std::uint64_t seed);

/// Same limits with closed-form predictor moments and quadrature over the confounder law.
TheoreticalVariance theoretical_variance_exact(const GenerativeModel& model);

struct NormalityReport {
  std::vector<double> levels;                 // nominal two-sided levels
  std::vector<std::vector<double>> coverage;  // [coefficient][level]
  double max_abs_deviation = 0.0;             // max |coverage - level|
  double max_abs_standardized = 0.0;
  std::size_t failures = 0;
};

/// Standardises sqrt(n)(gamma_hat - gamma) by the oracle sigma and compares
/// the fraction inside +/- z with each nominal level.
NormalityReport normality_check(const GenerativeModel& model, const SimulationConfig& config,
                                const TheoreticalVariance& oracle,
                                std::vector<double> levels = {0.80, 0.90, 0.95, 0.99},
                                Execution exec = Execution::Parallel);

}  // namespace car
