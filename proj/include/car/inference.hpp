#pragma once

#include <cstddef>
#include <vector>

#include "car/estimator.hpp"

namespace car {

/// Additive pieces of a plug-in variance, kept for diagnostics.
///
/// Intercept: sigma_sq = between_bin + noise.
/// Slope r:   sigma_sq = (beta_sq_moment + centre_sq - 2*cross + spread + noise) / mean_sq.
struct VarianceTerms {
  double between_bin = 0.0;     // intercept only: sum_j w_j b0j^2 - g0^2
  double beta_sq_moment = 0.0;  // (1/n) sum_j b_rj^2 sum_k x~_rjk^2
  double centre_sq = 0.0;       // g_r^2 xbar_r^2
  double cross = 0.0;           // (g_r/n) sum_j b_rj sum_k x~_rjk^2
  double spread = 0.0;          // g_r^2 s^2_{x~r}
  double noise = 0.0;           // pooled rss/n times the inverse-Gram average
  double mean_sq = 1.0;         // xbar_r^2 (1 for the intercept)
};

struct VarianceEstimates {
  std::vector<double> sigma_sq;  // raw values, may be negative in small samples
  double pooled_rss_over_n = 0.0;
  std::vector<VarianceTerms> per_coef_terms;
};

/// Plug-in estimates of the asymptotic variances of sqrt(n)(gamma_hat - gamma).
VarianceEstimates estimate_variances(const CarFit& fit);

struct ConfidenceInterval {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  double std_error = 0.0;
};

/// Two-sided standard normal critical value z_{(1-level)/2}.
double normal_critical_value(double level);

/// Student t critical value with the given degrees of freedom.
double t_critical_value(double level, double dof);

/// estimate +/- z * sqrt(max(sigma_hat_sq, 0) / n).
ConfidenceInterval confidence_interval(double estimate, double sigma_hat_sq, std::size_t n,
                                       double level);

/// Intervals for every coefficient of a CAR fit, sample size fit.n_fitted.
std::vector<ConfidenceInterval> car_intervals(const CarFit& fit, const VarianceEstimates& var,
                                              double level);

struct OlsComparison {
  std::vector<ConfidenceInterval> intervals;  // t intervals with n-p-1 dof
  double residual_variance = 0.0;
};

/// Naive least squares of y_tilde on [1, x_tilde] with classical t intervals.
OlsComparison naive_ols(const Dataset& data, double level,
                        double det_threshold = kDefaultDetThreshold);

}  // namespace car
