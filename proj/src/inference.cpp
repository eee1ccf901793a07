#include "car/inference.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>

namespace car {
namespace {

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0))
    throw CarError(ErrorCode::InvalidLevel, "confidence level must lie in (0, 1)");
}

ConfidenceInterval symmetric_interval(double estimate, double std_error, double critical,
                                      double level) {
  const double half = critical * std_error;
  return {estimate, estimate - half, estimate + half, level, std_error};
}

}  // namespace

VarianceEstimates estimate_variances(const CarFit& fit) {
  if (fit.bin_fits.empty()) throw CarError(ErrorCode::NoUsableBins, "no fitted bins");
  const std::size_t p = fit.p();
  const double n = static_cast<double>(fit.n_fitted);

  VarianceEstimates out;
  out.sigma_sq.assign(p + 1, 0.0);
  out.per_coef_terms.assign(p + 1, VarianceTerms{});

  double rss = 0.0;
  for (const auto& b : fit.bin_fits) rss += b.rss;
  out.pooled_rss_over_n = rss / n;

  // intercept
  {
    double beta_sq = 0.0;
    double inv11 = 0.0;
    for (const auto& b : fit.bin_fits) {
      const double w = static_cast<double>(b.count) / n;
      beta_sq += w * b.beta[0] * b.beta[0];
      inv11 += w * b.inverse_gram(0, 0);
    }
    auto& t = out.per_coef_terms[0];
    t.between_bin = beta_sq - fit.gamma_hat[0] * fit.gamma_hat[0];
    t.noise = out.pooled_rss_over_n * inv11;
    out.sigma_sq[0] = t.between_bin + t.noise;
  }

  for (std::size_t r = 0; r < p; ++r) {
    const double mean = fit.x_bar_global[r];
    if (std::abs(mean) < kMeanNearZero)
      throw CarError(ErrorCode::MeanNearZero, "mean of a distorted predictor is numerically zero");
    const double g = fit.gamma_hat[r + 1];
    double beta_sq_sum = 0.0;
    double beta_sum = 0.0;
    double inv_rr = 0.0;
    for (const auto& b : fit.bin_fits) {
      const double beta = b.beta[r + 1];
      const double w = static_cast<double>(b.count) / n;
      beta_sq_sum += beta * beta * b.sum_x_sq_bin[r];
      beta_sum += beta * b.sum_x_sq_bin[r];
      inv_rr += w * b.x_bar_bin[r] * b.x_bar_bin[r] * b.inverse_gram(r + 1, r + 1);
    }
    auto& t = out.per_coef_terms[r + 1];
    t.beta_sq_moment = beta_sq_sum / n;
    t.centre_sq = g * g * mean * mean;
    t.cross = g * beta_sum / n;
    t.spread = g * g * fit.x_var_global[r];
    t.noise = out.pooled_rss_over_n * inv_rr;
    t.mean_sq = mean * mean;
    out.sigma_sq[r + 1] =
        (t.beta_sq_moment + t.centre_sq - 2.0 * t.cross + t.spread + t.noise) / t.mean_sq;
  }
  return out;
}

double normal_critical_value(double level) {
  check_level(level);
  const boost::math::normal_distribution<double> z;
  return boost::math::quantile(boost::math::complement(z, 0.5 * (1.0 - level)));
}

double t_critical_value(double level, double dof) {
  check_level(level);
  if (!(dof > 0.0)) throw CarError(ErrorCode::InsufficientData, "t interval needs positive dof");
  const boost::math::students_t_distribution<double> t(dof);
  return boost::math::quantile(boost::math::complement(t, 0.5 * (1.0 - level)));
}

ConfidenceInterval confidence_interval(double estimate, double sigma_hat_sq, std::size_t n,
                                       double level) {
  check_level(level);
  if (n == 0) throw CarError(ErrorCode::InvalidInput, "sample size must be >= 1");
  const double se = std::sqrt(std::max(sigma_hat_sq, 0.0) / static_cast<double>(n));
  return symmetric_interval(estimate, se, normal_critical_value(level), level);
}

std::vector<ConfidenceInterval> car_intervals(const CarFit& fit, const VarianceEstimates& var,
                                              double level) {
  std::vector<ConfidenceInterval> out;
  out.reserve(fit.gamma_hat.size());
  for (std::size_t r = 0; r < fit.gamma_hat.size(); ++r)
    out.push_back(confidence_interval(fit.gamma_hat[r], var.sigma_sq[r], fit.n_fitted, level));
  return out;
}

OlsComparison naive_ols(const Dataset& data, double level, double det_threshold) {
  data.validate();
  check_level(level);
  const std::size_t n = data.n();
  const std::size_t p = data.p();
  if (n <= p + 1) throw CarError(ErrorCode::InsufficientData, "t intervals need n > p+1");
  Matrix design(n, p + 1);
  for (std::size_t i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    for (std::size_t r = 0; r < p; ++r) design(i, r + 1) = data.x_tilde(i, r);
  }
  const OlsResult ols = guarded_ols(design, data.y_tilde, det_threshold);
  const double dof = static_cast<double>(n - p - 1);
  OlsComparison out;
  out.residual_variance = ols.residual_sum_squares / dof;
  const double t = t_critical_value(level, dof);
  for (std::size_t j = 0; j <= p; ++j) {
    // inverse_gram is ((1/n) X^T X)^{-1}, so (X^T X)^{-1} = inverse_gram / n
    const double se = std::sqrt(out.residual_variance * ols.inverse_gram(j, j) / static_cast<double>(n));
    out.intervals.push_back(symmetric_interval(ols.coefficients[j], se, t, level));
  }
  return out;
}

}  // namespace car
