#include "car/estimator.hpp"

#include <cmath>
#include <sstream>

namespace car {

void Dataset::validate() const {
  if (x_tilde.rows() != u.size() || y_tilde.size() != u.size())
    throw CarError(ErrorCode::InvalidInput, "dataset columns have inconsistent lengths");
  if (p() < 1) throw CarError(ErrorCode::InvalidInput, "dataset needs at least one predictor");
  if (n() < p() + 1) throw CarError(ErrorCode::InsufficientData, "dataset needs n >= p+1");
  if (!x_tilde.all_finite()) throw CarError(ErrorCode::InvalidInput, "non-finite predictor");
  for (std::size_t i = 0; i < n(); ++i)
    if (!std::isfinite(u[i]) || !std::isfinite(y_tilde[i]))
      throw CarError(ErrorCode::InvalidInput, "non-finite confounder or response");
}

namespace {

struct BinOutcome {
  std::optional<BinFit> fit;
  std::optional<SkippedBin> skipped;
};

BinOutcome fit_one_bin(const Dataset& data, std::size_t j, const std::vector<std::size_t>& rows,
                       double det_threshold) {
  const std::size_t p = data.p();
  const std::size_t count = rows.size();

  Matrix design(count, p + 1);
  std::vector<double> response(count);
  BinFit fit;
  fit.bin_index = j;
  fit.count = count;
  fit.x_bar_bin.assign(p, 0.0);
  fit.sum_x_sq_bin.assign(p, 0.0);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = rows[k];
    design(k, 0) = 1.0;
    for (std::size_t r = 0; r < p; ++r) {
      const double x = data.x_tilde(i, r);
      design(k, r + 1) = x;
      fit.x_bar_bin[r] += x;
      fit.sum_x_sq_bin[r] += x * x;
    }
    response[k] = data.y_tilde[i];
  }
  for (double& v : fit.x_bar_bin) v /= static_cast<double>(count);

  BinOutcome out;
  try {
    OlsResult ols = guarded_ols(design, response, det_threshold);
    fit.beta = std::move(ols.coefficients);
    fit.inverse_gram = std::move(ols.inverse_gram);
    fit.rss = ols.residual_sum_squares;
    fit.gram_determinant = ols.gram_determinant;
    out.fit = std::move(fit);
  } catch (const SingularBinError& e) {
    out.skipped = SkippedBin{j, count, ErrorCode::SingularBin, e.determinant()};
  }
  return out;
}

}  // namespace

BinFitSet fit_bins(const Dataset& data, const BinPartition& partition, double det_threshold,
                   Execution exec) {
  data.validate();
  if (partition.observation_count() != data.n())
    throw CarError(ErrorCode::InvalidInput, "partition was built over a different sample");

  const auto members = partition.members();
  const std::size_t m = members.size();
  std::vector<BinOutcome> outcomes(m);

  // Check bin sizes up front so the parallel loop never has to throw.
  for (std::size_t j = 0; j < m; ++j)
    if (members[j].size() < data.p() + 1) {
      std::ostringstream msg;
      msg << "bin " << j << " holds " << members[j].size() << " observations, needs at least "
          << data.p() + 1;
      throw CarError(ErrorCode::InsufficientData, msg.str());
    }

  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(m); ++j)
      outcomes[j] = fit_one_bin(data, static_cast<std::size_t>(j), members[j], det_threshold);
  } else {
    for (std::size_t j = 0; j < m; ++j)
      outcomes[j] = fit_one_bin(data, j, members[j], det_threshold);
  }

  BinFitSet out;
  out.partition = partition;
  for (auto& o : outcomes) {
    if (o.fit) out.fits.push_back(std::move(*o.fit));
    if (o.skipped) out.skipped.push_back(*o.skipped);
  }
  if (out.fits.empty()) throw CarError(ErrorCode::NoUsableBins, "every bin failed the determinant guard");
  return out;
}

CarFit estimate_gamma(const BinFitSet& bins, const Dataset& data) {
  if (bins.fits.empty()) throw CarError(ErrorCode::NoUsableBins, "no fitted bins");
  const std::size_t p = data.p();
  const std::size_t n = data.n();

  CarFit fit;
  fit.n = n;
  fit.partition = bins.partition;
  fit.bin_fits = bins.fits;
  fit.skipped_bins = bins.skipped;

  fit.x_bar_global.assign(p, 0.0);
  fit.x_var_global.assign(p, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < p; ++r) fit.x_bar_global[r] += data.x_tilde(i, r);
  for (double& v : fit.x_bar_global) v /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < p; ++r) {
      const double d = data.x_tilde(i, r) - fit.x_bar_global[r];
      fit.x_var_global[r] += d * d;
    }
  for (double& v : fit.x_var_global) v = n > 1 ? v / static_cast<double>(n - 1) : 0.0;

  for (std::size_t r = 0; r < p; ++r)
    if (std::abs(fit.x_bar_global[r]) < kMeanNearZero) {
      std::ostringstream msg;
      msg << "mean of distorted predictor " << r + 1 << " is numerically zero";
      throw CarError(ErrorCode::MeanNearZero, msg.str());
    }

  for (const auto& b : fit.bin_fits) fit.n_fitted += b.count;
  const double total = static_cast<double>(fit.n_fitted);

  fit.gamma_hat.assign(p + 1, 0.0);
  for (const auto& b : fit.bin_fits) {
    const double w = static_cast<double>(b.count) / total;
    fit.gamma_hat[0] += w * b.beta[0];
    for (std::size_t r = 0; r < p; ++r) fit.gamma_hat[r + 1] += w * b.beta[r + 1] * b.x_bar_bin[r];
  }
  for (std::size_t r = 0; r < p; ++r) fit.gamma_hat[r + 1] /= fit.x_bar_global[r];
  return fit;
}

CarFit fit_car(const Dataset& data, const FitOptions& options) {
  data.validate();
  const std::size_t p = data.p();
  const std::size_t min_bin_size = options.min_bin_size == 0 ? p + 1 : options.min_bin_size;
  if (min_bin_size < p + 1)
    throw CarError(ErrorCode::ConfigError, "min_bin_size must be at least p+1");
  const std::size_t m = options.m.value_or(default_bin_count(data.n()));

  const BinPartition initial = make_bins(data.u, m);
  const BinPartition merged = merge_sparse_bins(initial, min_bin_size);
  const BinFitSet bins = fit_bins(data, merged, options.det_threshold, options.exec);
  CarFit fit = estimate_gamma(bins, data);
  fit.m_initial = m;
  fit.det_threshold = options.det_threshold;
  return fit;
}

std::vector<RawCoefficientRow> export_raw_coefficients(const CarFit& fit, std::size_t r) {
  if (r > fit.p()) throw CarError(ErrorCode::IndexOutOfRange, "coefficient index out of range");
  std::vector<RawCoefficientRow> rows;
  rows.reserve(fit.bin_fits.size());
  // bins are ordered by index, and bin midpoints increase with index
  for (const auto& b : fit.bin_fits)
    rows.push_back({fit.partition.midpoints[b.bin_index], b.count, b.beta[r]});
  return rows;
}

}  // namespace car
