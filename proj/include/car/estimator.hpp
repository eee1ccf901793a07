#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "car/binning.hpp"
#include "car/error.hpp"
#include "car/linalg.hpp"
#include "car/parallel.hpp"

namespace car {

/// Observed sample: confounder u, distorted predictors (n x p) and distorted
/// response.
struct Dataset {
  std::vector<double> u;
  Matrix x_tilde;
  std::vector<double> y_tilde;

  std::size_t n() const noexcept { return u.size(); }
  std::size_t p() const noexcept { return x_tilde.cols(); }

  /// Throws InvalidInput / InsufficientData when the invariants do not hold.
  void validate() const;
};

/// Per-bin regression of y_tilde on [1, x_tilde].
struct BinFit {
  std::size_t bin_index = 0;
  std::size_t count = 0;
  std::vector<double> beta;          // p+1, intercept first
  std::vector<double> x_bar_bin;     // p, bin means of the distorted predictors
  Matrix inverse_gram;               // (p+1)x(p+1), inverse of the normalised bin Gram
  std::vector<double> sum_x_sq_bin;  // p, sums of squared distorted predictors
  double rss = 0.0;
  double gram_determinant = 0.0;
};

struct SkippedBin {
  std::size_t bin_index = 0;
  std::size_t count = 0;
  ErrorCode reason = ErrorCode::SingularBin;
  double determinant = 0.0;
};

struct BinFitSet {
  BinPartition partition;
  std::vector<BinFit> fits;  // ordered by bin index
  std::vector<SkippedBin> skipped;
};

struct CarFit {
  std::vector<double> gamma_hat;       // p+1
  std::vector<double> x_bar_global;    // p, over all n observations
  std::vector<double> x_var_global;    // p, sample variances (n-1 denominator), all n
  std::vector<BinFit> bin_fits;
  std::vector<SkippedBin> skipped_bins;
  BinPartition partition;
  std::size_t n = 0;         // all observations
  std::size_t n_fitted = 0;  // observations in fitted bins; the weight denominator
  std::size_t m_initial = 0;  // bin count before merging (0 when not built by fit_car)
  double det_threshold = kDefaultDetThreshold;

  std::size_t p() const noexcept { return x_bar_global.size(); }
};

inline constexpr double kMeanNearZero = 1e-10;

/// Fits every bin of the partition. Bins whose normalised Gram fails the
/// determinant guard are recorded in `skipped`. Throws NoUsableBins when no
/// bin can be fitted, InsufficientData when a bin holds fewer than p+1 points.
BinFitSet fit_bins(const Dataset& data, const BinPartition& partition,
                   double det_threshold = kDefaultDetThreshold,
                   Execution exec = Execution::Serial);

/// Weighted averages of the per-bin coefficients, weights L_j / n_fitted.
CarFit estimate_gamma(const BinFitSet& bins, const Dataset& data);

struct FitOptions {
  std::optional<std::size_t> m;   // initial bin count; default_bin_count(n) when empty
  std::size_t min_bin_size = 0;   // 0 selects p+1
  double det_threshold = kDefaultDetThreshold;
  Execution exec = Execution::Serial;
};

/// make_bins -> merge_sparse_bins -> fit_bins -> estimate_gamma.
CarFit fit_car(const Dataset& data, const FitOptions& options = {});

struct RawCoefficientRow {
  double midpoint = 0.0;
  std::size_t count = 0;
  double beta = 0.0;
};

/// Per-bin raw coefficient r (0 = intercept) against bin midpoints.
std::vector<RawCoefficientRow> export_raw_coefficients(const CarFit& fit, std::size_t r);

}  // namespace car
