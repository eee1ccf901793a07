#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace car {

/// Dense row-major matrix sized for the small (p+1)x(p+1) systems of the
/// per-bin regressions. Also used as the n x p predictor table.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }

  bool all_finite() const noexcept;

  Matrix transpose() const;
  friend Matrix operator*(const Matrix& a, const Matrix& b);
  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

std::vector<double> operator*(const Matrix& a, std::span<const double> x);

/// LU factorisation with partial pivoting of a square matrix.
class LuDecomposition {
 public:
  explicit LuDecomposition(const Matrix& a);

  double determinant() const noexcept { return determinant_; }
  bool singular() const noexcept { return singular_; }

  std::vector<double> solve(std::span<const double> b) const;
  Matrix inverse() const;

 private:
  Matrix lu_;
  std::vector<std::size_t> perm_;
  double determinant_ = 0.0;
  bool singular_ = false;
};

/// Normalised Gram matrix (1/rows) * design^T * design.
Matrix gram(const Matrix& design);

struct OlsResult {
  std::vector<double> coefficients;  // intercept first
  Matrix inverse_gram;               // inverse of the normalised Gram
  double gram_determinant = 0.0;     // det of the normalised Gram
  double residual_sum_squares = 0.0;
};

inline constexpr double kDefaultDetThreshold = 1e-8;

/// Least squares of response on design. The design is expected to carry its
/// own intercept column. Throws SingularBinError when
/// |det((1/rows) X^T X)| <= det_threshold, InsufficientData when rows < cols.
OlsResult guarded_ols(const Matrix& design, std::span<const double> response,
                      double det_threshold = kDefaultDetThreshold);

}  // namespace car
