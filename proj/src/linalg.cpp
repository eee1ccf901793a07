#include "car/linalg.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

#include "car/error.hpp"

namespace car {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw CarError(ErrorCode::InvalidInput, "ragged matrix rows");
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

bool Matrix::all_finite() const noexcept {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw CarError(ErrorCode::InvalidInput, "matrix shape mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

std::vector<double> operator*(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw CarError(ErrorCode::InvalidInput, "matrix-vector shape mismatch");
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto row = a.row(i);
    y[i] = std::inner_product(row.begin(), row.end(), x.begin(), 0.0);
  }
  return y;
}

LuDecomposition::LuDecomposition(const Matrix& a) : lu_(a), perm_(a.rows()) {
  if (a.rows() != a.cols()) throw CarError(ErrorCode::InvalidInput, "LU of non-square matrix");
  const std::size_t n = a.rows();
  std::iota(perm_.begin(), perm_.end(), std::size_t{0});
  double det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot = k;
    double best = std::abs(lu_(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(lu_(i, k)) > best) {
        best = std::abs(lu_(i, k));
        pivot = i;
      }
    }
    if (best == 0.0) {
      singular_ = true;
      determinant_ = 0.0;
      return;
    }
    if (pivot != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(pivot, j));
      std::swap(perm_[k], perm_[pivot]);
      det = -det;
    }
    det *= lu_(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu_(i, k) / lu_(k, k);
      lu_(i, k) = f;
      for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
    }
  }
  determinant_ = det;
}

std::vector<double> LuDecomposition::solve(std::span<const double> b) const {
  const std::size_t n = lu_.rows();
  if (singular_) throw CarError(ErrorCode::InvalidInput, "solve with singular matrix");
  if (b.size() != n) throw CarError(ErrorCode::InvalidInput, "rhs length mismatch");
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[perm_[i]];
    for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * x[j];
    x[i] = s;
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = x[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= lu_(i, j) * x[j];
    x[i] = s / lu_(i, i);
  }
  return x;
}

Matrix LuDecomposition::inverse() const {
  const std::size_t n = lu_.rows();
  Matrix inv(n, n);
  std::vector<double> e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    const auto col = solve(e);
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
    e[j] = 0.0;
  }
  return inv;
}

Matrix gram(const Matrix& design) {
  if (design.rows() == 0) throw CarError(ErrorCode::InvalidInput, "gram of empty design");
  if (!design.all_finite()) throw CarError(ErrorCode::InvalidInput, "non-finite design entry");
  const std::size_t p = design.cols();
  Matrix g(p, p);
  for (std::size_t k = 0; k < design.rows(); ++k) {
    const auto x = design.row(k);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i; j < p; ++j) g(i, j) += x[i] * x[j];
  }
  const double scale = 1.0 / static_cast<double>(design.rows());
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i; j < p; ++j) {
      g(i, j) *= scale;
      g(j, i) = g(i, j);
    }
  return g;
}

OlsResult guarded_ols(const Matrix& design, std::span<const double> response, double det_threshold) {
  if (!(det_threshold > 0.0)) throw CarError(ErrorCode::InvalidInput, "det_threshold must be > 0");
  if (response.size() != design.rows())
    throw CarError(ErrorCode::InvalidInput, "response length differs from design rows");
  if (design.rows() < design.cols())
    throw CarError(ErrorCode::InsufficientData, "fewer rows than coefficients");
  for (double v : response)
    if (!std::isfinite(v)) throw CarError(ErrorCode::InvalidInput, "non-finite response");

  const Matrix g = gram(design);
  const LuDecomposition lu(g);
  const double det = lu.determinant();
  if (lu.singular() || std::abs(det) <= det_threshold) {
    std::ostringstream msg;
    msg << "normalised Gram determinant " << det << " at or below threshold " << det_threshold;
    throw SingularBinError(det, msg.str());
  }

  const std::size_t n = design.rows();
  const std::size_t p = design.cols();
  std::vector<double> xty(p, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto x = design.row(k);
    for (std::size_t i = 0; i < p; ++i) xty[i] += x[i] * response[k];
  }
  for (double& v : xty) v /= static_cast<double>(n);

  OlsResult out;
  out.coefficients = lu.solve(xty);
  out.gram_determinant = det;
  out.inverse_gram = lu.inverse();
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) {
      const double s = 0.5 * (out.inverse_gram(i, j) + out.inverse_gram(j, i));
      out.inverse_gram(i, j) = s;
      out.inverse_gram(j, i) = s;
    }

  double rss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto x = design.row(k);
    const double fitted = std::inner_product(x.begin(), x.end(), out.coefficients.begin(), 0.0);
    const double r = response[k] - fitted;
    rss += r * r;
  }
  out.residual_sum_squares = rss;
  return out;
}

}  // namespace car
