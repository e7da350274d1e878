#include "muonkit/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "muonkit/errors.hpp"
#include "muonkit/kernels.hpp"

namespace muonkit {

namespace {

void require_shape(Index rows, Index cols) {
  if (rows < 0 || cols < 0) {
    throw DimensionError("negative matrix dimension");
  }
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
  }
}

}  // namespace

Matrix::Matrix(Index rows, Index cols) : rows_(rows), cols_(cols) {
  require_shape(rows, cols);
  data_.assign(static_cast<std::size_t>(rows * cols), 0.0);
}

Matrix::Matrix(Index rows, Index cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  require_shape(rows, cols);
  if (static_cast<Index>(data_.size()) != rows * cols) {
    throw DimensionError("entry count does not match rows x cols");
  }
  if (!all_finite()) {
    throw NumericalError("matrix entries must be finite");
  }
}

Matrix Matrix::identity(Index n) {
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  const auto n = static_cast<Index>(diag.size());
  return diagonal(n, n, diag);
}

Matrix Matrix::diagonal(std::initializer_list<double> diag) {
  return diagonal(std::span<const double>(diag.begin(), diag.size()));
}

Matrix Matrix::diagonal(Index rows, Index cols, std::span<const double> diag) {
  if (static_cast<Index>(diag.size()) > std::min(rows, cols)) {
    throw DimensionError("diagonal longer than min(rows, cols)");
  }
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < diag.size(); ++i) {
    m(static_cast<Index>(i), static_cast<Index>(i)) = diag[i];
  }
  if (!m.all_finite()) throw NumericalError("matrix entries must be finite");
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const auto r = static_cast<Index>(rows.size());
  const Index c = r == 0 ? 0 : static_cast<Index>(rows.begin()->size());
  std::vector<double> entries;
  entries.reserve(static_cast<std::size_t>(r * c));
  for (const auto& row : rows) {
    if (static_cast<Index>(row.size()) != c) throw DimensionError("ragged row list");
    entries.insert(entries.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(entries));
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (Index i = 0; i < rows_; ++i) {
    for (Index j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  }
  return t;
}

Matrix Matrix::col_block(Index first, Index count) const {
  if (first < 0 || count < 0 || first + count > cols_) {
    throw DimensionError("column block out of range");
  }
  Matrix out(rows_, count);
  for (Index i = 0; i < rows_; ++i) {
    for (Index j = 0; j < count; ++j) out(i, j) = (*this)(i, first + j);
  }
  return out;
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

bool Matrix::is_zero() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return v == 0.0; });
}

Matrix& Matrix::operator+=(const Matrix& rhs) {
  require_same_shape(*this, rhs, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& rhs) {
  require_same_shape(*this, rhs, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= rhs.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix& Matrix::operator/=(double s) {
  for (double& v : data_) v /= s;
  return *this;
}

Matrix operator+(Matrix lhs, const Matrix& rhs) { return lhs += rhs; }
Matrix operator-(Matrix lhs, const Matrix& rhs) { return lhs -= rhs; }
Matrix operator-(Matrix m) { return m *= -1.0; }
Matrix operator*(Matrix m, double s) { return m *= s; }
Matrix operator*(double s, Matrix m) { return m *= s; }
Matrix operator/(Matrix m, double s) { return m /= s; }

Matrix axpby(double alpha, const Matrix& x, double beta, const Matrix& y) {
  require_same_shape(x, y, "axpby");
  Matrix out(x.rows(), x.cols());
  kernels::parallel::axpby(alpha, x.values(), beta, y.values(), out.values());
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  kernels::parallel::gemm_nn(a.rows(), b.cols(), a.cols(), a.values(), b.values(), c.values());
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw DimensionError("matmul_tn: row counts differ");
  Matrix c(a.cols(), b.cols());
  kernels::parallel::gemm_tn(a.cols(), b.cols(), a.rows(), a.values(), b.values(), c.values());
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw DimensionError("matmul_nt: column counts differ");
  Matrix c(a.rows(), b.rows());
  kernels::parallel::gemm_nt(a.rows(), b.rows(), a.cols(), a.values(), b.values(), c.values());
  return c;
}

double max_abs(const Matrix& m) noexcept {
  double out = 0.0;
  for (double v : m.values()) out = std::max(out, std::abs(v));
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double out = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    out = std::max(out, std::abs(a.values()[static_cast<std::size_t>(i)] -
                                 b.values()[static_cast<std::size_t>(i)]));
  }
  return out;
}

}  // namespace muonkit
