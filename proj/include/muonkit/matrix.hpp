#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace muonkit {

using Index = std::ptrdiff_t;

/// Dense real matrix, row-major, double precision.
///
/// The library treats Matrix as a value type: every operation returns a new
/// matrix and never aliases its inputs. Storage constructors reject non-finite
/// entries; arithmetic does not re-check (callers that can blow up, such as
/// the experiment runner, test `all_finite()` themselves).
class Matrix {
 public:
  Matrix() = default;
  Matrix(Index rows, Index cols);
  Matrix(Index rows, Index cols, std::vector<double> entries);

  static Matrix zeros(Index rows, Index cols) { return Matrix(rows, cols); }
  static Matrix identity(Index n);
  static Matrix diagonal(std::span<const double> diag);
  static Matrix diagonal(std::initializer_list<double> diag);
  /// Rectangular diagonal: rows x cols with `diag` on the main diagonal.
  static Matrix diagonal(Index rows, Index cols, std::span<const double> diag);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  Index size() const noexcept { return rows_ * cols_; }
  bool empty() const noexcept { return size() == 0; }
  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  double& operator()(Index i, Index j) { return data_[static_cast<std::size_t>(i * cols_ + j)]; }
  double operator()(Index i, Index j) const {
    return data_[static_cast<std::size_t>(i * cols_ + j)];
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  std::span<double> row(Index i) {
    return std::span<double>(data_).subspan(static_cast<std::size_t>(i * cols_),
                                            static_cast<std::size_t>(cols_));
  }
  std::span<const double> row(Index i) const {
    return std::span<const double>(data_).subspan(static_cast<std::size_t>(i * cols_),
                                                  static_cast<std::size_t>(cols_));
  }

  Matrix transpose() const;
  Matrix col_block(Index first, Index count) const;
  bool all_finite() const noexcept;
  bool is_zero() const noexcept;

  Matrix& operator+=(const Matrix& rhs);
  Matrix& operator-=(const Matrix& rhs);
  Matrix& operator*=(double s);
  Matrix& operator/=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix lhs, const Matrix& rhs);
Matrix operator-(Matrix lhs, const Matrix& rhs);
Matrix operator-(Matrix m);
Matrix operator*(Matrix m, double s);
Matrix operator*(double s, Matrix m);
Matrix operator/(Matrix m, double s);

/// alpha * x + beta * y.
Matrix axpby(double alpha, const Matrix& x, double beta, const Matrix& y);

/// Products, dispatched to the OpenMP kernels.
Matrix matmul(const Matrix& a, const Matrix& b);     // a * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a^T * b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a * b^T

double max_abs(const Matrix& m) noexcept;
double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace muonkit
