#include "muonkit/linalg.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

#include "muonkit/errors.hpp"

namespace muonkit {

namespace {

using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

Eigen::MatrixXd to_eigen(const Matrix& m) { return RowMajorMap(m.data(), m.rows(), m.cols()); }

Matrix from_eigen(const Eigen::MatrixXd& e) {
  Matrix out(e.rows(), e.cols());
  for (Index i = 0; i < e.rows(); ++i) {
    for (Index j = 0; j < e.cols(); ++j) out(i, j) = e(i, j);
  }
  return out;
}

}  // namespace

Matrix Svd::reconstruct() const {
  Matrix scaled = u;
  for (Index i = 0; i < scaled.rows(); ++i) {
    for (Index j = 0; j < rank(); ++j) scaled(i, j) *= sigma[static_cast<std::size_t>(j)];
  }
  return matmul_nt(scaled, v);
}

double frobenius_norm(const Matrix& m) noexcept {
  // Scaled accumulation keeps tiny and huge entries from under/overflowing.
  const double scale = max_abs(m);
  if (scale == 0.0) return 0.0;
  double acc = 0.0;
  for (double v : m.values()) {
    const double r = v / scale;
    acc += r * r;
  }
  return scale * std::sqrt(acc);
}

double inner_product(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw DimensionError("inner_product: shape mismatch");
  double acc = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    acc += a.values()[static_cast<std::size_t>(i)] * b.values()[static_cast<std::size_t>(i)];
  }
  return acc;
}

double rank_tolerance(Index rows, Index cols, double sigma_max) noexcept {
  return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() *
         sigma_max;
}

std::vector<double> singular_values(const Matrix& m) {
  if (m.empty()) return {};
  Eigen::BDCSVD<Eigen::MatrixXd> solver(to_eigen(m));
  const auto& s = solver.singularValues();
  return {s.data(), s.data() + s.size()};
}

double operator_norm(const Matrix& m) {
  if (m.is_zero()) return 0.0;
  return singular_values(m).front();
}

double nuclear_norm(const Matrix& m) {
  if (m.is_zero()) return 0.0;
  double acc = 0.0;
  for (double s : singular_values(m)) acc += s;
  return acc;
}

Svd svd(const Matrix& m) {
  if (m.empty() || m.is_zero()) throw DegenerateInputError("svd of a zero matrix");
  Eigen::BDCSVD<Eigen::MatrixXd> solver(to_eigen(m), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = solver.singularValues();
  const double tol = rank_tolerance(m.rows(), m.cols(), s(0));
  Index r = 0;
  while (r < s.size() && s(r) > tol) ++r;

  Svd out;
  out.sigma.assign(s.data(), s.data() + r);
  out.u = from_eigen(solver.matrixU().leftCols(r));
  out.v = from_eigen(solver.matrixV().leftCols(r));
  return out;
}

Index numerical_rank(const Matrix& m) {
  if (m.is_zero()) return 0;
  const auto s = singular_values(m);
  const double tol = rank_tolerance(m.rows(), m.cols(), s.front());
  return static_cast<Index>(std::count_if(s.begin(), s.end(), [tol](double v) { return v > tol; }));
}

Matrix orthonormal_basis(const Matrix& y) {
  if (y.empty() || y.is_zero()) throw DegenerateInputError("orthonormal basis of a zero matrix");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(to_eigen(y));
  qr.setThreshold(static_cast<double>(std::max(y.rows(), y.cols())) *
                  std::numeric_limits<double>::epsilon());
  const Index r = qr.rank();
  if (r == 0) throw DegenerateInputError("orthonormal basis: numerical rank is zero");
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), r);
  return from_eigen(q);
}

}  // namespace muonkit
