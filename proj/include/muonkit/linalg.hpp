#pragma once

#include <vector>

#include "muonkit/matrix.hpp"

namespace muonkit {

/// Compact SVD: u is m x r, v is n x r, sigma positive and nonincreasing.
struct Svd {
  Matrix u;
  std::vector<double> sigma;
  Matrix v;

  Index rank() const noexcept { return static_cast<Index>(sigma.size()); }
  Matrix reconstruct() const;
};

double frobenius_norm(const Matrix& m) noexcept;
double operator_norm(const Matrix& m);
double nuclear_norm(const Matrix& m);
/// Trace inner product <a, b> = tr(a^T b). Throws DimensionError on shape mismatch.
double inner_product(const Matrix& a, const Matrix& b);

/// Numerical-rank cutoff: singular values at or below
/// max(rows, cols) * eps * sigma_max are treated as zero.
double rank_tolerance(Index rows, Index cols, double sigma_max) noexcept;

/// All min(rows, cols) singular values, nonincreasing, untruncated.
std::vector<double> singular_values(const Matrix& m);

/// Compact SVD truncated at `rank_tolerance`. Throws DegenerateInputError on a zero matrix.
Svd svd(const Matrix& m);

Index numerical_rank(const Matrix& m);

/// Orthonormal basis for range(y), one column per unit of numerical rank.
/// Householder QR with column pivoting. Throws DegenerateInputError on a zero input.
Matrix orthonormal_basis(const Matrix& y);

}  // namespace muonkit
