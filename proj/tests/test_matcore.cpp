#include <gtest/gtest.h>
#include <omp.h>

#include <cmath>
#include <set>

#include "muonkit/errors.hpp"
#include "muonkit/kernels.hpp"
#include "muonkit/linalg.hpp"
#include "muonkit/matrix.hpp"
#include "muonkit/rng.hpp"

namespace muonkit {
namespace {

Matrix random_matrix(Index rows, Index cols, RngStream& rng) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

TEST(Matrix, ConstructionAndAccess) {
  const Matrix m = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(m.rows(), 2);
  EXPECT_EQ(m.cols(), 3);
  EXPECT_DOUBLE_EQ(m(1, 2), 6.0);
  EXPECT_EQ(m.transpose(), Matrix::from_rows({{1, 4}, {2, 5}, {3, 6}}));
  EXPECT_EQ(Matrix::identity(2), Matrix::diagonal({1.0, 1.0}));
  EXPECT_TRUE(Matrix::zeros(3, 2).is_zero());
}

TEST(Matrix, RejectsNonFiniteEntries) {
  EXPECT_THROW(Matrix(1, 2, {1.0, std::nan("")}), NumericalError);
  EXPECT_THROW(Matrix(1, 1, {INFINITY}), NumericalError);
}

TEST(Matrix, ShapeMismatchThrows) {
  EXPECT_THROW(matmul(Matrix(2, 3), Matrix(2, 3)), DimensionError);
  EXPECT_THROW(Matrix(2, 2) + Matrix(2, 3), DimensionError);
  EXPECT_THROW(inner_product(Matrix(2, 2), Matrix(3, 2)), DimensionError);
}

TEST(Matrix, ProductsMatchHandValues) {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{5, 6}, {7, 8}});
  EXPECT_EQ(matmul(a, b), Matrix::from_rows({{19, 22}, {43, 50}}));
  EXPECT_EQ(matmul_tn(a, b), matmul(a.transpose(), b));
  EXPECT_EQ(matmul_nt(a, b), matmul(a, b.transpose()));
  EXPECT_EQ(axpby(2.0, a, -1.0, b), Matrix::from_rows({{-3, -2}, {-1, 0}}));
}

TEST(Norms, FrozenValues) {
  const Matrix d = Matrix::diagonal({3.0, 4.0});
  EXPECT_DOUBLE_EQ(frobenius_norm(d), 5.0);
  EXPECT_NEAR(operator_norm(d), 4.0, 1e-14);
  EXPECT_NEAR(nuclear_norm(d), 7.0, 1e-14);
  EXPECT_DOUBLE_EQ(inner_product(d, Matrix::identity(2)), 7.0);
  EXPECT_EQ(operator_norm(Matrix::zeros(3, 3)), 0.0);
  EXPECT_EQ(nuclear_norm(Matrix::zeros(3, 3)), 0.0);
}

TEST(Norms, FrobeniusAvoidsOverflow) {
  const Matrix m = Matrix::diagonal({1e200, 1e200});
  EXPECT_NEAR(frobenius_norm(m) / 1e200, std::sqrt(2.0), 1e-14);
}

TEST(Kernels, ParallelMatchesSerialBitForBit) {
  RngStream rng(11, 1);
  omp_set_num_threads(3);
  const Index shapes[][3] = {{5, 7, 3}, {70, 65, 80}, {128, 96, 64}, {1, 300, 300}};
  for (const auto& s : shapes) {
    const Index m = s[0], n = s[1], k = s[2];
    const Matrix a = random_matrix(m, k, rng);
    const Matrix at = a.transpose();
    const Matrix b = random_matrix(k, n, rng);
    const Matrix bt = b.transpose();
    std::vector<double> c1(static_cast<std::size_t>(m * n)), c2(c1.size());

    kernels::serial::gemm_nn(m, n, k, a.values(), b.values(), c1);
    kernels::parallel::gemm_nn(m, n, k, a.values(), b.values(), c2);
    EXPECT_EQ(c1, c2);
    kernels::serial::gemm_tn(m, n, k, at.values(), b.values(), c1);
    kernels::parallel::gemm_tn(m, n, k, at.values(), b.values(), c2);
    EXPECT_EQ(c1, c2);
    kernels::serial::gemm_nt(m, n, k, a.values(), bt.values(), c1);
    kernels::parallel::gemm_nt(m, n, k, a.values(), bt.values(), c2);
    EXPECT_EQ(c1, c2);

    const Matrix x = random_matrix(m, n, rng);
    const Matrix y = random_matrix(m, n, rng);
    kernels::serial::axpby(0.3, x.values(), -1.7, y.values(), c1);
    kernels::parallel::axpby(0.3, x.values(), -1.7, y.values(), c2);
    EXPECT_EQ(c1, c2);
  }
  omp_set_num_threads(omp_get_num_procs());
}

TEST(Kernels, TransposedVariantsAgreeWithPlainProduct) {
  RngStream rng(11, 2);
  for (int trial = 0; trial < 20; ++trial) {
    const Index m = 1 + static_cast<Index>(rng.below(12));
    const Index n = 1 + static_cast<Index>(rng.below(12));
    const Index k = 1 + static_cast<Index>(rng.below(12));
    const Matrix a = random_matrix(m, k, rng);
    const Matrix b = random_matrix(k, n, rng);
    const Matrix ab = matmul(a, b);
    EXPECT_LE(max_abs_diff(matmul_tn(a.transpose(), b), ab), 1e-13);
    EXPECT_LE(max_abs_diff(matmul_nt(a, b.transpose()), ab), 1e-13);
  }
}

TEST(Linalg, SvdReconstructsRandomMatrices) {
  RngStream rng(12, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const Index m = 1 + static_cast<Index>(rng.below(20));
    const Index n = 1 + static_cast<Index>(rng.below(20));
    const Matrix a = random_matrix(m, n, rng);
    const Svd f = svd(a);
    EXPECT_LE(max_abs_diff(f.reconstruct(), a), 1e-12 * (1.0 + max_abs(a)));
    EXPECT_LE(max_abs_diff(matmul_tn(f.u, f.u), Matrix::identity(f.rank())), 1e-12);
    EXPECT_LE(max_abs_diff(matmul_tn(f.v, f.v), Matrix::identity(f.rank())), 1e-12);
    for (std::size_t i = 1; i < f.sigma.size(); ++i) EXPECT_GE(f.sigma[i - 1], f.sigma[i]);
  }
}

TEST(Linalg, NumericalRankOfLowRankProducts) {
  RngStream rng(12, 2);
  for (Index r = 1; r <= 5; ++r) {
    const Matrix a = matmul(random_matrix(9, r, rng), random_matrix(r, 7, rng));
    EXPECT_EQ(numerical_rank(a), r);
    EXPECT_EQ(svd(a).rank(), r);
    const Matrix q = orthonormal_basis(a);
    EXPECT_EQ(q.cols(), r);
    EXPECT_LE(max_abs_diff(matmul_tn(q, q), Matrix::identity(r)), 1e-12);
    // range(a) lies in span(q)
    EXPECT_LE(max_abs_diff(matmul(q, matmul_tn(q, a)), a), 1e-10);
  }
}

TEST(Linalg, ZeroInputsAreDegenerate) {
  EXPECT_THROW(svd(Matrix::zeros(3, 2)), DegenerateInputError);
  EXPECT_THROW(orthonormal_basis(Matrix::zeros(3, 2)), DegenerateInputError);
  EXPECT_EQ(numerical_rank(Matrix::zeros(3, 2)), 0);
}

TEST(Rng, SameKeySameSequence) {
  RngStream a(5, 9), b(5, 9), c(5, 10);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs = differs || x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, SubstreamsAreReproducibleAndDistinct) {
  const RngStream parent(5, 9);
  std::set<std::uint64_t> firsts;
  for (std::uint64_t i = 0; i < 64; ++i) {
    auto s1 = parent.substream(i);
    auto s2 = parent.substream(i);
    const auto v = s1.next_u64();
    EXPECT_EQ(v, s2.next_u64());
    firsts.insert(v);
  }
  EXPECT_EQ(firsts.size(), 64u);
}

TEST(Rng, UniformAndNormalMoments) {
  RngStream rng(6, 1);
  constexpr int n = 200000;
  double su = 0.0, sn = 0.0, sn2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(su / n, 0.5, 5 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(sn / n, 0.0, 5 / std::sqrt(n));
  EXPECT_NEAR(sn2 / n, 1.0, 5 * std::sqrt(2.0 / n));
}

TEST(Rng, BelowStaysInRangeAndCoversIt) {
  RngStream rng(6, 2);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto v = rng.below(7);
    ASSERT_LT(v, 7u);
    ++counts[v];
  }
  for (int c : counts) EXPECT_GT(c, 800);
}

}  // namespace
}  // namespace muonkit
