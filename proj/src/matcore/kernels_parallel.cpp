#include <algorithm>

#include "muonkit/kernels.hpp"

namespace muonkit::kernels::parallel {

namespace {
bool worth_splitting(Index m, Index n, Index k) {
  return static_cast<long>(m) * static_cast<long>(n) * static_cast<long>(k) >= kMinParallelWork;
}
}  // namespace

void gemm_nn(Index m, Index n, Index k, std::span<const double> a, std::span<const double> b,
             std::span<double> c) {
  const double* ap = a.data();
  const double* bp = b.data();
  double* cp = c.data();
#pragma omp parallel for schedule(static) if (worth_splitting(m, n, k))
  for (Index i = 0; i < m; ++i) {
    double* ci = cp + i * n;
    std::fill(ci, ci + n, 0.0);
    for (Index p = 0; p < k; ++p) {
      const double aip = ap[i * k + p];
      const double* brow = bp + p * n;
      for (Index j = 0; j < n; ++j) ci[j] += aip * brow[j];
    }
  }
}

void gemm_tn(Index m, Index n, Index k, std::span<const double> a, std::span<const double> b,
             std::span<double> c) {
  const double* ap = a.data();
  const double* bp = b.data();
  double* cp = c.data();
#pragma omp parallel for schedule(static) if (worth_splitting(m, n, k))
  for (Index i = 0; i < m; ++i) {
    double* ci = cp + i * n;
    std::fill(ci, ci + n, 0.0);
    for (Index p = 0; p < k; ++p) {
      const double api = ap[p * m + i];
      const double* brow = bp + p * n;
      for (Index j = 0; j < n; ++j) ci[j] += api * brow[j];
    }
  }
}

void gemm_nt(Index m, Index n, Index k, std::span<const double> a, std::span<const double> b,
             std::span<double> c) {
  const double* ap = a.data();
  const double* bp = b.data();
  double* cp = c.data();
#pragma omp parallel for schedule(static) if (worth_splitting(m, n, k))
  for (Index i = 0; i < m; ++i) {
    const double* ai = ap + i * k;
    for (Index j = 0; j < n; ++j) {
      const double* bj = bp + j * k;
      double acc = 0.0;
      for (Index p = 0; p < k; ++p) acc += ai[p] * bj[p];
      cp[i * n + j] = acc;
    }
  }
}

void axpby(double alpha, std::span<const double> x, double beta, std::span<const double> y,
           std::span<double> out) {
  const auto n = static_cast<Index>(out.size());
#pragma omp parallel for schedule(static) if (n >= kMinParallelWork)
  for (Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] =
      alpha * x[static_cast<std::size_t>(i)] + beta * y[static_cast<std::size_t>(i)];
}

}  // namespace muonkit::kernels::parallel
