#include <algorithm>

#include "muonkit/kernels.hpp"

namespace muonkit::kernels::serial {

// c[i, :] = sum_p a[i, p] * b[p, :]
void gemm_nn(Index m, Index n, Index k, std::span<const double> a, std::span<const double> b,
             std::span<double> c) {
  std::fill(c.begin(), c.end(), 0.0);
  for (Index i = 0; i < m; ++i) {
    double* ci = c.data() + i * n;
    for (Index p = 0; p < k; ++p) {
      const double aip = a[static_cast<std::size_t>(i * k + p)];
      const double* bp = b.data() + p * n;
      for (Index j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

// a is k x m; c[i, :] = sum_p a[p, i] * b[p, :]
void gemm_tn(Index m, Index n, Index k, std::span<const double> a, std::span<const double> b,
             std::span<double> c) {
  std::fill(c.begin(), c.end(), 0.0);
  for (Index i = 0; i < m; ++i) {
    double* ci = c.data() + i * n;
    for (Index p = 0; p < k; ++p) {
      const double api = a[static_cast<std::size_t>(p * m + i)];
      const double* bp = b.data() + p * n;
      for (Index j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

// b is n x k; c[i, j] = <a[i, :], b[j, :]>
void gemm_nt(Index m, Index n, Index k, std::span<const double> a, std::span<const double> b,
             std::span<double> c) {
  for (Index i = 0; i < m; ++i) {
    const double* ai = a.data() + i * k;
    for (Index j = 0; j < n; ++j) {
      const double* bj = b.data() + j * k;
      double acc = 0.0;
      for (Index p = 0; p < k; ++p) acc += ai[p] * bj[p];
      c[static_cast<std::size_t>(i * n + j)] = acc;
    }
  }
}

void axpby(double alpha, std::span<const double> x, double beta, std::span<const double> y,
           std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = alpha * x[i] + beta * y[i];
}

}  // namespace muonkit::kernels::serial
