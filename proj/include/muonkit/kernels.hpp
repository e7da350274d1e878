#pragma once

#include <span>

#include "muonkit/matrix.hpp"

// Dense product kernels over row-major storage. `serial` is the reference
// implementation; `parallel` splits output rows across OpenMP threads and keeps
// the per-entry accumulation order of the reference, so both produce
// bit-identical results for any thread count.
//
// All kernels overwrite `c`; shapes are in the logical (post-transpose) sense:
// c is m x n and the contraction length is k.
namespace muonkit::kernels {

namespace serial {
void gemm_nn(Index m, Index n, Index k, std::span<const double> a, std::span<const double> b,
             std::span<double> c);
void gemm_tn(Index m, Index n, Index k, std::span<const double> a, std::span<const double> b,
             std::span<double> c);
void gemm_nt(Index m, Index n, Index k, std::span<const double> a, std::span<const double> b,
             std::span<double> c);
void axpby(double alpha, std::span<const double> x, double beta, std::span<const double> y,
           std::span<double> out);
}  // namespace serial

namespace parallel {
void gemm_nn(Index m, Index n, Index k, std::span<const double> a, std::span<const double> b,
             std::span<double> c);
void gemm_tn(Index m, Index n, Index k, std::span<const double> a, std::span<const double> b,
             std::span<double> c);
void gemm_nt(Index m, Index n, Index k, std::span<const double> a, std::span<const double> b,
             std::span<double> c);
void axpby(double alpha, std::span<const double> x, double beta, std::span<const double> y,
           std::span<double> out);

/// Below this many multiply-adds the parallel kernels run on the calling thread.
inline constexpr long kMinParallelWork = 1L << 16;
}  // namespace parallel

}  // namespace muonkit::kernels
