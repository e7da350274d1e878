#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "muonkit/rng.hpp"

namespace muonkit {

/// Runs fn(trial, stream) for trial in [0, count) across OpenMP threads. Each
/// trial gets `base.substream(trial)`, so results do not depend on the thread
/// count. fn must only write to per-trial slots.
template <typename Fn>
void for_each_trial(std::int64_t count, const RngStream& base, Fn&& fn) {
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t t = 0; t < count; ++t) {
    RngStream stream = base.substream(static_cast<std::uint64_t>(t));
    fn(t, stream);
  }
}

/// Like for_each_trial, but hands out fixed-size blocks of trials, one
/// substream per block: fn(begin, end, stream). Block boundaries depend only on
/// `block`, never on the thread count.
template <typename Fn>
void for_each_block(std::int64_t count, std::int64_t block, const RngStream& base, Fn&& fn) {
  const std::int64_t blocks = (count + block - 1) / block;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t b = 0; b < blocks; ++b) {
    RngStream stream = base.substream(static_cast<std::uint64_t>(b));
    const std::int64_t begin = b * block;
    const std::int64_t end = begin + block < count ? begin + block : count;
    fn(begin, end, stream);
  }
}

/// Sample mean and standard error (sample std / sqrt(n)), summed in index order.
struct MeanAndError {
  double mean = 0.0;
  double standard_error = 0.0;
};

inline MeanAndError mean_and_error(const std::vector<double>& values) {
  MeanAndError out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.standard_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return out;
}

}  // namespace muonkit
