#pragma once

#include <cstdint>
#include <random>

namespace muonkit {

/// Deterministic random stream keyed by (seed, stream id).
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Its 64-bit seed is derived from (seed, stream) with SplitMix64
/// finalizers, so distinct stream ids give statistically independent
/// sequences. Uniform and normal variates are produced by our own transforms
/// (53-bit mantissa fill and Box-Muller), not by std distributions, whose
/// algorithms are implementation-defined.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Standard normal.
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Independent child stream; identical (parent, index) gives identical children.
  RngStream substream(std::uint64_t index) const;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// SplitMix64 finalizer; the hash used for every derived stream id.
std::uint64_t mix64(std::uint64_t x) noexcept;
std::uint64_t combine_ids(std::uint64_t a, std::uint64_t b) noexcept;

}  // namespace muonkit
