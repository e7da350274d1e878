#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "muonkit/matrix.hpp"
#include "muonkit/optimizer.hpp"
#include "muonkit/polar.hpp"
#include "muonkit/rng.hpp"
#include "muonkit/sketch.hpp"

namespace muonkit {

/// Polar map that may consume randomness. Deterministic maps ignore the stream.
using RandomPolarMap = std::function<Matrix(const Matrix&, RngStream&)>;

/// Monte Carlo estimates of the inexact-polar constants for one input matrix:
///   gamma_hat = 1 - mean <M, T(M)> / ||M||_*
///   nu_hat    = sqrt(mean ||T(M)||_op^2) - 1
/// nu_hat is negative when the map shrinks every direction.
struct AssumptionEstimate {
  double gamma_hat = 0.0;
  double nu_hat = 0.0;
  double gamma_se = 0.0;
  double nu_se = 0.0;
  std::int64_t trials = 0;
  std::int64_t degenerate_trials = 0;  // all-zero outputs, excluded from the means
  std::vector<double> alignment_ratios;
  std::vector<double> operator_norms;
};

AssumptionEstimate estimate_gamma_nu(const Matrix& m, const RandomPolarMap& polar,
                                     std::int64_t trials, const RngStream& rng);

inline constexpr double kOperatorNormSlack = 1e-10;
inline constexpr double kStandardErrorBand = 3.0;

struct Prop2Report {
  double mean_alignment = 0.0;
  double standard_error = 0.0;
  double bound = 0.0;
  double delta = 0.0;
  ThetaGamma theta_gamma;
  bool mean_passes = false;  // mean >= bound - 3 SE
  double max_operator_norm = 0.0;
  bool operator_passes = false;  // every realization <= 1 + 1e-10
  std::int64_t trials = 0;
  std::vector<double> alignments;

  bool passed() const noexcept { return mean_passes && operator_passes; }
};

/// Monte Carlo check of the Gaussian expected-alignment bound and the
/// almost-sure operator-norm bound. Needs a Gaussian sketch, a delta rule
/// evaluated on m itself, and target rank below the numerical rank of m.
Prop2Report check_prop2(const Matrix& m, const SketchConfig& scfg, const PolarConfig& pcfg,
                        std::int64_t trials, const RngStream& rng);

inline constexpr double kLemmaTolerance = 1e-12;

struct StepLemmaResult {
  std::size_t step = 0;
  PolyCoeffs coeffs;
  double min_value = 0.0;       // min phi on the grid
  double max_value = 0.0;       // max phi on the grid
  double min_excess = 0.0;      // min (phi(x) - x)
  double min_derivative = 0.0;  // min phi'(x)
  bool in_unit_interval = false;
  bool dominates_identity = false;
  bool nondecreasing = false;

  bool all_hold() const noexcept { return in_unit_interval && dominates_identity && nondecreasing; }
};

struct LemmaReport {
  bool theoretical = false;
  std::size_t grid = 0;
  std::vector<StepLemmaResult> steps;

  std::size_t violations() const noexcept;
  /// Theoretical schedules pass only when every property holds on every step.
  /// Other schedules are expected to overshoot; their violations are reported,
  /// not failed.
  bool passed() const noexcept { return !theoretical || violations() == 0; }
};

/// Grid check of 0 <= phi <= 1, phi(x) >= x, phi'(x) >= 0 on [0, 1] for every step.
LemmaReport check_polynomial_lemmas(const PolynomialSchedule& schedule, std::size_t grid);

/// Leading-order cost model of one polar factorization.
struct FlopModel {
  std::int64_t m = 0;
  std::int64_t n = 0;
  std::int64_t ell = 0;
  std::int64_t h = 0;
  std::int64_t q = 0;

  std::int64_t d0() const noexcept { return m < n ? m : n; }
  std::int64_t d1() const noexcept { return m < n ? n : m; }
};

struct FlopCounts {
  std::uint64_t full = 0;        // q (4 d1 d0^2 + 2 d0^3)
  std::uint64_t randomized = 0;  // (4h + 6) m n ell + q (4 n ell^2 + 2 ell^3)
  double ratio = 0.0;            // full / randomized
};

FlopCounts flop_counts(const FlopModel& model);

/// Everything the per-step optimizer cost depends on.
struct StepFlopConfig {
  OptimizerKind optimizer = OptimizerKind::muon_nesterov;
  PolarConfig polar;
  std::optional<SketchConfig> sketch;
  Index rows = 0;
  Index cols = 0;
};

/// Per-step optimizer-side FLOPs from a fixed primitive table:
///   a x b times b x c product     2abc
///   linear combination (m x n)    2mn
///   scaling / Hadamard (m x n)    mn
///   Frobenius norm (m x n)        2mn
///   Householder QR (r x l)        4 r l^2
///   singular values (d1 x d0)     4 d1 d0^2
///   thin SVD with U, V (d1 x d0)  6 d1 d0^2 + 20 d0^3
/// The gradient oracle and the objective evaluation are not counted.
/// Throws ConfigError for combinations the runner cannot execute.
std::uint64_t measured_step_flops(const StepFlopConfig& cfg);

}  // namespace muonkit
