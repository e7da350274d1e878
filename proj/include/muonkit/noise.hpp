#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "muonkit/matrix.hpp"
#include "muonkit/rng.hpp"

namespace muonkit {

enum class ProblemKind { quadratic, factorization };

/// Smooth synthetic objective over one matrix parameter.
///   quadratic:     f(X) = 1/2 ||X - A||_F^2,      grad = X - A,          L = 1
///   factorization: f(U) = 1/4 ||U U^T - A||_F^2,  grad = (U U^T - A) U  (A symmetric PSD)
///
/// The factorization objective is only locally smooth. Iterates are kept in the
/// Frobenius ball of radius `ball_radius` = 10 ||A||_F^{1/2}, and `smoothness`
/// is the Hessian bound 3 R^2 + ||A||_op on that ball.
struct Problem {
  ProblemKind kind = ProblemKind::quadratic;
  Matrix target;
  Index rows = 0;
  Index cols = 0;
  double smoothness = 1.0;
  double ball_radius = 0.0;

  double objective(const Matrix& x) const;
  Matrix gradient(const Matrix& x) const;
  /// Pulls x back onto the ball when it left it. Returns true if it moved.
  bool project(Matrix& x) const;
};

Problem make_quadratic_problem(Matrix target);
Problem make_factorization_problem(Matrix target, Index factor_cols);

/// rows x cols target with singular values decay^0, decay^1, ... decay^{rank-1}
/// and Haar-random singular vectors.
Matrix low_rank_target(Index rows, Index cols, Index rank, double decay, RngStream& rng);
/// n x n symmetric PSD target A0 A0^T / ||A0 A0^T||_op with A0 an n x rank Gaussian draw.
Matrix psd_target(Index n, Index rank, RngStream& rng);
/// Random matrix with prescribed singular values (length <= min(rows, cols)).
Matrix matrix_with_spectrum(Index rows, Index cols, std::span<const double> sigma,
                            RngStream& rng);

/// Heavy-tailed gradient noise obeying
///   E ||xi||_F^alpha <= sigma0^alpha + sigma1^alpha ||grad f||_F^alpha.
///
/// Entries are i.i.d. symmetric Pareto with tail exponent `tail` (> alpha) and
/// unit minimum magnitude, times `entry_scale` per unit sigma. Calibration
/// fixes entry_scale so that a sigma-unit matrix of the calibrated shape has
/// Frobenius alpha-moment `kCalibrationTarget` (0.9).
struct NoiseModel {
  double alpha = 2.0;
  double sigma0 = 0.0;
  double sigma1 = 0.0;
  double tail = 2.25;
  double entry_scale = 0.0;     // 0 until calibrated
  double calibration_se = 0.0;  // standard error of the fitted unit moment, relative
  Index calibrated_rows = 0;
  Index calibrated_cols = 0;

  bool silent() const noexcept { return sigma0 == 0.0 && sigma1 == 0.0; }
  bool calibrated_for(Index rows, Index cols) const noexcept {
    return entry_scale > 0.0 && calibrated_rows == rows && calibrated_cols == cols;
  }
  /// Throws PreconditionError unless alpha in (1, 2], sigmas >= 0 and tail > alpha.
  void validate() const;

  friend bool operator==(const NoiseModel&, const NoiseModel&) = default;
};

inline constexpr double kCalibrationTarget = 0.9;
inline constexpr double kDefaultTailMargin = 0.25;
inline constexpr std::int64_t kDefaultCalibrationSamples = 200'000;
inline constexpr std::int64_t kMinCalibrationSamples = 10'000;
inline constexpr std::int64_t kCalibrationDrawBudget = 12'800'000;

/// Calibration sample count for a shape: the default, reduced so that
/// samples * rows * cols stays within the draw budget, but never below the minimum.
std::int64_t calibration_samples(Index rows, Index cols) noexcept;

/// Model with tail = alpha + 0.25, not yet calibrated.
NoiseModel make_noise_model(double alpha, double sigma0, double sigma1);

struct MomentEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::int64_t samples = 0;
};

/// E ||P||_F^alpha for a rows x cols matrix of unit symmetric Pareto entries.
/// Uses sum_i |p_i|^alpha (exact mean d * tail / (tail - alpha)) as a control
/// variate; the residual has finite variance even when ||P||^alpha does not.
MomentEstimate unit_alpha_moment(double alpha, double tail, Index rows, Index cols,
                                 std::int64_t samples, const RngStream& rng);

NoiseModel calibrate(NoiseModel model, Index rows, Index cols, std::int64_t samples,
                     const RngStream& rng);

/// One noise draw xi = s sigma0 P0 + s sigma1 grad_norm P1. Zero (and no draws
/// consumed) for a silent model. Throws PreconditionError for an uncalibrated shape.
Matrix sample_noise(const NoiseModel& model, Index rows, Index cols, double grad_norm,
                    RngStream& rng);

/// grad f(x) + (1/B) sum_{i<B} xi_i, with xi_i drawn at grad_norm = ||grad f(x)||_F.
Matrix gradient_oracle(const Problem& problem, const Matrix& x, std::int64_t batch,
                       const NoiseModel& model, RngStream& rng);

/// Plain Monte Carlo (1/N) sum_j ||xi_j||_F^alpha with its standard error.
MomentEstimate empirical_alpha_moment(const NoiseModel& model, double alpha, Index rows,
                                      Index cols, std::int64_t samples, const RngStream& rng,
                                      double grad_norm = 0.0);

/// Plain Monte Carlo alpha-moment of the batch-mean error (oracle - grad f(x)).
MomentEstimate oracle_alpha_moment(const Problem& problem, const Matrix& x, std::int64_t batch,
                                   const NoiseModel& model, double alpha, std::int64_t samples,
                                   const RngStream& rng);

std::string to_string(ProblemKind kind);

}  // namespace muonkit
