#pragma once

#include <span>
#include <string>
#include <vector>

#include "muonkit/matrix.hpp"

namespace muonkit {

/// One odd polynomial phi(x) = a x + b x^3 + c x^5.
struct PolyCoeffs {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  double operator()(double x) const noexcept {
    const double x2 = x * x;
    return x * (a + x2 * (b + x2 * c));
  }
  double derivative(double x) const noexcept {
    const double x2 = x * x;
    return a + x2 * (3.0 * b + 5.0 * c * x2);
  }
  friend bool operator==(const PolyCoeffs&, const PolyCoeffs&) = default;
};

inline constexpr PolyCoeffs kCubicNewtonSchulz{1.5, -0.5, 0.0};
inline constexpr PolyCoeffs kQuinticNewtonSchulz{15.0 / 8.0, -10.0 / 8.0, 3.0 / 8.0};
inline constexpr PolyCoeffs kQuinticEmpirical{3.4445, -4.7750, 2.0315};

/// Per-iteration coefficient list; step t applies `steps[t]`.
struct PolynomialSchedule {
  std::string name;
  std::vector<PolyCoeffs> steps;

  std::size_t size() const noexcept { return steps.size(); }
  /// True when every step is the cubic, or every step the quintic, Newton-Schulz
  /// polynomial. Only these maps are guaranteed to keep [0, 1] inside [0, 1].
  bool theoretical() const noexcept;
  /// p_q(x): the composition of all steps applied to a scalar.
  double evaluate(double x) const noexcept;

  friend bool operator==(const PolynomialSchedule&, const PolynomialSchedule&) = default;
};

PolynomialSchedule cubic_schedule(std::size_t q);
PolynomialSchedule quintic_theoretical_schedule(std::size_t q);
PolynomialSchedule quintic_empirical_schedule(std::size_t q);

enum class PolarExpressVariant { nanogpt, cifar10 };
/// The nine published PolarExpress triples for the given tuning.
PolynomialSchedule polar_express_schedule(PolarExpressVariant variant);
/// The published triples truncated to q, or padded by repeating the last triple.
PolynomialSchedule polar_express_schedule(PolarExpressVariant variant, std::size_t q);

/// Builtin schedule by config name: cubic, quintic_theoretical, quintic_empirical,
/// polar_express_nanogpt, polar_express_cifar10. Throws ConfigError on an unknown name.
PolynomialSchedule named_schedule(const std::string& name, std::size_t q);

enum class PolarSolver { exact, polynomial };

enum class DeltaRule {
  frobenius_norm,
  operator_norm,
  explicit_value,
  /// Operator norm of the reduced matrix B inside the randomized pipeline.
  /// Outside that pipeline it is the same as operator_norm.
  reduced_operator_norm,
};

struct PolarConfig {
  PolarSolver solver = PolarSolver::polynomial;
  PolynomialSchedule schedule = quintic_theoretical_schedule(5);
  DeltaRule delta_rule = DeltaRule::frobenius_norm;
  double delta_value = 0.0;  // used by DeltaRule::explicit_value only

  std::size_t q() const noexcept { return schedule.size(); }
  /// Throws PreconditionError when the explicit delta is not strictly positive.
  void validate() const;

  friend bool operator==(const PolarConfig&, const PolarConfig&) = default;
};

/// Scaling delta chosen by `cfg.delta_rule` for `m`.
double resolve_delta(const Matrix& m, const PolarConfig& cfg);

/// U V^T from the compact SVD.
Matrix exact_polar(const Matrix& m);

/// a Z + b Z (Z^T Z) + c Z (Z^T Z)^2, built on whichever Gram matrix is smaller.
Matrix apply_polynomial_step(const Matrix& z, const PolyCoeffs& coeffs);

struct PolarResult {
  Matrix value;
  double delta = 0.0;
  /// False when a theoretical schedule ran with an explicit delta below
  /// ||m||_op, so the unit operator-norm bound is no longer guaranteed.
  bool bound_guaranteed = true;
};

/// p_q(m / delta) for the schedule in `cfg`.
PolarResult inexact_polar(const Matrix& m, const PolarConfig& cfg);

/// Relative amount by which delta may fall short of sigma_max (SVD round-off).
inline constexpr double kDeltaSlack = 1e-12;

/// 1 - sum_i sigma_i p_q(sigma_i / delta) / sum_i sigma_i.
double prop1_gamma(std::span<const double> sigma, double delta, const PolynomialSchedule& schedule);

std::string to_string(DeltaRule rule);
std::string to_string(PolarSolver solver);

}  // namespace muonkit
