#include "muonkit/polar.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "muonkit/errors.hpp"
#include "muonkit/linalg.hpp"

namespace muonkit {

namespace {

PolynomialSchedule repeated(std::string name, PolyCoeffs coeffs, std::size_t q) {
  return PolynomialSchedule{std::move(name), std::vector<PolyCoeffs>(q, coeffs)};
}

constexpr std::array<PolyCoeffs, 9> kPolarExpressNanogpt{{
    {8.1566, -22.4833, 15.8788},
    {4.0429, -2.8089, 0.5000},
    {3.8917, -2.7725, 0.5061},
    {3.2858, -2.3681, 0.4645},
    {2.3005, -1.6112, 0.3833},
    {1.8631, -1.2042, 0.3422},
    {1.8383, -1.1779, 0.3397},
    {1.8382, -1.1779, 0.3396},
    {1.8750, -1.2500, 0.3750},
}};

constexpr std::array<PolyCoeffs, 9> kPolarExpressCifar10{{
    {8.2872, -23.5959, 17.3004},
    {4.1071, -2.9478, 0.5448},
    {3.9487, -2.9089, 0.5518},
    {3.3184, -2.4885, 0.5100},
    {2.3007, -1.6689, 0.4188},
    {1.8913, -1.2680, 0.3768},
    {1.8750, -1.2500, 0.3750},
    {1.8750, -1.2500, 0.3750},
    {1.8750, -1.2500, 0.3750},
}};

}  // namespace

bool PolynomialSchedule::theoretical() const noexcept {
  if (steps.empty()) return true;
  const auto all_equal = [this](const PolyCoeffs& c) {
    return std::all_of(steps.begin(), steps.end(), [&](const PolyCoeffs& s) { return s == c; });
  };
  return all_equal(kCubicNewtonSchulz) || all_equal(kQuinticNewtonSchulz);
}

double PolynomialSchedule::evaluate(double x) const noexcept {
  for (const auto& step : steps) x = step(x);
  return x;
}

PolynomialSchedule cubic_schedule(std::size_t q) {
  return repeated("cubic", kCubicNewtonSchulz, q);
}

PolynomialSchedule quintic_theoretical_schedule(std::size_t q) {
  return repeated("quintic_theoretical", kQuinticNewtonSchulz, q);
}

PolynomialSchedule quintic_empirical_schedule(std::size_t q) {
  if (q < 1) throw PreconditionError("quintic_empirical_schedule: q must be at least 1");
  return repeated("quintic_empirical", kQuinticEmpirical, q);
}

PolynomialSchedule polar_express_schedule(PolarExpressVariant variant) {
  return polar_express_schedule(variant, 9);
}

PolynomialSchedule polar_express_schedule(PolarExpressVariant variant, std::size_t q) {
  const auto& table =
      variant == PolarExpressVariant::nanogpt ? kPolarExpressNanogpt : kPolarExpressCifar10;
  PolynomialSchedule out;
  out.name = variant == PolarExpressVariant::nanogpt ? "polar_express_nanogpt"
                                                     : "polar_express_cifar10";
  for (std::size_t t = 0; t < q; ++t) out.steps.push_back(table[std::min(t, table.size() - 1)]);
  return out;
}

PolynomialSchedule named_schedule(const std::string& name, std::size_t q) {
  if (name == "cubic") return cubic_schedule(q);
  if (name == "quintic_theoretical") return quintic_theoretical_schedule(q);
  if (name == "quintic_empirical") {
    if (q < 1) throw ConfigError("polar.q", "quintic_empirical needs q >= 1");
    return quintic_empirical_schedule(q);
  }
  if (name == "polar_express_nanogpt") {
    return polar_express_schedule(PolarExpressVariant::nanogpt, q);
  }
  if (name == "polar_express_cifar10") {
    return polar_express_schedule(PolarExpressVariant::cifar10, q);
  }
  throw ConfigError("polar.schedule", "unknown schedule '" + name + "'");
}

void PolarConfig::validate() const {
  if (delta_rule == DeltaRule::explicit_value && !(delta_value > 0.0)) {
    throw PreconditionError("explicit delta must be strictly positive");
  }
}

double resolve_delta(const Matrix& m, const PolarConfig& cfg) {
  switch (cfg.delta_rule) {
    case DeltaRule::frobenius_norm:
      return frobenius_norm(m);
    case DeltaRule::operator_norm:
    case DeltaRule::reduced_operator_norm:
      return operator_norm(m);
    case DeltaRule::explicit_value:
      cfg.validate();
      return cfg.delta_value;
  }
  return frobenius_norm(m);
}

Matrix exact_polar(const Matrix& m) {
  const Svd f = svd(m);
  return matmul_nt(f.u, f.v);
}

Matrix apply_polynomial_step(const Matrix& z, const PolyCoeffs& coeffs) {
  // Tall or square: Z (a I + b G + c G^2) with G = Z^T Z (cols x cols).
  // Wide: (a I + b G + c G^2) Z with G = Z Z^T (rows x rows).
  const bool tall = z.cols() <= z.rows();
  const Matrix gram = tall ? matmul_tn(z, z) : matmul_nt(z, z);
  Matrix poly = gram * coeffs.b;
  if (coeffs.c != 0.0) poly += matmul(gram, gram) * coeffs.c;
  Matrix out = tall ? matmul(z, poly) : matmul(poly, z);
  return axpby(coeffs.a, z, 1.0, out);
}

PolarResult inexact_polar(const Matrix& m, const PolarConfig& cfg) {
  if (cfg.solver != PolarSolver::polynomial) {
    throw PreconditionError("inexact_polar needs the polynomial solver");
  }
  if (m.empty() || m.is_zero()) throw DegenerateInputError("inexact_polar of a zero matrix");
  cfg.validate();

  PolarResult result;
  result.delta = resolve_delta(m, cfg);
  if (cfg.delta_rule == DeltaRule::explicit_value && cfg.schedule.theoretical()) {
    result.bound_guaranteed = result.delta >= operator_norm(m);
  }
  Matrix z = m / result.delta;
  for (const auto& step : cfg.schedule.steps) z = apply_polynomial_step(z, step);
  result.value = std::move(z);
  return result;
}

double prop1_gamma(std::span<const double> sigma, double delta, const PolynomialSchedule& schedule) {
  if (sigma.empty()) throw PreconditionError("prop1_gamma: empty spectrum");
  double sigma_max = 0.0;
  for (double s : sigma) {
    if (!(s > 0.0)) throw PreconditionError("prop1_gamma: singular values must be positive");
    sigma_max = std::max(sigma_max, s);
  }
  if (delta < sigma_max * (1.0 - kDeltaSlack)) throw PreconditionError("prop1_gamma: delta below the largest singular value");

  double aligned = 0.0;
  double total = 0.0;
  for (double s : sigma) {
    aligned += s * schedule.evaluate(s / delta);
    total += s;
  }
  return 1.0 - aligned / total;
}

std::string to_string(DeltaRule rule) {
  switch (rule) {
    case DeltaRule::frobenius_norm:
      return "frobenius";
    case DeltaRule::operator_norm:
      return "operator";
    case DeltaRule::explicit_value:
      return "explicit";
    case DeltaRule::reduced_operator_norm:
      return "reduced_operator";
  }
  return "frobenius";
}

std::string to_string(PolarSolver solver) {
  return solver == PolarSolver::exact ? "exact" : "polynomial";
}

}  // namespace muonkit
