#include "muonkit/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "muonkit/errors.hpp"
#include "muonkit/linalg.hpp"
#include "muonkit/parallel.hpp"

namespace muonkit {

AssumptionEstimate estimate_gamma_nu(const Matrix& m, const RandomPolarMap& polar,
                                     std::int64_t trials, const RngStream& rng) {
  if (trials < 1) throw PreconditionError("estimate_gamma_nu: need at least one trial");
  if (m.empty() || m.is_zero()) throw DegenerateInputError("estimate_gamma_nu: zero matrix");
  const double nuclear = nuclear_norm(m);

  std::vector<double> ratio(static_cast<std::size_t>(trials));
  std::vector<double> op(static_cast<std::size_t>(trials));
  std::vector<char> degenerate(static_cast<std::size_t>(trials), 0);
  for_each_trial(trials, rng, [&](std::int64_t t, RngStream& stream) {
    const auto tu = static_cast<std::size_t>(t);
    const Matrix out = polar(m, stream);
    if (out.is_zero()) {
      degenerate[tu] = 1;
      return;
    }
    ratio[tu] = inner_product(m, out) / nuclear;
    op[tu] = operator_norm(out);
  });

  AssumptionEstimate est;
  for (std::size_t t = 0; t < ratio.size(); ++t) {
    if (degenerate[t] != 0) {
      ++est.degenerate_trials;
      continue;
    }
    est.alignment_ratios.push_back(ratio[t]);
    est.operator_norms.push_back(op[t]);
  }
  est.trials = static_cast<std::int64_t>(est.alignment_ratios.size());
  if (est.trials == 0) throw DegenerateInputError("estimate_gamma_nu: every trial was degenerate");

  const auto align = mean_and_error(est.alignment_ratios);
  std::vector<double> op_sq;
  op_sq.reserve(est.operator_norms.size());
  for (double v : est.operator_norms) op_sq.push_back(v * v);
  const auto sq = mean_and_error(op_sq);

  est.gamma_hat = 1.0 - align.mean;
  est.gamma_se = align.standard_error;
  const double rms = std::sqrt(sq.mean);
  est.nu_hat = rms - 1.0;
  est.nu_se = rms > 0.0 ? sq.standard_error / (2.0 * rms) : 0.0;
  return est;
}

Prop2Report check_prop2(const Matrix& m, const SketchConfig& scfg, const PolarConfig& pcfg,
                        std::int64_t trials, const RngStream& rng) {
  if (scfg.kind != SketchKind::gaussian) {
    throw PreconditionError("check_prop2: the expectation bound covers Gaussian sketches only");
  }
  if (pcfg.delta_rule == DeltaRule::reduced_operator_norm) {
    throw PreconditionError("check_prop2: delta must be evaluated on the full matrix");
  }
  scfg.validate(m.rows(), m.cols());
  const Svd f = svd(m);
  if (scfg.rank >= f.rank()) {
    throw PreconditionError("check_prop2: target rank must be below the numerical rank");
  }

  Prop2Report report;
  report.trials = trials;
  report.delta = resolve_delta(m, pcfg);
  const auto spectrum = summarize_spectrum(f.sigma, scfg.rank);
  report.bound = prop2_lower_bound(spectrum, scfg.oversampling, scfg.power_iterations, report.delta);
  report.theta_gamma =
      theta_and_gamma(spectrum, scfg.oversampling, scfg.power_iterations, report.delta);

  report.alignments.assign(static_cast<std::size_t>(trials), 0.0);
  std::vector<double> op(static_cast<std::size_t>(trials), 0.0);
  for_each_trial(trials, rng, [&](std::int64_t t, RngStream& stream) {
    const Matrix out = randomized_polar(m, scfg, pcfg, stream);
    report.alignments[static_cast<std::size_t>(t)] = inner_product(m, out);
    op[static_cast<std::size_t>(t)] = operator_norm(out);
  });

  const auto stats = mean_and_error(report.alignments);
  report.mean_alignment = stats.mean;
  report.standard_error = stats.standard_error;
  report.mean_passes =
      report.mean_alignment >= report.bound - kStandardErrorBand * report.standard_error;
  report.max_operator_norm = *std::max_element(op.begin(), op.end());
  report.operator_passes = report.max_operator_norm <= 1.0 + kOperatorNormSlack;
  return report;
}

std::size_t LemmaReport::violations() const noexcept {
  std::size_t count = 0;
  for (const auto& s : steps) {
    count += !s.in_unit_interval;
    count += !s.dominates_identity;
    count += !s.nondecreasing;
  }
  return count;
}

LemmaReport check_polynomial_lemmas(const PolynomialSchedule& schedule, std::size_t grid) {
  if (grid < 100) throw PreconditionError("check_polynomial_lemmas: grid must have >= 100 points");
  LemmaReport report;
  report.theoretical = schedule.theoretical();
  report.grid = grid;
  for (std::size_t t = 0; t < schedule.size(); ++t) {
    const PolyCoeffs& phi = schedule.steps[t];
    StepLemmaResult r;
    r.step = t;
    r.coeffs = phi;
    r.min_value = std::numeric_limits<double>::infinity();
    r.max_value = -std::numeric_limits<double>::infinity();
    r.min_excess = std::numeric_limits<double>::infinity();
    r.min_derivative = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid; ++i) {
      const double x = static_cast<double>(i) / static_cast<double>(grid - 1);
      const double y = phi(x);
      r.min_value = std::min(r.min_value, y);
      r.max_value = std::max(r.max_value, y);
      r.min_excess = std::min(r.min_excess, y - x);
      r.min_derivative = std::min(r.min_derivative, phi.derivative(x));
    }
    r.in_unit_interval = r.min_value >= -kLemmaTolerance && r.max_value <= 1.0 + kLemmaTolerance;
    r.dominates_identity = r.min_excess >= -kLemmaTolerance;
    r.nondecreasing = r.min_derivative >= -kLemmaTolerance;
    report.steps.push_back(r);
  }
  return report;
}

FlopCounts flop_counts(const FlopModel& model) {
  if (model.m <= 0 || model.n <= 0 || model.ell <= 0 || model.h < 0 || model.q < 0) {
    throw PreconditionError("flop_counts: dimensions must be positive");
  }
  if (model.ell > model.d0()) throw PreconditionError("flop_counts: ell exceeds min(m, n)");
  using U = std::uint64_t;
  const U m = static_cast<U>(model.m), n = static_cast<U>(model.n), ell = static_cast<U>(model.ell);
  const U h = static_cast<U>(model.h), q = static_cast<U>(model.q);
  const U d0 = static_cast<U>(model.d0()), d1 = static_cast<U>(model.d1());

  FlopCounts out;
  out.full = q * (4 * d1 * d0 * d0 + 2 * d0 * d0 * d0);
  out.randomized = (4 * h + 6) * m * n * ell + q * (4 * n * ell * ell + 2 * ell * ell * ell);
  out.ratio = static_cast<double>(out.full) / static_cast<double>(out.randomized);
  return out;
}

namespace {

using U = std::uint64_t;

U product(U a, U b, U c) { return 2 * a * b * c; }
U combination(U rows, U cols) { return 2 * rows * cols; }
U scaling(U rows, U cols) { return rows * cols; }
U householder_qr(U rows, U cols) { return 4 * rows * cols * cols; }
U singular_values_cost(U rows, U cols) {
  const U lo = std::min(rows, cols), hi = std::max(rows, cols);
  return 4 * hi * lo * lo;
}
U thin_svd(U rows, U cols) {
  const U lo = std::min(rows, cols), hi = std::max(rows, cols);
  return 6 * hi * lo * lo + 20 * lo * lo * lo;
}

// One apply_polynomial_step on a rows x cols iterate.
U polynomial_step(U rows, U cols, const PolyCoeffs& c) {
  const U lo = std::min(rows, cols), hi = std::max(rows, cols);
  U f = product(hi, lo, lo);  // Gram
  if (c.c != 0.0) {
    f += product(lo, lo, lo);     // Gram^2
    f += combination(lo, lo);     // b G + c G^2
  } else {
    f += scaling(lo, lo);         // b G
  }
  f += product(hi, lo, lo);       // Z times the Gram polynomial
  f += combination(rows, cols);   // a Z + ...
  return f;
}

U delta_cost(DeltaRule rule, bool theoretical, U rows, U cols) {
  switch (rule) {
    case DeltaRule::frobenius_norm:
      return 2 * rows * cols;
    case DeltaRule::operator_norm:
    case DeltaRule::reduced_operator_norm:
      return singular_values_cost(rows, cols);
    case DeltaRule::explicit_value:
      // The guarantee check needs ||M||_op for theoretical schedules.
      return theoretical ? singular_values_cost(rows, cols) : 0;
  }
  return 0;
}

U full_polar_cost(const PolarConfig& polar, U rows, U cols) {
  if (polar.solver == PolarSolver::exact) {
    return thin_svd(rows, cols) + product(rows, std::min(rows, cols), cols);
  }
  U f = delta_cost(polar.delta_rule, polar.schedule.theoretical(), rows, cols);
  f += scaling(rows, cols);
  for (const auto& step : polar.schedule.steps) f += polynomial_step(rows, cols, step);
  return f;
}

U randomized_polar_cost(const PolarConfig& polar, const SketchConfig& sk, U rows, U cols) {
  const U ell = static_cast<U>(sk.ell());
  const U h = static_cast<U>(sk.power_iterations);
  U f = 0;
  if (sk.kind == SketchKind::gaussian) {
    f += product(rows, cols, ell);
  } else {
    f += 2 * rows * cols + scaling(rows, ell);  // column norms, scaled gather
  }
  f += h * 2 * product(rows, cols, ell);
  if (h > 2) f += h * householder_qr(rows, ell);
  f += householder_qr(rows, ell);
  f += product(ell, rows, cols);  // B = Q^T M
  if (polar.delta_rule == DeltaRule::reduced_operator_norm) {
    f += singular_values_cost(ell, cols);
  } else {
    f += delta_cost(polar.delta_rule, polar.schedule.theoretical(), rows, cols);
  }
  f += scaling(ell, cols);
  for (const auto& step : polar.schedule.steps) f += polynomial_step(ell, cols, step);
  f += product(rows, ell, cols);  // lift
  return f;
}

}  // namespace

std::uint64_t measured_step_flops(const StepFlopConfig& cfg) {
  if (cfg.rows <= 0 || cfg.cols <= 0) throw ConfigError("problem", "dimensions must be positive");
  const U rows = static_cast<U>(cfg.rows), cols = static_cast<U>(cfg.cols);

  switch (cfg.optimizer) {
    case OptimizerKind::sgd_momentum:
      return 2 * combination(rows, cols);
    case OptimizerKind::sgd_nesterov:
      return 3 * combination(rows, cols);
    case OptimizerKind::adamw:
      // first moment 2mn, second moment 3mn, decay mn, bias-corrected update 7mn
      return 13 * rows * cols;
    case OptimizerKind::muon_nesterov:
    case OptimizerKind::muon_polyak:
      break;
  }

  U f = combination(rows, cols);  // C_k
  if (cfg.optimizer == OptimizerKind::muon_nesterov) f += combination(rows, cols);  // M_k
  if (cfg.sketch) {
    if (cfg.polar.solver != PolarSolver::polynomial) {
      throw ConfigError("sketch", "randomized polar needs the polynomial solver");
    }
    if (cfg.sketch->ell() > std::min(cfg.rows, cfg.cols)) {
      throw ConfigError("sketch.rank", "rank + oversampling exceeds min(rows, cols)");
    }
    f += randomized_polar_cost(cfg.polar, *cfg.sketch, rows, cols);
  } else {
    f += full_polar_cost(cfg.polar, rows, cols);
  }
  f += combination(rows, cols);  // X_{k+1}
  return f;
}

}  // namespace muonkit
