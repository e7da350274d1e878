#include "muonkit/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "muonkit/errors.hpp"
#include "muonkit/linalg.hpp"

namespace muonkit {

void SketchConfig::validate(Index rows, Index cols) const {
  if (rank < 1) throw PreconditionError("sketch: target rank must be at least 1");
  if (oversampling < 2) throw PreconditionError("sketch: oversampling must be at least 2");
  if (power_iterations < 0) throw PreconditionError("sketch: power iterations must be nonnegative");
  if (ell() > std::min(rows, cols)) {
    throw PreconditionError("sketch: rank + oversampling exceeds min(rows, cols)");
  }
}

double SpectrumSummary::nuclear() const noexcept {
  return std::accumulate(sigma.begin(), sigma.end(), 0.0);
}

SpectrumSummary summarize_spectrum(std::span<const double> sigma, int s) {
  if (s < 1 || static_cast<std::size_t>(s) >= sigma.size()) {
    throw PreconditionError("spectrum: need 1 <= s < number of singular values");
  }
  for (std::size_t j = 0; j < sigma.size(); ++j) {
    if (!(sigma[j] >= 0.0)) throw PreconditionError("spectrum: singular values must be nonnegative");
    if (j > 0 && sigma[j] > sigma[j - 1]) throw PreconditionError("spectrum: must be nonincreasing");
  }
  const auto split = static_cast<std::size_t>(s);
  if (!(sigma[split - 1] > 0.0)) throw PreconditionError("spectrum: sigma_s must be positive");

  SpectrumSummary out;
  out.sigma.assign(sigma.begin(), sigma.end());
  out.s = s;
  for (std::size_t j = 0; j < sigma.size(); ++j) {
    (j < split ? out.head : out.tail) += sigma[j] * sigma[j];
  }
  out.gap = sigma[split] / sigma[split - 1];
  return out;
}

Matrix gaussian_sketch(Index n, Index ell, RngStream& rng) {
  Matrix omega(n, ell);
  for (double& v : omega.values()) v = rng.normal();
  return omega;
}

std::vector<double> column_probabilities(const Matrix& m) {
  if (m.empty() || m.is_zero()) throw DegenerateInputError("column probabilities of a zero matrix");
  std::vector<double> pi(static_cast<std::size_t>(m.cols()), 0.0);
  for (Index i = 0; i < m.rows(); ++i) {
    const auto row = m.row(i);
    for (Index j = 0; j < m.cols(); ++j) pi[static_cast<std::size_t>(j)] += row[j] * row[j];
  }
  const double total = std::accumulate(pi.begin(), pi.end(), 0.0);
  for (double& p : pi) p /= total;
  return pi;
}

KaczmarzDraw kaczmarz_draw(const Matrix& m, Index ell, RngStream& rng) {
  const auto pi = column_probabilities(m);
  std::vector<double> cdf(pi.size());
  std::partial_sum(pi.begin(), pi.end(), cdf.begin());

  KaczmarzDraw draw;
  draw.index.reserve(static_cast<std::size_t>(ell));
  draw.scale.reserve(static_cast<std::size_t>(ell));
  for (Index k = 0; k < ell; ++k) {
    const double u = rng.uniform() * cdf.back();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    auto j = static_cast<std::size_t>(std::distance(cdf.begin(), it));
    j = std::min(j, pi.size() - 1);
    // A zero-probability column can only be hit by rounding at a cdf plateau.
    while (pi[j] == 0.0 && j > 0) --j;
    draw.index.push_back(static_cast<Index>(j));
    draw.scale.push_back(1.0 / std::sqrt(static_cast<double>(ell) * pi[j]));
  }
  return draw;
}

Matrix kaczmarz_sketch(const Matrix& m, Index ell, RngStream& rng) {
  const auto draw = kaczmarz_draw(m, ell, rng);
  Matrix omega(m.cols(), ell);
  for (Index k = 0; k < ell; ++k) {
    omega(draw.index[static_cast<std::size_t>(k)], k) = draw.scale[static_cast<std::size_t>(k)];
  }
  return omega;
}

namespace {

// M Omega; for the Kaczmarz sketch this is a scaled column gather.
Matrix sketch_columns(const Matrix& m, const SketchConfig& scfg, RngStream& rng) {
  const Index ell = scfg.ell();
  if (scfg.kind == SketchKind::gaussian) {
    return matmul(m, gaussian_sketch(m.cols(), ell, rng));
  }
  const auto draw = kaczmarz_draw(m, ell, rng);
  Matrix y(m.rows(), ell);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index k = 0; k < ell; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      y(i, k) = m(i, draw.index[ku]) * draw.scale[ku];
    }
  }
  return y;
}

Matrix powered_range(const Matrix& m, Matrix y, int h) {
  for (int t = 0; t < h; ++t) {
    y = matmul(m, matmul_tn(m, y));
    if (h > 2 && !y.is_zero()) y = orthonormal_basis(y);
  }
  return y;
}

}  // namespace

LiftedPolar lifted_polar(const Matrix& m, const SketchConfig& scfg, const PolarConfig& pcfg,
                         RngStream& rng) {
  if (pcfg.solver != PolarSolver::polynomial) {
    throw PreconditionError("randomized polar needs the polynomial solver");
  }
  if (m.empty() || m.is_zero()) throw DegenerateInputError("randomized polar of a zero matrix");
  scfg.validate(m.rows(), m.cols());
  pcfg.validate();

  LiftedPolar out;
  for (out.draws = 1;; ++out.draws) {
    const Matrix y = powered_range(m, sketch_columns(m, scfg, rng), scfg.power_iterations);
    try {
      out.basis = orthonormal_basis(y);
      break;
    } catch (const DegenerateInputError&) {
      if (out.draws == 2) throw DegenerateInputError("randomized polar: sketch is degenerate twice");
    }
  }

  const Matrix reduced = matmul_tn(out.basis, m);
  out.delta = pcfg.delta_rule == DeltaRule::reduced_operator_norm ? operator_norm(reduced)
                                                                  : resolve_delta(m, pcfg);
  if (!(out.delta > 0.0)) throw DegenerateInputError("randomized polar: reduced matrix is zero");

  Matrix z = reduced / out.delta;
  for (const auto& step : pcfg.schedule.steps) z = apply_polynomial_step(z, step);
  out.value = matmul(out.basis, z);
  return out;
}

double prop2_lower_bound(const SpectrumSummary& spec, int p, int h, double delta) {
  if (p < 2) throw PreconditionError("prop2 bound: oversampling must be at least 2");
  if (h < 0) throw PreconditionError("prop2 bound: power iterations must be nonnegative");
  if (delta < spec.sigma.front() * (1.0 - kDeltaSlack)) throw PreconditionError("prop2 bound: delta below sigma_1");
  const double penalty = static_cast<double>(spec.s) / static_cast<double>(p - 1) *
                         std::pow(spec.gap, 4.0 * h) * spec.tail;
  return std::max(0.0, spec.head - penalty) / delta;
}

std::optional<int> choose_power_iterations(const SpectrumSummary& spec, int p) {
  if (p < 2) throw PreconditionError("power iteration rule: oversampling must be at least 2");
  const double s = spec.s;
  if (spec.head > s * spec.tail / (p - 1)) return 0;
  if (spec.gap >= 1.0) return std::nullopt;
  const double ratio = s * spec.tail / ((p - 1) * spec.head);
  return 1 + static_cast<int>(std::floor(std::log(ratio) / (4.0 * std::log(1.0 / spec.gap))));
}

ThetaGamma theta_and_gamma(const SpectrumSummary& spec, int p, int h, double delta) {
  ThetaGamma out;
  out.theta = prop2_lower_bound(spec, p, h, delta) / spec.nuclear();
  out.gamma = 1.0 - out.theta;
  out.degenerate = !(out.theta > 0.0);
  return out;
}

std::string to_string(SketchKind kind) {
  return kind == SketchKind::gaussian ? "gaussian" : "kaczmarz";
}

}  // namespace muonkit
