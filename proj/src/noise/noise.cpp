#include "muonkit/noise.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "muonkit/errors.hpp"
#include "muonkit/linalg.hpp"
#include "muonkit/parallel.hpp"

namespace muonkit {

namespace {

constexpr std::int64_t kSampleBlock = 512;

// Symmetric Pareto variate: |x| = U^{-1/tail} >= 1, random sign.
double symmetric_pareto(double tail, RngStream& rng) {
  const double magnitude = std::pow(rng.uniform(), -1.0 / tail);
  return (rng.next_u64() >> 63) != 0 ? magnitude : -magnitude;
}

Matrix pareto_matrix(Index rows, Index cols, double tail, double scale, RngStream& rng) {
  Matrix out(rows, cols);
  for (double& v : out.values()) v = scale * symmetric_pareto(tail, rng);
  return out;
}

Matrix haar_columns(Index rows, Index cols, RngStream& rng) {
  Matrix g(rows, cols);
  for (double& v : g.values()) v = rng.normal();
  return orthonormal_basis(g);
}

double pow_alpha(double norm, double alpha) { return norm == 0.0 ? 0.0 : std::pow(norm, alpha); }

}  // namespace

double Problem::objective(const Matrix& x) const {
  if (kind == ProblemKind::quadratic) {
    const double r = frobenius_norm(x - target);
    return 0.5 * r * r;
  }
  const double r = frobenius_norm(matmul_nt(x, x) - target);
  return 0.25 * r * r;
}

Matrix Problem::gradient(const Matrix& x) const {
  if (!x.same_shape(Matrix(rows, cols))) throw DimensionError("gradient: wrong parameter shape");
  if (kind == ProblemKind::quadratic) return x - target;
  return matmul(matmul_nt(x, x) - target, x);
}

bool Problem::project(Matrix& x) const {
  if (ball_radius <= 0.0) return false;
  const double norm = frobenius_norm(x);
  if (norm <= ball_radius) return false;
  x *= ball_radius / norm;
  return true;
}

Problem make_quadratic_problem(Matrix target) {
  Problem p;
  p.kind = ProblemKind::quadratic;
  p.rows = target.rows();
  p.cols = target.cols();
  p.target = std::move(target);
  p.smoothness = 1.0;
  return p;
}

Problem make_factorization_problem(Matrix target, Index factor_cols) {
  if (target.rows() != target.cols()) throw DimensionError("factorization target must be square");
  if (max_abs_diff(target, target.transpose()) > 1e-12 * (1.0 + max_abs(target))) {
    throw PreconditionError("factorization target must be symmetric");
  }
  Problem p;
  p.kind = ProblemKind::factorization;
  p.rows = target.rows();
  p.cols = factor_cols;
  p.ball_radius = 10.0 * std::sqrt(frobenius_norm(target));
  p.smoothness = 3.0 * p.ball_radius * p.ball_radius + operator_norm(target);
  p.target = std::move(target);
  return p;
}

Matrix matrix_with_spectrum(Index rows, Index cols, std::span<const double> sigma, RngStream& rng) {
  const auto k = static_cast<Index>(sigma.size());
  if (k == 0 || k > std::min(rows, cols)) throw DimensionError("spectrum length out of range");
  Matrix u = haar_columns(rows, k, rng);
  const Matrix v = haar_columns(cols, k, rng);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < k; ++j) u(i, j) *= sigma[static_cast<std::size_t>(j)];
  }
  return matmul_nt(u, v);
}

Matrix low_rank_target(Index rows, Index cols, Index rank, double decay, RngStream& rng) {
  std::vector<double> sigma(static_cast<std::size_t>(rank));
  for (Index j = 0; j < rank; ++j) sigma[static_cast<std::size_t>(j)] = std::pow(decay, j);
  return matrix_with_spectrum(rows, cols, sigma, rng);
}

Matrix psd_target(Index n, Index rank, RngStream& rng) {
  Matrix a0(n, rank);
  for (double& v : a0.values()) v = rng.normal();
  Matrix a = matmul_nt(a0, a0);
  a /= operator_norm(a);
  // Symmetrize exactly; the product is symmetric only up to rounding.
  return (a + a.transpose()) * 0.5;
}

void NoiseModel::validate() const {
  if (!(alpha > 1.0 && alpha <= 2.0)) throw PreconditionError("noise: alpha must lie in (1, 2]");
  if (sigma0 < 0.0 || sigma1 < 0.0) throw PreconditionError("noise: sigmas must be nonnegative");
  if (!(tail > alpha)) throw PreconditionError("noise: tail exponent must exceed alpha");
}

NoiseModel make_noise_model(double alpha, double sigma0, double sigma1) {
  NoiseModel m;
  m.alpha = alpha;
  m.sigma0 = sigma0;
  m.sigma1 = sigma1;
  m.tail = alpha + kDefaultTailMargin;
  m.validate();
  return m;
}

MomentEstimate unit_alpha_moment(double alpha, double tail, Index rows, Index cols,
                                 std::int64_t samples, const RngStream& rng) {
  if (samples < 2) throw PreconditionError("unit_alpha_moment: need at least two samples");
  const auto d = static_cast<double>(rows * cols);
  std::vector<double> residual(static_cast<std::size_t>(samples));
  for_each_block(samples, kSampleBlock, rng, [&](std::int64_t begin, std::int64_t end, RngStream& s) {
    for (std::int64_t j = begin; j < end; ++j) {
      double sum_sq = 0.0;
      double sum_alpha = 0.0;
      for (Index e = 0; e < rows * cols; ++e) {
        const double p = std::abs(symmetric_pareto(tail, s));
        sum_sq += p * p;
        sum_alpha += std::pow(p, alpha);
      }
      residual[static_cast<std::size_t>(j)] = sum_alpha - std::pow(sum_sq, 0.5 * alpha);
    }
  });
  const auto r = mean_and_error(residual);
  MomentEstimate out;
  out.mean = d * tail / (tail - alpha) - r.mean;
  out.standard_error = r.standard_error;
  out.samples = samples;
  return out;
}

std::int64_t calibration_samples(Index rows, Index cols) noexcept {
  const std::int64_t entries = std::max<std::int64_t>(1, rows * cols);
  return std::clamp(kCalibrationDrawBudget / entries, kMinCalibrationSamples, kDefaultCalibrationSamples);
}

NoiseModel calibrate(NoiseModel model, Index rows, Index cols, std::int64_t samples,
                     const RngStream& rng) {
  model.validate();
  const auto unit = unit_alpha_moment(model.alpha, model.tail, rows, cols, samples, rng);
  model.entry_scale = std::pow(kCalibrationTarget / unit.mean, 1.0 / model.alpha);
  model.calibration_se = unit.standard_error / unit.mean;
  model.calibrated_rows = rows;
  model.calibrated_cols = cols;
  return model;
}

Matrix sample_noise(const NoiseModel& model, Index rows, Index cols, double grad_norm,
                    RngStream& rng) {
  if (model.silent()) return Matrix::zeros(rows, cols);
  if (!model.calibrated_for(rows, cols)) {
    throw PreconditionError("sample_noise: model is not calibrated for this shape");
  }
  Matrix xi = model.sigma0 > 0.0
                  ? pareto_matrix(rows, cols, model.tail, model.entry_scale * model.sigma0, rng)
                  : Matrix::zeros(rows, cols);
  const double coupled = model.entry_scale * model.sigma1 * grad_norm;
  if (coupled > 0.0) xi += pareto_matrix(rows, cols, model.tail, coupled, rng);
  return xi;
}

Matrix gradient_oracle(const Problem& problem, const Matrix& x, std::int64_t batch,
                       const NoiseModel& model, RngStream& rng) {
  if (batch < 1) throw PreconditionError("gradient_oracle: batch must be at least 1");
  Matrix g = problem.gradient(x);
  if (model.silent()) return g;
  const double grad_norm = frobenius_norm(g);
  Matrix noise = Matrix::zeros(g.rows(), g.cols());
  for (std::int64_t i = 0; i < batch; ++i) {
    noise += sample_noise(model, g.rows(), g.cols(), grad_norm, rng);
  }
  return axpby(1.0, g, 1.0 / static_cast<double>(batch), noise);
}

MomentEstimate empirical_alpha_moment(const NoiseModel& model, double alpha, Index rows,
                                      Index cols, std::int64_t samples, const RngStream& rng,
                                      double grad_norm) {
  if (samples < 1) throw PreconditionError("empirical_alpha_moment: need samples");
  std::vector<double> values(static_cast<std::size_t>(samples), 0.0);
  if (!model.silent()) {
    for_each_block(samples, kSampleBlock, rng, [&](std::int64_t begin, std::int64_t end, RngStream& s) {
      for (std::int64_t j = begin; j < end; ++j) {
        const Matrix xi = sample_noise(model, rows, cols, grad_norm, s);
        values[static_cast<std::size_t>(j)] = pow_alpha(frobenius_norm(xi), alpha);
      }
    });
  }
  const auto stats = mean_and_error(values);
  return {stats.mean, stats.standard_error, samples};
}

MomentEstimate oracle_alpha_moment(const Problem& problem, const Matrix& x, std::int64_t batch,
                                   const NoiseModel& model, double alpha, std::int64_t samples,
                                   const RngStream& rng) {
  const Matrix grad = problem.gradient(x);
  std::vector<double> values(static_cast<std::size_t>(samples), 0.0);
  for_each_block(samples, kSampleBlock, rng, [&](std::int64_t begin, std::int64_t end, RngStream& s) {
    for (std::int64_t j = begin; j < end; ++j) {
      const Matrix err = gradient_oracle(problem, x, batch, model, s) - grad;
      values[static_cast<std::size_t>(j)] = pow_alpha(frobenius_norm(err), alpha);
    }
  });
  const auto stats = mean_and_error(values);
  return {stats.mean, stats.standard_error, samples};
}

std::string to_string(ProblemKind kind) {
  return kind == ProblemKind::quadratic ? "quadratic" : "factorization";
}

}  // namespace muonkit
