#include "muonkit/optimizer.hpp"

#include <cmath>
#include <numbers>

#include "muonkit/errors.hpp"

namespace muonkit {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (!a.same_shape(b)) throw DimensionError(std::string(what) + ": shape mismatch");
}

}  // namespace

MuonState make_muon_state(Matrix x0, MomentumKind kind, double beta, double eta) {
  if (!(beta >= 0.0 && beta < 1.0)) throw PreconditionError("muon: beta must lie in [0, 1)");
  if (!(eta > 0.0)) throw PreconditionError("muon: eta must be positive");
  MuonState s;
  s.c = Matrix::zeros(x0.rows(), x0.cols());
  s.x = std::move(x0);
  s.kind = kind;
  s.beta = beta;
  s.eta = eta;
  return s;
}

Matrix momentum_matrix(const MuonState& state, const Matrix& g) {
  require_same_shape(state.x, g, "muon_step");
  Matrix c = axpby(state.beta, state.c, 1.0, g);
  if (state.kind == MomentumKind::polyak) return c;
  return axpby(state.beta, c, 1.0, g);
}

MuonState muon_step(const MuonState& state, const Matrix& g, const PolarMap& polar) {
  require_same_shape(state.x, g, "muon_step");
  MuonState next = state;
  next.c = axpby(state.beta, state.c, 1.0, g);
  const Matrix m = state.kind == MomentumKind::nesterov ? axpby(state.beta, next.c, 1.0, g) : next.c;
  if (!m.is_zero()) {
    const Matrix direction = polar(m);
    require_same_shape(m, direction, "polar map output");
    next.x = axpby(1.0, state.x, -state.eta, direction);
  }
  ++next.k;
  return next;
}

Matrix scaled_momentum(const MuonState& state, const Matrix& g_current, const Matrix& g_previous,
                       const Matrix& m_tilde_previous) {
  if (state.kind != MomentumKind::nesterov) {
    throw PreconditionError("scaled_momentum is defined for Nesterov momentum");
  }
  require_same_shape(g_current, g_previous, "scaled_momentum");
  require_same_shape(g_current, m_tilde_previous, "scaled_momentum");
  const double beta = state.beta;
  const Matrix fresh = axpby(1.0 + beta, g_current, -beta, g_previous);
  return axpby(beta, m_tilde_previous, 1.0 - beta, fresh);
}

Schedule theorem1_schedule(std::int64_t horizon, double alpha) {
  if (horizon < 2) throw PreconditionError("theorem1 schedule: K must be at least 2");
  if (!(alpha > 1.0 && alpha <= 2.0)) throw PreconditionError("theorem1 schedule: alpha must lie in (1, 2]");
  const double k = static_cast<double>(horizon);
  const double denom = 3.0 * alpha - 2.0;
  Schedule s;
  s.eta = std::pow(k, -(2.0 * alpha - 1.0) / denom);
  s.beta = 1.0 - std::pow(k, -alpha / denom);
  s.source = ScheduleSource::theorem1;
  s.horizon = horizon;
  s.alpha = alpha;
  return s;
}

Schedule corollary1_schedule(std::int64_t horizon) {
  if (horizon < 2) throw PreconditionError("corollary1 schedule: K must be at least 2");
  const double k = static_cast<double>(horizon);
  Schedule s;
  s.eta = std::pow(k, -0.75);
  s.beta = 1.0 - 1.0 / std::sqrt(k);
  s.source = ScheduleSource::corollary1;
  s.horizon = horizon;
  s.alpha = 2.0;
  return s;
}

std::int64_t min_batch_size(double alpha, double sigma1, std::int64_t d0, double gamma_bar,
                            double nu_bar) {
  if (!(alpha > 1.0 && alpha <= 2.0)) throw PreconditionError("min_batch_size: alpha must lie in (1, 2]");
  if (!(gamma_bar >= 0.0 && gamma_bar < 1.0)) throw PreconditionError("min_batch_size: gamma_bar must lie in [0, 1)");
  if (sigma1 < 0.0 || nu_bar < 0.0 || d0 < 1) throw PreconditionError("min_batch_size: invalid argument");
  if (sigma1 == 0.0) return 1;
  const double base = 2.0 * std::sqrt(std::numbers::pi) *
                      (1.0 + std::sqrt(static_cast<double>(d0)) * (1.0 + nu_bar)) *
                      std::pow(kBatchMomentConstant, 1.0 / alpha) * sigma1 / (1.0 - gamma_bar);
  const double threshold = std::pow(base, alpha / (alpha - 1.0));
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(threshold)) + 1);
}

BaselineState make_baseline_state(Matrix x0) {
  BaselineState s;
  s.m = Matrix::zeros(x0.rows(), x0.cols());
  s.v = Matrix::zeros(x0.rows(), x0.cols());
  s.x = std::move(x0);
  return s;
}

BaselineState baseline_step(BaselineKind kind, const BaselineState& state, const Matrix& g,
                            const BaselineHyper& hyper) {
  require_same_shape(state.x, g, "baseline_step");
  BaselineState next = state;
  ++next.k;
  switch (kind) {
    case BaselineKind::sgd_momentum:
      next.m = axpby(hyper.momentum, state.m, 1.0, g);
      next.x = axpby(1.0, state.x, -hyper.lr, next.m);
      break;
    case BaselineKind::sgd_nesterov: {
      next.m = axpby(hyper.momentum, state.m, 1.0, g);
      const Matrix look_ahead = axpby(1.0, g, hyper.momentum, next.m);
      next.x = axpby(1.0, state.x, -hyper.lr, look_ahead);
      break;
    }
    case BaselineKind::adamw: {
      next.m = axpby(hyper.beta1, state.m, 1.0 - hyper.beta1, g);
      next.v = state.v * hyper.beta2;
      for (Index i = 0; i < g.size(); ++i) {
        const double gi = g.values()[static_cast<std::size_t>(i)];
        next.v.values()[static_cast<std::size_t>(i)] += (1.0 - hyper.beta2) * gi * gi;
      }
      const double kk = static_cast<double>(next.k);
      const double c1 = 1.0 - std::pow(hyper.beta1, kk);
      const double c2 = 1.0 - std::pow(hyper.beta2, kk);
      next.x = state.x * (1.0 - hyper.lr * hyper.weight_decay);
      for (Index i = 0; i < g.size(); ++i) {
        const auto iu = static_cast<std::size_t>(i);
        const double mhat = next.m.values()[iu] / c1;
        const double vhat = next.v.values()[iu] / c2;
        next.x.values()[iu] -= hyper.lr * mhat / (std::sqrt(vhat) + hyper.eps);
      }
      break;
    }
  }
  return next;
}

bool is_muon(OptimizerKind kind) noexcept {
  return kind == OptimizerKind::muon_nesterov || kind == OptimizerKind::muon_polyak;
}

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::muon_nesterov:
      return "muon_nesterov";
    case OptimizerKind::muon_polyak:
      return "muon_polyak";
    case OptimizerKind::sgd_momentum:
      return "sgd_momentum";
    case OptimizerKind::sgd_nesterov:
      return "sgd_nesterov";
    case OptimizerKind::adamw:
      return "adamw";
  }
  return "muon_nesterov";
}

std::string to_string(MomentumKind kind) {
  return kind == MomentumKind::nesterov ? "nesterov" : "polyak";
}

std::string to_string(ScheduleSource source) {
  switch (source) {
    case ScheduleSource::theorem1:
      return "theorem1";
    case ScheduleSource::corollary1:
      return "corollary1";
    case ScheduleSource::manual:
      return "manual";
  }
  return "manual";
}

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::sgd_momentum:
      return "sgd_momentum";
    case BaselineKind::sgd_nesterov:
      return "sgd_nesterov";
    case BaselineKind::adamw:
      return "adamw";
  }
  return "sgd_momentum";
}

}  // namespace muonkit
