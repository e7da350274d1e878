#include <gtest/gtest.h>

#include <cmath>

#include "muonkit/errors.hpp"
#include "muonkit/linalg.hpp"
#include "muonkit/noise.hpp"
#include "muonkit/optimizer.hpp"
#include "muonkit/polar.hpp"

namespace muonkit {
namespace {

Matrix random_matrix(Index rows, Index cols, RngStream& rng) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

const PolarMap kExact = [](const Matrix& m) { return exact_polar(m); };

TEST(MuonStep, TwoStepHandUnroll) {
  MuonState s = make_muon_state(Matrix::diagonal({0.25, 0.75}), MomentumKind::nesterov, 0.5, 0.1);
  s = muon_step(s, Matrix::diagonal({1.0, -2.0}), kExact);
  s = muon_step(s, Matrix::diagonal({0.4, -0.5}), kExact);
  EXPECT_EQ(s.k, 2);
  EXPECT_LE(max_abs_diff(s.x, Matrix::diagonal({0.05, 0.95})), 1e-12);
}

TEST(MuonStep, ZeroMomentumMeansPlainPolarStep) {
  RngStream rng(41, 1);
  const Matrix x0 = random_matrix(4, 3, rng);
  const Matrix g = random_matrix(4, 3, rng);
  const MuonState s = muon_step(make_muon_state(x0, MomentumKind::nesterov, 0.0, 0.2), g, kExact);
  EXPECT_LE(max_abs_diff(s.x, x0 - 0.2 * exact_polar(g)), 1e-14);
}

TEST(MuonStep, ZeroGradientsNeverMoveAndSkipPolar) {
  MuonState s = make_muon_state(Matrix::diagonal({1.0, 2.0}), MomentumKind::polyak, 0.9, 0.1);
  int calls = 0;
  const PolarMap counting = [&](const Matrix& m) {
    ++calls;
    return exact_polar(m);
  };
  for (int k = 0; k < 5; ++k) s = muon_step(s, Matrix::zeros(2, 2), counting);
  EXPECT_EQ(s.x, Matrix::diagonal({1.0, 2.0}));
  EXPECT_EQ(calls, 0);
}

TEST(MuonStep, PolyakUsesBufferDirectly) {
  MuonState s = make_muon_state(Matrix::zeros(1, 2), MomentumKind::polyak, 0.5, 1.0);
  const Matrix g = Matrix::from_rows({{1.0, 2.0}});
  EXPECT_EQ(momentum_matrix(s, g), g);
  s = muon_step(s, g, [](const Matrix& m) { return m; });
  EXPECT_EQ(momentum_matrix(s, g), g * 1.5);
  s.kind = MomentumKind::nesterov;
  EXPECT_EQ(momentum_matrix(s, g), g * 1.75);
}

TEST(MuonStep, ShapeMismatchAndBadParameters) {
  const MuonState s = make_muon_state(Matrix::zeros(2, 2), MomentumKind::nesterov, 0.5, 0.1);
  EXPECT_THROW(muon_step(s, Matrix::zeros(2, 3), kExact), DimensionError);
  EXPECT_THROW(make_muon_state(Matrix::zeros(2, 2), MomentumKind::nesterov, 1.0, 0.1), PreconditionError);
  EXPECT_THROW(make_muon_state(Matrix::zeros(2, 2), MomentumKind::nesterov, 0.5, 0.0), PreconditionError);
}

TEST(ScaledMomentum, MatchesDirectPathOverRandomTrajectories) {
  RngStream rng(41, 2);
  for (const double beta : {0.0, 0.5, 0.9, 0.99}) {
    MuonState s = make_muon_state(Matrix::zeros(5, 4), MomentumKind::nesterov, beta, 0.05);
    Matrix g_prev = Matrix::zeros(5, 4);
    Matrix m_tilde = Matrix::zeros(5, 4);
    for (int k = 0; k < 30; ++k) {
      const Matrix g = random_matrix(5, 4, rng);
      if (k == 0) {
        EXPECT_LE(max_abs_diff(scaled_momentum(s, g, g_prev, m_tilde), g * (1.0 - beta * beta)), 1e-15);
      }
      m_tilde = scaled_momentum(s, g, g_prev, m_tilde);
      EXPECT_LE(max_abs_diff(m_tilde, momentum_matrix(s, g) * (1.0 - beta)), 1e-12);
      if (beta == 0.0) {
        EXPECT_EQ(m_tilde, g);
      }
      s = muon_step(s, g, kExact);
      g_prev = g;
    }
  }
}

TEST(ScaledMomentum, RejectsPolyakAndMismatchedShapes) {
  const MuonState polyak = make_muon_state(Matrix::zeros(2, 2), MomentumKind::polyak, 0.5, 0.1);
  EXPECT_THROW(scaled_momentum(polyak, Matrix::zeros(2, 2), Matrix::zeros(2, 2), Matrix::zeros(2, 2)),
               PreconditionError);
  const MuonState nesterov = make_muon_state(Matrix::zeros(2, 2), MomentumKind::nesterov, 0.5, 0.1);
  EXPECT_THROW(scaled_momentum(nesterov, Matrix::zeros(2, 2), Matrix::zeros(2, 3), Matrix::zeros(2, 2)),
               DimensionError);
}

TEST(MuonStep, ExactPolarIsScaleInvariant) {
  RngStream rng(41, 3);
  const double beta = 0.8;
  MuonState a = make_muon_state(random_matrix(4, 4, rng), MomentumKind::nesterov, beta, 0.1);
  for (int k = 0; k < 5; ++k) {
    const Matrix g = random_matrix(4, 4, rng);
    const Matrix m = momentum_matrix(a, g);
    const Matrix x_direct = a.x - a.eta * exact_polar(m);
    const Matrix x_scaled = a.x - a.eta * exact_polar(m * (1.0 - beta));
    EXPECT_LE(max_abs_diff(x_direct, x_scaled), 1e-12);
    a = muon_step(a, g, kExact);
    EXPECT_LE(max_abs_diff(a.x, x_direct), 1e-12);
  }
}

TEST(MuonStep, UpdateNormBoundWithTheoreticalSchedule) {
  RngStream rng(41, 4);
  PolarConfig cfg;
  cfg.schedule = quintic_theoretical_schedule(4);
  cfg.delta_rule = DeltaRule::operator_norm;
  const PolarMap polar = [&](const Matrix& m) { return inexact_polar(m, cfg).value; };
  MuonState s = make_muon_state(random_matrix(6, 4, rng), MomentumKind::nesterov, 0.9, 0.07);
  for (int k = 0; k < 50; ++k) {
    const Matrix before = s.x;
    s = muon_step(s, random_matrix(6, 4, rng), polar);
    EXPECT_LE(frobenius_norm(s.x - before), 0.07 * std::sqrt(4.0) * (1.0 + 1e-10));
  }
}

TEST(MuonStep, DeterministicDescentOnQuadratic) {
  RngStream rng(41, 5);
  const Problem problem = make_quadratic_problem(low_rank_target(16, 12, 6, 0.8, rng));
  const Schedule sched = corollary1_schedule(500);
  MuonState s = make_muon_state(Matrix::zeros(16, 12), MomentumKind::nesterov, sched.beta, sched.eta);
  const double initial = frobenius_norm(problem.gradient(s.x));
  double best = initial;
  for (int k = 0; k < 500; ++k) {
    const Matrix g = problem.gradient(s.x);
    best = std::min(best, frobenius_norm(g));
    s = muon_step(s, g, kExact);
  }
  EXPECT_LT(best, 0.1 * initial);
}

TEST(Schedules, FrozenValues) {
  const auto t16 = theorem1_schedule(16, 2.0);
  EXPECT_NEAR(t16.eta, 0.125, 1e-15);
  EXPECT_NEAR(t16.beta, 0.75, 1e-15);
  const auto c16 = corollary1_schedule(16);
  EXPECT_NEAR(c16.eta, t16.eta, 1e-15);
  EXPECT_NEAR(c16.beta, t16.beta, 1e-15);
  const auto t = theorem1_schedule(10000, 1.5);
  EXPECT_NEAR(t.eta, 0.000630957344480193, 1e-15);
  EXPECT_NEAR(t.beta, 0.996018928294465, 1e-15);
  const auto c4 = corollary1_schedule(4);
  EXPECT_NEAR(c4.eta, 0.3535533905932738, 1e-15);
  EXPECT_NEAR(c4.beta, 0.5, 1e-15);
  for (std::int64_t k = 2; k < 100000; k *= 3) {
    const auto s = corollary1_schedule(k);
    EXPECT_GT(s.beta, 0.0);
    EXPECT_LT(s.beta, 1.0);
    EXPECT_NEAR(theorem1_schedule(k, 2.0).eta, s.eta, 1e-15);
  }
}

TEST(Schedules, Preconditions) {
  EXPECT_THROW(theorem1_schedule(1, 2.0), PreconditionError);
  EXPECT_THROW(theorem1_schedule(10, 1.0), PreconditionError);
  EXPECT_THROW(theorem1_schedule(10, 2.5), PreconditionError);
  EXPECT_THROW(corollary1_schedule(1), PreconditionError);
}

TEST(MinBatchSize, FrozenValuesAndMonotonicity) {
  EXPECT_EQ(min_batch_size(2.0, 0.0, 4, 0.0, 0.0), 1);
  EXPECT_EQ(min_batch_size(2.0, 0.1, 4, 0.0, 0.0), 3);
  EXPECT_THROW(min_batch_size(1.0, 0.1, 4, 0.0, 0.0), PreconditionError);
  EXPECT_THROW(min_batch_size(2.0, 0.1, 4, 1.0, 0.0), PreconditionError);
  std::int64_t previous = 0;
  for (double s1 = 0.0; s1 < 0.3; s1 += 0.02) {
    const auto b = min_batch_size(1.5, s1, 8, 0.2, 0.1);
    EXPECT_GE(b, previous);
    previous = b;
  }
  previous = 0;
  for (double g = 0.0; g < 0.9; g += 0.1) {
    const auto b = min_batch_size(1.5, 0.05, 8, g, 0.1);
    EXPECT_GE(b, previous);
    previous = b;
  }
  previous = 0;
  for (double nu = 0.0; nu < 2.0; nu += 0.25) {
    const auto b = min_batch_size(1.5, 0.05, 8, 0.2, nu);
    EXPECT_GE(b, previous);
    previous = b;
  }
}

TEST(Baselines, SgdNesterovHandUnroll) {
  BaselineHyper hyper;
  hyper.lr = 0.1;
  hyper.momentum = 0.9;
  BaselineState s = make_baseline_state(Matrix(1, 1));
  for (int k = 0; k < 3; ++k) {
    const Matrix g = s.x - Matrix(1, 1, {2.0});
    s = baseline_step(BaselineKind::sgd_nesterov, s, g, hyper);
  }
  EXPECT_NEAR(s.x(0, 0), 1.345358, 1e-12);
}

TEST(Baselines, MomentumFreeSgdIsGradientDescent) {
  RngStream rng(41, 6);
  const Matrix a = random_matrix(3, 3, rng);
  BaselineHyper hyper;
  hyper.lr = 0.3;
  hyper.momentum = 0.0;
  for (const auto kind : {BaselineKind::sgd_nesterov, BaselineKind::sgd_momentum}) {
    BaselineState s = make_baseline_state(random_matrix(3, 3, rng));
    const Matrix x0 = s.x;
    s = baseline_step(kind, s, x0 - a, hyper);
    EXPECT_LE(max_abs_diff(s.x, x0 - 0.3 * (x0 - a)), 1e-15);
  }
}

TEST(Baselines, AdamWWithZeroGradientOnlyDecays) {
  BaselineHyper hyper;
  hyper.lr = 0.01;
  hyper.weight_decay = 0.1;
  BaselineState s = make_baseline_state(Matrix::diagonal({1.0, -2.0}));
  for (int k = 0; k < 4; ++k) s = baseline_step(BaselineKind::adamw, s, Matrix::zeros(2, 2), hyper);
  const double factor = std::pow(1.0 - 0.01 * 0.1, 4);
  EXPECT_LE(max_abs_diff(s.x, Matrix::diagonal({factor, -2.0 * factor})), 1e-15);
}

TEST(Baselines, ShapeMismatch) {
  const BaselineState s = make_baseline_state(Matrix::zeros(2, 2));
  EXPECT_THROW(baseline_step(BaselineKind::adamw, s, Matrix::zeros(3, 2), BaselineHyper{}), DimensionError);
}

}  // namespace
}  // namespace muonkit
