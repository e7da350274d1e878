#include <gtest/gtest.h>

#include <cmath>

#include "muonkit/errors.hpp"
#include "muonkit/noise.hpp"
#include "muonkit/verify.hpp"

namespace muonkit {
namespace {

PolarConfig explicit_delta(PolynomialSchedule schedule, double delta) {
  PolarConfig cfg;
  cfg.schedule = std::move(schedule);
  cfg.delta_rule = DeltaRule::explicit_value;
  cfg.delta_value = delta;
  return cfg;
}

TEST(EstimateGammaNu, ExactPolarHasZeroConstants) {
  RngStream rng(61, 1);
  const std::vector<double> sigma{3.0, 1.0, 0.2};
  const Matrix m = matrix_with_spectrum(5, 4, sigma, rng);
  const auto est = estimate_gamma_nu(m, [](const Matrix& x, RngStream&) { return exact_polar(x); }, 4,
                                     RngStream(61, 2));
  EXPECT_LE(std::abs(est.gamma_hat), 1e-14);
  EXPECT_LE(std::abs(est.nu_hat), 1e-14);
  EXPECT_EQ(est.trials, 4);
  EXPECT_EQ(est.degenerate_trials, 0);
}

TEST(EstimateGammaNu, CubicOnDiagonalMatchesClosedForm) {
  const PolarConfig cfg = explicit_delta(cubic_schedule(1), 2.0);
  const auto est = estimate_gamma_nu(Matrix::diagonal({2.0, 1.0}),
                                     [&](const Matrix& x, RngStream&) { return inexact_polar(x, cfg).value; }, 1,
                                     RngStream(61, 3));
  EXPECT_NEAR(est.gamma_hat, 0.10416666666666663, 1e-15);
  EXPECT_NEAR(est.nu_hat, 0.0, 1e-15);
}

TEST(EstimateGammaNu, DegenerateOutputsAreCountedAndExcluded) {
  int call = 0;
  const auto est = estimate_gamma_nu(
      Matrix::diagonal({1.0, 1.0}),
      [&](const Matrix& x, RngStream&) { return (call++ % 2 == 0) ? Matrix::zeros(2, 2) : exact_polar(x); }, 6,
      RngStream(61, 4));
  EXPECT_EQ(est.degenerate_trials, 3);
  EXPECT_LE(std::abs(est.gamma_hat), 1e-15);
}

TEST(CheckProp2, HoldsOnSeededGappedInstances) {
  RngStream rng(61, 5);
  int passed = 0;
  for (int instance = 0; instance < 20; ++instance) {
    std::vector<double> sigma{5.0 + rng.uniform(), 4.0 + rng.uniform()};
    for (int j = 0; j < 6; ++j) sigma.push_back(1.5 * rng.uniform());
    std::sort(sigma.begin(), sigma.end(), std::greater<>());
    const Matrix m = matrix_with_spectrum(12, 10, sigma, rng);
    const SketchConfig scfg{2, 2, instance % 2, SketchKind::gaussian};
    const PolarConfig pcfg = explicit_delta(quintic_theoretical_schedule(6), sigma[0]);
    const auto r = check_prop2(m, scfg, pcfg, 400, rng.substream(static_cast<std::uint64_t>(instance)));
    EXPECT_GT(r.bound, 0.0) << "instance " << instance;
    EXPECT_GT(r.standard_error, 0.0) << "instance " << instance;
    EXPECT_TRUE(r.operator_passes) << "instance " << instance << " max " << r.max_operator_norm;
    if (r.passed()) ++passed;
  }
  EXPECT_EQ(passed, 20);
}

TEST(CheckProp2, Preconditions) {
  RngStream rng(61, 6);
  const std::vector<double> sigma{3.0, 2.0, 1.0};
  const Matrix m = matrix_with_spectrum(6, 5, sigma, rng);
  PolarConfig pcfg = explicit_delta(quintic_theoretical_schedule(3), 3.0);
  EXPECT_THROW(check_prop2(m, SketchConfig{1, 2, 0, SketchKind::kaczmarz}, pcfg, 10, rng), PreconditionError);
  EXPECT_THROW(check_prop2(m, SketchConfig{3, 2, 0, SketchKind::gaussian}, pcfg, 10, rng), PreconditionError);
  pcfg.delta_rule = DeltaRule::reduced_operator_norm;
  EXPECT_THROW(check_prop2(m, SketchConfig{1, 2, 0, SketchKind::gaussian}, pcfg, 10, rng), PreconditionError);
}

TEST(Lemmas, TheoreticalSchedulesHoldAndEmpiricalOvershoots) {
  for (const auto& schedule : {cubic_schedule(5), quintic_theoretical_schedule(5)}) {
    const auto report = check_polynomial_lemmas(schedule, 10001);
    EXPECT_TRUE(report.theoretical);
    EXPECT_EQ(report.violations(), 0u);
    EXPECT_TRUE(report.passed());
    EXPECT_EQ(report.steps.size(), 5u);
  }
  const auto empirical = check_polynomial_lemmas(quintic_empirical_schedule(5), 10001);
  EXPECT_FALSE(empirical.theoretical);
  EXPECT_GT(empirical.violations(), 0u);
  EXPECT_TRUE(empirical.passed());
  EXPECT_NEAR(empirical.steps.front().max_value, 1.2023686, 1e-6);
  EXPECT_THROW(check_polynomial_lemmas(cubic_schedule(1), 50), PreconditionError);
}

TEST(FlopCounts, ExactIntegers) {
  const auto big = flop_counts(FlopModel{4096, 4096, 256, 1, 5});
  EXPECT_EQ(big.full, 2061584302080u);
  EXPECT_EQ(big.randomized, 48486154240u);
  EXPECT_NEAR(big.ratio, 42.51903114186851, 1e-12);
  const auto wide = flop_counts(FlopModel{8, 12, 3, 0, 2});
  EXPECT_EQ(wide.full, 8192u);
  EXPECT_EQ(wide.randomized, 2700u);
  const auto none = flop_counts(FlopModel{12, 8, 3, 2, 0});
  EXPECT_EQ(none.full, 0u);
  EXPECT_EQ(none.randomized, 4032u);
}

TEST(MeasuredStepFlops, BaselinesAndMomentumVariants) {
  StepFlopConfig cfg;
  cfg.rows = 6;
  cfg.cols = 5;
  cfg.optimizer = OptimizerKind::sgd_momentum;
  EXPECT_EQ(measured_step_flops(cfg), 4u * 30u);
  cfg.optimizer = OptimizerKind::sgd_nesterov;
  EXPECT_EQ(measured_step_flops(cfg), 6u * 30u);
  cfg.optimizer = OptimizerKind::muon_nesterov;
  const auto nesterov = measured_step_flops(cfg);
  cfg.optimizer = OptimizerKind::muon_polyak;
  EXPECT_EQ(nesterov - measured_step_flops(cfg), 2u * 30u);
}

TEST(MeasuredStepFlops, RatioTracksLeadingOrderModel) {
  StepFlopConfig cfg;
  cfg.rows = 4096;
  cfg.cols = 4096;
  cfg.polar.schedule = quintic_theoretical_schedule(5);
  const auto full = measured_step_flops(cfg);
  cfg.sketch = SketchConfig{254, 2, 1, SketchKind::gaussian};
  const auto randomized = measured_step_flops(cfg);
  const double measured = static_cast<double>(full) / static_cast<double>(randomized);
  const double model = flop_counts(FlopModel{4096, 4096, 256, 1, 5}).ratio;
  EXPECT_LE(std::abs(measured - model) / model, 0.15);
  EXPECT_LT(randomized, full);
}

TEST(MeasuredStepFlops, RejectsUnrunnableConfigs) {
  StepFlopConfig cfg;
  cfg.rows = 0;
  cfg.cols = 4;
  EXPECT_THROW(measured_step_flops(cfg), ConfigError);
  cfg.rows = 4;
  cfg.sketch = SketchConfig{3, 2, 0, SketchKind::gaussian};
  EXPECT_THROW(measured_step_flops(cfg), ConfigError);
  cfg.sketch = SketchConfig{1, 1, 0, SketchKind::gaussian};
  cfg.polar.solver = PolarSolver::exact;
  EXPECT_THROW(measured_step_flops(cfg), ConfigError);
}

}  // namespace
}  // namespace muonkit
