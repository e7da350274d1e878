#include <gtest/gtest.h>

#include <cmath>

#include "muonkit/errors.hpp"
#include "muonkit/linalg.hpp"
#include "muonkit/noise.hpp"

namespace muonkit {
namespace {

Matrix random_matrix(Index rows, Index cols, RngStream& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = scale * rng.normal();
  return m;
}

Matrix finite_difference_gradient(const Problem& p, const Matrix& x, double h) {
  Matrix g(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      Matrix plus = x;
      Matrix minus = x;
      plus(i, j) += h;
      minus(i, j) -= h;
      g(i, j) = (p.objective(plus) - p.objective(minus)) / (2.0 * h);
    }
  }
  return g;
}

NoiseModel calibrated(double alpha, double sigma0, double sigma1, Index rows, Index cols,
                      std::uint64_t seed = 7) {
  return calibrate(make_noise_model(alpha, sigma0, sigma1), rows, cols,
                   calibration_samples(rows, cols), RngStream(seed, 6));
}

TEST(Problems, GradientsMatchFiniteDifferences) {
  RngStream rng(51, 1);
  const Problem quad = make_quadratic_problem(low_rank_target(5, 4, 3, 0.8, rng));
  const Problem fact = make_factorization_problem(psd_target(5, 2, rng), 3);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix xq = random_matrix(5, 4, rng);
    const Matrix gq = quad.gradient(xq);
    EXPECT_LE(max_abs_diff(gq, finite_difference_gradient(quad, xq, 1e-5)), 1e-8 * (1.0 + frobenius_norm(gq)));
    const Matrix xf = random_matrix(5, 3, rng, 0.5);
    const Matrix gf = fact.gradient(xf);
    EXPECT_LE(max_abs_diff(gf, finite_difference_gradient(fact, xf, 1e-5)), 1e-7 * (1.0 + frobenius_norm(gf)));
  }
  EXPECT_EQ(quad.smoothness, 1.0);
  EXPECT_EQ(quad.objective(quad.target), 0.0);
}

TEST(Problems, TargetsHaveRequestedStructure) {
  RngStream rng(51, 2);
  const Matrix a = low_rank_target(8, 6, 3, 0.5, rng);
  const auto s = singular_values(a);
  EXPECT_NEAR(s[0], 1.0, 1e-12);
  EXPECT_NEAR(s[1], 0.5, 1e-12);
  EXPECT_NEAR(s[2], 0.25, 1e-12);
  EXPECT_LE(s[3], 1e-12);
  const Matrix p = psd_target(6, 2, rng);
  EXPECT_LE(max_abs_diff(p, p.transpose()), 1e-15);
  EXPECT_NEAR(operator_norm(p), 1.0, 1e-12);
  EXPECT_EQ(numerical_rank(p), 2);
}

TEST(Problems, FactorizationProjectionStaysInBall) {
  RngStream rng(51, 3);
  const Problem fact = make_factorization_problem(psd_target(4, 2, rng), 2);
  Matrix x = random_matrix(4, 2, rng, 100.0);
  EXPECT_TRUE(fact.project(x));
  EXPECT_NEAR(frobenius_norm(x), fact.ball_radius, 1e-12 * fact.ball_radius);
  Matrix inside = random_matrix(4, 2, rng, 0.01);
  const Matrix before = inside;
  EXPECT_FALSE(fact.project(inside));
  EXPECT_EQ(inside, before);
}

TEST(NoiseModel, ValidationAndCalibrationPreconditions) {
  EXPECT_THROW(make_noise_model(1.0, 1.0, 0.0).validate(), PreconditionError);
  EXPECT_THROW(make_noise_model(2.5, 1.0, 0.0).validate(), PreconditionError);
  EXPECT_THROW(make_noise_model(1.5, -1.0, 0.0).validate(), PreconditionError);
  NoiseModel bad_tail = make_noise_model(1.5, 1.0, 0.0);
  bad_tail.tail = 1.5;
  EXPECT_THROW(bad_tail.validate(), PreconditionError);
  EXPECT_DOUBLE_EQ(make_noise_model(1.5, 1.0, 0.0).tail, 1.75);
  RngStream rng(51, 4);
  const NoiseModel uncalibrated = make_noise_model(1.5, 1.0, 0.0);
  EXPECT_THROW(sample_noise(uncalibrated, 4, 4, 0.0, rng), PreconditionError);
  const NoiseModel model = calibrated(1.5, 1.0, 0.0, 4, 4);
  EXPECT_TRUE(model.calibrated_for(4, 4));
  EXPECT_THROW(sample_noise(model, 4, 5, 0.0, rng), PreconditionError);
}

TEST(NoiseModel, SilentModelIsZeroAndConsumesNothing) {
  const NoiseModel silent = make_noise_model(1.5, 0.0, 0.0);
  RngStream rng(51, 5);
  const RngStream before = rng;
  EXPECT_EQ(sample_noise(silent, 3, 4, 2.0, rng), Matrix::zeros(3, 4));
  RngStream fresh = before;
  EXPECT_EQ(rng.next_u64(), fresh.next_u64());
  RngStream rng2(51, 6);
  const Problem quad = make_quadratic_problem(low_rank_target(3, 4, 2, 0.5, rng2));
  const Matrix x = random_matrix(3, 4, rng2);
  EXPECT_EQ(gradient_oracle(quad, x, 5, silent, rng2), quad.gradient(x));
  EXPECT_EQ(empirical_alpha_moment(silent, 1.5, 3, 4, 1000, RngStream(1, 1)).mean, 0.0);
}

TEST(NoiseModel, EntriesAreSignSymmetric) {
  const NoiseModel model = calibrated(2.0, 1.0, 0.0, 8, 8);
  RngStream rng(51, 7);
  double sum = 0.0;
  double sum_sq = 0.0;
  std::int64_t n = 0;
  for (int draw = 0; draw < 20000; ++draw) {
    const Matrix xi = sample_noise(model, 8, 8, 0.0, rng);
    for (const double v : xi.values()) {
      sum += v;
      sum_sq += v * v;
      ++n;
    }
  }
  const double mean = sum / static_cast<double>(n);
  const double se = std::sqrt((sum_sq / static_cast<double>(n) - mean * mean) / static_cast<double>(n));
  EXPECT_LE(std::abs(mean), 3.0 * se);
}

TEST(NoiseModel, AlphaTwoCalibrationIsExact) {
  const NoiseModel model = calibrated(2.0, 1.0, 0.0, 8, 8);
  EXPECT_LE(model.calibration_se, 1e-15);
  const MomentEstimate unit = unit_alpha_moment(2.0, 2.25, 8, 8, 1000, RngStream(3, 3));
  EXPECT_NEAR(unit.mean, 64.0 * 2.25 / 0.25, 1e-9);
}

TEST(NoiseModel, CalibratedEstimateWithinBudget) {
  for (const double alpha : {1.25, 1.5, 2.0}) {
    const NoiseModel model = calibrated(alpha, 0.7, 0.0, 6, 6);
    const MomentEstimate est = empirical_alpha_moment(model, alpha, 6, 6, 100000, RngStream(11, 1));
    EXPECT_LE(est.mean, std::pow(0.7, alpha) + 3.0 * est.standard_error) << "alpha " << alpha;
  }
}

// Plain Monte Carlo over 1e5 draws, one fixed stream per alpha. The estimator
// has infinite variance, so this band is not guaranteed; see the README.
TEST(NoiseModel, PlainMonteCarloMomentBand) {
  for (const double alpha : {1.25, 1.5, 2.0}) {
    const NoiseModel model = calibrated(alpha, 1.0, 0.0, 8, 8);
    const MomentEstimate est = empirical_alpha_moment(model, alpha, 8, 8, 100000, RngStream(1, 1));
    EXPECT_GE(est.mean, 0.8) << "alpha " << alpha;
    EXPECT_LE(est.mean, 1.0) << "alpha " << alpha;
  }
}

TEST(NoiseModel, MomentGrowsWithGradientNorm) {
  const NoiseModel model = calibrated(1.5, 0.5, 0.5, 6, 6);
  double previous = 0.0;
  for (const double g : {0.0, 1.0, 2.0, 4.0}) {
    const MomentEstimate est = empirical_alpha_moment(model, 1.5, 6, 6, 20000, RngStream(12, 1), g);
    EXPECT_GT(est.mean, previous);
    previous = est.mean;
  }
}

TEST(GradientOracle, UnbiasedAndConcentratesWithBatch) {
  RngStream rng(51, 8);
  const Problem quad = make_quadratic_problem(low_rank_target(6, 6, 3, 0.8, rng));
  const Matrix x = random_matrix(6, 6, rng);
  const Matrix g = quad.gradient(x);
  const NoiseModel model = calibrated(1.5, 0.5, 0.1, 6, 6);
  for (int call = 0; call < 5; ++call) {
    const Matrix mean = gradient_oracle(quad, x, 10000, model, rng);
    EXPECT_LE(frobenius_norm(mean - g) / frobenius_norm(g), 0.05);
  }
}

TEST(GradientOracle, BatchingShrinksMomentAtOptimum) {
  RngStream rng(51, 9);
  const Problem quad = make_quadratic_problem(low_rank_target(6, 6, 3, 0.8, rng));
  const Matrix x = quad.target;
  for (const double alpha : {1.5, 2.0}) {
    const NoiseModel model = calibrated(alpha, 1.0, 0.0, 6, 6);
    const double b1 = oracle_alpha_moment(quad, x, 1, model, alpha, 20000, RngStream(13, 1)).mean;
    const double b16 = oracle_alpha_moment(quad, x, 16, model, alpha, 20000, RngStream(13, 2)).mean;
    EXPECT_LT(b16, b1 * std::pow(16.0, -(alpha - 1.0)) * 3.0) << "alpha " << alpha;
    double previous = b1;
    for (const std::int64_t b : {2, 4, 8, 16}) {
      const double m = oracle_alpha_moment(quad, x, b, model, alpha, 20000, RngStream(13, 3)).mean;
      EXPECT_LT(m, previous) << "alpha " << alpha << " batch " << b;
      previous = m;
    }
  }
}

TEST(GradientOracle, RejectsBadBatchAndShape) {
  RngStream rng(51, 10);
  const Problem quad = make_quadratic_problem(low_rank_target(3, 3, 2, 0.5, rng));
  const NoiseModel model = calibrated(1.5, 1.0, 0.0, 3, 3);
  EXPECT_THROW(gradient_oracle(quad, Matrix::zeros(3, 3), 0, model, rng), PreconditionError);
  EXPECT_THROW(gradient_oracle(quad, Matrix::zeros(3, 4), 1, model, rng), DimensionError);
}

}  // namespace
}  // namespace muonkit
