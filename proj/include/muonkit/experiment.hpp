#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "muonkit/config.hpp"

namespace muonkit {

/// Stream roles. A run seed s in sweep cell c draws role r from
/// RngStream(s, combine_ids(r, c)); the problem target uses
/// RngStream(problem.seed, kRoleTarget) and is shared by every seed and cell.
inline constexpr std::uint64_t kRoleTarget = 1;
inline constexpr std::uint64_t kRoleInit = 2;
inline constexpr std::uint64_t kRoleNoise = 3;
inline constexpr std::uint64_t kRoleSketch = 4;
inline constexpr std::uint64_t kRoleVerify = 5;
inline constexpr std::uint64_t kRoleCalibration = 6;

/// Worker count from MUONKIT_WORKERS, or the OpenMP default when unset.
/// Throws ConfigError when the variable is not a positive integer.
int worker_count();

struct StepRow {
  std::int64_t k = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
  std::uint64_t cumulative_flops = 0;
  std::optional<double> gamma_hat;
  std::optional<double> nu_hat;
};

struct SeedReport {
  std::uint64_t seed = 0;
  std::vector<StepRow> rows;
  double min_grad_norm = 0.0;
  double final_objective = 0.0;
  double final_grad_norm = 0.0;
  std::uint64_t total_flops = 0;
  std::optional<double> mean_gamma_hat;
  std::optional<double> mean_nu_hat;
  std::int64_t projections = 0;  // factorization iterates pulled back onto the ball
  bool aborted = false;
  std::string abort_reason;
};

/// Mean and sample standard deviation across seeds.
struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;
};

struct RunReport {
  std::vector<SeedReport> seeds;
  Aggregate min_grad_norm;
  Aggregate final_objective;
  std::optional<double> mean_gamma_hat;
  std::uint64_t step_flops = 0;
  NoiseModel noise;  // as used, after calibration
  bool aborted = false;
};

struct RunOptions {
  std::uint64_t cell = 0;
  int workers = 0;  // 0: worker_count()
};

/// Runs every seed of `cfg`. When cfg.output is set, writes
///   seed_<s>.csv             k,objective,grad_norm,cumulative_flops,gamma_hat,nu_hat
///   run.summary.csv          one row per seed
///   aggregate.summary.csv    mean and std across seeds
///   grad_norm.dat / .gp      plot data and a gnuplot script
///   config.ini               the resolved configuration
RunReport run_experiment(const RunConfig& cfg, const RunOptions& options = {});

/// The initial noise model with entry_scale fitted for the problem shape, if needed.
NoiseModel resolve_noise(const RunConfig& cfg);

enum class SweepAxis { rank, iterations, horizon, alpha, batch };

/// Accepts rank|s, q|iterations, K|horizon, alpha, batch|B.
SweepAxis parse_sweep_axis(const std::string& name);
std::string to_string(SweepAxis axis);

/// Copy of `cfg` with the axis set to `value`. Throws ConfigError when the
/// value does not fit the template.
RunConfig apply_axis(RunConfig cfg, SweepAxis axis, double value);

struct SweepCell {
  double value = 0.0;
  std::optional<RunReport> report;
  std::string error;  // nonempty when the cell failed before running

  bool failed() const noexcept { return !report.has_value(); }
};

struct SweepTable {
  SweepAxis axis = SweepAxis::horizon;
  std::vector<SweepCell> cells;
  /// Least-squares slope of log(mean min grad norm) against log K (horizon axis only).
  std::optional<double> loglog_slope;
};

/// One run per value, cells in parallel. Cell i writes under <output>/<axis>_<value>/.
/// Also writes sweep_<axis>.csv, sweep_<axis>.summary.csv and, for the horizon
/// axis, sweep_K.loglog.dat.
SweepTable run_sweep(const RunConfig& cfg, SweepAxis axis, std::span<const double> values,
                     const RunOptions& options = {});

}  // namespace muonkit
