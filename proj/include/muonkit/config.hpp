#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "muonkit/noise.hpp"
#include "muonkit/optimizer.hpp"
#include "muonkit/polar.hpp"
#include "muonkit/sketch.hpp"

namespace muonkit {

struct ProblemSpec {
  ProblemKind kind = ProblemKind::quadratic;
  Index rows = 32;
  Index cols = 32;
  Index rank = 8;            // rank of the target A (factorization: inner rank of A0)
  double decay = 0.8;        // quadratic target spectrum: decay^j
  double init_scale = 0.0;   // X0 entries ~ init_scale * N(0, 1); 0 means X0 = 0
  std::uint64_t seed = 1;    // target draw; shared by every run seed

  friend bool operator==(const ProblemSpec&, const ProblemSpec&) = default;
};

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::muon_nesterov;
  ScheduleSource schedule = ScheduleSource::corollary1;
  double alpha = 2.0;  // theorem1 exponent
  std::int64_t steps = 500;
  std::int64_t batch = 1;
  double eta = 0.01;   // manual schedule; learning rate for baselines
  double beta = 0.9;   // manual schedule; momentum / beta1 for baselines
  double weight_decay = 0.0;

  friend bool operator==(const OptimizerSpec&, const OptimizerSpec&) = default;
};

/// One experiment. Round-trips losslessly through `serialize_config` / `parse_config`.
struct RunConfig {
  ProblemSpec problem;
  OptimizerSpec optimizer;
  PolarConfig polar;
  std::optional<SketchConfig> sketch;
  NoiseModel noise;
  std::vector<std::uint64_t> seeds{1};
  std::string output;
  bool verify = false;
  std::int64_t verify_trials = 8;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  /// eta and beta for this configuration's horizon.
  Schedule resolved_schedule() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// INI-style text: [problem], [optimizer], [polar], [sketch], [noise], [run]
/// sections of `key = value` lines; lists are comma separated, ';' starts a comment.
RunConfig parse_config(const std::string& text);
std::string serialize_config(const RunConfig& cfg);
RunConfig load_config(const std::string& path);
void save_config(const RunConfig& cfg, const std::string& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace muonkit
