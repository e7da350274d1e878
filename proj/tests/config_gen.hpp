#pragma once

#include <algorithm>
#include <string>

#include "muonkit/config.hpp"
#include "muonkit/rng.hpp"

namespace muonkit {

/// Valid configuration with every field drawn at random.
inline RunConfig random_config(RngStream& rng) {
  const auto pick = [&](std::uint64_t n) { return rng.below(n); };
  const auto real = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  RunConfig cfg;
  cfg.problem.kind = pick(2) ? ProblemKind::factorization : ProblemKind::quadratic;
  cfg.problem.rows = 4 + static_cast<Index>(pick(60));
  cfg.problem.cols = 4 + static_cast<Index>(pick(60));
  cfg.problem.rank = 1 + static_cast<Index>(pick(4));
  cfg.problem.decay = real(0.1, 1.0);
  cfg.problem.init_scale = cfg.problem.kind == ProblemKind::factorization ? real(0.01, 1.0) : (pick(2) ? 0.0 : real(0.0, 1.0));
  cfg.problem.seed = rng.next_u64();

  const OptimizerKind kinds[] = {OptimizerKind::muon_nesterov, OptimizerKind::muon_polyak, OptimizerKind::sgd_momentum,
                                 OptimizerKind::sgd_nesterov, OptimizerKind::adamw};
  cfg.optimizer.kind = kinds[pick(5)];
  const ScheduleSource sources[] = {ScheduleSource::theorem1, ScheduleSource::corollary1, ScheduleSource::manual};
  cfg.optimizer.schedule = sources[pick(3)];
  cfg.optimizer.alpha = real(1.01, 2.0);
  cfg.optimizer.steps = 2 + static_cast<std::int64_t>(pick(5000));
  cfg.optimizer.batch = 1 + static_cast<std::int64_t>(pick(64));
  cfg.optimizer.eta = real(1e-5, 1.0);
  cfg.optimizer.beta = real(0.0, 0.999);
  cfg.optimizer.weight_decay = pick(2) ? 0.0 : real(0.0, 0.1);

  cfg.polar.solver = pick(4) ? PolarSolver::polynomial : PolarSolver::exact;
  const std::size_t q = 1 + pick(9);
  switch (pick(6)) {
    case 0: cfg.polar.schedule = cubic_schedule(q); break;
    case 1: cfg.polar.schedule = quintic_theoretical_schedule(q); break;
    case 2: cfg.polar.schedule = quintic_empirical_schedule(q); break;
    case 3: cfg.polar.schedule = named_schedule("polar_express_nanogpt", q); break;
    case 4: cfg.polar.schedule = named_schedule("polar_express_cifar10", q); break;
    default: {
      cfg.polar.schedule.name = "custom";
      cfg.polar.schedule.steps.clear();
      for (std::size_t i = 0; i < q; ++i) {
        cfg.polar.schedule.steps.push_back({real(-5, 5), real(-5, 5), real(-5, 5)});
      }
    }
  }
  const DeltaRule rules[] = {DeltaRule::frobenius_norm, DeltaRule::operator_norm, DeltaRule::explicit_value,
                             DeltaRule::reduced_operator_norm};
  cfg.polar.delta_rule = rules[pick(cfg.polar.solver == PolarSolver::exact ? 3 : 4)];
  if (cfg.polar.delta_rule == DeltaRule::explicit_value) cfg.polar.delta_value = real(0.1, 100.0);

  if (is_muon(cfg.optimizer.kind) && cfg.polar.solver == PolarSolver::polynomial && pick(2)) {
    SketchConfig sk;
    const int dmin = static_cast<int>(std::min(cfg.problem.rows, cfg.problem.cols));
    sk.oversampling = 2;
    sk.rank = 1 + static_cast<int>(pick(static_cast<std::uint64_t>(dmin - 2)));
    sk.power_iterations = static_cast<int>(pick(4));
    sk.kind = pick(2) ? SketchKind::kaczmarz : SketchKind::gaussian;
    cfg.sketch = sk;
  }

  cfg.noise = make_noise_model(real(1.01, 2.0), real(0.0, 2.0), pick(2) ? 0.0 : real(0.0, 1.0));
  if (pick(2)) cfg.noise.tail = cfg.noise.alpha + real(0.01, 2.0);
  if (pick(2)) {
    cfg.noise.entry_scale = real(1e-4, 1.0);
    cfg.noise.calibration_se = real(0.0, 0.01);
    cfg.noise.calibrated_rows = cfg.problem.rows;
    cfg.noise.calibrated_cols = cfg.problem.cols;
  }
  cfg.seeds.clear();
  for (std::uint64_t i = 0, n = 1 + pick(5); i < n; ++i) cfg.seeds.push_back(rng.next_u64() >> pick(60));
  cfg.output = "out/run_" + std::to_string(pick(1000));
  cfg.verify = pick(2) == 1;
  cfg.verify_trials = 1 + static_cast<std::int64_t>(pick(32));
  return cfg;
}

}  // namespace muonkit
