#include "muonkit/experiment.hpp"

#include <fmt/format.h>
#include <omp.h>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "muonkit/errors.hpp"
#include "muonkit/linalg.hpp"
#include "muonkit/noise.hpp"
#include "muonkit/verify.hpp"

namespace muonkit {

namespace fs = std::filesystem;

int worker_count() {
  const char* env = std::getenv("MUONKIT_WORKERS");
  if (env == nullptr || *env == '\0') return omp_get_max_threads();
  int n = 0;
  const std::string text(env);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
  if (ec != std::errc() || ptr != text.data() + text.size() || n < 1) {
    throw ConfigError("MUONKIT_WORKERS", "expected a positive integer, got '" + text + "'");
  }
  return n;
}

namespace {

std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("run.output", "cannot write '" + path.string() + "'");
  return out;
}

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  if (values.empty()) return a;
  const double n = static_cast<double>(values.size());
  a.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(ss / (n - 1.0));
  }
  return a;
}

Problem build_problem(const ProblemSpec& spec) {
  RngStream rng(spec.seed, kRoleTarget);
  if (spec.kind == ProblemKind::quadratic) {
    return make_quadratic_problem(low_rank_target(spec.rows, spec.cols, spec.rank, spec.decay, rng));
  }
  return make_factorization_problem(psd_target(spec.rows, spec.rank, rng), spec.cols);
}

Matrix initial_point(const ProblemSpec& spec, std::uint64_t seed) {
  Matrix x = Matrix::zeros(spec.rows, spec.cols);
  if (spec.init_scale == 0.0) return x;
  RngStream rng(seed, kRoleInit);
  for (double& v : x.values()) v = spec.init_scale * rng.normal();
  return x;
}

RandomPolarMap make_polar_map(const RunConfig& cfg) {
  if (cfg.polar.solver == PolarSolver::exact) {
    return [](const Matrix& m, RngStream&) { return exact_polar(m); };
  }
  if (cfg.sketch) {
    return [scfg = *cfg.sketch, pcfg = cfg.polar](const Matrix& m, RngStream& rng) {
      return randomized_polar(m, scfg, pcfg, rng);
    };
  }
  return [pcfg = cfg.polar](const Matrix& m, RngStream&) { return inexact_polar(m, pcfg).value; };
}

BaselineKind baseline_kind(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::sgd_nesterov:
      return BaselineKind::sgd_nesterov;
    case OptimizerKind::adamw:
      return BaselineKind::adamw;
    default:
      return BaselineKind::sgd_momentum;
  }
}

constexpr const char* kStepHeader = "k,objective,grad_norm,cumulative_flops,gamma_hat,nu_hat\n";

void write_row(std::ostream& out, const StepRow& row) {
  out << fmt::format("{},{},{},{},{},{}\n", row.k, format_double(row.objective),
                     format_double(row.grad_norm), row.cumulative_flops,
                     optional_cell(row.gamma_hat), optional_cell(row.nu_hat));
}

struct SeedContext {
  const RunConfig& cfg;
  const Problem& problem;
  const NoiseModel& noise;
  const RandomPolarMap& polar;
  Schedule schedule;
  std::uint64_t step_flops;
  std::uint64_t cell;
};

SeedReport run_seed(const SeedContext& ctx, std::uint64_t seed, std::ostream* csv) {
  const RunConfig& cfg = ctx.cfg;
  const bool muon = is_muon(cfg.optimizer.kind);
  const bool randomized = cfg.sketch.has_value();
  const std::int64_t verify_trials = randomized ? cfg.verify_trials : 1;

  RngStream noise_rng(seed, combine_ids(kRoleNoise, ctx.cell));
  RngStream sketch_rng(seed, combine_ids(kRoleSketch, ctx.cell));
  const RngStream verify_rng(seed, combine_ids(kRoleVerify, ctx.cell));

  SeedReport report;
  report.seed = seed;
  if (csv != nullptr) *csv << kStepHeader;

  Matrix x = initial_point(cfg.problem, seed);
  MuonState muon_state;
  BaselineState base_state;
  BaselineHyper hyper;
  if (muon) {
    const auto kind =
        cfg.optimizer.kind == OptimizerKind::muon_nesterov ? MomentumKind::nesterov : MomentumKind::polyak;
    muon_state = make_muon_state(x, kind, ctx.schedule.beta, ctx.schedule.eta);
  } else {
    base_state = make_baseline_state(x);
    hyper.lr = ctx.schedule.eta;
    hyper.momentum = ctx.schedule.beta;
    hyper.beta1 = ctx.schedule.beta;
    hyper.weight_decay = cfg.optimizer.weight_decay;
  }

  double gamma_sum = 0.0;
  double nu_sum = 0.0;
  std::int64_t verified = 0;
  report.min_grad_norm = std::numeric_limits<double>::infinity();

  try {
    for (std::int64_t k = 0; k < cfg.optimizer.steps; ++k) {
      StepRow row;
      row.k = k;
      row.objective = ctx.problem.objective(x);
      row.grad_norm = frobenius_norm(ctx.problem.gradient(x));
      row.cumulative_flops = static_cast<std::uint64_t>(k) * ctx.step_flops;
      if (!std::isfinite(row.objective) || !std::isfinite(row.grad_norm)) {
        report.aborted = true;
        report.abort_reason = fmt::format("non-finite objective at step {}", k);
        break;
      }

      const Matrix g = gradient_oracle(ctx.problem, x, cfg.optimizer.batch, ctx.noise, noise_rng);
      if (muon) {
        std::optional<Matrix> seen;
        muon_state = muon_step(muon_state, g, [&](const Matrix& m) {
          seen = m;
          return ctx.polar(m, sketch_rng);
        });
        if (cfg.verify && seen) {
          const auto est = estimate_gamma_nu(*seen, ctx.polar, verify_trials,
                                             verify_rng.substream(static_cast<std::uint64_t>(k)));
          row.gamma_hat = est.gamma_hat;
          row.nu_hat = est.nu_hat;
          gamma_sum += est.gamma_hat;
          nu_sum += est.nu_hat;
          ++verified;
        }
        x = muon_state.x;
      } else {
        base_state = baseline_step(baseline_kind(cfg.optimizer.kind), base_state, g, hyper);
        x = base_state.x;
      }
      if (ctx.problem.project(x)) {
        ++report.projections;
        if (muon) {
          muon_state.x = x;
        } else {
          base_state.x = x;
        }
      }

      report.min_grad_norm = std::min(report.min_grad_norm, row.grad_norm);
      report.final_objective = row.objective;
      report.final_grad_norm = row.grad_norm;
      report.rows.push_back(row);
      if (csv != nullptr) write_row(*csv, row);
    }
  } catch (const NumericalError& e) {
    report.aborted = true;
    report.abort_reason = e.what();
  }

  report.total_flops = static_cast<std::uint64_t>(report.rows.size()) * ctx.step_flops;
  if (verified > 0) {
    report.mean_gamma_hat = gamma_sum / static_cast<double>(verified);
    report.mean_nu_hat = nu_sum / static_cast<double>(verified);
  }
  if (report.rows.empty()) report.min_grad_norm = std::numeric_limits<double>::quiet_NaN();
  return report;
}

void write_run_files(const RunConfig& cfg, const RunReport& report) {
  const fs::path dir(cfg.output);
  {
    auto out = open_output(dir / "run.summary.csv");
    out << "seed,steps,min_grad_norm,final_objective,final_grad_norm,total_flops,mean_gamma_hat,"
           "mean_nu_hat,projections,status\n";
    for (const auto& s : report.seeds) {
      out << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", s.seed, s.rows.size(),
                         format_double(s.min_grad_norm), format_double(s.final_objective),
                         format_double(s.final_grad_norm), s.total_flops,
                         optional_cell(s.mean_gamma_hat), optional_cell(s.mean_nu_hat), s.projections,
                         s.aborted ? "aborted" : "ok");
    }
  }
  {
    auto out = open_output(dir / "aggregate.summary.csv");
    out << "metric,mean,std,seeds\n";
    out << fmt::format("min_grad_norm,{},{},{}\n", format_double(report.min_grad_norm.mean),
                       format_double(report.min_grad_norm.stddev), report.seeds.size());
    out << fmt::format("final_objective,{},{},{}\n", format_double(report.final_objective.mean),
                       format_double(report.final_objective.stddev), report.seeds.size());
  }
  {
    std::size_t common = report.seeds.empty() ? 0 : report.seeds.front().rows.size();
    for (const auto& s : report.seeds) common = std::min(common, s.rows.size());
    auto out = open_output(dir / "grad_norm.dat");
    out << "# k mean_grad_norm\n";
    for (std::size_t k = 0; k < common; ++k) {
      double sum = 0.0;
      for (const auto& s : report.seeds) sum += s.rows[k].grad_norm;
      out << fmt::format("{} {}\n", k, format_double(sum / static_cast<double>(report.seeds.size())));
    }
  }
  {
    auto out = open_output(dir / "grad_norm.gp");
    out << "set xlabel 'step k'\n"
           "set ylabel 'mean ||grad f(X_k)||_F'\n"
           "set logscale y\n"
           "set terminal pngcairo size 800,500\n"
           "set output 'grad_norm.png'\n"
           "plot 'grad_norm.dat' using 1:2 with lines title '"
        << to_string(cfg.optimizer.kind) << "'\n";
  }
}

}  // namespace

NoiseModel resolve_noise(const RunConfig& cfg) {
  NoiseModel noise = cfg.noise;
  if (!noise.silent() && !noise.calibrated_for(cfg.problem.rows, cfg.problem.cols)) {
    noise = calibrate(noise, cfg.problem.rows, cfg.problem.cols,
                      calibration_samples(cfg.problem.rows, cfg.problem.cols),
                      RngStream(cfg.problem.seed, kRoleCalibration));
  }
  return noise;
}

RunReport run_experiment(const RunConfig& cfg, const RunOptions& options) {
  cfg.validate();
  const Problem problem = build_problem(cfg.problem);
  RunReport report;
  report.noise = resolve_noise(cfg);

  StepFlopConfig flop_cfg;
  flop_cfg.optimizer = cfg.optimizer.kind;
  flop_cfg.polar = cfg.polar;
  flop_cfg.sketch = cfg.sketch;
  flop_cfg.rows = cfg.problem.rows;
  flop_cfg.cols = cfg.problem.cols;
  report.step_flops = measured_step_flops(flop_cfg);

  const RandomPolarMap polar = make_polar_map(cfg);
  const SeedContext ctx{cfg, problem, report.noise, polar, cfg.resolved_schedule(), report.step_flops,
                        options.cell};

  if (!cfg.output.empty()) {
    std::error_code ec;
    fs::create_directories(cfg.output, ec);
    if (ec) throw ConfigError("run.output", "cannot create '" + cfg.output + "': " + ec.message());
    RunConfig resolved = cfg;
    resolved.noise = report.noise;
    save_config(resolved, (fs::path(cfg.output) / "config.ini").string());
  }

  const auto n = static_cast<std::int64_t>(cfg.seeds.size());
  report.seeds.resize(cfg.seeds.size());
  std::vector<std::exception_ptr> errors(cfg.seeds.size());
  const int workers = options.workers > 0 ? options.workers : worker_count();
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers) if (!omp_in_parallel() && n > 1)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    try {
      const std::uint64_t seed = cfg.seeds[iu];
      if (cfg.output.empty()) {
        report.seeds[iu] = run_seed(ctx, seed, nullptr);
      } else {
        auto csv = open_output(fs::path(cfg.output) / fmt::format("seed_{}.csv", seed));
        report.seeds[iu] = run_seed(ctx, seed, &csv);
      }
    } catch (...) {
      errors[iu] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<double> mins;
  std::vector<double> finals;
  double gamma_sum = 0.0;
  int gamma_count = 0;
  for (const auto& s : report.seeds) {
    mins.push_back(s.min_grad_norm);
    finals.push_back(s.final_objective);
    report.aborted = report.aborted || s.aborted;
    if (s.mean_gamma_hat) {
      gamma_sum += *s.mean_gamma_hat;
      ++gamma_count;
    }
  }
  report.min_grad_norm = aggregate(mins);
  report.final_objective = aggregate(finals);
  if (gamma_count > 0) report.mean_gamma_hat = gamma_sum / gamma_count;

  if (!cfg.output.empty()) write_run_files(cfg, report);
  return report;
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "rank" || name == "s") return SweepAxis::rank;
  if (name == "q" || name == "iterations") return SweepAxis::iterations;
  if (name == "K" || name == "horizon") return SweepAxis::horizon;
  if (name == "alpha") return SweepAxis::alpha;
  if (name == "batch" || name == "B") return SweepAxis::batch;
  throw ConfigError("--axis", "unknown sweep axis '" + name + "'");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::rank:
      return "rank";
    case SweepAxis::iterations:
      return "q";
    case SweepAxis::horizon:
      return "K";
    case SweepAxis::alpha:
      return "alpha";
    case SweepAxis::batch:
      return "batch";
  }
  return "K";
}

namespace {

std::int64_t integral_value(const std::string& field, double value) {
  if (!(value >= 0.0) || std::floor(value) != value || value > 9.0e15) {
    throw ConfigError(field, fmt::format("sweep value {} is not a nonnegative integer", value));
  }
  return static_cast<std::int64_t>(value);
}

}  // namespace

RunConfig apply_axis(RunConfig cfg, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::rank:
      if (!cfg.sketch) throw ConfigError("sketch.rank", "a rank sweep needs [sketch] enabled = true");
      cfg.sketch->rank = static_cast<int>(integral_value("sketch.rank", value));
      break;
    case SweepAxis::iterations: {
      if (cfg.polar.solver == PolarSolver::exact) {
        throw ConfigError("polar.q", "the exact solver has no iteration count");
      }
      if (cfg.polar.schedule.name == "custom") {
        throw ConfigError("polar.q", "a custom schedule has a fixed length");
      }
      const auto q = integral_value("polar.q", value);
      cfg.polar.schedule = named_schedule(cfg.polar.schedule.name, static_cast<std::size_t>(q));
      break;
    }
    case SweepAxis::horizon:
      cfg.optimizer.steps = integral_value("optimizer.steps", value);
      break;
    case SweepAxis::alpha:
      cfg.noise.alpha = value;
      cfg.noise.tail = value + kDefaultTailMargin;
      cfg.noise.entry_scale = 0.0;
      cfg.noise.calibration_se = 0.0;
      cfg.noise.calibrated_rows = 0;
      cfg.noise.calibrated_cols = 0;
      if (cfg.optimizer.schedule == ScheduleSource::theorem1) cfg.optimizer.alpha = value;
      break;
    case SweepAxis::batch:
      cfg.optimizer.batch = integral_value("optimizer.batch", value);
      break;
  }
  cfg.validate();
  return cfg;
}

SweepTable run_sweep(const RunConfig& cfg, SweepAxis axis, std::span<const double> values,
                     const RunOptions& options) {
  cfg.validate();
  SweepTable table;
  table.axis = axis;
  table.cells.resize(values.size());
  const std::string axis_name = to_string(axis);

  // Calibrate once up front unless the axis changes the noise law.
  RunConfig base = cfg;
  if (axis != SweepAxis::alpha) base.noise = resolve_noise(cfg);

  const auto n = static_cast<std::int64_t>(values.size());
  const int workers = options.workers > 0 ? options.workers : worker_count();
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    SweepCell& cell = table.cells[iu];
    cell.value = values[iu];
    try {
      RunConfig cell_cfg = apply_axis(base, axis, values[iu]);
      if (!cfg.output.empty()) {
        cell_cfg.output =
            (fs::path(cfg.output) / fmt::format("{}_{}", axis_name, format_double(values[iu]))).string();
      }
      RunOptions cell_options = options;
      cell_options.cell = static_cast<std::uint64_t>(i) + 1;
      cell_options.workers = 1;
      cell.report = run_experiment(cell_cfg, cell_options);
    } catch (const Error& e) {
      cell.error = e.what();
    }
  }

  if (axis == SweepAxis::horizon) {
    std::vector<double> lx;
    std::vector<double> ly;
    for (const auto& cell : table.cells) {
      if (cell.failed() || cell.report->aborted || !(cell.report->min_grad_norm.mean > 0.0)) continue;
      lx.push_back(std::log(cell.value));
      ly.push_back(std::log(cell.report->min_grad_norm.mean));
    }
    if (lx.size() >= 2) {
      const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
      const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
      double sxy = 0.0;
      double sxx = 0.0;
      for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
      }
      if (sxx > 0.0) table.loglog_slope = sxy / sxx;
    }
  }

  if (cfg.output.empty()) return table;
  const fs::path dir(cfg.output);
  {
    auto out = open_output(dir / fmt::format("sweep_{}.csv", axis_name));
    out << "axis,value,seed,min_grad_norm,final_objective,final_grad_norm,total_flops,mean_gamma_hat,"
           "mean_nu_hat,status\n";
    for (const auto& cell : table.cells) {
      if (cell.failed()) {
        out << fmt::format("{},{},,,,,,,,failed\n", axis_name, format_double(cell.value));
        continue;
      }
      for (const auto& s : cell.report->seeds) {
        out << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", axis_name, format_double(cell.value), s.seed,
                           format_double(s.min_grad_norm), format_double(s.final_objective),
                           format_double(s.final_grad_norm), s.total_flops,
                           optional_cell(s.mean_gamma_hat), optional_cell(s.mean_nu_hat),
                           s.aborted ? "aborted" : "ok");
      }
    }
  }
  {
    auto out = open_output(dir / fmt::format("sweep_{}.summary.csv", axis_name));
    out << "axis,value,seeds,mean_min_grad_norm,std_min_grad_norm,mean_final_objective,"
           "std_final_objective,mean_gamma_hat,step_flops,status\n";
    for (const auto& cell : table.cells) {
      if (cell.failed()) {
        out << fmt::format("{},{},0,,,,,,,failed: {}\n", axis_name, format_double(cell.value),
                           cell.error.empty() ? "error" : cell.error);
        continue;
      }
      const auto& r = *cell.report;
      out << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", axis_name, format_double(cell.value),
                         r.seeds.size(), format_double(r.min_grad_norm.mean),
                         format_double(r.min_grad_norm.stddev), format_double(r.final_objective.mean),
                         format_double(r.final_objective.stddev), optional_cell(r.mean_gamma_hat),
                         r.step_flops, r.aborted ? "aborted" : "ok");
    }
  }
  if (axis == SweepAxis::horizon) {
    auto out = open_output(dir / "sweep_K.loglog.dat");
    out << "# log_K log_mean_min_grad_norm\n";
    if (table.loglog_slope) out << fmt::format("# slope {}\n", format_double(*table.loglog_slope));
    for (const auto& cell : table.cells) {
      if (cell.failed() || cell.report->aborted || !(cell.report->min_grad_norm.mean > 0.0)) continue;
      out << fmt::format("{} {}\n", format_double(std::log(cell.value)),
                         format_double(std::log(cell.report->min_grad_norm.mean)));
    }
  }
  return table;
}

}  // namespace muonkit
