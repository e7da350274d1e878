#include <fmt/format.h>

#include <CLI11.hpp>
#include <charconv>
#include <cstdio>
#include <string>
#include <vector>

#include "muonkit/config.hpp"
#include "muonkit/errors.hpp"
#include "muonkit/experiment.hpp"
#include "muonkit/verify.hpp"
#include "muonkit/verify_suite.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAborted = 3;

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find(',', start), text.size());
    const std::string item = text.substr(start, end - start);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw muonkit::ConfigError("--values", "expected a comma-separated list of numbers, got '" + text + "'");
    }
    values.push_back(v);
    start = end + 1;
  }
  return values;
}

std::pair<std::int64_t, std::int64_t> parse_shape(const std::string& text) {
  const auto x = text.find('x');
  const auto parse = [&](const std::string& part) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (part.empty() || ec != std::errc() || ptr != part.data() + part.size() || v < 1) {
      throw muonkit::ConfigError("shape", "expected <rows>x<cols> or <d>, got '" + text + "'");
    }
    return v;
  };
  if (x == std::string::npos) {
    const auto d = parse(text);
    return {d, d};
  }
  return {parse(text.substr(0, x)), parse(text.substr(x + 1))};
}

void print_run(const muonkit::RunReport& r) {
  for (const auto& s : r.seeds) {
    fmt::print("seed {}: steps {}, min grad norm {:.6g}, final f {:.6g}{}\n", s.seed, s.rows.size(),
               s.min_grad_norm, s.final_objective, s.aborted ? " [aborted: " + s.abort_reason + "]" : "");
  }
  fmt::print("min grad norm {:.6g} +- {:.3g}, final f {:.6g} +- {:.3g}, {} FLOPs/step\n", r.min_grad_norm.mean,
             r.min_grad_norm.stddev, r.final_objective.mean, r.final_objective.stddev, r.step_flops);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Muon optimizer experiments, sweeps and numerical checks"};
  app.require_subcommand(1);

  std::string run_config;
  auto* run = app.add_subcommand("run", "Run one experiment from a config file");
  run->add_option("config", run_config, "Config file")->required();

  std::string sweep_config;
  std::string sweep_axis;
  std::string sweep_values;
  auto* sweep = app.add_subcommand("sweep", "Sweep one axis of a config");
  sweep->add_option("config", sweep_config, "Template config file")->required();
  sweep->add_option("--axis", sweep_axis, "rank, q, K, alpha or batch")->required();
  sweep->add_option("--values", sweep_values, "Comma-separated axis values")->required();

  std::vector<std::string> scopes;
  std::string verify_output = "verify_report";
  std::uint64_t verify_seed = muonkit::kVerifySeed;
  auto* verify = app.add_subcommand("verify", "Run numerical certification suites");
  verify->add_option("scope", scopes,
                     "polynomials, prop1, prop2, sketch-moments, noise-moments, flops, lemma1 or all")
      ->required();
  verify->add_option("--output", verify_output, "Report directory");
  verify->add_option("--seed", verify_seed, "Suite seed");

  std::string shape;
  std::int64_t ell = 256;
  std::int64_t q = 5;
  std::int64_t h = 1;
  auto* flops = app.add_subcommand("flops", "Evaluate the polar FLOP cost models");
  flops->set_help_flag("--help", "Print this help message and exit");
  flops->add_option("shape", shape, "<rows>x<cols> or <d>")->required();
  flops->add_option("--ell", ell, "Sketch width");
  flops->add_option("--q", q, "Polynomial steps");
  flops->add_option("--h", h, "Power iterations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) {
      const auto cfg = muonkit::load_config(run_config);
      const auto report = muonkit::run_experiment(cfg);
      print_run(report);
      return report.aborted ? kExitAborted : kExitOk;
    }
    if (*sweep) {
      const auto cfg = muonkit::load_config(sweep_config);
      const auto axis = muonkit::parse_sweep_axis(sweep_axis);
      const auto values = parse_values(sweep_values);
      const auto table = muonkit::run_sweep(cfg, axis, values);
      bool aborted = false;
      bool failed = false;
      for (const auto& cell : table.cells) {
        if (cell.failed()) {
          failed = true;
          fmt::print("{} = {}: failed: {}\n", muonkit::to_string(axis), cell.value, cell.error);
          continue;
        }
        aborted = aborted || cell.report->aborted;
        fmt::print("{} = {}: min grad norm {:.6g} +- {:.3g}{}\n", muonkit::to_string(axis), cell.value,
                   cell.report->min_grad_norm.mean, cell.report->min_grad_norm.stddev,
                   cell.report->aborted ? " [aborted]" : "");
      }
      if (table.loglog_slope) fmt::print("log-log slope {:.4f}\n", *table.loglog_slope);
      if (aborted) return kExitAborted;
      return failed ? kExitConfig : kExitOk;
    }
    if (*verify) {
      std::vector<muonkit::VerifyScope> selected;
      for (const auto& s : scopes) {
        if (s == "all") {
          const auto all = muonkit::all_verify_scopes();
          selected.insert(selected.end(), all.begin(), all.end());
        } else {
          selected.push_back(muonkit::parse_verify_scope(s));
        }
      }
      const auto report = muonkit::run_verify_suite(selected, verify_seed);
      muonkit::write_verify_report(report, verify_output);
      fmt::print("{}", muonkit::format_verify_text(report));
      return report.passed() ? kExitOk : kExitCheckFailed;
    }
    if (*flops) {
      const auto [rows, cols] = parse_shape(shape);
      const auto c = muonkit::flop_counts({rows, cols, ell, h, q});
      fmt::print("shape {}x{}, ell {}, q {}, h {}\n", rows, cols, ell, q, h);
      fmt::print("full       {}\nrandomized {}\nratio      {:.4f}\n", c.full, c.randomized, c.ratio);
      return kExitOk;
    }
  } catch (const muonkit::ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kExitConfig;
  } catch (const muonkit::PreconditionError& e) {
    fmt::print(stderr, "invalid input: {}\n", e.what());
    return kExitConfig;
  } catch (const muonkit::NumericalError& e) {
    fmt::print(stderr, "numerical abort: {}\n", e.what());
    return kExitAborted;
  } catch (const muonkit::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitCheckFailed;
  }
  return kExitOk;
}
