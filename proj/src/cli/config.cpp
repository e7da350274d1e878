#include "muonkit/config.hpp"

#include <fmt/format.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "muonkit/errors.hpp"

namespace muonkit {

namespace pt = boost::property_tree;

std::string format_double(double v) { return fmt::format("{}", v); }

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"problem", {"kind", "rows", "cols", "rank", "decay", "init_scale", "seed"}},
      {"optimizer", {"kind", "schedule", "alpha", "steps", "batch", "eta", "beta", "weight_decay"}},
      {"polar", {"solver", "schedule", "q", "delta", "delta_value", "coefficients"}},
      {"sketch", {"enabled", "rank", "oversampling", "power_iterations", "kind"}},
      {"noise",
       {"alpha", "sigma0", "sigma1", "tail", "entry_scale", "calibration_se", "calibrated_rows",
        "calibrated_cols"}},
      {"run", {"seeds", "output", "verify", "verify_trials"}},
  };
  return keys;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& field, const std::string& text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError(field, "expected a number, got '" + text + "'");
  return v;
}

template <typename Int>
Int to_int(const std::string& field, const std::string& text) {
  Int v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError(field, "expected an integer, got '" + text + "'");
  return v;
}

bool to_bool(const std::string& field, const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError(field, "expected true or false, got '" + text + "'");
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::optional<std::string> get(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto value = sec->get_optional<std::string>(key);
    if (!value) return std::nullopt;
    return trim(*value);
  }

  template <typename T, typename Parse>
  void read(const std::string& section, const std::string& key, T& out, Parse parse) const {
    if (const auto v = get(section, key)) out = parse(section + "." + key, *v);
  }

 private:
  const pt::ptree& tree_;
};

template <typename Enum>
Enum parse_enum(const std::string& field, const std::string& text,
                std::initializer_list<std::pair<const char*, Enum>> table) {
  for (const auto& [name, value] : table) {
    if (text == name) return value;
  }
  throw ConfigError(field, "unknown value '" + text + "'");
}

ProblemKind parse_problem_kind(const std::string& f, const std::string& t) {
  return parse_enum<ProblemKind>(
      f, t, {{"quadratic", ProblemKind::quadratic}, {"factorization", ProblemKind::factorization}});
}

OptimizerKind parse_optimizer_kind(const std::string& f, const std::string& t) {
  return parse_enum<OptimizerKind>(f, t,
                                   {{"muon_nesterov", OptimizerKind::muon_nesterov},
                                    {"muon_polyak", OptimizerKind::muon_polyak},
                                    {"sgd_momentum", OptimizerKind::sgd_momentum},
                                    {"sgd_nesterov", OptimizerKind::sgd_nesterov},
                                    {"adamw", OptimizerKind::adamw}});
}

ScheduleSource parse_schedule_source(const std::string& f, const std::string& t) {
  return parse_enum<ScheduleSource>(f, t,
                                    {{"theorem1", ScheduleSource::theorem1},
                                     {"corollary1", ScheduleSource::corollary1},
                                     {"manual", ScheduleSource::manual}});
}

PolarSolver parse_solver(const std::string& f, const std::string& t) {
  return parse_enum<PolarSolver>(f, t, {{"exact", PolarSolver::exact}, {"polynomial", PolarSolver::polynomial}});
}

DeltaRule parse_delta_rule(const std::string& f, const std::string& t) {
  return parse_enum<DeltaRule>(f, t,
                               {{"frobenius", DeltaRule::frobenius_norm},
                                {"operator", DeltaRule::operator_norm},
                                {"explicit", DeltaRule::explicit_value},
                                {"reduced_operator", DeltaRule::reduced_operator_norm}});
}

SketchKind parse_sketch_kind(const std::string& f, const std::string& t) {
  return parse_enum<SketchKind>(f, t, {{"gaussian", SketchKind::gaussian}, {"kaczmarz", SketchKind::kaczmarz}});
}

std::vector<PolyCoeffs> parse_coefficients(const std::string& field, const std::string& text) {
  std::vector<PolyCoeffs> out;
  for (const auto& triple : split(text, ';')) {
    if (triple.empty()) continue;
    const auto parts = split(triple, ',');
    if (parts.size() != 3) throw ConfigError(field, "each step needs three coefficients a,b,c");
    out.push_back({to_double(field, parts[0]), to_double(field, parts[1]), to_double(field, parts[2])});
  }
  return out;
}

std::string format_coefficients(const std::vector<PolyCoeffs>& steps) {
  std::string out;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i > 0) out += ";";
    out += fmt::format("{},{},{}", steps[i].a, steps[i].b, steps[i].c);
  }
  return out;
}

}  // namespace

void RunConfig::validate() const {
  if (problem.rows < 1 || problem.cols < 1) throw ConfigError("problem.rows", "dimensions must be positive");
  if (problem.rank < 1) throw ConfigError("problem.rank", "must be positive");
  if (problem.kind == ProblemKind::quadratic && problem.rank > std::min(problem.rows, problem.cols)) {
    throw ConfigError("problem.rank", "exceeds min(rows, cols)");
  }
  if (problem.kind == ProblemKind::factorization && problem.rank > problem.rows) {
    throw ConfigError("problem.rank", "exceeds rows");
  }
  if (!(problem.decay > 0.0)) throw ConfigError("problem.decay", "must be positive");
  if (problem.init_scale < 0.0) throw ConfigError("problem.init_scale", "must be nonnegative");
  if (problem.kind == ProblemKind::factorization && problem.init_scale == 0.0) {
    throw ConfigError("problem.init_scale", "factorization needs a nonzero start (U = 0 is a stationary point)");
  }
  if (optimizer.steps < 1) throw ConfigError("optimizer.steps", "K must be at least 1");
  if (optimizer.batch < 1) throw ConfigError("optimizer.batch", "B must be at least 1");
  if (optimizer.schedule != ScheduleSource::manual && optimizer.steps < 2) {
    throw ConfigError("optimizer.steps", "theory schedules need K >= 2");
  }
  if (optimizer.schedule == ScheduleSource::theorem1 && !(optimizer.alpha > 1.0 && optimizer.alpha <= 2.0)) {
    throw ConfigError("optimizer.alpha", "must lie in (1, 2]");
  }
  if (optimizer.schedule == ScheduleSource::manual) {
    if (!(optimizer.eta > 0.0)) throw ConfigError("optimizer.eta", "must be positive");
    if (!(optimizer.beta >= 0.0 && optimizer.beta < 1.0)) throw ConfigError("optimizer.beta", "must lie in [0, 1)");
  }
  if (polar.delta_rule == DeltaRule::explicit_value && !(polar.delta_value > 0.0)) {
    throw ConfigError("polar.delta_value", "explicit delta must be positive");
  }
  if (polar.solver == PolarSolver::exact && polar.delta_rule == DeltaRule::reduced_operator_norm) {
    throw ConfigError("polar.delta", "reduced_operator needs the polynomial solver");
  }
  if (sketch) {
    if (!is_muon(optimizer.kind)) throw ConfigError("sketch.enabled", "sketching applies to Muon only");
    if (polar.solver != PolarSolver::polynomial) throw ConfigError("sketch.enabled", "needs polar.solver = polynomial");
    if (sketch->rank < 1) throw ConfigError("sketch.rank", "must be at least 1");
    if (sketch->oversampling < 2) throw ConfigError("sketch.oversampling", "must be at least 2");
    if (sketch->power_iterations < 0) throw ConfigError("sketch.power_iterations", "must be nonnegative");
    if (sketch->ell() > std::min(problem.rows, problem.cols)) {
      throw ConfigError("sketch.rank", "rank + oversampling exceeds min(rows, cols)");
    }
  }
  if (!(noise.alpha > 1.0 && noise.alpha <= 2.0)) throw ConfigError("noise.alpha", "must lie in (1, 2]");
  if (noise.sigma0 < 0.0) throw ConfigError("noise.sigma0", "must be nonnegative");
  if (noise.sigma1 < 0.0) throw ConfigError("noise.sigma1", "must be nonnegative");
  if (!(noise.tail > noise.alpha)) throw ConfigError("noise.tail", "must exceed alpha");
  if (noise.entry_scale < 0.0) throw ConfigError("noise.entry_scale", "must be nonnegative");
  if (seeds.empty()) throw ConfigError("run.seeds", "need at least one seed");
  if (verify_trials < 1) throw ConfigError("run.verify_trials", "must be at least 1");
}

Schedule RunConfig::resolved_schedule() const {
  switch (optimizer.schedule) {
    case ScheduleSource::theorem1:
      return theorem1_schedule(optimizer.steps, optimizer.alpha);
    case ScheduleSource::corollary1:
      return corollary1_schedule(optimizer.steps);
    case ScheduleSource::manual:
      break;
  }
  Schedule s;
  s.eta = optimizer.eta;
  s.beta = optimizer.beta;
  s.source = ScheduleSource::manual;
  s.horizon = optimizer.steps;
  return s;
}

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("", std::string("malformed config: ") + e.message());
  }
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end() || body.empty()) {
      throw ConfigError(section, "unknown section");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.contains(key)) throw ConfigError(section + "." + key, "unknown key");
    }
  }

  const Reader r(tree);
  const auto dbl = [](const std::string& f, const std::string& t) { return to_double(f, t); };
  const auto idx = [](const std::string& f, const std::string& t) { return to_int<Index>(f, t); };
  const auto i64 = [](const std::string& f, const std::string& t) { return to_int<std::int64_t>(f, t); };
  const auto u64 = [](const std::string& f, const std::string& t) { return to_int<std::uint64_t>(f, t); };
  const auto boolean = [](const std::string& f, const std::string& t) { return to_bool(f, t); };

  RunConfig cfg;
  r.read("problem", "kind", cfg.problem.kind, parse_problem_kind);
  r.read("problem", "rows", cfg.problem.rows, idx);
  r.read("problem", "cols", cfg.problem.cols, idx);
  r.read("problem", "rank", cfg.problem.rank, idx);
  r.read("problem", "decay", cfg.problem.decay, dbl);
  r.read("problem", "init_scale", cfg.problem.init_scale, dbl);
  r.read("problem", "seed", cfg.problem.seed, u64);

  r.read("optimizer", "kind", cfg.optimizer.kind, parse_optimizer_kind);
  r.read("optimizer", "schedule", cfg.optimizer.schedule, parse_schedule_source);
  r.read("optimizer", "alpha", cfg.optimizer.alpha, dbl);
  r.read("optimizer", "steps", cfg.optimizer.steps, i64);
  r.read("optimizer", "batch", cfg.optimizer.batch, i64);
  r.read("optimizer", "eta", cfg.optimizer.eta, dbl);
  r.read("optimizer", "beta", cfg.optimizer.beta, dbl);
  r.read("optimizer", "weight_decay", cfg.optimizer.weight_decay, dbl);

  r.read("polar", "solver", cfg.polar.solver, parse_solver);
  r.read("polar", "delta", cfg.polar.delta_rule, parse_delta_rule);
  r.read("polar", "delta_value", cfg.polar.delta_value, dbl);
  std::string schedule_name = "quintic_theoretical";
  std::int64_t q = 5;
  r.read("polar", "schedule", schedule_name, [](const std::string&, const std::string& t) { return t; });
  r.read("polar", "q", q, i64);
  if (q < 0) throw ConfigError("polar.q", "must be nonnegative");
  if (schedule_name == "custom") {
    const auto coeffs = r.get("polar", "coefficients");
    if (!coeffs) throw ConfigError("polar.coefficients", "required for a custom schedule");
    cfg.polar.schedule = {"custom", parse_coefficients("polar.coefficients", *coeffs)};
    if (static_cast<std::int64_t>(cfg.polar.schedule.size()) != q) {
      throw ConfigError("polar.q", "must equal the number of custom coefficient triples");
    }
  } else {
    if (r.get("polar", "coefficients")) {
      throw ConfigError("polar.coefficients", "only allowed with schedule = custom");
    }
    cfg.polar.schedule = named_schedule(schedule_name, static_cast<std::size_t>(q));
  }

  bool sketch_enabled = false;
  r.read("sketch", "enabled", sketch_enabled, boolean);
  if (sketch_enabled) {
    SketchConfig sk;
    r.read("sketch", "rank", sk.rank, [](const std::string& f, const std::string& t) { return to_int<int>(f, t); });
    r.read("sketch", "oversampling", sk.oversampling,
           [](const std::string& f, const std::string& t) { return to_int<int>(f, t); });
    r.read("sketch", "power_iterations", sk.power_iterations,
           [](const std::string& f, const std::string& t) { return to_int<int>(f, t); });
    r.read("sketch", "kind", sk.kind, parse_sketch_kind);
    cfg.sketch = sk;
  }

  r.read("noise", "alpha", cfg.noise.alpha, dbl);
  cfg.noise.tail = cfg.noise.alpha + kDefaultTailMargin;
  r.read("noise", "sigma0", cfg.noise.sigma0, dbl);
  r.read("noise", "sigma1", cfg.noise.sigma1, dbl);
  r.read("noise", "tail", cfg.noise.tail, dbl);
  r.read("noise", "entry_scale", cfg.noise.entry_scale, dbl);
  r.read("noise", "calibration_se", cfg.noise.calibration_se, dbl);
  r.read("noise", "calibrated_rows", cfg.noise.calibrated_rows, idx);
  r.read("noise", "calibrated_cols", cfg.noise.calibrated_cols, idx);

  if (const auto seeds = r.get("run", "seeds")) {
    cfg.seeds.clear();
    for (const auto& item : split(*seeds, ',')) {
      if (!item.empty()) cfg.seeds.push_back(to_int<std::uint64_t>("run.seeds", item));
    }
  }
  r.read("run", "output", cfg.output, [](const std::string&, const std::string& t) { return t; });
  r.read("run", "verify", cfg.verify, boolean);
  r.read("run", "verify_trials", cfg.verify_trials, i64);

  cfg.validate();
  return cfg;
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  const auto line = [&out](const std::string& key, const std::string& value) {
    out += key + " = " + value + "\n";
  };

  out += "[problem]\n";
  line("kind", to_string(cfg.problem.kind));
  line("rows", std::to_string(cfg.problem.rows));
  line("cols", std::to_string(cfg.problem.cols));
  line("rank", std::to_string(cfg.problem.rank));
  line("decay", format_double(cfg.problem.decay));
  line("init_scale", format_double(cfg.problem.init_scale));
  line("seed", std::to_string(cfg.problem.seed));

  out += "\n[optimizer]\n";
  line("kind", to_string(cfg.optimizer.kind));
  line("schedule", to_string(cfg.optimizer.schedule));
  line("alpha", format_double(cfg.optimizer.alpha));
  line("steps", std::to_string(cfg.optimizer.steps));
  line("batch", std::to_string(cfg.optimizer.batch));
  line("eta", format_double(cfg.optimizer.eta));
  line("beta", format_double(cfg.optimizer.beta));
  line("weight_decay", format_double(cfg.optimizer.weight_decay));

  out += "\n[polar]\n";
  line("solver", to_string(cfg.polar.solver));
  line("schedule", cfg.polar.schedule.name);
  line("q", std::to_string(cfg.polar.schedule.size()));
  line("delta", to_string(cfg.polar.delta_rule));
  line("delta_value", format_double(cfg.polar.delta_value));
  if (cfg.polar.schedule.name == "custom") line("coefficients", format_coefficients(cfg.polar.schedule.steps));

  out += "\n[sketch]\n";
  line("enabled", cfg.sketch ? "true" : "false");
  if (cfg.sketch) {
    line("rank", std::to_string(cfg.sketch->rank));
    line("oversampling", std::to_string(cfg.sketch->oversampling));
    line("power_iterations", std::to_string(cfg.sketch->power_iterations));
    line("kind", to_string(cfg.sketch->kind));
  }

  out += "\n[noise]\n";
  line("alpha", format_double(cfg.noise.alpha));
  line("sigma0", format_double(cfg.noise.sigma0));
  line("sigma1", format_double(cfg.noise.sigma1));
  line("tail", format_double(cfg.noise.tail));
  line("entry_scale", format_double(cfg.noise.entry_scale));
  line("calibration_se", format_double(cfg.noise.calibration_se));
  line("calibrated_rows", std::to_string(cfg.noise.calibrated_rows));
  line("calibrated_cols", std::to_string(cfg.noise.calibrated_cols));

  out += "\n[run]\n";
  std::string seeds;
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    if (i > 0) seeds += ",";
    seeds += std::to_string(cfg.seeds[i]);
  }
  line("seeds", seeds);
  line("output", cfg.output);
  line("verify", cfg.verify ? "true" : "false");
  line("verify_trials", std::to_string(cfg.verify_trials));
  return out;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

void save_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("run.output", "cannot write '" + path + "'");
  out << serialize_config(cfg);
}

}  // namespace muonkit
