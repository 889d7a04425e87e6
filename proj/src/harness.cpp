#include "kccsd/harness.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>

#include "kccsd/errors.hpp"

namespace kccsd {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config parsing

namespace {

std::string join(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) {
    throw ConfigError((where.empty() ? std::string("config") : where) + ": must be an object");
  }
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(join(where, key) + ": unknown field");
  }
}

double number_field(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field + ": must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(field + ": must be finite");
  return v;
}

std::size_t count_field(const json& j, const std::string& field, std::size_t min) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) {
    throw ConfigError(field + ": must be a non-negative integer");
  }
  const auto v = j.get<std::size_t>();
  if (v < min) throw ConfigError(field + ": must be at least " + std::to_string(min));
  return v;
}

std::uint64_t seed_field(const json& j, const std::string& field) {
  if (!j.is_number_integer()) throw ConfigError(field + ": must be an integer");
  return j.is_number_unsigned() ? j.get<std::uint64_t>()
                                : static_cast<std::uint64_t>(j.get<std::int64_t>());
}

std::string string_field(const json& j, const std::string& field) {
  if (!j.is_string()) throw ConfigError(field + ": must be a string");
  return j.get<std::string>();
}

/// "median" or a positive number.
std::optional<double> bandwidth_field(const json& j, const std::string& field) {
  if (j.is_string()) {
    if (j.get<std::string>() != "median") throw ConfigError(field + ": expected \"median\" or a number");
    return std::nullopt;
  }
  const double v = number_field(j, field);
  if (v <= 0.0) throw ConfigError(field + ": must be positive");
  return v;
}

ScalarFamily family_field(const json& j, const std::string& field) {
  const std::string s = string_field(j, field);
  if (s == "gaussian") return ScalarFamily::Gaussian;
  if (s == "imq") return ScalarFamily::IMQ;
  throw ConfigError(field + ": expected \"gaussian\" or \"imq\"");
}

TargetKernelSpec parse_target_kernel(const json& j, const std::string& where) {
  check_keys(j, where, {"family", "bandwidth"});
  TargetKernelSpec spec;
  if (j.contains("family")) spec.family = family_field(j["family"], join(where, "family"));
  if (j.contains("bandwidth")) spec.bandwidth = bandwidth_field(j["bandwidth"], join(where, "bandwidth"));
  return spec;
}

DistributionKernel parse_dist_kernel(const json& j, const std::string& where) {
  check_keys(j, where, {"kind", "sigma", "ground", "mode"});
  if (!j.contains("kind")) throw ConfigError(join(where, "kind") + ": required");
  const std::string kind = string_field(j["kind"], join(where, "kind"));
  DistributionKernel k;
  if (kind == "exp_gfd") k.kind = DistKind::ExpGFD;
  else if (kind == "exp_kgfd") k.kind = DistKind::ExpKGFD;
  else if (kind == "exp_mmd") k.kind = DistKind::ExpMMD;
  else if (kind == "exp_wasserstein") k.kind = DistKind::ExpWasserstein;
  else throw ConfigError(join(where, "kind") + ": unknown kernel \"" + kind + "\"");

  if (j.contains("sigma")) k.sigma = bandwidth_field(j["sigma"], join(where, "sigma"));
  if (j.contains("ground")) {
    if (k.kind != DistKind::ExpKGFD && k.kind != DistKind::ExpMMD) {
      throw ConfigError(join(where, "ground") + ": only exp_kgfd and exp_mmd take a ground kernel");
    }
    const TargetKernelSpec g = parse_target_kernel(j["ground"], join(where, "ground"));
    if (g.bandwidth) k.ground = ScalarKernel(g.family, *g.bandwidth);
    else if (g.family != ScalarFamily::Gaussian) {
      throw ConfigError(join(where, "ground.family") + ": the median heuristic builds a Gaussian kernel");
    }
  }
  if (j.contains("mode")) {
    if (k.kind != DistKind::ExpMMD) throw ConfigError(join(where, "mode") + ": only exp_mmd has a mode");
    const std::string mode = string_field(j["mode"], join(where, "mode"));
    if (mode == "closed_form") k.mmd_mode = MmdMode::ClosedForm;
    else if (mode == "sampled") k.mmd_mode = MmdMode::Sampled;
    else throw ConfigError(join(where, "mode") + ": expected \"closed_form\" or \"sampled\"");
  }
  return k;
}

StatisticSpec parse_statistic(const json& j, const std::string& where) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "KCCSD") return StatisticSpec::kccsd();
    if (s == "SKCE") return StatisticSpec::skce(ExpectationStrategy::closed_form());
    throw ConfigError(where + ": expected \"KCCSD\" or \"SKCE\"");
  }
  check_keys(j, where, {"name", "strategy"});
  if (!j.contains("name")) throw ConfigError(join(where, "name") + ": required");
  const std::string name = string_field(j["name"], join(where, "name"));
  if (name == "KCCSD") {
    if (j.contains("strategy")) throw ConfigError(join(where, "strategy") + ": KCCSD takes no strategy");
    return StatisticSpec::kccsd();
  }
  if (name != "SKCE") throw ConfigError(join(where, "name") + ": expected \"KCCSD\" or \"SKCE\"");
  if (!j.contains("strategy")) return StatisticSpec::skce(ExpectationStrategy::closed_form());

  const std::string sw = join(where, "strategy");
  const json& s = j["strategy"];
  check_keys(s, sw, {"mode", "samples", "step_size", "steps", "burn_in", "init", "init_noise"});
  if (!s.contains("mode")) throw ConfigError(join(sw, "mode") + ": required");
  const std::string mode = string_field(s["mode"], join(sw, "mode"));
  const std::size_t m = s.contains("samples") ? count_field(s["samples"], join(sw, "samples"), 1) : 2;
  if (mode == "closed_form") return StatisticSpec::skce(ExpectationStrategy::closed_form());
  if (mode == "sampler") return StatisticSpec::skce(ExpectationStrategy::exact_sampler(m));
  if (mode != "mala") {
    throw ConfigError(join(sw, "mode") + ": expected \"closed_form\", \"sampler\" or \"mala\"");
  }
  MalaConfig cfg;
  cfg.step_size = 0.5;
  cfg.n_steps = 10;
  if (s.contains("step_size")) {
    cfg.step_size = number_field(s["step_size"], join(sw, "step_size"));
    if (cfg.step_size <= 0.0) throw ConfigError(join(sw, "step_size") + ": must be positive");
  }
  if (s.contains("steps")) cfg.n_steps = count_field(s["steps"], join(sw, "steps"), 1);
  if (s.contains("burn_in")) cfg.burn_in = count_field(s["burn_in"], join(sw, "burn_in"), 0);
  if (cfg.n_steps < m) throw ConfigError(join(sw, "steps") + ": must be at least samples");
  double init_noise = 1.0;
  if (s.contains("init_noise")) {
    init_noise = number_field(s["init_noise"], join(sw, "init_noise"));
    if (init_noise < 0.0) throw ConfigError(join(sw, "init_noise") + ": must be non-negative");
  }
  MalaInit init = MalaInit::ModelMean;
  if (s.contains("init")) {
    const std::string where = string_field(s["init"], join(sw, "init"));
    if (where == "origin") init = MalaInit::Origin;
    else if (where != "model_mean") throw ConfigError(join(sw, "init") + ": expected \"model_mean\" or \"origin\"");
  }
  return StatisticSpec::skce(ExpectationStrategy::mala_chains(m, cfg, init_noise, init));
}

SyntheticSetup parse_setup(const json& j) {
  check_keys(j, "setup", {"family", "delta", "shift"});
  SyntheticSetup s;
  if (!j.contains("family")) throw ConfigError("setup.family: required");
  const std::string fam = string_field(j["family"], "setup.family");
  if (fam == "MGM") s.family = Family::MGM;
  else if (fam == "LGM") s.family = Family::LGM;
  else if (fam == "HGM") s.family = Family::HGM;
  else if (fam == "QGM") s.family = Family::QGM;
  else throw ConfigError("setup.family: expected MGM, LGM, HGM or QGM");
  if (j.contains("delta")) s.delta = number_field(j["delta"], "setup.delta");
  if (s.delta < 0.0) throw ConfigError("setup.delta: must be non-negative");
  if (j.contains("shift")) {
    if (s.family != Family::MGM) throw ConfigError("setup.shift: only MGM has a shift");
    const std::string sh = string_field(j["shift"], "setup.shift");
    if (sh == "ones") s.shift = MgmShift::AllOnes;
    else if (sh == "first") s.shift = MgmShift::FirstCoordinate;
    else throw ConfigError("setup.shift: expected \"ones\" or \"first\"");
  }
  return s;
}

void parse_test_fields(const json& j, TestConfig& cfg) {
  if (j.contains("alpha")) cfg.alpha = number_field(j["alpha"], "alpha");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigError("alpha: must be in (0, 1)");
  if (j.contains("bootstrap")) cfg.bootstrap = count_field(j["bootstrap"], "bootstrap", 1);
  if (j.contains("statistic")) cfg.statistic = parse_statistic(j["statistic"], "statistic");
  if (j.contains("base_samples")) cfg.base_samples = count_field(j["base_samples"], "base_samples", 1);
  cfg.dist_kernel = j.contains("dist_kernel") ? parse_dist_kernel(j["dist_kernel"], "dist_kernel")
                                              : exp_gfd_kernel();
  cfg.dist_kernel.samples = cfg.base_samples;
  if (j.contains("target_kernel")) cfg.target_kernel = parse_target_kernel(j["target_kernel"], "target_kernel");
  if (cfg.statistic.kind == StatisticKind::SKCE &&
      cfg.statistic.strategy.mode == ExpectationMode::ClosedFormGaussian &&
      cfg.target_kernel.family != ScalarFamily::Gaussian) {
    throw ConfigError("target_kernel.family: closed-form SKCE needs a Gaussian target kernel");
  }
}

}  // namespace

TestConfig parse_test_config(const json& j) {
  check_keys(j, "", {"alpha", "bootstrap", "statistic", "dist_kernel", "target_kernel",
                     "base_samples", "seed"});
  TestConfig cfg;
  parse_test_fields(j, cfg);
  if (j.contains("seed")) cfg.seed = seed_field(j["seed"], "seed");
  return cfg;
}

ExperimentConfig parse_experiment_config(const json& j) {
  check_keys(j, "", {"setup", "n_grid", "repetitions", "alpha", "bootstrap", "statistic",
                     "dist_kernel", "target_kernel", "base_samples", "master_seed",
                     "record_wall_time"});
  ExperimentConfig cfg;
  if (!j.contains("setup")) throw ConfigError("setup: required");
  cfg.setup = parse_setup(j["setup"]);
  if (j.contains("n_grid")) {
    if (!j["n_grid"].is_array() || j["n_grid"].empty()) {
      throw ConfigError("n_grid: must be a non-empty array");
    }
    cfg.n_grid.clear();
    for (std::size_t i = 0; i < j["n_grid"].size(); ++i) {
      cfg.n_grid.push_back(count_field(j["n_grid"][i], "n_grid[" + std::to_string(i) + "]", 2));
    }
  }
  if (j.contains("repetitions")) cfg.repetitions = count_field(j["repetitions"], "repetitions", 1);
  parse_test_fields(j, cfg.test);
  if (j.contains("master_seed")) cfg.master_seed = seed_field(j["master_seed"], "master_seed");
  cfg.test.seed = cfg.master_seed;
  if (j.contains("record_wall_time")) {
    if (!j["record_wall_time"].is_boolean()) throw ConfigError("record_wall_time: must be a boolean");
    cfg.record_wall_time = j["record_wall_time"].get<bool>();
  }
  return cfg;
}

json load_json_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(path.string() + ": cannot open");
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Experiments

TestResult run_test(std::span<const Observation> data, const TestConfig& cfg, RandomStream& stream) {
  detail::require(data.size() >= 2, "run_test: need at least 2 data points");
  const double gamma = cfg.target_kernel.bandwidth
                           ? *cfg.target_kernel.bandwidth
                           : median_heuristic(targets_of(data));
  const ScalarKernel l(cfg.target_kernel.family, gamma);
  DistributionKernel k = cfg.dist_kernel;
  k.samples = cfg.base_samples;
  return run_calibration_test(data, k, l, cfg.statistic, cfg.alpha, cfg.bootstrap, stream);
}

RandomStream cell_stream(const ExperimentConfig& cfg, std::size_t n, std::size_t rep) {
  return RandomStream(cfg.master_seed)
      .derive(cfg.setup.label())
      .derive("delta", std::bit_cast<std::uint64_t>(cfg.setup.delta))
      .derive("n", n)
      .derive("rep", rep);
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  detail::require(cfg.repetitions >= 1, "run_experiment: repetitions must be at least 1");
  std::vector<ResultRow> rows(cfg.n_grid.size() * cfg.repetitions);
  std::vector<std::exception_ptr> errors(rows.size());

  const std::string target_name = cfg.test.target_kernel.family == ScalarFamily::Gaussian ? "gaussian" : "imq";
  DistributionKernel named = cfg.test.dist_kernel;

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t idx = 0; idx < static_cast<std::ptrdiff_t>(rows.size()); ++idx) {
    const auto cell = static_cast<std::size_t>(idx) / cfg.repetitions;
    const auto rep = static_cast<std::size_t>(idx) % cfg.repetitions;
    const std::size_t n = cfg.n_grid[cell];
    try {
      const auto start = std::chrono::steady_clock::now();
      RandomStream stream = cell_stream(cfg, n, rep);
      RandomStream data_stream = stream.derive("data");
      const Dataset data = sample_setup(cfg.setup, n, data_stream);
      const TestResult r = run_test(data, cfg.test, stream);
      const auto stop = std::chrono::steady_clock::now();

      ResultRow& row = rows[static_cast<std::size_t>(idx)];
      row.family = cfg.setup.label();
      row.delta = cfg.setup.delta;
      row.n = n;
      row.rep = rep;
      row.statistic_name = cfg.test.statistic.name();
      row.dist_kernel = named.name();
      row.target_kernel = target_name;
      row.statistic_value = r.statistic;
      row.quantile = r.quantile;
      row.p_value = r.p_value;
      row.reject = r.reject;
      row.seed = r.seed;
      row.wall_time_ms =
          cfg.record_wall_time
              ? std::chrono::duration<double, std::milli>(stop - start).count()
              : 0.0;
    } catch (...) {
      errors[static_cast<std::size_t>(idx)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return rows;
}

double rejection_rate(std::span<const ResultRow> rows, std::size_t n) {
  std::size_t total = 0, rejected = 0;
  for (const auto& r : rows) {
    if (r.n != n) continue;
    ++total;
    rejected += r.reject ? 1 : 0;
  }
  detail::require(total > 0, "rejection_rate: no rows for this n");
  return static_cast<double>(rejected) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

constexpr const char* kCsvHeader =
    "family,delta,n,rep,statistic_name,dist_kernel,target_kernel,statistic_value,quantile,"
    "p_value,reject,seed,wall_time_ms";

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

double parse_double(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw ParseError("bad number \"" + s + "\"", line);
  return v;
}

std::uint64_t parse_unsigned(const std::string& s, std::size_t line) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw ParseError("bad integer \"" + s + "\"", line);
  }
  return std::stoull(s);
}

std::istream& get_line(std::istream& in, std::string& line) {
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return in;
}

}  // namespace

void write_csv(std::span<const ResultRow> rows, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.family << ',' << fmt_double(r.delta) << ',' << r.n << ',' << r.rep << ','
        << r.statistic_name << ',' << r.dist_kernel << ',' << r.target_kernel << ','
        << fmt_double(r.statistic_value) << ',' << fmt_double(r.quantile) << ','
        << fmt_double(r.p_value) << ',' << (r.reject ? 1 : 0) << ',' << r.seed << ','
        << fmt_double(r.wall_time_ms) << '\n';
  }
}

void write_csv(std::span<const ResultRow> rows, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(path.string() + ": cannot open for writing");
  write_csv(rows, f);
}

std::vector<ResultRow> read_csv(std::istream& in) {
  std::string line;
  if (!get_line(in, line) || line != kCsvHeader) throw ParseError("unexpected CSV header", 1);
  std::vector<ResultRow> rows;
  std::size_t lineno = 1;
  while (get_line(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 13) throw ParseError("expected 13 fields", lineno);
    ResultRow r;
    r.family = f[0];
    r.delta = parse_double(f[1], lineno);
    r.n = parse_unsigned(f[2], lineno);
    r.rep = parse_unsigned(f[3], lineno);
    r.statistic_name = f[4];
    r.dist_kernel = f[5];
    r.target_kernel = f[6];
    r.statistic_value = parse_double(f[7], lineno);
    r.quantile = parse_double(f[8], lineno);
    r.p_value = parse_double(f[9], lineno);
    if (f[10] != "0" && f[10] != "1") throw ParseError("reject must be 0 or 1", lineno);
    r.reject = f[10] == "1";
    r.seed = parse_unsigned(f[11], lineno);
    r.wall_time_ms = parse_double(f[12], lineno);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ResultRow> read_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError(path.string() + ": cannot open", 0);
  return read_csv(f);
}

// ---------------------------------------------------------------------------
// Datasets

namespace {

Vector vector_from(const json& j, const char* field, std::size_t line) {
  if (!j.is_array() || j.empty()) throw ParseError(std::string(field) + ": expected a non-empty array", line);
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(std::string(field) + ": expected numbers", line);
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

DiagonalGaussian gaussian_from(const json& j, std::size_t line) {
  if (!j.is_object() || !j.contains("mean") || !j.contains("var")) {
    throw ParseError("model: expected {\"mean\": [...], \"var\": [...]}", line);
  }
  Vector mean = vector_from(j["mean"], "mean", line);
  Vector var = vector_from(j["var"], "var", line);
  try {
    return DiagonalGaussian(std::move(mean), std::move(var));
  } catch (const ContractViolation& e) {
    throw ParseError(e.what(), line);
  }
}

template <class F>
void for_each_json_line(std::istream& in, F&& f) {
  std::string line;
  std::size_t lineno = 0;
  while (get_line(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
    }
    f(j, lineno);
  }
}

}  // namespace

Dataset read_dataset(std::istream& in) {
  Dataset out;
  Eigen::Index dim = -1;
  for_each_json_line(in, [&](const json& j, std::size_t lineno) {
    if (!j.is_object() || !j.contains("model") || !j.contains("y")) {
      throw ParseError("expected {\"model\": ..., \"y\": [...]}", lineno);
    }
    DiagonalGaussian g = gaussian_from(j["model"], lineno);
    Vector y = vector_from(j["y"], "y", lineno);
    if (y.size() != g.dim()) throw ParseError("target and model dimensions differ", lineno);
    if (dim >= 0 && y.size() != dim) throw ParseError("dimension differs from earlier lines", lineno);
    dim = y.size();
    out.push_back(make_observation(g, std::move(y)));
  });
  return out;
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ParseError(path.string() + ": cannot open", 0);
  return read_dataset(f);
}

std::vector<DiagonalGaussian> read_models(std::istream& in) {
  std::vector<DiagonalGaussian> out;
  for_each_json_line(in, [&](const json& j, std::size_t lineno) {
    const json& m = j.is_object() && j.contains("model") ? j["model"] : j;
    DiagonalGaussian g = gaussian_from(m, lineno);
    if (!out.empty() && g.dim() != out.front().dim()) {
      throw ParseError("dimension differs from earlier lines", lineno);
    }
    out.push_back(std::move(g));
  });
  return out;
}

json to_json(const DiagonalGaussian& g) {
  return {{"mean", std::vector<double>(g.mean().begin(), g.mean().end())},
          {"var", std::vector<double>(g.var().begin(), g.var().end())}};
}

void write_dataset(std::span<const Observation> data, std::ostream& out) {
  for (const auto& obs : data) {
    if (!obs.model.gaussian) throw CapabilityError("write_dataset: model is not Gaussian");
    json line = {{"model", to_json(*obs.model.gaussian)},
                 {"y", std::vector<double>(obs.y.begin(), obs.y.end())}};
    out << line.dump() << '\n';
  }
}

json to_json(const TestResult& r) {
  return {{"statistic", r.statistic}, {"quantile", r.quantile},
          {"p_value", r.p_value},     {"reject", r.reject},
          {"alpha", r.alpha},         {"bootstrap_count", r.bootstrap_count},
          {"seed", r.seed}};
}

void write_matrix_csv(const Matrix& m, std::ostream& out) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << fmt_double(m(i, j));
    }
    out << '\n';
  }
}

}  // namespace kccsd
