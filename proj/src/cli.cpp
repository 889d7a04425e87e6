#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "kccsd/errors.hpp"
#include "kccsd/harness.hpp"

namespace kccsd {
namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;

struct Options {
  std::string config;
  std::string out;
  std::string input;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  int threads = 0;
};

void set_threads(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

// Writes to --out when given, otherwise to `fallback`.
template <class F>
void emit(const std::string& path, std::ostream& fallback, F&& write) {
  if (path.empty()) {
    write(fallback);
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("--out: cannot open " + path);
  write(f);
}

int cmd_test(const Options& o, std::istream& in, std::ostream& out) {
  TestConfig cfg = parse_test_config(load_json_file(o.config));
  if (o.seed) cfg.seed = *o.seed;
  if (o.alpha) cfg.alpha = *o.alpha;
  Dataset data;
  if (o.input.empty() || o.input == "-") {
    data = read_dataset(in);
  } else {
    data = read_dataset(std::filesystem::path(o.input));
  }
  if (data.size() < 2) throw ConfigError("dataset: need at least 2 lines");
  RandomStream stream(cfg.seed);
  const TestResult r = run_test(data, cfg, stream);
  emit(o.out, out, [&](std::ostream& s) { s << to_json(r).dump() << '\n'; });
  return kOk;
}

int cmd_experiment(const Options& o, std::ostream& out) {
  ExperimentConfig cfg = parse_experiment_config(load_json_file(o.config));
  if (o.seed) cfg.master_seed = cfg.test.seed = *o.seed;
  if (o.alpha) cfg.test.alpha = *o.alpha;
  const auto rows = run_experiment(cfg);
  emit(o.out, out, [&](std::ostream& s) { write_csv(rows, s); });
  return kOk;
}

int cmd_gram(const Options& o, std::istream& in, std::ostream& out) {
  TestConfig cfg = parse_test_config(load_json_file(o.config));
  if (o.seed) cfg.seed = *o.seed;
  std::vector<DiagonalGaussian> models;
  if (o.input.empty() || o.input == "-") {
    models = read_models(in);
  } else {
    std::ifstream f(o.input);
    if (!f) throw ParseError(o.input + ": cannot open", 0);
    models = read_models(f);
  }
  if (models.empty()) throw ConfigError("models: file is empty");
  std::vector<ScoredDensity> scored;
  scored.reserve(models.size());
  for (const auto& g : models) scored.push_back(as_scored(g));
  RandomStream stream(cfg.seed);
  RandomStream gram_stream = stream.derive("gram");
  const GramMatrix g = gram(cfg.dist_kernel, scored, gram_stream);
  emit(o.out, out, [&](std::ostream& s) { write_matrix_csv(g.values, s); });
  return kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Kernel calibration tests for probabilistic predictive models"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "override the configured seed");
    sub->add_option("--out", o.out, "output path (default: stdout)");
    sub->add_option("--threads", o.threads, "OpenMP thread count")->check(CLI::NonNegativeNumber);
    sub->add_option("--alpha", o.alpha, "significance level")->check(CLI::Range(0.0, 1.0));
  };
  auto* test = app.add_subcommand("test", "test one JSON-lines dataset, print the result as JSON");
  add_common(test);
  test->add_option("data", o.input, "dataset file (default: stdin)");
  auto* experiment = app.add_subcommand("experiment", "run a rejection-rate sweep, write CSV");
  add_common(experiment);
  auto* gram_cmd = app.add_subcommand("gram", "Gram matrix of a JSON-lines model file as CSV");
  add_common(gram_cmd);
  gram_cmd->add_option("models", o.input, "models file (default: stdin)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    err << app.help();
    return kValidation;
  }

  try {
    set_threads(o.threads);
    if (o.alpha && !(*o.alpha > 0.0 && *o.alpha < 1.0)) throw ConfigError("--alpha: must be in (0, 1)");
    if (*test) return cmd_test(o, in, out);
    if (*experiment) return cmd_experiment(o, out);
    return cmd_gram(o, in, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const ContractViolation& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const CapabilityError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const UnsupportedCombination& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kRuntime;
  }
}

}  // namespace kccsd
