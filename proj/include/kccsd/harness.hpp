#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kccsd/statistics.hpp"

namespace kccsd {

struct TargetKernelSpec {
  ScalarFamily family = ScalarFamily::Gaussian;
  std::optional<double> bandwidth;  // unset: median heuristic on the targets
};

/// Everything needed to test one dataset.
struct TestConfig {
  double alpha = 0.05;
  std::size_t bootstrap = 500;
  StatisticSpec statistic;
  DistributionKernel dist_kernel;  // `samples` mirrors base_samples
  TargetKernelSpec target_kernel;
  std::size_t base_samples = 10;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  SyntheticSetup setup;
  std::vector<std::size_t> n_grid{64};
  std::size_t repetitions = 100;
  TestConfig test;
  std::uint64_t master_seed = 0;
  /// Off by default so that output bytes depend only on (config, seed).
  bool record_wall_time = false;
};

/// Throws ConfigError naming the offending field.
TestConfig parse_test_config(const nlohmann::json& j);
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
nlohmann::json load_json_file(const std::filesystem::path& path);

struct ResultRow {
  std::string family;
  double delta = 0.0;
  std::size_t n = 0;
  std::size_t rep = 0;
  std::string statistic_name;
  std::string dist_kernel;
  std::string target_kernel;
  double statistic_value = 0.0;
  double quantile = 0.0;
  double p_value = 1.0;
  bool reject = false;
  std::uint64_t seed = 0;
  double wall_time_ms = 0.0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

/// Resolves the target-kernel bandwidth on `data` and runs the test.
TestResult run_test(std::span<const Observation> data, const TestConfig& cfg,
                    RandomStream& stream);

/// Stream for one (config point, repetition): master seed, family, delta, n, rep.
RandomStream cell_stream(const ExperimentConfig& cfg, std::size_t n, std::size_t rep);

/// One row per (n, rep), ordered by n-grid position then rep. Repetitions
/// run in parallel; output is independent of the thread count.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

/// Mean of the reject column over rows with the given n.
double rejection_rate(std::span<const ResultRow> rows, std::size_t n);

void write_csv(std::span<const ResultRow> rows, std::ostream& out);
void write_csv(std::span<const ResultRow> rows, const std::filesystem::path& path);
std::vector<ResultRow> read_csv(std::istream& in);
std::vector<ResultRow> read_csv(const std::filesystem::path& path);

/// JSON lines {"model": {"mean": [...], "var": [...]}, "y": [...]}.
Dataset read_dataset(std::istream& in);
Dataset read_dataset(const std::filesystem::path& path);
void write_dataset(std::span<const Observation> data, std::ostream& out);

/// JSON lines, either bare {"mean", "var"} objects or dataset lines.
std::vector<DiagonalGaussian> read_models(std::istream& in);

nlohmann::json to_json(const DiagonalGaussian& g);
nlohmann::json to_json(const TestResult& r);

/// Gram matrix as CSV with 17 significant digits.
void write_matrix_csv(const Matrix& m, std::ostream& out);

/// Command-line entry point. Exit codes: 0 success, 1 validation error,
/// 2 runtime numerical failure.
int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out,
            std::ostream& err);

}  // namespace kccsd
