#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "kccsd/errors.hpp"
#include "kccsd/harness.hpp"

using namespace kccsd;
using nlohmann::json;

namespace {

std::string error_of(const json& j) {
  try {
    parse_experiment_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

ExperimentConfig small_experiment() {
  ExperimentConfig cfg = parse_experiment_config(json::parse(R"({
    "setup": {"family": "LGM", "delta": 0.5},
    "n_grid": [16, 24],
    "repetitions": 3,
    "bootstrap": 50,
    "master_seed": 11
  })"));
  return cfg;
}

struct TempFile {
  std::filesystem::path path;
  explicit TempFile(const std::string& name, const std::string& content)
      : path(std::filesystem::temp_directory_path() / name) {
    std::ofstream(path) << content;
  }
  ~TempFile() { std::filesystem::remove(path); }
};

int cli(std::vector<std::string> args, std::string& out, std::string& err,
        const std::string& input = "") {
  args.insert(args.begin(), "kccsd");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::istringstream in(input);
  std::ostringstream o, e;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), in, o, e);
  out = o.str();
  err = e.str();
  return code;
}

}  // namespace

TEST_CASE("config defaults") {
  const auto cfg = parse_experiment_config(json::parse(R"({"setup": {"family": "MGM"}})"));
  CHECK(cfg.test.alpha == 0.05);
  CHECK(cfg.test.bootstrap == 500);
  CHECK(cfg.repetitions == 100);
  CHECK(cfg.test.base_samples == 10);
  CHECK(cfg.test.statistic.kind == StatisticKind::KCCSD);
  CHECK(cfg.test.dist_kernel.kind == DistKind::ExpGFD);
  CHECK_FALSE(cfg.test.dist_kernel.sigma.has_value());
  CHECK(cfg.setup.shift == MgmShift::AllOnes);
  CHECK_FALSE(cfg.record_wall_time);
}

TEST_CASE("config parsing of nested fields") {
  const auto cfg = parse_experiment_config(json::parse(R"({
    "setup": {"family": "MGM", "delta": 0.1, "shift": "first"},
    "statistic": {"name": "SKCE", "strategy": {"mode": "mala", "samples": 2, "step_size": 0.05,
                                               "steps": 10, "init_noise": 0}},
    "dist_kernel": {"kind": "exp_mmd", "sigma": 2.0, "ground": {"family": "gaussian", "bandwidth": 1.5},
                    "mode": "sampled"},
    "target_kernel": {"family": "imq"},
    "base_samples": 20
  })"));
  CHECK(cfg.setup.shift == MgmShift::FirstCoordinate);
  CHECK(cfg.test.statistic.kind == StatisticKind::SKCE);
  CHECK(cfg.test.statistic.strategy.mode == ExpectationMode::MALA);
  CHECK(cfg.test.statistic.strategy.samples == 2);
  CHECK(cfg.test.statistic.strategy.mala.step_size == 0.05);
  CHECK(cfg.test.statistic.strategy.mala.n_steps == 10);
  CHECK(cfg.test.statistic.strategy.init_noise == 0.0);
  CHECK(cfg.test.statistic.strategy.init == MalaInit::ModelMean);
  CHECK(cfg.test.dist_kernel.kind == DistKind::ExpMMD);
  CHECK(cfg.test.dist_kernel.mmd_mode == MmdMode::Sampled);
  CHECK(*cfg.test.dist_kernel.sigma == 2.0);
  CHECK(cfg.test.dist_kernel.ground->bandwidth() == 1.5);
  CHECK(cfg.test.dist_kernel.samples == 20);
  CHECK(cfg.test.target_kernel.family == ScalarFamily::IMQ);
}

TEST_CASE("config errors name the field") {
  CHECK(error_of(json::parse(R"({})")).find("setup") != std::string::npos);
  CHECK(error_of(json::parse(R"({"setup": {"family": "XYZ"}})")).find("setup.family") !=
        std::string::npos);
  CHECK(error_of(json::parse(R"({"setup": {"family": "LGM"}, "alpha": 2})")).find("alpha") !=
        std::string::npos);
  CHECK(error_of(json::parse(R"({"setup": {"family": "LGM"}, "n_grid": [64, 1]})"))
            .find("n_grid[1]") != std::string::npos);
  CHECK(error_of(json::parse(R"({"setup": {"family": "LGM"}, "dist_kernel": {"kind": "nope"}})"))
            .find("dist_kernel.kind") != std::string::npos);
  CHECK(error_of(json::parse(R"({"setup": {"family": "LGM"}, "bogus": 1})")).find("bogus") !=
        std::string::npos);
  CHECK(error_of(json::parse(R"({"setup": {"family": "LGM"}, "repetitions": 0})"))
            .find("repetitions") != std::string::npos);
  CHECK(error_of(json::parse(
            R"({"setup": {"family": "LGM"}, "statistic": {"name": "SKCE", "strategy": {"mode": "x"}}})"))
            .find("statistic.strategy.mode") != std::string::npos);
  CHECK(error_of(json::parse(
            R"({"setup": {"family": "LGM"}, "dist_kernel": {"kind": "exp_gfd", "sigma": -1}})"))
            .find("dist_kernel.sigma") != std::string::npos);
  CHECK(error_of(json::parse(R"({"setup": {"family": "LGM", "delta": -0.5}})")).find("setup.delta") !=
        std::string::npos);
  CHECK(error_of(json::parse(
            R"({"setup": {"family": "LGM"}, "statistic": {"name": "SKCE", "strategy": {"mode": "mala", "init": "x"}}})"))
            .find("statistic.strategy.init") != std::string::npos);
  const auto origin = parse_experiment_config(json::parse(
      R"({"setup": {"family": "LGM"}, "statistic": {"name": "SKCE", "strategy": {"mode": "mala", "init": "origin"}}})"));
  CHECK(origin.test.statistic.strategy.init == MalaInit::Origin);
}

TEST_CASE("csv round trip") {
  ResultRow a{"LGM", 0.1, 64, 0, "KCCSD", "exp_gfd", "gaussian", 1.0 / 3.0, 2.0e-7, 0.123, true, 42, 0.0};
  ResultRow b{"MGM-ones", 0.0, 256, 7, "SKCE-mala", "exp_mmd", "imq", -1e-300, 0.1, 1.0, false,
              18446744073709551615ull, 12.5};
  std::vector<ResultRow> rows{a, b};
  std::stringstream ss;
  write_csv(rows, ss);
  const auto back = read_csv(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == a);
  CHECK(back[1] == b);
}

TEST_CASE("csv header only for empty input") {
  std::stringstream ss;
  write_csv(std::span<const ResultRow>{}, ss);
  CHECK(ss.str() ==
        "family,delta,n,rep,statistic_name,dist_kernel,target_kernel,statistic_value,quantile,"
        "p_value,reject,seed,wall_time_ms\n");
  CHECK(read_csv(ss).empty());
}

TEST_CASE("malformed csv reports the line") {
  std::stringstream ss;
  ss << "family,delta,n,rep,statistic_name,dist_kernel,target_kernel,statistic_value,quantile,"
        "p_value,reject,seed,wall_time_ms\n"
     << "LGM,0,64,0,KCCSD,exp_gfd,gaussian,0.1,0.2,0.3,1,5,0\n"
     << "LGM,0,sixty,0,KCCSD,exp_gfd,gaussian,0.1,0.2,0.3,1,5,0\n";
  try {
    read_csv(ss);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("dataset json lines") {
  std::stringstream good;
  good << R"({"model": {"mean": [0.0], "var": [1.0]}, "y": [0.5]})" << '\n'
       << R"({"model": {"mean": [1.0], "var": [2.0]}, "y": [-0.5]})" << '\n';
  const Dataset d = read_dataset(good);
  REQUIRE(d.size() == 2);
  CHECK(d[1].model.gaussian->var()[0] == 2.0);
  CHECK(d[0].y[0] == 0.5);

  std::stringstream round;
  write_dataset(d, round);
  const Dataset d2 = read_dataset(round);
  CHECK(d2[1].y == d[1].y);
  CHECK(*d2[0].model.gaussian == *d[0].model.gaussian);

  std::stringstream bad;
  bad << R"({"model": {"mean": [0.0], "var": [1.0]}, "y": [0.5]})" << '\n'
      << R"({"model": {"mean": [0.0], "var": [1.0]}, "y": [0.5, 1.0]})" << '\n';
  try {
    read_dataset(bad);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::stringstream neg;
  neg << R"({"model": {"mean": [0.0], "var": [-1.0]}, "y": [0.5]})" << '\n';
  CHECK_THROWS_AS(read_dataset(neg), ParseError);
}

TEST_CASE("run_experiment shape and determinism") {
  auto cfg = small_experiment();
  const auto rows = run_experiment(cfg);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].n == 16);
  CHECK(rows[3].n == 24);
  CHECK(rows[4].rep == 1);
  CHECK(rows[0].family == "LGM");
  CHECK(rows[0].statistic_name == "KCCSD");
  CHECK(rows[0].dist_kernel == "exp_gfd");
  CHECK(rows[0].target_kernel == "gaussian");
  CHECK(rows[0].seed != rows[1].seed);
  CHECK(run_experiment(cfg) == rows);

  std::size_t rejected = 0;
  for (std::size_t i = 3; i < 6; ++i) rejected += rows[i].reject;
  CHECK(rejection_rate(rows, 24) == doctest::Approx(rejected / 3.0));

  cfg.repetitions = 1;
  const auto single = run_experiment(cfg);
  CHECK(single.size() == 2);
  CHECK(single[0] == rows[0]);
}

TEST_CASE("cell streams are distinct") {
  const auto cfg = small_experiment();
  CHECK(cell_stream(cfg, 16, 0).key() != cell_stream(cfg, 16, 1).key());
  CHECK(cell_stream(cfg, 16, 0).key() != cell_stream(cfg, 24, 0).key());
  auto other = cfg;
  other.setup.delta = 0.6;
  CHECK(cell_stream(cfg, 16, 0).key() != cell_stream(other, 16, 0).key());
  other = cfg;
  other.master_seed = 12;
  CHECK(cell_stream(cfg, 16, 0).key() != cell_stream(other, 16, 0).key());
}

TEST_CASE("cli experiment and exit codes") {
  TempFile conf("kccsd_test_experiment.json", R"({
    "setup": {"family": "QGM", "delta": 1.0}, "n_grid": [20], "repetitions": 2,
    "bootstrap": 40, "master_seed": 3})");
  std::string out, err;
  CHECK(cli({"experiment", "--config", conf.path.string()}, out, err) == 0);
  CHECK(std::count(out.begin(), out.end(), '\n') == 3);
  std::stringstream ss(out);
  const auto rows = read_csv(ss);
  CHECK(rows.size() == 2);

  std::string out8;
  CHECK(cli({"experiment", "--config", conf.path.string(), "--threads", "8"}, out8, err) == 0);
  CHECK(out8 == out);

  std::string seeded;
  CHECK(cli({"experiment", "--config", conf.path.string(), "--seed", "4"}, seeded, err) == 0);
  CHECK(seeded != out);

  CHECK(cli({"experiment", "--config", conf.path.string(), "--bogus"}, out, err) == 1);
  CHECK(err.find("Usage") != std::string::npos);
  CHECK(cli({"experiment", "--config", "/nonexistent.json"}, out, err) == 1);
  CHECK(cli({}, out, err) == 1);

  TempFile bad("kccsd_test_bad.json", R"({"setup": {"family": "LGM"}, "alpha": 7})");
  CHECK(cli({"experiment", "--config", bad.path.string()}, out, err) == 1);
  CHECK(err.find("alpha") != std::string::npos);
}

TEST_CASE("cli test and gram") {
  TempFile conf("kccsd_test_config.json", R"({"bootstrap": 100, "seed": 5,
    "dist_kernel": {"kind": "exp_wasserstein"}})");
  std::stringstream data;
  RandomStream rs(1);
  const Dataset d = sample_setup(SyntheticSetup{Family::LGM, 0.0}, 10, rs);
  write_dataset(d, data);

  std::string out, err;
  CHECK(cli({"test", "--config", conf.path.string()}, out, err, data.str()) == 0);
  const json r = json::parse(out);
  for (const char* key : {"statistic", "quantile", "p_value", "reject", "alpha", "bootstrap_count", "seed"}) {
    CHECK(r.contains(key));
  }
  CHECK(r["bootstrap_count"] == 100);

  CHECK(cli({"gram", "--config", conf.path.string()}, out, err, data.str()) == 0);
  CHECK(std::count(out.begin(), out.end(), '\n') == 10);
  CHECK(out.substr(0, 2) == "1,");

  CHECK(cli({"test", "--config", conf.path.string()}, out, err, "{not json}\n") == 1);
  CHECK(err.find("line 1") != std::string::npos);
}
