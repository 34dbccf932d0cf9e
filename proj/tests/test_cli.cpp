#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dnngp/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("dnngp_cli_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DNNGP_CLI_PATH) + " " + args +
                          " >/dev/null 2>/tmp/dnngp_cli_err.txt";
  return std::system(cmd.c_str());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("cli pipeline: simulate, fit, predict, validate") {
  TempDir tmp;
  write_file(tmp.file("sim.json"), R"({
    "sites_per_axis": 6, "n_times": 6, "n_holdout": 20, "seed": 3,
    "sigma2": 1.0, "a": 50.0, "c": 25.0, "kappa": 0.75,
    "beta": [1.0, 5.0], "tau2": 0.1
  })");
  write_file(tmp.file("run.json"), R"({
    "scheme": "adaptive", "m": 9,
    "sigma2_lo": 0.1, "sigma2_hi": 10.0,
    "a_lo": 1.0, "a_hi": 100.0,
    "c_lo": 0.0, "c_hi": 50.0,
    "kappa_lo": 0.0, "kappa_hi": 1.0,
    "n_iter": 220, "n_burn": 120, "n_chains": 2, "seed": 12, "threads": 2
  })");

  REQUIRE(run_cli("simulate --config " + tmp.file("sim.json") + " --out " +
                  tmp.file("sim")) == 0);
  REQUIRE(fs::exists(tmp.file("sim/data.csv")));
  REQUIRE(fs::exists(tmp.file("sim/holdout.csv")));
  REQUIRE(fs::exists(tmp.file("sim/truth.json")));

  REQUIRE(run_cli("fit --data " + tmp.file("sim/data.csv") + " --config " +
                  tmp.file("run.json") + " --out " + tmp.file("fit")) == 0);
  REQUIRE(fs::exists(tmp.file("fit/posterior.csv")));
  REQUIRE(fs::exists(tmp.file("fit/posterior_meta.json")));
  REQUIRE(fs::exists(tmp.file("fit/metrics.json")));
  REQUIRE(fs::exists(tmp.file("fit/manifest.json")));
  {
    const json metrics = json::parse(read_file(tmp.file("fit/metrics.json")));
    CHECK(metrics["D"].get<double>() ==
          doctest::Approx(metrics["G"].get<double>() +
                          metrics["P"].get<double>()));
    const json manifest = json::parse(read_file(tmp.file("fit/manifest.json")));
    CHECK(manifest["config_hash"].get<std::string>().size() == 16);
    CHECK(manifest["reference_size"].get<int>() == 216);
  }

  REQUIRE(run_cli("predict --data " + tmp.file("sim/data.csv") +
                  " --posterior " + tmp.file("fit") + " --targets " +
                  tmp.file("sim/holdout.csv") + " --out " +
                  tmp.file("pred.csv")) == 0);
  {
    std::ifstream in(tmp.file("pred.csv"));
    std::string header;
    std::getline(in, header);
    CHECK(header.rfind("id,s1,s2,t,median,mean,q2.5,q97.5", 0) == 0);
    int rows = 0;
    std::string line;
    while (std::getline(in, line)) rows += !line.empty();
    CHECK(rows == 20);
  }

  REQUIRE(run_cli("validate --data " + tmp.file("sim/data.csv") +
                  " --posterior " + tmp.file("fit") + " --holdout " +
                  tmp.file("sim/holdout.csv") + " --out " +
                  tmp.file("val.json")) == 0);
  {
    const json val = json::parse(read_file(tmp.file("val.json")));
    CHECK(val["n_holdout"].get<int>() == 20);
    CHECK(val["rmspe"].get<double>() > 0.0);
    CHECK(val["coverage95"].get<double>() >= 0.0);
    CHECK(val["coverage95"].get<double>() <= 100.0);
  }
}

TEST_CASE("cli determinism: identical config and seed give identical bytes") {
  TempDir tmp;
  write_file(tmp.file("sim.json"), R"({
    "sites_per_axis": 4, "n_times": 4, "n_holdout": 0, "seed": 9,
    "beta": [1.0, 5.0], "tau2": 0.1
  })");
  write_file(tmp.file("run.json"), R"({
    "scheme": "simple", "m": 4,
    "a_lo": 1.0, "a_hi": 100.0, "c_lo": 0.0, "c_hi": 50.0,
    "n_iter": 120, "n_burn": 60, "n_chains": 1, "seed": 5, "threads": 1
  })");
  REQUIRE(run_cli("simulate --config " + tmp.file("sim.json") + " --out " +
                  tmp.file("sim")) == 0);
  REQUIRE(run_cli("fit --data " + tmp.file("sim/data.csv") + " --config " +
                  tmp.file("run.json") + " --out " + tmp.file("fit1")) == 0);
  REQUIRE(run_cli("fit --data " + tmp.file("sim/data.csv") + " --config " +
                  tmp.file("run.json") + " --out " + tmp.file("fit2")) == 0);
  CHECK(read_file(tmp.file("fit1/posterior.csv")) ==
        read_file(tmp.file("fit2/posterior.csv")));
}

TEST_CASE("cli block holdout withholds consecutive days per site") {
  TempDir tmp;
  write_file(tmp.file("sim.json"), R"({
    "sites_per_axis": 2, "n_times": 12, "n_holdout": 0, "seed": 2,
    "beta": [0.0, 1.0], "tau2": 0.05
  })");
  write_file(tmp.file("run.json"), R"({
    "scheme": "simple", "m": 4,
    "holdout_policy": "block_days", "holdout_days": 5,
    "n_iter": 60, "n_burn": 30, "n_chains": 1, "seed": 4
  })");
  REQUIRE(run_cli("simulate --config " + tmp.file("sim.json") + " --out " +
                  tmp.file("sim")) == 0);
  REQUIRE(run_cli("fit --data " + tmp.file("sim/data.csv") + " --config " +
                  tmp.file("run.json") + " --out " + tmp.file("fit")) == 0);
  REQUIRE(fs::exists(tmp.file("fit/holdout.csv")));
  const dnngp::PointRows rows =
      dnngp::load_points(tmp.file("fit/holdout.csv"), dnngp::Transform::none);
  CHECK(rows.points.size() == 4 * 5);  // 4 sites x 5 consecutive days
}

TEST_CASE("cli errors land on stderr as machine-readable json") {
  TempDir tmp;
  write_file(tmp.file("bad.json"), R"({"no_such_key": 1})");
  CHECK(run_cli("fit --data missing.csv --config " + tmp.file("bad.json") +
                " --out " + tmp.file("out")) != 0);
  const json err = json::parse(read_file("/tmp/dnngp_cli_err.txt"));
  CHECK(err.contains("error"));
  CHECK(err["error"].get<std::string>().find("unknown config key") !=
        std::string::npos);
}
