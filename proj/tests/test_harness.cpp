#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "collusion/csv.hpp"
#include "collusion/errors.hpp"
#include "collusion/harness.hpp"

using namespace collusion;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "collusion_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(COLLUSION_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("observation CSV round trip and validation") {
  const std::vector<Observation> obs{{8.0, 2.7, 5.0}, {0.1 + 0.2, 1.0 / 3.0, -1e-300}};
  std::stringstream buf;
  write_observations(buf, obs);
  CHECK(buf.str().rfind("p1,p2,mu\n", 0) == 0);
  CHECK(read_observations(buf, "mem") == obs);

  std::istringstream over("p1,p2,mu\n1,2,3\n9.0,1,5\n");
  try {
    read_observations(over, "obs.csv", 8.0);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("obs.csv:3") != std::string::npos);
  }
  std::istringstream junk("p1,p2,mu\n1,abc,3\n");
  CHECK_THROWS_AS(read_observations(junk, "x"), ParseError);
  std::istringstream fields("p1,p2,mu\n1,2\n");
  CHECK_THROWS_AS(read_observations(fields, "x"), ParseError);
  std::istringstream header("a,b,c\n1,2,3\n");
  CHECK_THROWS_AS(read_observations(header, "x"), ParseError);

  std::stringstream col;
  write_column(col, kResidualHeader, std::vector<double>{1, 2.5});
  CHECK(col.str() == "epsilon_hat\n1\n2.5\n");
  CHECK(read_column(col, "mem", kResidualHeader) == std::vector<double>{1, 2.5});
}

TEST_CASE("config JSON") {
  const ExperimentConfig def;
  const ExperimentConfig back = config_from_json(config_to_json(def));
  CHECK(config_to_json(back) == config_to_json(def));
  CHECK(def.market.truth1 == PrivateInfo{10, -1, 0.5, 1});
  CHECK(def.estimator.norm_const1 == doctest::Approx(8.5));

  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"sample_sizes", {10, 0}}}), InputError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"replications", 0}}), ConfigError);
  const auto c = config_from_json(nlohmann::json{{"scenario", "collusive"}, {"seed", 9}});
  CHECK(c.scenario == Scenario::collusive);
  CHECK(c.seed.value == 9);
}

TEST_CASE("CDF points") {
  const auto pts = empirical_cdf_points(std::vector<double>{1.0});
  REQUIRE(pts.size() == 2);
  CHECK(pts[0].d == 1.0);
  CHECK(pts[0].f == 0.0);
  CHECK(pts[1].d == 1.0);
  CHECK(pts[1].f == 1.0);

  const auto ties = empirical_cdf_points(std::vector<double>{2, 1, 2});
  REQUIRE(ties.size() == 4);
  CHECK(ties[3].f == 1.0);
  CHECK(ties[2].f == doctest::Approx(1.0 / 3.0));
  for (std::size_t k = 1; k < ties.size(); ++k) {
    CHECK(ties[k].d >= ties[k - 1].d);
    CHECK(ties[k].f >= ties[k - 1].f);
  }
}

TEST_CASE("experiment table and determinism") {
  ExperimentConfig cfg;
  cfg.sample_sizes = {10, 20, 30, 40, 50, 100, 200, 500};
  const auto rows = run_experiment(cfg);
  REQUIRE(rows.size() == 8);
  const std::string table = format_table(rows);
  std::istringstream lines(table);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "N,D*,tau(N),lambda_hat,Decision");
  int count = 0;
  while (std::getline(lines, line)) {
    ++count;
    CHECK(std::count(line.begin(), line.end(), ',') == 4);
  }
  CHECK(count == 8);
  CHECK(rows.back().report.tau == 0.047);

  cfg.sample_sizes = {30, 50};
  cfg.replications = 3;
  cfg.jobs = 3;
  const std::string a = format_table(run_experiment(cfg));
  cfg.jobs = 1;
  const std::string b = format_table(run_experiment(cfg));
  CHECK(a == b);
}

TEST_CASE("collusive experiment at N=500 decides Colluding") {
  ExperimentConfig cfg;
  cfg.scenario = Scenario::collusive;
  cfg.sample_sizes = {500};
  const auto rows = run_experiment(cfg);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].error.empty());
  CHECK(rows[0].report.decision == Decision::reject_colluding);
}

TEST_CASE("cli: simulate is deterministic and validates N") {
  const fs::path dir = scratch("simulate");
  const std::string out1 = (dir / "a").string(), out2 = (dir / "b").string();
  CHECK(run_cli("simulate --scenario competitive --n 10 --seed 5 --quiet --out " + out1) == 0);
  CHECK(run_cli("simulate --scenario competitive --n 10 --seed 5 --quiet --out " + out2) == 0);
  CHECK(slurp(fs::path(out1) / "observations.csv") == slurp(fs::path(out2) / "observations.csv"));
  CHECK(fs::exists(fs::path(out1) / "true_gaps.csv"));
  CHECK(run_cli("simulate --n 0 --out " + out1) == exit_code::input_error);
  CHECK(run_cli("simulate --scenario sideways --out " + out1) == exit_code::input_error);
}

TEST_CASE("cli: estimate, test and plot-data pipeline") {
  const fs::path dir = scratch("pipeline");
  const std::string out = dir.string();
  REQUIRE(run_cli("simulate --n 50 --seed 11 --quiet --out " + out) == 0);
  CHECK(run_cli("estimate --input " + (dir / "observations.csv").string() + " --quiet --out " + out) ==
        exit_code::input_error);  // ingested data needs explicit normalization
  REQUIRE(run_cli("estimate --input " + (dir / "observations.csv").string() +
                  " --norm 8.5,2.4 --quiet --out " + out) == 0);
  const auto est = nlohmann::json::parse(slurp(dir / "estimation.json"));
  CHECK(est["status"] == "optimal");
  CHECK(est["duals"].size() == 50);
  const auto residuals = read_column_file(dir / "residuals.csv", kResidualHeader);
  CHECK(residuals.size() == 50);

  REQUIRE(run_cli("test --input " + (dir / "residuals.csv").string() + " --quiet --out " + out) == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "test_report.json"));
  for (const char* key : {"d_star", "tau", "lambda_hat", "n", "alpha", "decision", "status"}) {
    CHECK(report.contains(key));
  }
  CHECK(report["tau"] == 0.15);

  REQUIRE(run_cli("plot-data --input " + (dir / "residuals.csv").string() + " --lambda " +
                  format_double(report["lambda_hat"].get<double>()) + " --quiet --out " + out) == 0);
  std::istringstream csv(slurp(dir / "cdf.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "series,d,F");
  std::vector<CdfPoint> emp, ref;
  while (std::getline(csv, line)) {
    const auto c1 = line.find(','), c2 = line.rfind(',');
    const CdfPoint p{std::stod(line.substr(c1 + 1, c2 - c1 - 1)), std::stod(line.substr(c2 + 1))};
    (line.rfind("empirical,", 0) == 0 ? emp : ref).push_back(p);
  }
  CHECK(emp.size() == ref.size());
  CHECK(std::abs(sup_distance(emp, ref) - report["d_star"].get<double>()) <= 1e-6);

  REQUIRE(run_cli("plot-data --input " + (dir / "residuals.csv").string() + " --quiet --out " +
                  (dir / "nolambda").string()) == 0);
  CHECK(slurp(dir / "nolambda" / "cdf.csv").find("exponential") == std::string::npos);
}

TEST_CASE("cli: test on a tiny residual file") {
  const fs::path dir = scratch("tiny");
  write_column_file(dir / "r.csv", kResidualHeader, std::vector<double>{1, 2, 3});
  REQUIRE(run_cli("test --input " + (dir / "r.csv").string() + " --quiet --out " + dir.string()) == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "test_report.json"));
  CHECK(report["lambda_hat"] == 0.5);
  CHECK(run_cli("test --alpha 0.01 --input " + (dir / "r.csv").string() + " --out " + dir.string()) ==
        exit_code::input_error);
}

TEST_CASE("cli: error exit codes") {
  const fs::path dir = scratch("errors");
  std::ofstream(dir / "over.csv") << "p1,p2,mu\n1,2,3\n9.0,1,5\n";
  CHECK(run_cli("estimate --input " + (dir / "over.csv").string() + " --norm 8.5,2.4 --out " +
                dir.string()) == exit_code::input_error);

  std::ofstream(dir / "bad.csv") << "p1,p2,mu\n1,1,0\n";
  CHECK(run_cli("estimate --input " + (dir / "bad.csv").string() + " --norm 8.5,2.4 --quiet --out " +
                dir.string()) == exit_code::infeasible);
  const auto est = nlohmann::json::parse(slurp(dir / "estimation.json"));
  CHECK(est["status"] == "infeasible");
}

TEST_CASE("cli: experiment outputs and the output directory variable") {
  const fs::path dir = scratch("experiment");
  std::ofstream(dir / "cfg.json") << R"({"sample_sizes": [20, 50], "replications": 2, "seed": 4})";
  const std::string env = std::string("COLLUSION_OUT_DIR=") + (dir / "env").string() + " ";
  const std::string cmd = env + COLLUSION_CLI + " experiment --quiet --config " +
                          (dir / "cfg.json").string() + " > /dev/null 2>&1";
  REQUIRE(std::system(cmd.c_str()) == 0);
  const std::string t1 = slurp(dir / "env" / "table.csv");
  CHECK(fs::exists(dir / "env" / "cdf_N50.csv"));
  CHECK(fs::exists(dir / "env" / "rows.json"));
  REQUIRE(run_cli("experiment --quiet --config " + (dir / "cfg.json").string() + " --out " +
                  (dir / "flag").string()) == 0);
  CHECK(slurp(dir / "flag" / "table.csv") == t1);
  CHECK(slurp(dir / "flag" / "cdf_N50.csv") == slurp(dir / "env" / "cdf_N50.csv"));
  CHECK(std::count(t1.begin(), t1.end(), '\n') == 5);
}
