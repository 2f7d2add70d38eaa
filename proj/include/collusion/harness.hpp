#pragma once

// Batch orchestration behind the command-line tool: simulate -> estimate -> test,
// experiment tables, and CDF exports. Every command writes flat files into an
// output directory and returns a process exit code.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "collusion/inverse_vi.hpp"
#include "collusion/lilliefors.hpp"
#include "collusion/market.hpp"
#include "collusion/scenario.hpp"

namespace collusion {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int input_error = 2;
inline constexpr int infeasible = 3;
inline constexpr int internal_error = 4;
}  // namespace exit_code

/// Environment variable that overrides the configured output directory.
inline constexpr const char* kOutDirEnv = "COLLUSION_OUT_DIR";

struct ExperimentConfig {
  MarketConfig market;
  EstimatorConfig estimator = EstimatorConfig::from_market(MarketConfig{});
  bool norm_const_given = false;  // estimator.norm_const set explicitly (vs derived from market)
  Scenario scenario = Scenario::competitive;
  std::vector<std::size_t> sample_sizes{10, 20, 30, 40, 50, 100, 200, 500};
  std::size_t replications = 1;
  double alpha = 0.05;
  SimSeed seed{2020};
  std::filesystem::path out_dir = "out";
  std::size_t cdf_n = 50;  // sample size whose replication 0 gets a CDF export
  std::size_t jobs = 1;

  void validate() const;
};

/// Unknown keys raise ConfigError. Missing keys keep the defaults above.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

Scenario parse_scenario(const std::string& s);

struct ExperimentRow {
  std::size_t n = 0;
  std::size_t replication = 0;
  TestReport report;
  std::string error;  // non-empty when the cell failed outright
};

struct CellOutput {
  ExperimentRow row;
  Dataset data;
  std::optional<EstimationResult> estimation;
};

/// generate -> estimate -> test for one (N, replication) cell. Infeasible estimation
/// becomes a ModelInfeasible row; other failures propagate.
CellOutput run_cell(const ExperimentConfig& cfg, std::size_t n, std::size_t replication);

/// All cells, ordered by sample size then replication. Failures are isolated per row.
std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// "N,D*,tau(N),lambda_hat,Decision" with 3/3/2 decimals.
std::string format_table(std::span<const ExperimentRow> rows);

struct CdfPoint {
  double d;
  double f;
};

/// Two points per distinct value: the left limit and the value at the jump.
std::vector<CdfPoint> empirical_cdf_points(std::span<const double> sample);
std::vector<CdfPoint> exponential_cdf_points(std::span<const CdfPoint> abscissa, double rate);
/// max |F_a - F_b| over points sharing an index (both curves on the same abscissa).
double sup_distance(std::span<const CdfPoint> a, std::span<const CdfPoint> b);

struct CdfSeries {
  std::string name;
  std::vector<CdfPoint> points;
};
/// Long-form CSV: header "series,d,F".
void write_cdf_export(const std::filesystem::path& path, std::span<const CdfSeries> series);

nlohmann::json report_to_json(const TestReport& r);
nlohmann::json estimation_to_json(const Estimate& e, const EstimatorConfig& ecfg, std::size_t n);

/// Options shared by the subcommands; unset optionals fall back to the config file.
struct CommandOptions {
  std::optional<std::filesystem::path> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> scenario;
  std::vector<std::size_t> n;
  std::optional<double> alpha;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::size_t> replications;
  std::optional<std::size_t> jobs;
  bool quiet = false;

  // estimate / test / plot-data
  std::optional<std::filesystem::path> input;
  std::vector<double> norm_const;
  std::optional<double> pbar;
  std::optional<double> boundary_tol;
  bool no_complementary_slackness = false;
  std::optional<double> lambda;
};

/// Config file (if any) plus flag overrides plus the output-directory environment override.
ExperimentConfig resolve_config(const CommandOptions& opts);

int cmd_simulate(const CommandOptions& opts, std::ostream& log);
int cmd_estimate(const CommandOptions& opts, std::ostream& log);
int cmd_test(const CommandOptions& opts, std::ostream& log);
int cmd_experiment(const CommandOptions& opts, std::ostream& log);
int cmd_plot_data(const CommandOptions& opts, std::ostream& log);

/// Runs `command`, mapping exceptions onto exit codes and printing the message to `err`.
int run_guarded(int (*command)(const CommandOptions&, std::ostream&), const CommandOptions& opts,
                std::ostream& log, std::ostream& err);

}  // namespace collusion
