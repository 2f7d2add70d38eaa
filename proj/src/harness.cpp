#include "collusion/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "collusion/csv.hpp"
#include "collusion/errors.hpp"

namespace collusion {

using nlohmann::json;

namespace {

PrivateInfo theta_from_json(const json& j, const char* key) {
  if (!j.is_array() || j.size() != 4) throw ConfigError(std::string(key) + " must be a 4-element array");
  return PrivateInfo{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

json theta_to_json(const PrivateInfo& t) { return json::array({t.intercept, t.price1, t.price2, t.shock}); }

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) ==
        allowed.end()) {
      throw ConfigError(std::string("unknown key '") + key + "' in " + where);
    }
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

// Logs only when not quiet.
struct Logger {
  std::ostream& out;
  bool quiet;
  template <class T>
  Logger& operator<<(const T& v) {
    if (!quiet) out << v;
    return *this;
  }
};

std::string format_stat(double v, int decimals) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_fixed(v, decimals);
}

}  // namespace

void ExperimentConfig::validate() const {
  market.validate();
  estimator.validate();
  if (sample_sizes.empty()) throw ConfigError("sample_sizes must be nonempty");
  for (std::size_t n : sample_sizes) {
    if (n < 1) throw InputError("sample sizes must be >= 1");
  }
  if (replications < 1) throw ConfigError("replications must be >= 1");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (estimator.pbar != market.pbar) throw ConfigError("estimator pbar must match market pbar");
}

Scenario parse_scenario(const std::string& s) {
  if (s == "competitive" || s == "1") return Scenario::competitive;
  if (s == "collusive" || s == "2") return Scenario::collusive;
  throw InputError("unknown scenario '" + s + "' (expected competitive or collusive)");
}

ExperimentConfig config_from_json(const json& j) {
  check_keys(j,
             {"market", "estimator", "scenario", "sample_sizes", "replications", "alpha", "seed",
              "out_dir", "cdf_n", "jobs"},
             "config");
  ExperimentConfig cfg;
  if (j.contains("market")) {
    const json& m = j["market"];
    check_keys(m,
               {"pbar", "theta1", "theta2", "shock_mean", "shock_std", "noise_std", "lambda_bar",
                "noise_in_pricing", "collusion"},
               "market");
    MarketConfig& mk = cfg.market;
    mk.pbar = m.value("pbar", mk.pbar);
    if (m.contains("theta1")) mk.truth1 = theta_from_json(m["theta1"], "theta1");
    if (m.contains("theta2")) mk.truth2 = theta_from_json(m["theta2"], "theta2");
    mk.shock_mean = m.value("shock_mean", mk.shock_mean);
    mk.shock_std = m.value("shock_std", mk.shock_std);
    mk.noise_std = m.value("noise_std", mk.noise_std);
    mk.lambda_bar = m.value("lambda_bar", mk.lambda_bar);
    mk.noise_in_pricing = m.value("noise_in_pricing", mk.noise_in_pricing);
    if (m.contains("collusion")) {
      const auto mode = m["collusion"].get<std::string>();
      if (mode == "exact") mk.collusion = CollusionMode::exact;
      else if (mode == "optimality_gap") mk.collusion = CollusionMode::optimality_gap;
      else throw ConfigError("market.collusion must be 'exact' or 'optimality_gap'");
    }
  }
  cfg.estimator = EstimatorConfig::from_market(cfg.market);
  if (j.contains("estimator")) {
    const json& e = j["estimator"];
    check_keys(e, {"norm_const", "boundary_tol", "complementary_slackness"}, "estimator");
    if (e.contains("norm_const")) {
      const json& c = e["norm_const"];
      if (!c.is_array() || c.size() != 2) throw ConfigError("estimator.norm_const must have 2 values");
      cfg.estimator.norm_const1 = c[0].get<double>();
      cfg.estimator.norm_const2 = c[1].get<double>();
      cfg.norm_const_given = true;
    }
    cfg.estimator.boundary_tol = e.value("boundary_tol", cfg.estimator.boundary_tol);
    cfg.estimator.complementary_slackness =
        e.value("complementary_slackness", cfg.estimator.complementary_slackness);
  }
  if (j.contains("scenario")) cfg.scenario = parse_scenario(j["scenario"].get<std::string>());
  if (j.contains("sample_sizes")) {
    cfg.sample_sizes.clear();
    for (const auto& v : j["sample_sizes"]) {
      const long n = v.get<long>();
      if (n < 1) throw InputError("sample sizes must be >= 1");
      cfg.sample_sizes.push_back(static_cast<std::size_t>(n));
    }
  }
  cfg.replications = j.value("replications", cfg.replications);
  cfg.alpha = j.value("alpha", cfg.alpha);
  if (j.contains("seed")) cfg.seed.value = j["seed"].get<std::uint64_t>();
  if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
  cfg.cdf_n = j.value("cdf_n", cfg.cdf_n);
  cfg.jobs = j.value("jobs", cfg.jobs);
  cfg.validate();
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  const MarketConfig& m = cfg.market;
  json j;
  j["market"] = {{"pbar", m.pbar},
                 {"theta1", theta_to_json(m.truth1)},
                 {"theta2", theta_to_json(m.truth2)},
                 {"shock_mean", m.shock_mean},
                 {"shock_std", m.shock_std},
                 {"noise_std", m.noise_std},
                 {"lambda_bar", m.lambda_bar},
                 {"noise_in_pricing", m.noise_in_pricing},
                 {"collusion", m.collusion == CollusionMode::exact ? "exact" : "optimality_gap"}};
  j["estimator"] = {{"boundary_tol", cfg.estimator.boundary_tol},
                    {"complementary_slackness", cfg.estimator.complementary_slackness}};
  if (cfg.norm_const_given) {
    j["estimator"]["norm_const"] = {cfg.estimator.norm_const1, cfg.estimator.norm_const2};
  }
  j["scenario"] = to_string(cfg.scenario);
  j["sample_sizes"] = cfg.sample_sizes;
  j["replications"] = cfg.replications;
  j["alpha"] = cfg.alpha;
  j["seed"] = cfg.seed.value;
  j["out_dir"] = cfg.out_dir.string();
  j["cdf_n"] = cfg.cdf_n;
  j["jobs"] = cfg.jobs;
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

CellOutput run_cell(const ExperimentConfig& cfg, std::size_t n, std::size_t replication) {
  CellOutput out;
  out.row.n = n;
  out.row.replication = replication;
  out.data = generate_cell(cfg.scenario, n, cfg.seed, replication, cfg.market);
  const Estimate est = estimate(out.data.observations, cfg.estimator);
  if (!est.feasible()) {
    out.row.report = infeasible_report(n, cfg.alpha);
    return out;
  }
  out.row.report = decide(est.result->residuals, cfg.alpha);
  out.estimation = est.result;
  return out;
}

std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
  cfg.validate();
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t n : cfg.sample_sizes) {
    for (std::size_t r = 0; r < cfg.replications; ++r) cells.emplace_back(n, r);
  }
  std::vector<ExperimentRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const auto [n, rep] = cells[i];
      try {
        rows[i] = run_cell(cfg, n, rep).row;
      } catch (const std::exception& e) {
        rows[i].n = n;
        rows[i].replication = rep;
        rows[i].error = e.what();
      }
      if (log) {
        std::lock_guard lock(log_mutex);
        *log << "N=" << n << " rep=" << rep << ": "
             << (rows[i].error.empty() ? to_string(rows[i].report.decision) : "Error: " + rows[i].error)
             << '\n';
      }
    }
  };
  const std::size_t jobs = std::min(cfg.jobs, std::max<std::size_t>(cells.size(), 1));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }
  return rows;
}

std::string format_table(std::span<const ExperimentRow> rows) {
  std::ostringstream out;
  out << "N,D*,tau(N),lambda_hat,Decision\n";
  for (const ExperimentRow& r : rows) {
    out << r.n << ',';
    if (!r.error.empty()) {
      out << "nan,nan,nan,Error\n";
      continue;
    }
    out << format_stat(r.report.d_star, 3) << ',' << format_stat(r.report.tau, 3) << ','
        << format_stat(r.report.lambda_hat, 2) << ',' << to_string(r.report.decision) << '\n';
  }
  return out.str();
}

std::vector<CdfPoint> empirical_cdf_points(std::span<const double> sample) {
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  std::vector<CdfPoint> pts;
  for (std::size_t k = 0; k < sorted.size();) {
    std::size_t end = k;
    while (end < sorted.size() && sorted[end] == sorted[k]) ++end;
    pts.push_back({sorted[k], static_cast<double>(k) / n});
    pts.push_back({sorted[k], static_cast<double>(end) / n});
    k = end;
  }
  return pts;
}

std::vector<CdfPoint> exponential_cdf_points(std::span<const CdfPoint> abscissa, double rate) {
  std::vector<CdfPoint> pts;
  pts.reserve(abscissa.size());
  for (const CdfPoint& p : abscissa) pts.push_back({p.d, -std::expm1(-rate * p.d)});
  return pts;
}

double sup_distance(std::span<const CdfPoint> a, std::span<const CdfPoint> b) {
  if (a.size() != b.size()) throw InputError("CDF curves must share the abscissa grid");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i].f - b[i].f));
  return worst;
}

void write_cdf_export(const std::filesystem::path& path, std::span<const CdfSeries> series) {
  std::ostringstream out;
  out << "series,d,F\n";
  for (const CdfSeries& s : series) {
    for (const CdfPoint& p : s.points) out << s.name << ',' << format_double(p.d) << ',' << format_double(p.f) << '\n';
  }
  write_text(path, out.str());
}

json report_to_json(const TestReport& r) {
  return {{"d_star", number_or_null(r.d_star)},
          {"tau", number_or_null(r.tau)},
          {"lambda_hat", number_or_null(r.lambda_hat)},
          {"n", r.n},
          {"alpha", r.alpha},
          {"decision", to_string(r.decision)},
          {"status", status_string(r.decision)}};
}

json estimation_to_json(const Estimate& e, const EstimatorConfig& ecfg, std::size_t n) {
  json j;
  j["status"] = to_string(e.status);
  j["n"] = n;
  j["pbar"] = ecfg.pbar;
  j["norm_const"] = {ecfg.norm_const1, ecfg.norm_const2};
  j["boundary_tol"] = ecfg.boundary_tol;
  j["complementary_slackness"] = ecfg.complementary_slackness;
  if (!e.feasible()) {
    j["objective"] = nullptr;
    return j;
  }
  const EstimationResult& r = *e.result;
  j["objective"] = r.objective;
  j["theta_hat1"] = theta_to_json(r.theta_hat1);
  j["theta_hat2"] = theta_to_json(r.theta_hat2);
  json duals = json::array();
  for (const PricePair& y : r.duals) duals.push_back({y.p1, y.p2});
  j["duals"] = std::move(duals);
  return j;
}

ExperimentConfig resolve_config(const CommandOptions& opts) {
  ExperimentConfig cfg = opts.config_path ? load_config(*opts.config_path) : ExperimentConfig{};
  if (opts.seed) cfg.seed.value = *opts.seed;
  if (opts.scenario) cfg.scenario = parse_scenario(*opts.scenario);
  if (!opts.n.empty()) {
    for (std::size_t n : opts.n) {
      if (n < 1) throw InputError("--n must be >= 1");
    }
    cfg.sample_sizes = opts.n;
  }
  if (opts.alpha) cfg.alpha = *opts.alpha;
  if (opts.replications) cfg.replications = *opts.replications;
  if (opts.jobs) cfg.jobs = *opts.jobs;
  if (opts.pbar) cfg.market.pbar = *opts.pbar;
  if (!cfg.norm_const_given) {
    const EstimatorConfig derived = EstimatorConfig::from_market(cfg.market);
    cfg.estimator.norm_const1 = derived.norm_const1;
    cfg.estimator.norm_const2 = derived.norm_const2;
  }
  cfg.estimator.pbar = cfg.market.pbar;
  if (!opts.norm_const.empty()) {
    if (opts.norm_const.size() != 2) throw InputError("--norm takes two values: c1,c2");
    cfg.estimator.norm_const1 = opts.norm_const[0];
    cfg.estimator.norm_const2 = opts.norm_const[1];
    cfg.norm_const_given = true;
  }
  if (opts.boundary_tol) cfg.estimator.boundary_tol = *opts.boundary_tol;
  if (opts.no_complementary_slackness) cfg.estimator.complementary_slackness = false;
  if (opts.out_dir) {
    cfg.out_dir = *opts.out_dir;
  } else if (const char* env = std::getenv(kOutDirEnv); env && *env) {
    cfg.out_dir = env;
  }
  cfg.validate();
  return cfg;
}

int cmd_simulate(const CommandOptions& opts, std::ostream& log_stream) {
  const ExperimentConfig cfg = resolve_config(opts);
  Logger log{log_stream, opts.quiet};
  const bool single = cfg.sample_sizes.size() == 1 && cfg.replications == 1;
  for (std::size_t n : cfg.sample_sizes) {
    for (std::size_t rep = 0; rep < cfg.replications; ++rep) {
      const Dataset data = generate_cell(cfg.scenario, n, cfg.seed, rep, cfg.market);
      const std::string suffix =
          single ? "" : "_N" + std::to_string(n) + "_rep" + std::to_string(rep);
      const auto obs_path = cfg.out_dir / ("observations" + suffix + ".csv");
      write_observations_file(obs_path, data.observations);
      log << "wrote " << obs_path.string() << " (" << n << " rows, " << data.draws << " draws)\n";
      if (cfg.scenario == Scenario::competitive) {
        const auto gap_path = cfg.out_dir / ("true_gaps" + suffix + ".csv");
        write_column_file(gap_path, kTrueGapHeader, data.true_gaps);
        log << "wrote " << gap_path.string() << '\n';
      }
    }
  }
  return exit_code::ok;
}

int cmd_estimate(const CommandOptions& opts, std::ostream& log_stream) {
  if (!opts.input) throw InputError("estimate needs --input <observations.csv>");
  const ExperimentConfig cfg = resolve_config(opts);
  if (!cfg.norm_const_given) {
    throw InputError("ingested data needs explicit normalization constants (--norm c1,c2)");
  }
  Logger log{log_stream, opts.quiet};
  const auto obs = read_observations_file(*opts.input, cfg.estimator.pbar);
  if (obs.empty()) throw InputError(opts.input->string() + ": no observations");
  const Estimate est = estimate(obs, cfg.estimator);
  write_json(cfg.out_dir / "estimation.json", estimation_to_json(est, cfg.estimator, obs.size()));
  if (!est.feasible()) {
    log << "inverse problem infeasible: no admissible linear-demand model fits the data\n";
    return exit_code::infeasible;
  }
  write_column_file(cfg.out_dir / "residuals.csv", kResidualHeader, est.result->residuals);
  log << "objective " << format_double(est.result->objective) << "; wrote "
      << (cfg.out_dir / "residuals.csv").string() << " and "
      << (cfg.out_dir / "estimation.json").string() << '\n';
  return exit_code::ok;
}

int cmd_test(const CommandOptions& opts, std::ostream& log_stream) {
  if (!opts.input) throw InputError("test needs --input <residuals.csv>");
  const ExperimentConfig cfg = resolve_config(opts);
  Logger log{log_stream, opts.quiet};
  const auto residuals = read_column_file(*opts.input, kResidualHeader);
  const TestReport report = decide(residuals, cfg.alpha);
  write_json(cfg.out_dir / "test_report.json", report_to_json(report));
  log << "N=" << report.n << " D*=" << format_stat(report.d_star, 3)
      << " tau=" << format_stat(report.tau, 3) << " lambda_hat=" << format_stat(report.lambda_hat, 2)
      << " -> " << to_string(report.decision) << '\n';
  return exit_code::ok;
}

int cmd_experiment(const CommandOptions& opts, std::ostream& log_stream) {
  const ExperimentConfig cfg = resolve_config(opts);
  std::ostream* log = opts.quiet ? nullptr : &log_stream;
  const auto rows = run_experiment(cfg, log);
  write_text(cfg.out_dir / "table.csv", format_table(rows));

  json jrows = json::array();
  bool any_error = false;
  for (const ExperimentRow& r : rows) {
    json jr = report_to_json(r.report);
    jr["n"] = r.n;
    jr["replication"] = r.replication;
    if (!r.error.empty()) {
      jr["error"] = r.error;
      jr["status"] = "error";
      jr["decision"] = "Error";
      any_error = true;
    }
    jrows.push_back(std::move(jr));
  }
  write_json(cfg.out_dir / "rows.json", {{"config", config_to_json(cfg)}, {"rows", jrows}});

  if (std::find(cfg.sample_sizes.begin(), cfg.sample_sizes.end(), cfg.cdf_n) != cfg.sample_sizes.end()) {
    try {
      const CellOutput cell = run_cell(cfg, cfg.cdf_n, 0);
      if (cell.estimation) {
        std::vector<CdfSeries> series;
        const auto resid = empirical_cdf_points(cell.estimation->residuals);
        series.push_back({"residual_ecdf", resid});
        series.push_back({"true_gap_ecdf", empirical_cdf_points(cell.data.true_gaps)});
        if (std::isfinite(cell.row.report.lambda_hat)) {
          series.push_back({"exponential_fit", exponential_cdf_points(resid, cell.row.report.lambda_hat)});
        }
        series.push_back({"exponential_true", exponential_cdf_points(resid, cfg.market.lambda_bar)});
        write_cdf_export(cfg.out_dir / ("cdf_N" + std::to_string(cfg.cdf_n) + ".csv"), series);
      }
    } catch (const std::exception& e) {
      if (log) *log << "CDF export skipped: " << e.what() << '\n';
      any_error = true;
    }
  }
  if (log) *log << "wrote " << (cfg.out_dir / "table.csv").string() << '\n';
  return any_error ? exit_code::internal_error : exit_code::ok;
}

int cmd_plot_data(const CommandOptions& opts, std::ostream& log_stream) {
  if (!opts.input) throw InputError("plot-data needs --input <residuals.csv>");
  const ExperimentConfig cfg = resolve_config(opts);
  Logger log{log_stream, opts.quiet};
  const auto residuals = read_column_file(*opts.input, kResidualHeader);
  if (residuals.empty()) throw InputError(opts.input->string() + ": no residuals");
  std::vector<CdfSeries> series;
  series.push_back({"empirical", empirical_cdf_points(residuals)});
  if (opts.lambda) {
    if (!(*opts.lambda > 0.0)) throw InputError("--lambda must be positive");
    series.push_back({"exponential", exponential_cdf_points(series.front().points, *opts.lambda)});
  }
  write_cdf_export(cfg.out_dir / "cdf.csv", series);
  log << "wrote " << (cfg.out_dir / "cdf.csv").string() << '\n';
  return exit_code::ok;
}

int run_guarded(int (*command)(const CommandOptions&, std::ostream&), const CommandOptions& opts,
                std::ostream& log, std::ostream& err) {
  try {
    return command(opts, log);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::input_error;
  } catch (const GenerationStalled& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::input_error;
  } catch (const json::exception& e) {
    err << "error: config: " << e.what() << '\n';
    return exit_code::input_error;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return exit_code::internal_error;
  }
}

}  // namespace collusion
