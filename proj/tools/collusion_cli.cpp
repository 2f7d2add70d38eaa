#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "collusion/harness.hpp"

using collusion::CommandOptions;

namespace {

void add_shared(CLI::App* cmd, CommandOptions& o) {
  cmd->add_option("--config", o.config_path, "JSON config file mirroring ExperimentConfig");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--scenario", o.scenario, "competitive | collusive");
  cmd->add_option("--n", o.n, "Sample size(s)")->delimiter(',');
  cmd->add_option("--alpha", o.alpha, "Significance level (only 0.05 is tabulated)");
  cmd->add_option("--out", o.out_dir, "Output directory (overrides COLLUSION_OUT_DIR)");
  cmd->add_option("--replications", o.replications, "Replications per sample size");
  cmd->add_option("--jobs", o.jobs, "Worker threads for experiment cells");
  cmd->add_option("--pbar", o.pbar, "Price cap");
  cmd->add_flag("--quiet,-q", o.quiet, "Suppress progress logs");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate pricing markets, fit the inverse equilibrium LP, and test residuals"};
  app.require_subcommand(1);
  CommandOptions o;

  auto* simulate = app.add_subcommand("simulate", "Generate observation CSVs");
  add_shared(simulate, o);

  auto* est = app.add_subcommand("estimate", "Fit the inverse LP to an observation CSV");
  add_shared(est, o);
  est->add_option("--input", o.input, "Observation CSV (p1,p2,mu)")->required();
  est->add_option("--norm", o.norm_const, "Normalization constants c1,c2")->delimiter(',')->expected(2);
  est->add_option("--boundary-tol", o.boundary_tol, "Distance from pbar treated as boundary");
  est->add_flag("--no-cs", o.no_complementary_slackness, "Drop complementary-slackness constraints");

  auto* test = app.add_subcommand("test", "Lilliefors exponential test on a residual CSV");
  add_shared(test, o);
  test->add_option("--input", o.input, "Residual CSV (epsilon_hat)")->required();

  auto* experiment = app.add_subcommand("experiment", "Generate, estimate and test over sample sizes");
  add_shared(experiment, o);
  experiment->add_option("--norm", o.norm_const, "Normalization constants c1,c2")->delimiter(',')->expected(2);
  experiment->add_flag("--no-cs", o.no_complementary_slackness, "Drop complementary-slackness constraints");

  auto* plot = app.add_subcommand("plot-data", "Export empirical and reference CDF points");
  add_shared(plot, o);
  plot->add_option("--input", o.input, "Residual CSV (epsilon_hat)")->required();
  plot->add_option("--lambda", o.lambda, "Rate of the reference exponential CDF");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : collusion::exit_code::input_error;
  }

  auto run = [&](auto command) { return collusion::run_guarded(command, o, std::cerr, std::cerr); };
  if (simulate->parsed()) return run(collusion::cmd_simulate);
  if (est->parsed()) return run(collusion::cmd_estimate);
  if (test->parsed()) return run(collusion::cmd_test);
  if (experiment->parsed()) return run(collusion::cmd_experiment);
  return run(collusion::cmd_plot_data);
}
