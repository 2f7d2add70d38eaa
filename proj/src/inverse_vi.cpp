#include "collusion/inverse_vi.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "collusion/errors.hpp"

namespace collusion {

void EstimatorConfig::validate() const {
  if (!(pbar > 0.0) || !std::isfinite(pbar)) throw ConfigError("estimator pbar must be positive");
  if (!(norm_const1 > 0.0) || !(norm_const2 > 0.0) || !std::isfinite(norm_const1) ||
      !std::isfinite(norm_const2)) {
    throw ConfigError("normalization constants must be positive");
  }
  if (!(boundary_tol >= 0.0)) throw ConfigError("boundary_tol must be >= 0");
}

EstimatorConfig EstimatorConfig::from_market(const MarketConfig& market) {
  EstimatorConfig e;
  e.pbar = market.pbar;
  const PricePair unit{1.0, 1.0};
  e.norm_const1 = marginal_utility(Agent::first, unit, 0.0, market.truth1);
  e.norm_const2 = marginal_utility(Agent::second, unit, 0.0, market.truth2);
  return e;
}

std::size_t InverseProblem::pinned_duals() const {
  std::size_t n = 0;
  for (std::size_t j = 0; j < observations; ++j) {
    for (Agent a : {Agent::first, Agent::second}) {
      if (lp.is_fixed(dual_column(j, a))) ++n;
    }
  }
  return n;
}

std::array<double, 4> marginal_coefficients(Agent agent, PricePair p, double mu) {
  std::array<double, 4> c{1.0, p.p1, p.p2, mu};
  c[agent == Agent::first ? 1 : 2] += p[agent];
  return c;
}

namespace {

void add_marginal_terms(std::vector<LinearTerm>& terms, Agent agent, PricePair p, double mu,
                        double scale) {
  const auto c = marginal_coefficients(agent, p, mu);
  for (std::size_t k = 0; k < 4; ++k) {
    if (c[k] != 0.0) terms.push_back({InverseProblem::theta_column(agent, k), scale * c[k]});
  }
}

}  // namespace

InverseProblem build_lp(std::span<const Observation> observations, const EstimatorConfig& ecfg) {
  ecfg.validate();
  if (observations.empty()) throw InputError("no observations");
  for (std::size_t j = 0; j < observations.size(); ++j) {
    const Observation& o = observations[j];
    if (!std::isfinite(o.p1) || !std::isfinite(o.p2) || !std::isfinite(o.mu)) {
      throw InputError("observation " + std::to_string(j + 1) + " is not finite");
    }
    if (o.p1 < 0.0 || o.p1 > ecfg.pbar || o.p2 < 0.0 || o.p2 > ecfg.pbar) {
      throw InputError("observation " + std::to_string(j + 1) + " lies outside the price box");
    }
  }

  InverseProblem prob;
  prob.observations = observations.size();
  prob.data.assign(observations.begin(), observations.end());
  prob.config = ecfg;
  LinearProgram& lp = prob.lp;
  static const char* kThetaNames[4] = {"intercept", "price1", "price2", "shock"};
  for (Agent a : {Agent::first, Agent::second}) {
    for (std::size_t k = 0; k < 4; ++k) {
      const bool own = (a == Agent::first && k == 1) || (a == Agent::second && k == 2);
      lp.add_column("theta" + std::to_string(index_of(a) + 1) + "." + kThetaNames[k], 0.0,
                    -kInfinity, own ? 0.0 : kInfinity);
    }
  }
  for (std::size_t j = 0; j < observations.size(); ++j) {
    const PricePair p = observations[j].prices();
    for (Agent a : {Agent::first, Agent::second}) {
      const bool pinned = ecfg.complementary_slackness && p[a] < ecfg.pbar - ecfg.boundary_tol;
      lp.add_column("y" + std::to_string(index_of(a) + 1) + "[" + std::to_string(j) + "]", 0.0, 0.0,
                    pinned ? 0.0 : kInfinity);
    }
  }
  for (std::size_t j = 0; j < observations.size(); ++j) {
    lp.add_column("eps[" + std::to_string(j) + "]", 1.0, 0.0, kInfinity);
  }

  for (std::size_t j = 0; j < observations.size(); ++j) {
    const Observation& o = observations[j];
    const PricePair p = o.prices();
    for (Agent a : {Agent::first, Agent::second}) {
      LinearConstraint row;
      row.name = "dual" + std::to_string(index_of(a) + 1) + "[" + std::to_string(j) + "]";
      add_marginal_terms(row.terms, a, p, o.mu, 1.0);
      row.terms.push_back({prob.dual_column(j, a), -1.0});
      row.sense = RowSense::less_equal;
      row.rhs = 0.0;
      lp.add_row(std::move(row));
    }
    LinearConstraint gap;
    gap.name = "gap[" + std::to_string(j) + "]";
    for (Agent a : {Agent::first, Agent::second}) {
      add_marginal_terms(gap.terms, a, p, o.mu, -p[a]);
      gap.terms.push_back({prob.dual_column(j, a), ecfg.pbar});
    }
    gap.terms.push_back({prob.residual_column(j), -1.0});
    gap.sense = RowSense::equal;
    gap.rhs = 0.0;
    lp.add_row(std::move(gap));
  }
  for (Agent a : {Agent::first, Agent::second}) {
    LinearConstraint norm;
    norm.name = "normalize" + std::to_string(index_of(a) + 1);
    add_marginal_terms(norm.terms, a, PricePair{1.0, 1.0}, 0.0, 1.0);
    norm.sense = RowSense::equal;
    norm.rhs = ecfg.norm_const(a);
    lp.add_row(std::move(norm));
  }
  return prob;
}

namespace {

bool is_pinned(const EstimatorConfig& ecfg, double price) {
  return ecfg.complementary_slackness && price < ecfg.pbar - ecfg.boundary_tol;
}

// Dual of the reduced problem (theta only). Row 4*i+k is parameter k of agent i.
// Columns: u_ij per (observation, agent), then w_1, w_2 (normalization), then
// v_1, v_2 (sign of the own-price coefficients).
LinearProgram reduced_dual(const InverseProblem& problem) {
  const EstimatorConfig& e = problem.config;
  std::array<double, 8> rhs{};
  std::vector<std::vector<LinearTerm>> rows(8);
  LinearProgram lp;
  for (std::size_t j = 0; j < problem.data.size(); ++j) {
    const Observation& o = problem.data[j];
    const PricePair p = o.prices();
    for (Agent a : {Agent::first, Agent::second}) {
      const auto c = marginal_coefficients(a, p, o.mu);
      const std::size_t col = lp.add_column("u", 0.0, 0.0, is_pinned(e, p[a]) ? kInfinity : e.pbar);
      for (std::size_t k = 0; k < 4; ++k) {
        const std::size_t row = InverseProblem::theta_column(a, k);
        rhs[row] -= p[a] * c[k];
        if (c[k] != 0.0) rows[row].push_back({col, -c[k]});
      }
    }
  }
  for (Agent a : {Agent::first, Agent::second}) {
    const auto n = marginal_coefficients(a, PricePair{1.0, 1.0}, 0.0);
    const std::size_t col = lp.add_column("w", -e.norm_const(a), -kInfinity, kInfinity);
    for (std::size_t k = 0; k < 4; ++k) {
      if (n[k] != 0.0) rows[InverseProblem::theta_column(a, k)].push_back({col, n[k]});
    }
  }
  for (Agent a : {Agent::first, Agent::second}) {
    const std::size_t col = lp.add_column("v", 0.0, 0.0, kInfinity);
    rows[InverseProblem::theta_column(a, a == Agent::first ? 1 : 2)].push_back({col, -1.0});
  }
  for (std::size_t r = 0; r < 8; ++r) {
    lp.add_row({std::move(rows[r]), RowSense::equal, rhs[r], "theta"});
  }
  return lp;
}

}  // namespace

Estimate solve_lp(const InverseProblem& problem, const SimplexOptions& opts) {
  SimplexOptions dual_opts = opts;
  dual_opts.row_duals = true;
  const LpSolution sol = solve(reduced_dual(problem), dual_opts);
  Estimate out;
  switch (sol.status) {
    case LpStatus::infeasible:
    case LpStatus::unbounded:
      // The primal objective is bounded below by 0, so either outcome means no feasible theta.
      out.status = EstimationStatus::infeasible;
      return out;
    case LpStatus::iteration_limit:
      throw InternalError("inverse LP hit the simplex iteration limit");
    case LpStatus::optimal:
      break;
  }

  const EstimatorConfig& e = problem.config;
  std::array<double, 4> t1{}, t2{};
  for (std::size_t k = 0; k < 4; ++k) {
    t1[k] = -sol.row_duals[InverseProblem::theta_column(Agent::first, k)];
    t2[k] = -sol.row_duals[InverseProblem::theta_column(Agent::second, k)];
  }
  // The multipliers satisfy the sign constraints up to round-off.
  t1[1] = std::min(t1[1], 0.0);
  t2[2] = std::min(t2[2], 0.0);

  EstimationResult r;
  r.theta_hat1 = PrivateInfo::from_array(t1);
  r.theta_hat2 = PrivateInfo::from_array(t2);
  std::vector<double> x(problem.lp.num_columns(), 0.0);
  for (std::size_t k = 0; k < 4; ++k) {
    x[InverseProblem::theta_column(Agent::first, k)] = t1[k];
    x[InverseProblem::theta_column(Agent::second, k)] = t2[k];
  }
  r.duals.reserve(problem.observations);
  r.residuals.reserve(problem.observations);
  for (std::size_t j = 0; j < problem.observations; ++j) {
    const Observation& o = problem.data[j];
    const PricePair p = o.prices();
    PricePair y{0.0, 0.0};
    double gap = 0.0;
    for (Agent a : {Agent::first, Agent::second}) {
      const double m = marginal_utility(a, p, o.mu, r.theta_hat(a));
      if (!is_pinned(e, p[a])) y[a] = std::max(0.0, m);
      gap += e.pbar * y[a] - p[a] * m;
      x[problem.dual_column(j, a)] = y[a];
    }
    const double eps = std::max(0.0, gap);
    x[problem.residual_column(j)] = eps;
    r.duals.push_back(y);
    r.residuals.push_back(eps);
  }
  r.objective = 0.0;
  for (double eps : r.residuals) r.objective += eps;

  const double scale = std::max(1.0, r.objective);
  if (problem.lp.max_violation(x) > 1e-7 * scale) {
    throw InternalError("inverse LP solution violates its constraints");
  }
  if (std::abs(r.objective + sol.objective) > 1e-6 * scale) {
    throw InternalError("inverse LP primal and dual objectives disagree");
  }
  out.status = EstimationStatus::optimal;
  out.result = std::move(r);
  return out;
}

Estimate estimate(std::span<const Observation> observations, const EstimatorConfig& ecfg) {
  return solve_lp(build_lp(observations, ecfg));
}

const char* to_string(EstimationStatus s) {
  return s == EstimationStatus::optimal ? "optimal" : "infeasible";
}

}  // namespace collusion
