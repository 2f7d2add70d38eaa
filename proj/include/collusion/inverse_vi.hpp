#pragma once

// Regulator-side inverse variational inequality for the box-constrained
// two-agent game. With observed prices fixed, the fitted marginal utilities
// are linear in the parameters, so the whole problem is one LP:
//
//   min  sum_j eps_j
//   s.t. y_ij >= m_i(p^j, mu^j; theta_i)                     (dual feasibility)
//        pbar*(y_1j + y_2j) - sum_i p_i^j m_i(...) = eps_j    (gap)
//        m_i(1, 1, 0; theta_i) = c_i                          (normalization)
//        y_ij = 0 when p_i^j < pbar - tol                     (complementary slackness)
//        own-price coefficient of theta_i <= 0
//        eps_j >= 0, y_ij >= 0
//
// Duals exist only for the upper price bounds; the lower bound p_i >= 0 carries
// none, so observations with p_i = 0 may be impossible to rationalize.
//
// The objective is nonnegative and at an optimum y_ij = max(0, m_ij) with eps_j
// given by the gap row, so only theta is really free. solve_lp works on the LP
// dual to that reduced problem: 8 equality rows (one per parameter), one column
// per (observation, agent) bounded by [0, pbar] or [0, inf) when pinned. Its
// basis is 8x8 however many observations there are, which keeps the highly
// degenerate fits well conditioned. theta is read off the row multipliers and
// the full solution is checked against the full LP before it is returned.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "collusion/linear_program.hpp"
#include "collusion/market.hpp"
#include "collusion/simplex.hpp"

namespace collusion {

struct EstimatorConfig {
  double pbar = 8.0;
  double norm_const1 = 0.0;
  double norm_const2 = 0.0;
  double boundary_tol = 1e-6;
  bool complementary_slackness = true;

  double norm_const(Agent a) const { return a == Agent::first ? norm_const1 : norm_const2; }
  void validate() const;

  /// Normalization pinned to the true marginal utilities at (1, 1, 0).
  static EstimatorConfig from_market(const MarketConfig& market);
};

struct EstimationResult {
  PrivateInfo theta_hat1;
  PrivateInfo theta_hat2;
  std::vector<PricePair> duals;  // (y_1j, y_2j)
  std::vector<double> residuals;
  double objective = 0.0;

  const PrivateInfo& theta_hat(Agent a) const { return a == Agent::first ? theta_hat1 : theta_hat2; }
};

enum class EstimationStatus { optimal, infeasible };

struct Estimate {
  EstimationStatus status = EstimationStatus::infeasible;
  std::optional<EstimationResult> result;  // iff optimal

  bool feasible() const { return status == EstimationStatus::optimal; }
};

/// The assembled LP plus its column layout:
/// theta_hat1 (4), theta_hat2 (4), y (2 per observation), eps (1 per observation).
struct InverseProblem {
  LinearProgram lp;
  std::size_t observations = 0;
  std::vector<Observation> data;
  EstimatorConfig config;

  static std::size_t theta_column(Agent a, std::size_t k) { return 4 * static_cast<std::size_t>(index_of(a)) + k; }
  std::size_t dual_column(std::size_t j, Agent a) const { return 8 + 2 * j + static_cast<std::size_t>(index_of(a)); }
  std::size_t residual_column(std::size_t j) const { return 8 + 2 * observations + j; }
  std::size_t pinned_duals() const;
};

/// Coefficients of m_i(p, mu; theta) on (intercept, price1, price2, shock).
std::array<double, 4> marginal_coefficients(Agent agent, PricePair p, double mu);

/// Throws InputError on empty input or prices outside [0, pbar].
InverseProblem build_lp(std::span<const Observation> observations, const EstimatorConfig& ecfg);

/// Throws InternalError if the solver hits its iteration limit or returns a point
/// that violates the full LP.
Estimate solve_lp(const InverseProblem& problem, const SimplexOptions& opts = {});

Estimate estimate(std::span<const Observation> observations, const EstimatorConfig& ecfg);

const char* to_string(EstimationStatus s);

}  // namespace collusion
