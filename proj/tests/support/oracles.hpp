#pragma once

// Brute-force reference implementations used only by tests. None of them call
// into the library's solvers; they re-derive each answer from the model equations.

#include <optional>
#include <span>
#include <vector>

#include "collusion/inverse_vi.hpp"
#include "collusion/market.hpp"

namespace oracle {

using collusion::MarketConfig;
using collusion::Noise;
using collusion::Observation;
using collusion::PricePair;

/// Grid minimizer of |p1*m1 + eps/2| + |p2*m2 + eps/2| over (0, hi]^2. A 0.01 pass locates
/// the basin; a 1e-3 pass over a window around it gives the answer.
struct GridRoot {
  PricePair p;
  double residual;
};
GridRoot interior_root(double mu, Noise eta, double eps, const MarketConfig& cfg, double hi);

/// Grid maximizer of the joint utility over [0, pbar]^2, same two-pass scheme.
PricePair collusive_argmax(double mu, const MarketConfig& cfg);

/// Optimal inverse-LP objective by enumerating vertices of the hyperplane arrangement in
/// parameter space. Duals and residuals are eliminated in closed form, so only the 8
/// demand parameters remain. nullopt when no parameter vector is feasible.
/// Intended for N <= 3 (cost grows as C(2N + 10, 6)).
std::optional<double> inverse_lp_objective(std::span<const Observation> obs,
                                           const collusion::EstimatorConfig& ecfg);

/// Objective of the inverse LP at a fixed parameter vector with duals and residuals
/// chosen optimally; nullopt when the parameters violate a constraint.
std::optional<double> objective_at(std::span<const Observation> obs,
                                   const collusion::EstimatorConfig& ecfg,
                                   const collusion::PrivateInfo& th1,
                                   const collusion::PrivateInfo& th2, double tol = 1e-9);

/// sup |F_N - F| scanned over a uniform grid of `steps` intervals covering [0, 2*max].
double ks_scan(std::span<const double> sample, double rate, std::size_t steps);

}  // namespace oracle
