#pragma once

// Economic primitives of the two-agent, single-item Bertrand game with
// linear demand and box-constrained prices 0 <= p_i <= pbar.

#include <array>

namespace collusion {

enum class Agent { first = 1, second = 2 };

inline constexpr int index_of(Agent a) { return a == Agent::first ? 0 : 1; }
inline constexpr Agent other(Agent a) { return a == Agent::first ? Agent::second : Agent::first; }

/// Demand parameters of one agent: D = intercept + price1*p1 + price2*p2 + shock*mu.
struct PrivateInfo {
  double intercept = 0.0;
  double price1 = 0.0;
  double price2 = 0.0;
  double shock = 0.0;

  /// Coefficient on the agent's own price.
  double own_price(Agent a) const { return a == Agent::first ? price1 : price2; }
  double cross_price(Agent a) const { return a == Agent::first ? price2 : price1; }

  std::array<double, 4> as_array() const { return {intercept, price1, price2, shock}; }
  static PrivateInfo from_array(const std::array<double, 4>& v) { return {v[0], v[1], v[2], v[3]}; }

  bool finite() const;
  friend bool operator==(const PrivateInfo&, const PrivateInfo&) = default;
};

struct PricePair {
  double p1 = 0.0;
  double p2 = 0.0;

  double operator[](Agent a) const { return a == Agent::first ? p1 : p2; }
  double& operator[](Agent a) { return a == Agent::first ? p1 : p2; }
  friend bool operator==(const PricePair&, const PricePair&) = default;
};

/// Unmodeled demand terms eta_1, eta_2 of the simulator's true demand.
struct Noise {
  double eta1 = 0.0;
  double eta2 = 0.0;

  double operator[](Agent a) const { return a == Agent::first ? eta1 : eta2; }
};

/// One tuple recorded by the regulator.
struct Observation {
  double p1 = 0.0;
  double p2 = 0.0;
  double mu = 0.0;

  PricePair prices() const { return {p1, p2}; }
  friend bool operator==(const Observation&, const Observation&) = default;
};

/// How Scenario 2 (collusive) prices are produced.
enum class CollusionMode {
  exact,           // argmax of joint utility over the box
  optimality_gap,  // exact argmax moved along a random direction until the loss equals eps
};

struct MarketConfig {
  double pbar = 8.0;
  PrivateInfo truth1{10.0, -1.0, 0.5, 1.0};
  PrivateInfo truth2{8.0, 0.4, -3.0, 1.0};
  double shock_mean = 5.0;
  double shock_std = 1.0;
  double noise_std = 1.0;
  double lambda_bar = 20.0;
  // When false, eta is drawn but the agents price against the noiseless demand.
  bool noise_in_pricing = false;
  CollusionMode collusion = CollusionMode::optimality_gap;

  const PrivateInfo& truth(Agent a) const { return a == Agent::first ? truth1 : truth2; }

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

/// theta0 + theta1*p1 + theta2*p2 + theta3*mu + eta.
double demand(Agent agent, PricePair p, double mu, const PrivateInfo& theta, double eta = 0.0);

/// d(p_i * D_i)/dp_i = D_i + p_i * own-price coefficient.
double marginal_utility(Agent agent, PricePair p, double mu, const PrivateInfo& theta,
                        double eta = 0.0);

/// p1*D1 + p2*D2 with eta = 0.
double joint_utility(PricePair p, double mu, const PrivateInfo& theta1, const PrivateInfo& theta2);

std::array<double, 2> joint_utility_gradient(PricePair p, double mu, const PrivateInfo& theta1,
                                             const PrivateInfo& theta2);

/// Constant Hessian of the joint utility, row-major {h11, h12, h21, h22}.
std::array<double, 4> joint_utility_hessian(const PrivateInfo& theta1, const PrivateInfo& theta2);

}  // namespace collusion
