#include "collusion/market.hpp"

#include <cmath>

#include "collusion/errors.hpp"

namespace collusion {

bool PrivateInfo::finite() const {
  return std::isfinite(intercept) && std::isfinite(price1) && std::isfinite(price2) &&
         std::isfinite(shock);
}

void MarketConfig::validate() const {
  if (!(pbar > 0.0) || !std::isfinite(pbar)) throw ConfigError("pbar must be positive and finite");
  if (!(shock_std >= 0.0)) throw ConfigError("shock_std must be >= 0");
  if (!(noise_std >= 0.0)) throw ConfigError("noise_std must be >= 0");
  if (!(lambda_bar > 0.0)) throw ConfigError("lambda_bar must be > 0");
  if (!std::isfinite(shock_mean)) throw ConfigError("shock_mean must be finite");
  if (!truth1.finite() || !truth2.finite()) throw ConfigError("true parameters must be finite");
}

double demand(Agent agent, PricePair p, double mu, const PrivateInfo& theta, double eta) {
  (void)agent;  // same layout for both agents
  return theta.intercept + p.p1 * theta.price1 + p.p2 * theta.price2 + theta.shock * mu + eta;
}

double marginal_utility(Agent agent, PricePair p, double mu, const PrivateInfo& theta, double eta) {
  return demand(agent, p, mu, theta, eta) + p[agent] * theta.own_price(agent);
}

double joint_utility(PricePair p, double mu, const PrivateInfo& theta1, const PrivateInfo& theta2) {
  return p.p1 * demand(Agent::first, p, mu, theta1) + p.p2 * demand(Agent::second, p, mu, theta2);
}

std::array<double, 2> joint_utility_gradient(PricePair p, double mu, const PrivateInfo& theta1,
                                             const PrivateInfo& theta2) {
  // dU/dp1 = m1 + p2 * theta2_1, dU/dp2 = m2 + p1 * theta1_2
  return {marginal_utility(Agent::first, p, mu, theta1) + p.p2 * theta2.price1,
          marginal_utility(Agent::second, p, mu, theta2) + p.p1 * theta1.price2};
}

std::array<double, 4> joint_utility_hessian(const PrivateInfo& theta1, const PrivateInfo& theta2) {
  const double off = theta1.price2 + theta2.price1;
  return {2.0 * theta1.price1, off, off, 2.0 * theta2.price2};
}

}  // namespace collusion
