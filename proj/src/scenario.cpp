#include "collusion/scenario.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "collusion/errors.hpp"

namespace collusion {

namespace {

// Intercept of agent i's marginal utility once mu and eta are fixed.
double marginal_intercept(Agent a, double mu, Noise eta, const MarketConfig& cfg) {
  const PrivateInfo& th = cfg.truth(a);
  return th.intercept + th.shock * mu + eta[a];
}

struct InteriorSystem {
  double a1, a2;
  const PrivateInfo& t1;
  const PrivateInfo& t2;
  double half_eps;

  // m1 = a1 + 2*t1.price1*p1 + t1.price2*p2, m2 = a2 + t2.price1*p1 + 2*t2.price2*p2
  std::array<double, 2> marginals(PricePair p) const {
    return {a1 + 2.0 * t1.price1 * p.p1 + t1.price2 * p.p2,
            a2 + t2.price1 * p.p1 + 2.0 * t2.price2 * p.p2};
  }
  std::array<double, 2> residual(PricePair p) const {
    const auto m = marginals(p);
    return {p.p1 * m[0] + half_eps, p.p2 * m[1] + half_eps};
  }
};

std::optional<PricePair> newton_from(const InteriorSystem& sys, PricePair p, NewtonOptions opts) {
  for (int it = 0; it <= opts.max_iterations; ++it) {
    if (!std::isfinite(p.p1) || !std::isfinite(p.p2)) return std::nullopt;
    const auto f = sys.residual(p);
    if (std::max(std::abs(f[0]), std::abs(f[1])) < opts.tolerance) return p;
    if (it == opts.max_iterations) break;
    const auto m = sys.marginals(p);
    const double j11 = m[0] + 2.0 * sys.t1.price1 * p.p1;
    const double j12 = p.p1 * sys.t1.price2;
    const double j21 = p.p2 * sys.t2.price1;
    const double j22 = m[1] + 2.0 * sys.t2.price2 * p.p2;
    const double det = j11 * j22 - j12 * j21;
    const double scale = std::max({std::abs(j11 * j22), std::abs(j12 * j21), 1.0});
    if (std::abs(det) < 1e-14 * scale) return std::nullopt;
    p.p1 -= (j22 * f[0] - j12 * f[1]) / det;
    p.p2 -= (j11 * f[1] - j21 * f[0]) / det;
  }
  return std::nullopt;
}

}  // namespace

std::optional<PricePair> solve_interior(double mu, Noise eta, double eps, const MarketConfig& cfg,
                                        NewtonOptions opts) {
  const InteriorSystem sys{marginal_intercept(Agent::first, mu, eta, cfg),
                           marginal_intercept(Agent::second, mu, eta, cfg), cfg.truth1, cfg.truth2,
                           0.5 * eps};

  // First start: the eps = 0 root with both marginals at zero (a linear 2x2 system).
  std::vector<PricePair> starts;
  const double l11 = 2.0 * cfg.truth1.price1, l12 = cfg.truth1.price2;
  const double l21 = cfg.truth2.price1, l22 = 2.0 * cfg.truth2.price2;
  const double ldet = l11 * l22 - l12 * l21;
  if (std::abs(ldet) > 1e-12) {
    starts.push_back({(-sys.a1 * l22 + l12 * sys.a2) / ldet, (-l11 * sys.a2 + l21 * sys.a1) / ldet});
  }
  starts.push_back({cfg.pbar / 2.0, cfg.pbar / 2.0});
  starts.push_back({1.0, 1.0});

  for (const PricePair& s : starts) {
    if (auto root = newton_from(sys, s, opts)) return root;
  }
  return std::nullopt;
}

std::optional<double> solve_boundary(Agent clamped, double mu, Noise eta, double eps,
                                     const MarketConfig& cfg, NewtonOptions opts) {
  const Agent free = other(clamped);
  const PrivateInfo& th = cfg.truth(free);
  // m_free = c + 2*own*p with the clamped price folded into c
  const double own = th.own_price(free);
  const double c = marginal_intercept(free, mu, eta, cfg) + th.cross_price(free) * cfg.pbar;
  auto g = [&](double p) { return p * (c + 2.0 * own * p) + eps; };
  auto dg = [&](double p) { return c + 4.0 * own * p; };

  // Starting right of the vertex of the concave quadratic selects its larger root.
  std::vector<double> starts;
  if (own < 0.0) {
    starts.push_back(std::max(cfg.pbar, -c / (4.0 * own) + 1.0));
  } else {
    starts.push_back(cfg.pbar);
  }
  starts.push_back(1.0);

  for (double p : starts) {
    for (int it = 0; it <= opts.max_iterations; ++it) {
      if (!std::isfinite(p)) break;
      const double v = g(p);
      if (std::abs(v) < opts.tolerance) return p;
      const double d = dg(p);
      if (it == opts.max_iterations || std::abs(d) < 1e-14) break;
      p -= v / d;
    }
  }
  return std::nullopt;
}

SampleOutcome sample_competitive(const SampleDraw& draw, const MarketConfig& cfg) {
  SampleOutcome out;
  const auto root = solve_interior(draw.mu, draw.eta, draw.eps, cfg);
  if (!root) {
    out.status = SampleStatus::rejected_no_convergence;
    return out;
  }
  const PricePair p = *root;
  if (p.p1 < 0.0 || p.p2 < 0.0) {
    out.status = SampleStatus::rejected_negative_price;
    return out;
  }
  if (p.p1 <= cfg.pbar && p.p2 <= cfg.pbar) {
    out.status = SampleStatus::accepted;
    out.observation = Observation{p.p1, p.p2, draw.mu};
    out.dual = PricePair{0.0, 0.0};
    return out;
  }
  if (p.p1 > cfg.pbar && p.p2 > cfg.pbar) {
    out.status = SampleStatus::rejected_boundary_infeasible;
    return out;
  }

  const Agent clamped = p.p1 > cfg.pbar ? Agent::first : Agent::second;
  const Agent free = other(clamped);
  const auto free_price = solve_boundary(clamped, draw.mu, draw.eta, draw.eps, cfg);
  if (!free_price) {
    out.status = SampleStatus::rejected_no_convergence;
    return out;
  }
  PricePair q;
  q[clamped] = cfg.pbar;
  q[free] = *free_price;
  const double y = marginal_utility(clamped, q, draw.mu, cfg.truth(clamped), draw.eta[clamped]);
  // Dual feasibility needs y >= 0; the published rule reads "y <= 0", which contradicts y >= 0.
  if (q[free] < 0.0 || q[free] > cfg.pbar || y < 0.0) {
    out.status = SampleStatus::rejected_boundary_infeasible;
    return out;
  }
  out.status = SampleStatus::accepted;
  out.observation = Observation{q.p1, q.p2, draw.mu};
  PricePair dual{0.0, 0.0};
  dual[clamped] = y;
  out.dual = dual;
  return out;
}

Observation sample_collusive(double mu, const MarketConfig& cfg) {
  const auto h = joint_utility_hessian(cfg.truth1, cfg.truth2);
  const double det = h[0] * h[3] - h[1] * h[2];
  if (!(h[0] < 0.0 && det > 0.0)) {
    throw ConfigError("joint utility Hessian is not negative definite");
  }
  const std::array<double, 2> g0 = {cfg.truth1.intercept + cfg.truth1.shock * mu,
                                    cfg.truth2.intercept + cfg.truth2.shock * mu};

  // Each coordinate is free, at 0, or at pbar: nine active-set patterns.
  enum Pin { free_, lower, upper };
  constexpr double kTol = 1e-12;
  std::optional<PricePair> best;
  double best_value = 0.0;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      const Pin pins[2] = {static_cast<Pin>(a), static_cast<Pin>(b)};
      double x[2] = {0.0, 0.0};
      for (int k = 0; k < 2; ++k) x[k] = pins[k] == upper ? cfg.pbar : 0.0;
      if (pins[0] == free_ && pins[1] == free_) {
        x[0] = (-g0[0] * h[3] + h[1] * g0[1]) / det;
        x[1] = (-h[0] * g0[1] + h[2] * g0[0]) / det;
      } else if (pins[0] == free_) {
        x[0] = -(g0[0] + h[1] * x[1]) / h[0];
      } else if (pins[1] == free_) {
        x[1] = -(g0[1] + h[2] * x[0]) / h[3];
      }
      bool feasible = true;
      for (double& v : x) {
        if (v < -kTol || v > cfg.pbar + kTol) feasible = false;
        v = std::clamp(v, 0.0, cfg.pbar);
      }
      if (!feasible) continue;
      const PricePair cand{x[0], x[1]};
      const double value = joint_utility(cand, mu, cfg.truth1, cfg.truth2);
      if (!best || value > best_value) {
        best = cand;
        best_value = value;
      }
    }
  }
  // The all-pinned corners are always feasible, so best is set.
  return Observation{best->p1, best->p2, mu};
}

std::optional<Observation> perturb_collusive(const Observation& optimum, double eps,
                                             double direction, const MarketConfig& cfg) {
  const auto h = joint_utility_hessian(cfg.truth1, cfg.truth2);
  const auto g = joint_utility_gradient(optimum.prices(), optimum.mu, cfg.truth1, cfg.truth2);
  const double d1 = std::cos(direction), d2 = std::sin(direction);
  // loss(t) = U(p*) - U(p* + t d) = b t + a t^2
  const double a = -0.5 * (h[0] * d1 * d1 + 2.0 * h[1] * d1 * d2 + h[3] * d2 * d2);
  const double b = -(g[0] * d1 + g[1] * d2);
  if (!(a > 0.0)) throw ConfigError("joint utility Hessian is not negative definite");
  const double root = std::sqrt(b * b + 4.0 * a * eps);
  const double t = b >= 0.0 ? (root > 0.0 ? 2.0 * eps / (b + root) : 0.0) : (root - b) / (2.0 * a);
  const Observation moved{optimum.p1 + t * d1, optimum.p2 + t * d2, optimum.mu};
  if (moved.p1 < 0.0 || moved.p1 > cfg.pbar || moved.p2 < 0.0 || moved.p2 > cfg.pbar) {
    return std::nullopt;
  }
  return moved;
}

DrawGenerator::DrawGenerator(const MarketConfig& cfg, SimSeed seed, std::uint64_t stream_n,
                             std::uint64_t stream_replication)
    : cfg_(cfg), gap_(cfg.lambda_bar), angle_(0.0, 2.0 * std::numbers::pi) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed.value),   hi(seed.value),           lo(stream_n),
                    hi(stream_n),     lo(stream_replication),   hi(stream_replication)};
  rng_.seed(seq);
}

SampleDraw DrawGenerator::operator()() {
  SampleDraw d;
  d.mu = cfg_.shock_mean + cfg_.shock_std * std_normal_(rng_);
  d.eta.eta1 = cfg_.noise_std * std_normal_(rng_);
  d.eta.eta2 = cfg_.noise_std * std_normal_(rng_);
  d.eps = gap_(rng_);
  d.direction = angle_(rng_);
  return d;
}

Dataset generate_dataset(Scenario scenario, std::size_t n, const DrawSource& draws,
                         const MarketConfig& cfg) {
  if (n == 0) throw InputError("dataset size must be at least 1");
  cfg.validate();
  Dataset out;
  out.observations.reserve(n);
  out.true_gaps.reserve(n);
  std::size_t since_accept = 0;
  while (out.observations.size() < n) {
    SampleDraw d = draws();
    ++out.draws;
    std::optional<Observation> obs;
    double gap = d.eps;
    if (scenario == Scenario::competitive) {
      if (!cfg.noise_in_pricing) d.eta = Noise{};
      const SampleOutcome s = sample_competitive(d, cfg);
      if (s.accepted()) obs = s.observation;
    } else {
      const Observation optimum = sample_collusive(d.mu, cfg);
      if (cfg.collusion == CollusionMode::exact) {
        obs = optimum;
        gap = 0.0;
      } else {
        obs = perturb_collusive(optimum, d.eps, d.direction, cfg);
      }
    }
    if (obs) {
      out.observations.push_back(*obs);
      out.true_gaps.push_back(gap);
      since_accept = 0;
    } else if (++since_accept >= kStallWindow) {
      throw GenerationStalled("no sample accepted in the last " + std::to_string(kStallWindow) +
                              " draws");
    }
  }
  return out;
}

Dataset generate_cell(Scenario scenario, std::size_t n, SimSeed seed, std::size_t replication,
                      const MarketConfig& cfg) {
  cfg.validate();
  DrawGenerator gen(cfg, seed, n, replication);
  return generate_dataset(scenario, n, DrawSource(std::ref(gen)), cfg);
}

Dataset generate_dataset(Scenario scenario, std::size_t n, SimSeed seed, const MarketConfig& cfg) {
  return generate_cell(scenario, n, seed, 0, cfg);
}

const char* to_string(Scenario s) {
  return s == Scenario::competitive ? "competitive" : "collusive";
}

const char* to_string(SampleStatus s) {
  switch (s) {
    case SampleStatus::accepted: return "accepted";
    case SampleStatus::rejected_negative_price: return "rejected_negative_price";
    case SampleStatus::rejected_boundary_infeasible: return "rejected_boundary_infeasible";
    case SampleStatus::rejected_no_convergence: return "rejected_no_convergence";
  }
  return "unknown";
}

}  // namespace collusion
