#include <doctest.h>

#include <cmath>
#include <vector>

#include "collusion/errors.hpp"
#include "collusion/scenario.hpp"
#include "support/oracles.hpp"

using namespace collusion;

namespace {

DrawSource constant(SampleDraw d) {
  return [d] { return d; };
}

// Checks y_i >= m_i, y_i >= 0 and sum_i pbar*y_i - p_i*m_i = eps for one accepted sample.
void check_feasible(const SampleDraw& d, const SampleOutcome& s, const MarketConfig& cfg) {
  REQUIRE(s.accepted());
  const Observation& o = *s.observation;
  const PricePair& y = *s.dual;
  double gap = 0.0;
  for (Agent a : {Agent::first, Agent::second}) {
    const double m = marginal_utility(a, o.prices(), o.mu, cfg.truth(a), d.eta[a]);
    CHECK(y[a] >= m - 1e-6);
    CHECK(y[a] >= 0.0);
    gap += cfg.pbar * y[a] - o.prices()[a] * m;
  }
  CHECK(std::abs(gap - d.eps) <= 1e-6);
  CHECK(o.p1 >= 0.0);
  CHECK(o.p1 <= cfg.pbar);
  CHECK(o.p2 >= 0.0);
  CHECK(o.p2 <= cfg.pbar);
}

}  // namespace

TEST_CASE("interior Newton solve examples") {
  const MarketConfig cfg;
  auto p = solve_interior(0.0, {}, 0.0, cfg);
  REQUIRE(p);
  CHECK(p->p1 == doctest::Approx(5.4237).epsilon(1e-4));
  CHECK(p->p2 == doctest::Approx(1.6949).epsilon(1e-4));

  p = solve_interior(5.0, {}, 0.0, cfg);
  REQUIRE(p);
  CHECK(p->p1 == doctest::Approx(8.1780).epsilon(1e-4));
  CHECK(p->p2 == doctest::Approx(2.7119).epsilon(1e-4));

  // Positive eps: the residual postcondition.
  p = solve_interior(5.0, {0.3, -0.2}, 0.07, cfg);
  REQUIRE(p);
  const double m1 = marginal_utility(Agent::first, *p, 5.0, cfg.truth1, 0.3);
  const double m2 = marginal_utility(Agent::second, *p, 5.0, cfg.truth2, -0.2);
  CHECK(std::abs(p->p1 * m1 + 0.035) < 1e-10);
  CHECK(std::abs(p->p2 * m2 + 0.035) < 1e-10);
}

TEST_CASE("competitive sampler examples") {
  const MarketConfig cfg;
  SampleOutcome s = sample_competitive({5.0, {}, 0.0, 0.0}, cfg);
  REQUIRE(s.accepted());
  CHECK(s.observation->p1 == 8.0);
  CHECK(s.observation->p2 == doctest::Approx(2.7).epsilon(1e-12));
  CHECK(s.observation->mu == 5.0);
  CHECK(s.dual->p1 == doctest::Approx(0.35).epsilon(1e-9));
  CHECK(s.dual->p2 == 0.0);

  s = sample_competitive({0.0, {}, 0.0, 0.0}, cfg);
  REQUIRE(s.accepted());
  CHECK(s.observation->p1 == doctest::Approx(5.4237).epsilon(1e-4));
  CHECK(s.observation->p2 == doctest::Approx(1.6949).epsilon(1e-4));
  CHECK(*s.dual == PricePair{0.0, 0.0});

  s = sample_competitive({-20.0, {}, 0.0, 0.0}, cfg);
  CHECK(s.status == SampleStatus::rejected_negative_price);
}

TEST_CASE("boundary branch follows the closed-form acceptance rule") {
  // Larger root of 2*own*p^2 + c*p + eps = 0 in the free coordinate, then y = m_clamped >= 0.
  const MarketConfig cfg;
  int accepted = 0, rejected = 0;
  for (double mu = 2.0; mu <= 12.0; mu += 0.5) {
    for (double e1 = -6.0; e1 <= 6.0; e1 += 1.5) {
      for (double e2 = -6.0; e2 <= 30.0; e2 += 3.0) {
        for (double eps : {0.0, 0.05, 0.6}) {
          const SampleDraw d{mu, {e1, e2}, eps, 0.0};
          const auto root = solve_interior(d.mu, d.eta, d.eps, cfg);
          if (!root || root->p1 < 0 || root->p2 < 0) continue;
          const bool over1 = root->p1 > cfg.pbar, over2 = root->p2 > cfg.pbar;
          if (over1 == over2) continue;
          const Agent clamped = over1 ? Agent::first : Agent::second;
          const Agent free = other(clamped);
          const PrivateInfo& th = cfg.truth(free);
          const double own = th.own_price(free);
          const double c = th.intercept + th.shock * mu + d.eta[free] + th.cross_price(free) * cfg.pbar;
          const double disc = c * c - 8.0 * own * eps;
          const SampleOutcome s = sample_competitive(d, cfg);
          if (disc < 0.0) {
            CHECK_FALSE(s.accepted());
            continue;
          }
          const double pf = (-c - std::sqrt(disc)) / (4.0 * own);
          PricePair q;
          q[clamped] = cfg.pbar;
          q[free] = pf;
          const PrivateInfo& tc = cfg.truth(clamped);
          const double y = tc.intercept + tc.price1 * q.p1 + tc.price2 * q.p2 + tc.shock * mu +
                           d.eta[clamped] + cfg.pbar * tc.own_price(clamped);
          const bool expect = pf >= 0.0 && pf <= cfg.pbar && y >= 0.0;
          CHECK(s.accepted() == expect);
          if (s.accepted()) {
            ++accepted;
            CHECK(s.observation->prices()[free] == doctest::Approx(pf).epsilon(1e-9));
            CHECK((*s.dual)[clamped] == doctest::Approx(y).epsilon(1e-9));
            CHECK((*s.dual)[free] == 0.0);
            check_feasible(d, s, cfg);
          } else {
            ++rejected;
            CHECK(s.status == SampleStatus::rejected_boundary_infeasible);
          }
        }
      }
    }
  }
  CHECK(accepted > 0);
  CHECK(rejected > 0);
}

TEST_CASE("accepted competitive samples satisfy the equilibrium system") {
  MarketConfig cfg;
  DrawGenerator gen(cfg, SimSeed{99});
  int accepted = 0, boundary = 0;
  for (int k = 0; k < 3000; ++k) {
    const SampleDraw d = gen();  // keeps eta: the property holds with noise as well
    const SampleOutcome s = sample_competitive(d, cfg);
    if (!s.accepted()) continue;
    ++accepted;
    check_feasible(d, s, cfg);
    const Observation& o = *s.observation;
    if (s.dual->p1 == 0.0 && s.dual->p2 == 0.0) {
      for (Agent a : {Agent::first, Agent::second}) {
        const double m = marginal_utility(a, o.prices(), o.mu, cfg.truth(a), d.eta[a]);
        CHECK(std::abs(o.prices()[a] * m + 0.5 * d.eps) <= 1e-6);
      }
    } else {
      ++boundary;
    }
  }
  CHECK(accepted > 1000);
  CHECK(boundary > 0);
}

TEST_CASE("Newton solve agrees with a grid search") {
  MarketConfig cfg;
  DrawGenerator gen(cfg, SimSeed{4242});
  int checked = 0;
  while (checked < 12) {
    const SampleDraw d = gen();
    const auto p = solve_interior(d.mu, d.eta, d.eps, cfg);
    REQUIRE(p);
    if (p->p1 <= 0.0 || p->p2 <= 0.0 || p->p1 > cfg.pbar + 4 || p->p2 > cfg.pbar + 4) continue;
    const auto g = oracle::interior_root(d.mu, d.eta, d.eps, cfg, cfg.pbar + 4);
    CHECK(std::abs(g.p.p1 - p->p1) <= 2e-3);
    CHECK(std::abs(g.p.p2 - p->p2) <= 2e-3);
    ++checked;
  }
}

TEST_CASE("collusive optimum examples and grid agreement") {
  const MarketConfig cfg;
  const Observation o = sample_collusive(5.0, cfg);
  CHECK(o.p1 == 8.0);
  CHECK(o.p2 == doctest::Approx(20.2 / 6.0).epsilon(1e-12));
  CHECK(o.mu == 5.0);

  // A shock small enough for an interior optimum: the unconstrained stationary point.
  const Observation in = sample_collusive(0.0, cfg);
  const auto g = joint_utility_gradient(in.prices(), 0.0, cfg.truth1, cfg.truth2);
  CHECK(in.p1 > 0.0);
  CHECK(in.p1 < cfg.pbar);
  CHECK(in.p2 > 0.0);
  CHECK(in.p2 < cfg.pbar);
  CHECK(std::abs(g[0]) < 1e-9);
  CHECK(std::abs(g[1]) < 1e-9);

  for (double mu : {-12.0, 0.0, 3.3, 5.0, 9.0}) {
    const Observation c = sample_collusive(mu, cfg);
    const PricePair ref = oracle::collusive_argmax(mu, cfg);
    CHECK(std::abs(c.p1 - ref.p1) <= 2e-3);
    CHECK(std::abs(c.p2 - ref.p2) <= 2e-3);
  }
}

TEST_CASE("collusive sampler refuses a non-concave joint utility") {
  MarketConfig cfg;
  cfg.truth1.price1 = 1.0;
  CHECK_THROWS_AS(sample_collusive(5.0, cfg), ConfigError);
}

TEST_CASE("collusive prices weakly exceed competitive prices") {
  const MarketConfig cfg;
  for (double mu = 3.0; mu <= 7.0 + 1e-12; mu += 0.1) {
    const SampleOutcome comp = sample_competitive({mu, {}, 0.0, 0.0}, cfg);
    REQUIRE(comp.accepted());
    const Observation col = sample_collusive(mu, cfg);
    CHECK(col.p1 >= comp.observation->p1 - 1e-12);
    CHECK(col.p2 >= comp.observation->p2 - 1e-12);
  }
}

TEST_CASE("optimality-gap collusion loses exactly eps of joint utility") {
  const MarketConfig cfg;
  DrawGenerator gen(cfg, SimSeed{5});
  int moved = 0;
  for (int k = 0; k < 500; ++k) {
    const SampleDraw d = gen();
    const Observation opt = sample_collusive(d.mu, cfg);
    const auto q = perturb_collusive(opt, d.eps, d.direction, cfg);
    if (!q) continue;
    ++moved;
    const double loss = joint_utility(opt.prices(), d.mu, cfg.truth1, cfg.truth2) -
                        joint_utility(q->prices(), d.mu, cfg.truth1, cfg.truth2);
    CHECK(loss == doctest::Approx(d.eps).epsilon(1e-8));
  }
  CHECK(moved > 100);
}

TEST_CASE("dataset generation") {
  MarketConfig cfg;
  const Dataset one = generate_dataset(Scenario::competitive, 1, constant({5.0, {}, 0.0, 0.0}), cfg);
  REQUIRE(one.observations.size() == 1);
  CHECK(one.observations[0].p1 == 8.0);
  CHECK(one.observations[0].p2 == doctest::Approx(2.7));
  CHECK(one.observations[0].mu == 5.0);
  CHECK(one.true_gaps == std::vector<double>{0.0});

  cfg.collusion = CollusionMode::exact;
  const std::vector<double> mus{4.0, 5.5, 6.1};
  std::size_t next = 0;
  DrawSource seq = [&] { return SampleDraw{mus[next++ % mus.size()], {}, 0.1, 0.0}; };
  const Dataset col = generate_dataset(Scenario::collusive, 3, seq, cfg);
  REQUIRE(col.observations.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) CHECK(col.observations[k] == sample_collusive(mus[k], cfg));

  cfg = MarketConfig{};
  const Dataset a = generate_dataset(Scenario::competitive, 50, SimSeed{17}, cfg);
  const Dataset b = generate_dataset(Scenario::competitive, 50, SimSeed{17}, cfg);
  CHECK(a.observations == b.observations);
  CHECK(a.true_gaps == b.true_gaps);
  const Dataset c = generate_cell(Scenario::competitive, 50, SimSeed{17}, 1, cfg);
  CHECK(a.observations != c.observations);

  CHECK_THROWS_AS(generate_dataset(Scenario::competitive, 0, SimSeed{1}, cfg), InputError);
}

TEST_CASE("generation stalls when nothing is ever accepted") {
  const MarketConfig cfg;
  CHECK_THROWS_AS(generate_dataset(Scenario::competitive, 1, constant({-20.0, {}, 0.0, 0.0}), cfg),
                  GenerationStalled);
}
