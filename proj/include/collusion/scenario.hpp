#pragma once

// Observation generators for the two behavioural scenarios:
//  - competitive: eps-approximate Nash prices via the interior Newton solve
//    plus the single-bound acceptance/rejection branch;
//  - collusive: maximizer of the joint utility over the price box.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "collusion/market.hpp"

namespace collusion {

enum class Scenario { competitive, collusive };

struct SimSeed {
  std::uint64_t value = 0;
};

/// Random inputs of one sampling attempt. Drawn in the order mu, eta1, eta2, eps, direction.
struct SampleDraw {
  double mu = 0.0;
  Noise eta;
  double eps = 0.0;
  double direction = 0.0;  // radians; used by the collusive optimality-gap step only
};

enum class SampleStatus {
  accepted,
  rejected_negative_price,
  rejected_boundary_infeasible,
  rejected_no_convergence,
};

struct SampleOutcome {
  SampleStatus status = SampleStatus::rejected_no_convergence;
  std::optional<Observation> observation;  // iff accepted
  std::optional<PricePair> dual;           // (y1, y2) iff accepted

  bool accepted() const { return status == SampleStatus::accepted; }
};

struct NewtonOptions {
  int max_iterations = 100;
  double tolerance = 1e-10;  // on the residual infinity-norm
};

/// Solves p_i * m_i(p) = -eps/2 for both agents, with eta folded into the intercepts.
/// Returns nullopt when no start point converges.
std::optional<PricePair> solve_interior(double mu, Noise eta, double eps, const MarketConfig& cfg,
                                        NewtonOptions opts = {});

/// Solves p * m_k(p) = -eps in the free coordinate k while the other agent sits at pbar.
std::optional<double> solve_boundary(Agent clamped, double mu, Noise eta, double eps,
                                     const MarketConfig& cfg, NewtonOptions opts = {});

/// One competitive attempt. Accepted outcomes satisfy
///   y_i >= m_i, y_i >= 0, sum_i pbar*y_i - p_i*m_i = eps.
SampleOutcome sample_competitive(const SampleDraw& draw, const MarketConfig& cfg);

/// Exact maximizer of the joint utility over [0, pbar]^2 (active-set enumeration).
/// Throws ConfigError unless the joint Hessian is negative definite.
Observation sample_collusive(double mu, const MarketConfig& cfg);

/// Moves the exact collusive optimum along `direction` until the joint-utility loss equals eps.
/// Returns nullopt if the moved point leaves the box.
std::optional<Observation> perturb_collusive(const Observation& optimum, double eps,
                                             double direction, const MarketConfig& cfg);

/// Source of draws. The seeded variant below is the production one; tests inject sequences.
using DrawSource = std::function<SampleDraw()>;

/// Seeded draw stream. Each (seed, stream_n, stream_replication) triple gives an independent
/// stream, so experiment cells can run in any order.
class DrawGenerator {
 public:
  DrawGenerator(const MarketConfig& cfg, SimSeed seed, std::uint64_t stream_n = 0,
                std::uint64_t stream_replication = 0);

  SampleDraw operator()();

 private:
  MarketConfig cfg_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> std_normal_{0.0, 1.0};
  std::exponential_distribution<double> gap_;
  std::uniform_real_distribution<double> angle_;
};

struct Dataset {
  std::vector<Observation> observations;
  std::vector<double> true_gaps;  // eps of each accepted sample; hidden from the regulator
  std::size_t draws = 0;          // attempts consumed, accepted or not
};

inline constexpr std::size_t kStallWindow = 10000;

Dataset generate_dataset(Scenario scenario, std::size_t n, const DrawSource& draws,
                         const MarketConfig& cfg);

/// Dataset of experiment cell (n, replication); generate_dataset(.., seed, ..) is replication 0.
Dataset generate_cell(Scenario scenario, std::size_t n, SimSeed seed, std::size_t replication,
                      const MarketConfig& cfg);
Dataset generate_dataset(Scenario scenario, std::size_t n, SimSeed seed, const MarketConfig& cfg);

const char* to_string(Scenario s);
const char* to_string(SampleStatus s);

}  // namespace collusion
