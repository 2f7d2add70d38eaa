#include "collusion/lilliefors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "collusion/errors.hpp"

namespace collusion {

double mle_exponential(std::span<const double> sample) {
  if (sample.empty()) throw InputError("empty residual sample");
  // Summing in sorted order makes the estimate independent of sample order.
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (double v : sorted) sum += v;
  const double mean = sum / static_cast<double>(sample.size());
  if (!(mean > kDegenerateMean)) throw DegenerateSample();
  return 1.0 / mean;
}

double empirical_cdf(std::span<const double> sample, double d) {
  if (sample.empty()) return 0.0;
  const auto below = std::count_if(sample.begin(), sample.end(), [d](double v) { return v <= d; });
  return static_cast<double>(below) / static_cast<double>(sample.size());
}

double ks_statistic(std::span<const double> sample, double rate) {
  if (sample.empty()) throw InputError("empty residual sample");
  if (!(rate > 0.0)) throw InputError("exponential rate must be positive");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const double f = -std::expm1(-rate * sorted[k]);
    const double upper = static_cast<double>(k + 1) / n;
    const double lower = static_cast<double>(k) / n;
    worst = std::max({worst, std::abs(upper - f), std::abs(lower - f)});
  }
  return worst;
}

ThresholdTable::ThresholdTable(double alpha, std::map<std::size_t, double> table,
                               double large_sample_coef, std::size_t interpolate_up_to)
    : alpha_(alpha),
      table_(std::move(table)),
      coef_(large_sample_coef),
      interpolate_up_to_(interpolate_up_to) {
  if (table_.size() < 2) throw InputError("threshold table needs at least two entries");
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& [n, tau] : table_) {
    if (n < 1 || !(tau < prev) || !(tau > 0.0)) {
      throw InputError("threshold table must be strictly decreasing in N");
    }
    prev = tau;
  }
}

const ThresholdTable& ThresholdTable::exponential_05() {
  static const ThresholdTable table(0.05,
                                    {{10, 0.325},
                                     {20, 0.234},
                                     {30, 0.192},
                                     {40, 0.168},
                                     {50, 0.150},
                                     {100, 0.106},
                                     {200, 0.075},
                                     {500, 0.047}},
                                    1.06, 30);
  return table;
}

double ThresholdTable::lookup(std::size_t n) const {
  if (n < 3) throw InputError("threshold needs at least 3 samples");
  if (auto it = table_.find(n); it != table_.end()) return it->second;
  if (n > interpolate_up_to_) return coef_ / std::sqrt(static_cast<double>(n));

  auto x = [](std::size_t k) { return 1.0 / std::sqrt(static_cast<double>(k)); };
  auto hi = table_.upper_bound(n);  // first entry with N > n
  auto lo = hi;
  if (hi == table_.begin()) {
    ++hi;  // below the table: extend the first segment
  } else {
    --lo;
  }
  const double t = (x(n) - x(lo->first)) / (x(hi->first) - x(lo->first));
  return lo->second + t * (hi->second - lo->second);
}

double threshold(std::size_t n, double alpha) {
  const ThresholdTable& table = ThresholdTable::exponential_05();
  if (std::abs(alpha - table.alpha()) > 1e-12) {
    throw UnsupportedAlpha("only alpha = 0.05 is tabulated; supply a custom threshold table");
  }
  return table.lookup(n);
}

Decision decide_from_statistic(double d_star, double tau) {
  return d_star >= tau ? Decision::reject_colluding : Decision::accept_competing;
}

TestReport decide(std::span<const double> sample, const ThresholdTable& table) {
  TestReport r;
  r.n = sample.size();
  r.alpha = table.alpha();
  r.tau = table.lookup(r.n);
  for (double v : sample) {
    if (!(v >= 0.0)) throw InputError("residuals must be nonnegative");
  }
  try {
    r.lambda_hat = mle_exponential(sample);
  } catch (const DegenerateSample&) {
    r.lambda_hat = std::numeric_limits<double>::infinity();
    r.d_star = 0.0;
    r.decision = Decision::degenerate_perfect_equilibrium;
    return r;
  }
  r.d_star = ks_statistic(sample, r.lambda_hat);
  r.decision = decide_from_statistic(r.d_star, r.tau);
  return r;
}

TestReport decide(std::span<const double> sample, double alpha) {
  const ThresholdTable& table = ThresholdTable::exponential_05();
  if (std::abs(alpha - table.alpha()) > 1e-12) {
    throw UnsupportedAlpha("only alpha = 0.05 is tabulated; supply a custom threshold table");
  }
  return decide(sample, table);
}

TestReport infeasible_report(std::size_t n, double alpha) {
  TestReport r;
  r.n = n;
  r.alpha = alpha;
  r.tau = n >= 3 ? threshold(n, alpha) : std::numeric_limits<double>::quiet_NaN();
  r.d_star = std::numeric_limits<double>::quiet_NaN();
  r.lambda_hat = std::numeric_limits<double>::quiet_NaN();
  r.decision = Decision::reject_model_infeasible;
  return r;
}

const char* to_string(Decision d) {
  switch (d) {
    case Decision::accept_competing: return "Competing";
    case Decision::reject_colluding: return "Colluding";
    case Decision::reject_model_infeasible: return "ModelInfeasible";
    case Decision::degenerate_perfect_equilibrium: return "PerfectEquilibrium";
  }
  return "unknown";
}

const char* status_string(Decision d) {
  switch (d) {
    case Decision::reject_model_infeasible: return "infeasible";
    case Decision::degenerate_perfect_equilibrium: return "degenerate";
    default: return "ok";
  }
}

}  // namespace collusion
