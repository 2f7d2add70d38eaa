#pragma once

// Lilliefors-type Kolmogorov-Smirnov test of "residuals ~ Exponential(rate)"
// where the rate is fitted from the same residuals.

#include <cstddef>
#include <exception>
#include <map>
#include <stdexcept>
#include <span>
#include <string>

namespace collusion {

/// Mean below this is treated as an all-zero (perfect equilibrium) sample.
inline constexpr double kDegenerateMean = 1e-9;

class DegenerateSample : public std::exception {
 public:
  const char* what() const noexcept override { return "residual sample mean is (numerically) zero"; }
};

/// Reciprocal of the sample mean. Throws DegenerateSample when the mean <= kDegenerateMean.
double mle_exponential(std::span<const double> sample);

/// Fraction of sample values <= d.
double empirical_cdf(std::span<const double> sample, double d);

/// sup_d |F_N(d) - (1 - exp(-rate d))|, evaluated at both limits of every jump.
double ks_statistic(std::span<const double> sample, double rate);

/// Critical values tau(N) at one significance level.
class ThresholdTable {
 public:
  /// Untabulated N above `interpolate_up_to` use tau = large_sample_coef / sqrt(N).
  ThresholdTable(double alpha, std::map<std::size_t, double> table, double large_sample_coef,
                 std::size_t interpolate_up_to);

  /// The exponential-distribution table at alpha = 0.05.
  static const ThresholdTable& exponential_05();

  double alpha() const { return alpha_; }
  const std::map<std::size_t, double>& entries() const { return table_; }

  /// Tabulated N: the table entry. Untabulated N > interpolate_up_to: coef/sqrt(N).
  /// Otherwise linear interpolation in 1/sqrt(N) between neighbouring entries, extended
  /// along the first segment below the smallest entry. Throws InputError for N < 3.
  double lookup(std::size_t n) const;

 private:
  double alpha_;
  std::map<std::size_t, double> table_;
  double coef_;
  std::size_t interpolate_up_to_;
};

/// Default-table lookup; throws UnsupportedAlpha unless alpha == 0.05.
double threshold(std::size_t n, double alpha);

enum class Decision {
  accept_competing,           // D* < tau
  reject_colluding,           // D* >= tau
  reject_model_infeasible,    // no admissible model rationalizes the data
  degenerate_perfect_equilibrium,  // all residuals zero; counts as accepting H0
};

struct TestReport {
  double d_star = 0.0;
  double tau = 0.0;
  double lambda_hat = 0.0;  // +inf when degenerate
  std::size_t n = 0;
  double alpha = 0.05;
  Decision decision = Decision::accept_competing;

  bool rejects_h0() const {
    return decision == Decision::reject_colluding || decision == Decision::reject_model_infeasible;
  }
};

/// Reject iff d_star >= tau.
Decision decide_from_statistic(double d_star, double tau);

TestReport decide(std::span<const double> sample, double alpha);
TestReport decide(std::span<const double> sample, const ThresholdTable& table);

/// Report for a dataset whose inverse LP was infeasible.
TestReport infeasible_report(std::size_t n, double alpha);

/// Table-column label: "Competing", "Colluding", "ModelInfeasible", "PerfectEquilibrium".
const char* to_string(Decision d);
/// Short machine status: "ok", "infeasible", "degenerate".
const char* status_string(Decision d);

}  // namespace collusion
