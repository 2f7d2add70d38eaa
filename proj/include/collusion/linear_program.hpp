#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace collusion {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class RowSense { less_equal, greater_equal, equal };

struct LinearTerm {
  std::size_t column;
  double coefficient;
};

struct LinearConstraint {
  std::vector<LinearTerm> terms;
  RowSense sense = RowSense::equal;
  double rhs = 0.0;
  std::string name;
};

/// min c'x  s.t.  rows,  lower <= x <= upper. Rows are stored sparse.
class LinearProgram {
 public:
  std::size_t add_column(std::string name, double cost, double lower, double upper);
  std::size_t add_row(LinearConstraint row);

  std::size_t num_columns() const { return cost_.size(); }
  std::size_t num_rows() const { return rows_.size(); }

  const std::vector<double>& cost() const { return cost_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  const std::vector<std::string>& column_names() const { return names_; }
  const std::vector<LinearConstraint>& rows() const { return rows_; }

  void set_bounds(std::size_t column, double lower, double upper);
  bool is_fixed(std::size_t column) const { return lower_[column] == upper_[column]; }

  double objective_value(std::span<const double> x) const;
  double row_activity(std::size_t row, std::span<const double> x) const;
  /// Largest violation of any row or bound at x (0 when feasible).
  double max_violation(std::span<const double> x) const;

 private:
  std::vector<double> cost_, lower_, upper_;
  std::vector<std::string> names_;
  std::vector<LinearConstraint> rows_;
};

}  // namespace collusion
