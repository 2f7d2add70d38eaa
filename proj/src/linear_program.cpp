#include "collusion/linear_program.hpp"

#include <algorithm>
#include <cmath>

#include "collusion/errors.hpp"

namespace collusion {

std::size_t LinearProgram::add_column(std::string name, double cost, double lower, double upper) {
  if (lower > upper) throw InputError("column " + name + " has lower > upper");
  cost_.push_back(cost);
  lower_.push_back(lower);
  upper_.push_back(upper);
  names_.push_back(std::move(name));
  return cost_.size() - 1;
}

std::size_t LinearProgram::add_row(LinearConstraint row) {
  for (const auto& t : row.terms) {
    if (t.column >= num_columns()) throw InputError("row " + row.name + " references a missing column");
  }
  rows_.push_back(std::move(row));
  return rows_.size() - 1;
}

void LinearProgram::set_bounds(std::size_t column, double lower, double upper) {
  if (lower > upper) throw InputError("column " + names_.at(column) + " has lower > upper");
  lower_.at(column) = lower;
  upper_.at(column) = upper;
}

double LinearProgram::objective_value(std::span<const double> x) const {
  double v = 0.0;
  for (std::size_t j = 0; j < cost_.size(); ++j) v += cost_[j] * x[j];
  return v;
}

double LinearProgram::row_activity(std::size_t row, std::span<const double> x) const {
  double v = 0.0;
  for (const auto& t : rows_[row].terms) v += t.coefficient * x[t.column];
  return v;
}

double LinearProgram::max_violation(std::span<const double> x) const {
  double worst = 0.0;
  for (std::size_t j = 0; j < cost_.size(); ++j) {
    worst = std::max({worst, lower_[j] - x[j], x[j] - upper_[j]});
  }
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const double gap = row_activity(r, x) - rows_[r].rhs;
    switch (rows_[r].sense) {
      case RowSense::less_equal: worst = std::max(worst, gap); break;
      case RowSense::greater_equal: worst = std::max(worst, -gap); break;
      case RowSense::equal: worst = std::max(worst, std::abs(gap)); break;
    }
  }
  return worst;
}

}  // namespace collusion
