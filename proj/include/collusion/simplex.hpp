#pragma once

#include <cstddef>
#include <vector>

#include "collusion/linear_program.hpp"

namespace collusion {

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  std::vector<double> x;  // one value per column of the input program
  // Filled on request: pi with reduced costs c - A'pi. Empty rows get 0.
  std::vector<double> row_duals;
  double objective = 0.0;
  std::size_t iterations = 0;
};

struct SimplexOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  std::size_t max_iterations = 0;  // 0: scaled with problem size
  // Consecutive zero-length steps before switching to Bland's rule.
  std::size_t degenerate_limit = 50;
  bool row_duals = false;
};

/// Dense bounded-variable two-phase primal simplex. Deterministic for a given program.
LpSolution solve(const LinearProgram& lp, const SimplexOptions& opts = {});

const char* to_string(LpStatus s);

}  // namespace collusion
