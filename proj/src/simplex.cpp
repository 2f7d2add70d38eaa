#include "collusion/simplex.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>

namespace collusion {

namespace {

enum class VarState : std::uint8_t { basic, at_lower, at_upper, at_zero };

struct SparseRow {
  std::vector<std::pair<std::size_t, double>> terms;
  RowSense sense;
  double rhs;
};

enum class PhaseResult { optimal, unbounded, iteration_limit };

// Column layout: [0, n) structural, then one slack per inequality row, then artificials.
class Simplex {
 public:
  Simplex(std::vector<SparseRow> rows, std::vector<double> cost, std::vector<double> lo,
          std::vector<double> up, const SimplexOptions& opts)
      : rows_(std::move(rows)), opts_(opts) {
    n_struct_ = cost.size();
    m_ = rows_.size();
    build(std::move(cost), std::move(lo), std::move(up));
  }

  LpStatus run(std::size_t& iterations) {
    const std::size_t limit =
        opts_.max_iterations ? opts_.max_iterations : 20 * (m_ + ncols_) + 1000;
    if (has_artificials_) {
      std::vector<double> phase1(ncols_, 0.0);
      for (std::size_t j = first_art_; j < ncols_; ++j) phase1[j] = 1.0;
      const PhaseResult r = run_phase(phase1, true, limit, iterations);
      if (r == PhaseResult::iteration_limit) return LpStatus::iteration_limit;
      double infeasibility = 0.0;
      for (std::size_t j = first_art_; j < ncols_; ++j) infeasibility += std::abs(value(j));
      if (infeasibility > 1e-7) return LpStatus::infeasible;
      drive_out_artificials();
    }
    const PhaseResult r = run_phase(cost_, false, limit, iterations);
    if (r == PhaseResult::unbounded) return LpStatus::unbounded;
    if (r == PhaseResult::iteration_limit) return LpStatus::iteration_limit;
    refine();
    return LpStatus::optimal;
  }

  double value(std::size_t j) const {
    return state_[j] == VarState::basic ? xb_[row_of_[j]] : x_[j];
  }

 private:
  void build(std::vector<double> cost, std::vector<double> lo, std::vector<double> up) {
    // Slack per inequality row: a x + s = b with s >= 0 (<=) or s <= 0 (>=).
    std::vector<long> slack_of(m_, -1);
    std::size_t next = n_struct_;
    for (std::size_t r = 0; r < m_; ++r) {
      if (rows_[r].sense != RowSense::equal) slack_of[r] = static_cast<long>(next++);
    }
    first_art_ = next;
    cost.resize(first_art_, 0.0);
    lo.resize(first_art_, 0.0);
    up.resize(first_art_, 0.0);
    for (std::size_t r = 0; r < m_; ++r) {
      if (slack_of[r] < 0) continue;
      const auto s = static_cast<std::size_t>(slack_of[r]);
      if (rows_[r].sense == RowSense::less_equal) {
        lo[s] = 0.0;
        up[s] = kInfinity;
      } else {
        lo[s] = -kInfinity;
        up[s] = 0.0;
      }
    }

    x_.assign(first_art_, 0.0);
    state_.assign(first_art_, VarState::at_zero);
    for (std::size_t j = 0; j < first_art_; ++j) place_at_bound(j, lo[j], up[j]);

    std::vector<std::size_t> count(n_struct_, 0);
    for (const auto& row : rows_)
      for (const auto& [j, a] : row.terms) ++count[j];

    std::vector<double> residual(m_);
    for (std::size_t r = 0; r < m_; ++r) {
      double v = rows_[r].rhs;
      for (const auto& [j, a] : rows_[r].terms) v -= a * x_[j];
      residual[r] = v;
    }

    // Crash basis: slack, else a column singleton, else an artificial. B is diagonal.
    basis_.assign(m_, 0);
    std::vector<double> diag(m_, 1.0);
    std::vector<std::pair<std::size_t, double>> artificials;  // (row, sign)
    xb_.assign(m_, 0.0);
    const double ftol = opts_.feasibility_tol;
    for (std::size_t r = 0; r < m_; ++r) {
      if (slack_of[r] >= 0) {
        const auto s = static_cast<std::size_t>(slack_of[r]);
        if (residual[r] >= lo[s] - ftol && residual[r] <= up[s] + ftol) {
          basis_[r] = s;
          xb_[r] = residual[r];
          continue;
        }
      }
      bool placed = false;
      for (const auto& [j, a] : rows_[r].terms) {
        if (count[j] != 1 || state_[j] == VarState::basic || std::abs(a) < 1e-9) continue;
        const double v = (residual[r] + a * x_[j]) / a;
        if (v >= lo[j] - ftol && v <= up[j] + ftol) {
          basis_[r] = j;
          diag[r] = a;
          xb_[r] = v;
          state_[j] = VarState::basic;
          placed = true;
          break;
        }
      }
      if (placed) continue;
      const double sign = residual[r] >= 0.0 ? 1.0 : -1.0;
      const std::size_t art = first_art_ + artificials.size();
      artificials.emplace_back(r, sign);
      basis_[r] = art;
      diag[r] = sign;
      xb_[r] = std::abs(residual[r]);
    }
    has_artificials_ = !artificials.empty();
    ncols_ = first_art_ + artificials.size();
    cost.resize(ncols_, 0.0);
    lo.resize(ncols_, 0.0);
    up.resize(ncols_, kInfinity);
    x_.resize(ncols_, 0.0);
    state_.resize(ncols_, VarState::at_lower);
    cost_ = std::move(cost);
    lo_ = std::move(lo);
    up_ = std::move(up);

    tableau_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(ncols_));
    for (std::size_t r = 0; r < m_; ++r) {
      const auto ri = static_cast<Eigen::Index>(r);
      for (const auto& [j, a] : rows_[r].terms) tableau_(ri, static_cast<Eigen::Index>(j)) += a / diag[r];
      if (slack_of[r] >= 0) tableau_(ri, slack_of[r]) = 1.0 / diag[r];
    }
    for (std::size_t k = 0; k < artificials.size(); ++k) {
      const auto [r, sign] = artificials[k];
      tableau_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(first_art_ + k)) = sign / diag[r];
    }
    art_sign_.clear();
    art_row_.clear();
    for (const auto& [r, sign] : artificials) {
      art_row_.push_back(r);
      art_sign_.push_back(sign);
    }
    slack_of_ = std::move(slack_of);

    row_of_.assign(ncols_, 0);
    for (std::size_t r = 0; r < m_; ++r) {
      state_[basis_[r]] = VarState::basic;
      row_of_[basis_[r]] = r;
    }
  }

  void place_at_bound(std::size_t j, double lo, double up) {
    if (std::isfinite(lo)) {
      x_[j] = lo;
      state_[j] = VarState::at_lower;
    } else if (std::isfinite(up)) {
      x_[j] = up;
      state_[j] = VarState::at_upper;
    } else {
      x_[j] = 0.0;
      state_[j] = VarState::at_zero;
    }
  }

  void price(const std::vector<double>& costs) {
    reduced_ = Eigen::Map<const Eigen::RowVectorXd>(costs.data(), static_cast<Eigen::Index>(ncols_));
    for (std::size_t r = 0; r < m_; ++r) {
      const double cb = costs[basis_[r]];
      if (cb != 0.0) reduced_ -= cb * tableau_.row(static_cast<Eigen::Index>(r));
    }
  }

  // Returns (column, direction) of an improving nonbasic column, if any.
  std::optional<std::pair<std::size_t, double>> choose_entering(bool bland,
                                                               const std::vector<bool>& blocked) const {
    const double tol = opts_.optimality_tol;
    std::optional<std::pair<std::size_t, double>> best;
    double best_score = 0.0;
    for (std::size_t j = 0; j < ncols_; ++j) {
      if (state_[j] == VarState::basic || lo_[j] == up_[j] || blocked[j]) continue;
      const double d = reduced_(static_cast<Eigen::Index>(j));
      double dir = 0.0;
      if ((state_[j] == VarState::at_lower || state_[j] == VarState::at_zero) && d < -tol) dir = 1.0;
      if ((state_[j] == VarState::at_upper || state_[j] == VarState::at_zero) && d > tol) dir = -1.0;
      if (dir == 0.0) continue;
      if (bland) return std::make_pair(j, dir);
      if (std::abs(d) > best_score) {
        best_score = std::abs(d);
        best = std::make_pair(j, dir);
      }
    }
    return best;
  }

  // bounded_phase: the objective is known to be bounded below (phase 1).
  PhaseResult run_phase(const std::vector<double>& costs, bool bounded_phase, std::size_t limit,
                        std::size_t& iterations) {
    price(costs);
    std::size_t degenerate = 0, since_price = 0;
    std::vector<bool> blocked(ncols_, false);  // cleared whenever the basis changes
    bool any_blocked = false;
    const double ptol = opts_.pivot_tol;
    const double ftol = opts_.feasibility_tol;
    while (true) {
      if (iterations >= limit) return PhaseResult::iteration_limit;
      // The reduced costs are updated incrementally; refresh them from the tableau now and then.
      if (since_price >= kRepriceEvery) {
        price(costs);
        since_price = 0;
      }
      auto entering = choose_entering(degenerate >= opts_.degenerate_limit, blocked);
      if (!entering && since_price > 0) {
        price(costs);
        since_price = 0;
        entering = choose_entering(degenerate >= opts_.degenerate_limit, blocked);
      }
      if (!entering) return PhaseResult::optimal;
      ++since_price;
      const auto [q, dir] = *entering;
      const auto qi = static_cast<Eigen::Index>(q);
      ++iterations;

      // Harris two-pass ratio test. Basic r moves by -t * dir * T(r, q).
      double relaxed = kInfinity;
      for (std::size_t r = 0; r < m_; ++r) {
        const double rate = dir * tableau_(static_cast<Eigen::Index>(r), qi);
        const std::size_t b = basis_[r];
        if (rate > ptol && std::isfinite(lo_[b])) {
          relaxed = std::min(relaxed, (xb_[r] - lo_[b] + ftol) / rate);
        } else if (rate < -ptol && std::isfinite(up_[b])) {
          relaxed = std::min(relaxed, (up_[b] - xb_[r] + ftol) / -rate);
        }
      }
      long leave = -1;
      double step = kInfinity;
      double best_rate = 0.0;
      for (std::size_t r = 0; r < m_; ++r) {
        const double rate = dir * tableau_(static_cast<Eigen::Index>(r), qi);
        const std::size_t b = basis_[r];
        double ratio = kInfinity;
        if (rate > ptol && std::isfinite(lo_[b])) {
          ratio = (xb_[r] - lo_[b]) / rate;
        } else if (rate < -ptol && std::isfinite(up_[b])) {
          ratio = (up_[b] - xb_[r]) / -rate;
        } else {
          continue;
        }
        if (ratio <= relaxed && std::abs(rate) > best_rate) {
          best_rate = std::abs(rate);
          leave = static_cast<long>(r);
          step = std::max(ratio, 0.0);
        }
      }
      const double range = up_[q] - lo_[q];
      const bool flip = std::isfinite(range) && (leave < 0 || range <= step);
      if (leave < 0 && !flip) {
        // A ray. Trust it only with fresh reduced costs; a bounded phase sets the column aside.
        if (since_price > 1) {
          price(costs);
          since_price = 0;
          --iterations;
          continue;
        }
        if (!bounded_phase) return PhaseResult::unbounded;
        blocked[q] = true;
        any_blocked = true;
        continue;
      }
      if (flip) step = range;
      degenerate = step <= 1e-12 ? degenerate + 1 : 0;

      if (step != 0.0) {
        for (std::size_t r = 0; r < m_; ++r) {
          xb_[r] -= step * dir * tableau_(static_cast<Eigen::Index>(r), qi);
        }
      }
      const double entering_value = x_[q] + dir * step;
      if (flip) {
        x_[q] = dir > 0 ? up_[q] : lo_[q];
        state_[q] = dir > 0 ? VarState::at_upper : VarState::at_lower;
        continue;
      }
      const auto r = static_cast<std::size_t>(leave);
      const std::size_t out = basis_[r];
      const double rate = dir * tableau_(static_cast<Eigen::Index>(r), qi);
      if (rate > 0) {
        x_[out] = lo_[out];
        state_[out] = VarState::at_lower;
      } else {
        x_[out] = up_[out];
        state_[out] = VarState::at_upper;
      }
      pivot(r, q);
      xb_[r] = entering_value;
      if (any_blocked) {
        std::fill(blocked.begin(), blocked.end(), false);
        any_blocked = false;
      }
    }
  }

  void pivot(std::size_t r, std::size_t q) {
    const auto ri = static_cast<Eigen::Index>(r);
    const auto qi = static_cast<Eigen::Index>(q);
    const Eigen::RowVectorXd prow = tableau_.row(ri) / tableau_(ri, qi);
    const Eigen::VectorXd col = tableau_.col(qi);
    tableau_.noalias() -= col * prow;
    tableau_.row(ri) = prow;
    reduced_ -= reduced_(qi) * prow;
    basis_[r] = q;
    state_[q] = VarState::basic;
    row_of_[q] = r;
  }

  void drive_out_artificials() {
    for (std::size_t r = 0; r < m_; ++r) {
      if (basis_[r] < first_art_) continue;
      const auto ri = static_cast<Eigen::Index>(r);
      long best = -1;
      double mag = 1e-7;
      for (std::size_t j = 0; j < first_art_; ++j) {
        if (state_[j] == VarState::basic || lo_[j] == up_[j]) continue;
        const double a = std::abs(tableau_(ri, static_cast<Eigen::Index>(j)));
        if (a > mag) {
          mag = a;
          best = static_cast<long>(j);
        }
      }
      if (best < 0) continue;  // redundant row; the artificial stays basic at zero
      const auto q = static_cast<std::size_t>(best);
      const std::size_t art = basis_[r];
      // Zero-length pivot; the artificial's residue (<= phase-1 tolerance) is cleaned by refine().
      const double entering_value = x_[q];
      x_[art] = 0.0;
      state_[art] = VarState::at_lower;
      pivot(r, q);
      xb_[r] = entering_value;
    }
    for (std::size_t j = first_art_; j < ncols_; ++j) up_[j] = 0.0;
  }

 public:
  // Simplex multipliers of the current basis, from the original columns: B' pi = c_B.
  std::vector<double> row_duals() const {
    Eigen::VectorXd rhs;
    const Eigen::MatrixXd b = basis_matrix(rhs);
    Eigen::VectorXd cb(static_cast<Eigen::Index>(m_));
    for (std::size_t k = 0; k < m_; ++k) cb(static_cast<Eigen::Index>(k)) = cost_[basis_[k]];
    const Eigen::VectorXd pi = b.transpose().partialPivLu().solve(cb);
    return {pi.data(), pi.data() + pi.size()};
  }

 private:
  // Recomputes the basic values from the original rows if the tableau has drifted.
  void refine() {
    double worst = 0.0;
    for (std::size_t r = 0; r < m_; ++r) worst = std::max(worst, std::abs(row_residual(r)));
    if (worst <= 1e-11) return;

    Eigen::VectorXd rhs;
    const Eigen::MatrixXd b = basis_matrix(rhs);
    const Eigen::VectorXd xb = b.partialPivLu().solve(rhs);
    if (!xb.allFinite()) return;
    std::vector<double> saved = xb_;
    for (std::size_t k = 0; k < m_; ++k) xb_[k] = xb(static_cast<Eigen::Index>(k));
    double after = 0.0;
    for (std::size_t r = 0; r < m_; ++r) after = std::max(after, std::abs(row_residual(r)));
    if (after > worst) xb_ = std::move(saved);
  }

  // Basis columns in row order (column k holds basis_[k]); rhs gets b minus the nonbasic part.
  Eigen::MatrixXd basis_matrix(Eigen::VectorXd& rhs) const {
    const auto m = static_cast<Eigen::Index>(m_);
    Eigen::MatrixXd basis_matrix = Eigen::MatrixXd::Zero(m, m);
    rhs.resize(m);
    std::vector<long> basic_pos(ncols_, -1);
    for (std::size_t k = 0; k < m_; ++k) basic_pos[basis_[k]] = static_cast<long>(k);
    for (std::size_t r = 0; r < m_; ++r) {
      const auto ri = static_cast<Eigen::Index>(r);
      double b = rows_[r].rhs;
      for (const auto& [j, a] : rows_[r].terms) {
        if (basic_pos[j] >= 0) basis_matrix(ri, basic_pos[j]) += a;
        else b -= a * x_[j];
      }
      if (slack_of_[r] >= 0) {
        const auto s = static_cast<std::size_t>(slack_of_[r]);
        if (basic_pos[s] >= 0) basis_matrix(ri, basic_pos[s]) += 1.0;
        else b -= x_[s];
      }
      rhs(ri) = b;
    }
    for (std::size_t k = 0; k < art_row_.size(); ++k) {
      const std::size_t j = first_art_ + k;
      const auto ri = static_cast<Eigen::Index>(art_row_[k]);
      if (basic_pos[j] >= 0) basis_matrix(ri, basic_pos[j]) += art_sign_[k];
      else rhs(ri) -= art_sign_[k] * x_[j];
    }
    return basis_matrix;
  }

  double row_residual(std::size_t r) const {
    double v = -rows_[r].rhs;
    for (const auto& [j, a] : rows_[r].terms) v += a * value(j);
    if (slack_of_[r] >= 0) v += value(static_cast<std::size_t>(slack_of_[r]));
    return v;
  }

  std::vector<SparseRow> rows_;
  SimplexOptions opts_;
  std::size_t n_struct_ = 0, m_ = 0, ncols_ = 0, first_art_ = 0;
  bool has_artificials_ = false;
  std::vector<double> cost_, lo_, up_, x_, xb_;
  std::vector<VarState> state_;
  std::vector<std::size_t> basis_, row_of_;
  std::vector<long> slack_of_;
  std::vector<std::size_t> art_row_;
  std::vector<double> art_sign_;
  static constexpr std::size_t kRepriceEvery = 50;
  Eigen::MatrixXd tableau_;
  Eigen::RowVectorXd reduced_;
};

}  // namespace

LpSolution solve(const LinearProgram& lp, const SimplexOptions& opts) {
  const std::size_t n0 = lp.num_columns();
  LpSolution sol;
  sol.x.assign(n0, 0.0);

  // Fixed columns are substituted out before the simplex sees them.
  std::vector<long> kept_index(n0, -1);
  std::vector<std::size_t> kept;
  std::vector<double> cost, lo, up;
  for (std::size_t j = 0; j < n0; ++j) {
    if (lp.is_fixed(j)) {
      sol.x[j] = lp.lower()[j];
      continue;
    }
    kept_index[j] = static_cast<long>(kept.size());
    kept.push_back(j);
    cost.push_back(lp.cost()[j]);
    lo.push_back(lp.lower()[j]);
    up.push_back(lp.upper()[j]);
  }

  std::vector<SparseRow> rows;
  std::vector<std::size_t> kept_rows;
  for (const auto& row : lp.rows()) {
    SparseRow sr{{}, row.sense, row.rhs};
    for (const auto& t : row.terms) {
      if (kept_index[t.column] < 0) {
        sr.rhs -= t.coefficient * sol.x[t.column];
      } else if (t.coefficient != 0.0) {
        sr.terms.emplace_back(static_cast<std::size_t>(kept_index[t.column]), t.coefficient);
      }
    }
    if (sr.terms.empty()) {
      const double tol = opts.feasibility_tol;
      const bool ok = (row.sense == RowSense::equal && std::abs(sr.rhs) <= tol) ||
                      (row.sense == RowSense::less_equal && sr.rhs >= -tol) ||
                      (row.sense == RowSense::greater_equal && sr.rhs <= tol);
      if (!ok) {
        sol.status = LpStatus::infeasible;
        return sol;
      }
      continue;
    }
    kept_rows.push_back(static_cast<std::size_t>(&row - lp.rows().data()));
    rows.push_back(std::move(sr));
  }

  Simplex simplex(std::move(rows), std::move(cost), std::move(lo), std::move(up), opts);
  sol.status = simplex.run(sol.iterations);
  if (sol.status != LpStatus::optimal) return sol;

  for (std::size_t k = 0; k < kept.size(); ++k) {
    const std::size_t j = kept[k];
    double v = simplex.value(k);
    // Snap round-off just outside a bound back onto it.
    if (v < lp.lower()[j] && v > lp.lower()[j] - opts.feasibility_tol) v = lp.lower()[j];
    if (v > lp.upper()[j] && v < lp.upper()[j] + opts.feasibility_tol) v = lp.upper()[j];
    sol.x[j] = v;
  }
  sol.objective = lp.objective_value(sol.x);
  if (opts.row_duals) {
    sol.row_duals.assign(lp.num_rows(), 0.0);
    const std::vector<double> pi = simplex.row_duals();
    for (std::size_t k = 0; k < kept_rows.size(); ++k) sol.row_duals[kept_rows[k]] = pi[k];
  }
  return sol;
}

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

}  // namespace collusion
