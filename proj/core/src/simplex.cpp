#include "simplex_internal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ddopt/errors.hpp"

namespace ddopt::lp::detail {

namespace {
// Tableau entries below this never block the ratio test and are never chosen
// as pivots; keeping it equal to the acceptance threshold below means every
// selected pivot is numerically safe. A skipped row can be overshot past its
// bound, which the next iteration's feasibility scan picks up and repairs.
constexpr double kPivotSkip = 1e-9;
constexpr double kPivotMin = 1e-9;     // smallest acceptable pivot magnitude
constexpr double kPriceTol = 1e-9;     // reduced-cost optimality tolerance
constexpr double kStallEps = 1e-12;    // progress below this counts as a stall
constexpr int kStallLimit = 100;       // stalls before switching to Bland pricing
}  // namespace

Simplex::Simplex(const LpModel& model, SolveOptions options)
    : m_(model.num_rows()), n_(model.num_vars()), ncols_(m_ + n_),
      maximize_(model.sense == Sense::Max), opt_(options) {
  rows_.resize(m_);
  rhs_.resize(m_);
  lb_.assign(ncols_, 0.0);
  ub_.assign(ncols_, kInf);
  cost_.assign(ncols_, 0.0);
  for (int j = 0; j < n_; ++j) {
    lb_[j] = model.vars[j].lb;
    ub_[j] = model.vars[j].ub;
    cost_[j] = maximize_ ? -model.vars[j].obj : model.vars[j].obj;
  }
  for (int i = 0; i < m_; ++i) {
    rows_[i] = model.rows[i].coeffs;
    std::sort(rows_[i].begin(), rows_[i].end());
    rhs_[i] = model.rows[i].rhs;
    // Row i reads a.x + s_i = rhs with the slack sign encoding the sense.
    switch (model.rows[i].sense) {
      case RowSense::Le: lb_[n_ + i] = 0.0;   ub_[n_ + i] = kInf; break;
      case RowSense::Ge: lb_[n_ + i] = -kInf; ub_[n_ + i] = 0.0;  break;
      case RowSense::Eq: lb_[n_ + i] = 0.0;   ub_[n_ + i] = 0.0;  break;
    }
  }
  reset_cold();
}

void Simplex::place_nonbasic(int j) {
  if (lb_[j] > -kInf) {
    stat_[j] = kAtLower;
    nbval_[j] = lb_[j];
  } else if (ub_[j] < kInf) {
    stat_[j] = kAtUpper;
    nbval_[j] = ub_[j];
  } else {
    stat_[j] = kFreeZero;
    nbval_[j] = 0.0;
  }
}

void Simplex::reset_cold() {
  tab_.assign(static_cast<std::size_t>(m_) * ncols_, 0.0);
  stat_.assign(ncols_, kAtLower);
  nbval_.assign(ncols_, 0.0);
  basis_.resize(m_);
  xb_.assign(m_, 0.0);
  for (int j = 0; j < n_; ++j) place_nonbasic(j);
  for (int i = 0; i < m_; ++i) {
    double* r = row(i);
    for (const auto& [j, c] : rows_[i]) r[j] = c;
    r[n_ + i] = 1.0;
    basis_[i] = n_ + i;
    stat_[n_ + i] = kBasic;
  }
  recompute_basics();
  warm_ = false;
  bland_ = false;
  stall_ = 0;
}

void Simplex::recompute_basics() {
  // xb = B^-1 b - sum over nonbasic columns of T[:,j] * value(j). The slack
  // columns of the tableau are exactly B^-1, which gives B^-1 b cheaply.
  for (int i = 0; i < m_; ++i) {
    const double* r = row(i);
    double v = 0.0;
    for (int k = 0; k < m_; ++k)
      if (rhs_[k] != 0.0) v += r[n_ + k] * rhs_[k];
    for (int j = 0; j < ncols_; ++j)
      if (stat_[j] != kBasic && nbval_[j] != 0.0) v -= r[j] * nbval_[j];
    xb_[i] = v;
  }
}

void Simplex::set_bounds(std::int32_t j, double lb, double ub) {
  lb_[j] = lb;
  ub_[j] = ub;
  if (stat_[j] == kBasic) return;  // phase 1 will repair any violation
  const double old = nbval_[j];
  // A nonbasic column must sit exactly on a bound (or 0 when free); keep the
  // old value only when it coincides with one of the new bounds.
  if (old == lb && lb > -kInf) {
    stat_[j] = kAtLower;
    nbval_[j] = lb;
  } else if (old == ub && ub < kInf) {
    stat_[j] = kAtUpper;
    nbval_[j] = ub;
  } else {
    place_nonbasic(j);
  }
  const double delta = nbval_[j] - old;
  if (delta != 0.0)
    for (int i = 0; i < m_; ++i) xb_[i] -= row(i)[j] * delta;
}

double Simplex::max_residual() const {
  // Evaluates |a.x + s - rhs| per row against the original coefficients.
  std::vector<double> val(ncols_);
  for (int j = 0; j < ncols_; ++j)
    val[j] = stat_[j] == kBasic ? 0.0 : nbval_[j];
  for (int i = 0; i < m_; ++i) val[basis_[i]] = xb_[i];
  double worst = 0.0;
  for (int i = 0; i < m_; ++i) {
    double act = val[n_ + i];
    for (const auto& [j, c] : rows_[i]) act += c * val[j];
    worst = std::max(worst, std::abs(act - rhs_[i]) / (1.0 + std::abs(rhs_[i])));
  }
  return worst;
}

SolveStatus Simplex::solve() {
  const bool was_warm = warm_;
  cold_restarts_ = 0;
  SolveStatus st = run();
  // Warm starts accumulate tableau drift; re-check claims against the
  // original data and fall back to a cold solve when they do not hold up.
  if (st == SolveStatus::Optimal && max_residual() > opt_.feas_tol) {
    reset_cold();
    st = run();
  } else if (st == SolveStatus::Infeasible && was_warm) {
    reset_cold();
    st = run();
  }
  warm_ = true;
  return st;
}

SolveStatus Simplex::run() {
  const double ftol = opt_.feas_tol;
  std::vector<double> price(ncols_);  // phase-1 gradient or phase-2 reduced cost

  while (true) {
    if (pivots_ >= opt_.pivot_cap) return SolveStatus::IterationCap;
    if (opt_.deadline && (pivots_ & 63) == 0 &&
        std::chrono::steady_clock::now() > *opt_.deadline)
      return SolveStatus::TimeLimit;

    // Classify basic rows by feasibility.
    double infeas = 0.0;
    std::vector<std::int8_t> viol(m_, 0);  // -1 below lb, +1 above ub
    for (int i = 0; i < m_; ++i) {
      const int k = basis_[i];
      if (xb_[i] < lb_[k] - ftol) {
        viol[i] = -1;
        infeas += lb_[k] - xb_[i];
      } else if (xb_[i] > ub_[k] + ftol) {
        viol[i] = 1;
        infeas += xb_[i] - ub_[k];
      }
    }
    const bool phase1 = infeas > 0.0;

    // Pricing row: phase 2 uses reduced costs c_j - c_B^T T[:,j]; phase 1
    // uses the derivative of the total infeasibility.
    std::fill(price.begin(), price.end(), 0.0);
    if (phase1) {
      for (int i = 0; i < m_; ++i) {
        if (viol[i] == 0) continue;
        const double w = viol[i] < 0 ? 1.0 : -1.0;
        const double* r = row(i);
        for (int j = 0; j < ncols_; ++j) price[j] += w * r[j];
      }
    } else {
      for (int j = 0; j < ncols_; ++j) price[j] = cost_[j];
      for (int i = 0; i < m_; ++i) {
        const double cb = cost_[basis_[i]];
        if (cb == 0.0) continue;
        const double* r = row(i);
        for (int j = 0; j < ncols_; ++j) price[j] -= cb * r[j];
      }
    }

    // Entering column.
    int enter = -1, dir = 0;
    double best_score = kPriceTol;
    for (int j = 0; j < ncols_; ++j) {
      if (stat_[j] == kBasic || lb_[j] == ub_[j]) continue;
      const double d = price[j];
      double score = 0.0;
      int cand_dir = 0;
      switch (stat_[j]) {
        case kAtLower: score = -d; cand_dir = 1; break;
        case kAtUpper: score = d; cand_dir = -1; break;
        case kFreeZero: score = std::abs(d); cand_dir = d < 0 ? 1 : -1; break;
        default: break;
      }
      if (score <= kPriceTol) continue;
      if (bland_) { enter = j; dir = cand_dir; break; }
      if (score > best_score) {
        best_score = score;
        enter = j;
        dir = cand_dir;
      }
    }
    if (enter < 0)
      return phase1 ? SolveStatus::Infeasible : SolveStatus::Optimal;

    // Ratio test. Movement of x_enter by theta changes row i at rate
    // rho_i = -dir * T[i][enter]. Infeasible rows block at the bound they
    // are approaching (short step), feasible rows at the bound ahead. Two
    // passes: the exact minimum ratio first, then the largest pivot among
    // near-ties for numerical stability (smallest basis column under Bland).
    const auto block_of = [&](int i, double& target, bool& to_upper) -> double {
      const double t = row(i)[enter];
      if (std::abs(t) <= kPivotSkip) return kInf;
      const double rho = -dir * t;
      const int k = basis_[i];
      if (rho > 0) {
        if (viol[i] < 0) { target = lb_[k]; to_upper = false; }
        else if (viol[i] == 0 && ub_[k] < kInf) { target = ub_[k]; to_upper = true; }
        else return kInf;
      } else {
        if (viol[i] > 0) { target = ub_[k]; to_upper = true; }
        else if (viol[i] == 0 && lb_[k] > -kInf) { target = lb_[k]; to_upper = false; }
        else return kInf;
      }
      const double cand = (target - xb_[i]) / rho;
      return cand < 0.0 ? 0.0 : cand;  // clamp within-tolerance overshoot
    };

    const double flip_dist = ub_[enter] - lb_[enter];  // inf when unbounded
    double theta_min = flip_dist;
    for (int i = 0; i < m_; ++i) {
      double tgt = 0.0; bool upp = false;
      theta_min = std::min(theta_min, block_of(i, tgt, upp));
    }
    if (theta_min == kInf) {
      if (!phase1) return SolveStatus::Unbounded;
      // A phase-1 ray is impossible (total infeasibility is bounded below);
      // it can only be numerical noise. Restart cold under Bland pricing.
      if (cold_restarts_ >= 2) throw Error("simplex: persistent phase-1 ray");
      ++cold_restarts_;
      reset_cold();
      bland_ = true;
      continue;
    }

    int leave_row = -1;     // -1 means bound flip
    double leave_to = 0.0;  // bound the leaving variable lands on
    bool leave_upper = false;
    double theta = flip_dist;
    const double tie = bland_ ? 1e-12 : 1e-9 * (1.0 + theta_min);
    double best_piv = 0.0;
    for (int i = 0; i < m_; ++i) {
      double tgt = 0.0; bool upp = false;
      const double cand = block_of(i, tgt, upp);
      if (cand > theta_min + tie) continue;
      const double t = std::abs(row(i)[enter]);
      const bool better = bland_
          ? (leave_row < 0 || basis_[i] < basis_[leave_row])
          : (t > best_piv);
      if (leave_row < 0 || better) {
        leave_row = i;
        leave_to = tgt;
        leave_upper = upp;
        best_piv = t;
        theta = cand;
      }
    }
    if (leave_row < 0) theta = flip_dist;  // the entering bound is the block

    // Progress tracking for the Bland fallback.
    const double gain = best_score * theta;
    if (gain <= kStallEps) {
      if (++stall_ >= kStallLimit) bland_ = true;
    } else {
      stall_ = 0;
    }

    // Apply the step.
    ++pivots_;
    if (leave_row < 0) {
      // Bound flip: the entering variable crosses to its other bound.
      const double delta = dir > 0 ? flip_dist : -flip_dist;
      for (int i = 0; i < m_; ++i) {
        const double t = row(i)[enter];
        if (t != 0.0) xb_[i] -= t * delta;
      }
      stat_[enter] = dir > 0 ? kAtUpper : kAtLower;
      nbval_[enter] = dir > 0 ? ub_[enter] : lb_[enter];
      continue;
    }

    const double piv = row(leave_row)[enter];
    if (std::abs(piv) < kPivotMin) {
      // Hopeless pivot: restart cold with Bland pricing, a bounded number
      // of times.
      if (cold_restarts_ >= 2) throw Error("simplex: numerically singular pivot");
      ++cold_restarts_;
      reset_cold();
      bland_ = true;
      continue;
    }

    // New values before rewriting the tableau.
    const double enter_val =
        (stat_[enter] == kFreeZero ? 0.0 : nbval_[enter]) + dir * theta;
    for (int i = 0; i < m_; ++i) {
      if (i == leave_row) continue;
      const double t = row(i)[enter];
      if (t != 0.0) xb_[i] += -dir * t * theta;
    }
    const int leave_col = basis_[leave_row];
    stat_[leave_col] = leave_upper ? kAtUpper : kAtLower;
    nbval_[leave_col] = leave_to;

    // Gauss-Jordan update of the tableau.
    double* pr = row(leave_row);
    const double inv = 1.0 / piv;
    for (int j = 0; j < ncols_; ++j) pr[j] *= inv;
    pr[enter] = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (i == leave_row) continue;
      double* r = row(i);
      const double f = r[enter];
      if (f == 0.0) continue;
      for (int j = 0; j < ncols_; ++j) r[j] -= f * pr[j];
      r[enter] = 0.0;
    }
    basis_[leave_row] = enter;
    stat_[enter] = kBasic;
    xb_[leave_row] = enter_val;
  }
}

double Simplex::objective() const {
  std::vector<double> val(ncols_);
  for (int j = 0; j < ncols_; ++j) val[j] = stat_[j] == kBasic ? 0.0 : nbval_[j];
  for (int i = 0; i < m_; ++i) val[basis_[i]] = xb_[i];
  double v = 0.0;
  for (int j = 0; j < ncols_; ++j)
    if (cost_[j] != 0.0) v += cost_[j] * val[j];
  return maximize_ ? -v : v;
}

std::vector<double> Simplex::primal() const {
  std::vector<double> x(n_);
  std::vector<double> val(ncols_);
  for (int j = 0; j < ncols_; ++j) val[j] = stat_[j] == kBasic ? 0.0 : nbval_[j];
  for (int i = 0; i < m_; ++i) val[basis_[i]] = xb_[i];
  for (int j = 0; j < n_; ++j) x[j] = val[j];
  return x;
}

std::vector<double> Simplex::duals() const {
  // y = c_B^T B^-1, read off the slack columns of the tableau. For
  // maximization the user-facing shadow price flips sign along with the
  // internal objective.
  std::vector<double> y(m_, 0.0);
  for (int i = 0; i < m_; ++i) {
    const double cb = cost_[basis_[i]];
    if (cb == 0.0) continue;
    const double* r = row(i);
    for (int k = 0; k < m_; ++k) y[k] += cb * r[n_ + k];
  }
  if (maximize_)
    for (double& v : y) v = -v;
  return y;
}

}  // namespace ddopt::lp::detail

namespace ddopt::lp {

LpSolution solve_lp(const LpModel& model, const SolveOptions& options) {
  model.validate();
  detail::Simplex spx(model, options);
  LpSolution out;
  out.status = spx.solve();
  out.iterations = spx.pivots();
  if (out.status == SolveStatus::Optimal) {
    out.x = spx.primal();
    out.objective = spx.objective();
    out.duals = spx.duals();
  }
  return out;
}

}  // namespace ddopt::lp
