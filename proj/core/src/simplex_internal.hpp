#pragma once

#include <cstdint>
#include <vector>

#include "ddopt/lp.hpp"

namespace ddopt::lp::detail {

// Bounded-variable primal simplex over a dense tableau.
//
// The object stays alive across re-solves: branch & bound changes variable
// bounds between calls and the next solve() repairs feasibility from the
// current basis (composite phase 1), which is what makes node re-solves
// cheap. The tableau is tied to the basis only — bound changes never touch
// it — so warm starts need no refactorization.
class Simplex {
public:
  Simplex(const LpModel& model, SolveOptions options);

  // Replaces the bounds of structural variable j and keeps the current
  // basic values consistent (the next solve() repairs any infeasibility).
  void set_bounds(std::int32_t j, double lb, double ub);

  // Runs the composite phase-1/phase-2 loop from the current basis.
  SolveStatus solve();

  double objective() const;            // user objective sense
  std::vector<double> primal() const;  // structural variable values
  std::vector<double> duals() const;   // per row, shadow-price convention
  std::int64_t pivots() const { return pivots_; }
  double max_residual() const;         // |Ax + s - b| against original data

  // Restores the all-slack basis and rebuilds the tableau from the original
  // coefficients. Used at construction and to recover from numerical drift.
  void reset_cold();

private:
  enum Stat : std::int8_t { kAtLower, kAtUpper, kBasic, kFreeZero };

  double* row(int i) { return tab_.data() + static_cast<std::size_t>(i) * ncols_; }
  const double* row(int i) const {
    return tab_.data() + static_cast<std::size_t>(i) * ncols_;
  }
  void place_nonbasic(int j);     // put a nonbasic column on a coherent bound
  void recompute_basics();        // xb from tableau + nonbasic values
  SolveStatus run();

  int m_ = 0, n_ = 0, ncols_ = 0;
  bool maximize_ = false;
  SolveOptions opt_;

  // Original data (structural + slack columns; slack of row i is column n_+i).
  std::vector<std::vector<std::pair<std::int32_t, double>>> rows_;  // structural part
  std::vector<double> rhs_;
  std::vector<double> lb_, ub_;    // per column
  std::vector<double> cost_;      // internal minimization costs

  std::vector<double> tab_;        // m_ x ncols_, equals B^-1 [A I]
  std::vector<double> xb_;         // value of the basic variable of each row
  std::vector<std::int32_t> basis_;  // column basic in row i
  std::vector<Stat> stat_;         // per column
  std::vector<double> nbval_;      // value of each nonbasic column

  std::int64_t pivots_ = 0;
  bool bland_ = false;
  int stall_ = 0;
  int cold_restarts_ = 0;  // per-solve budget for drift recovery
  bool warm_ = false;      // object has completed a solve before
};

}  // namespace ddopt::lp::detail
