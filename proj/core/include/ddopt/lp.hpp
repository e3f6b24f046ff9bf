#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ddopt/dd.hpp"  // for Sense

namespace ddopt::lp {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense { Le, Eq, Ge };

// Small in-memory LP/MILP: named variables with bounds (optionally binary)
// and named linear rows. This is the exchange format between the diagram
// reformulations and the solver, and what the LP-file writer serializes.
struct LpModel {
  struct Var {
    std::string name;
    double lb = 0.0;
    double ub = kInf;
    double obj = 0.0;
    bool binary = false;
  };
  struct Row {
    std::string name;
    std::vector<std::pair<std::int32_t, double>> coeffs;  // (var index, coefficient)
    RowSense sense = RowSense::Le;
    double rhs = 0.0;
  };

  std::string name = "model";
  Sense sense = Sense::Min;
  std::vector<Var> vars;
  std::vector<Row> rows;

  std::int32_t add_var(std::string var_name, double lb, double ub, double obj);
  std::int32_t add_binary(std::string var_name, double obj);
  void add_row(std::string row_name, RowSense row_sense, double rhs,
               std::vector<std::pair<std::int32_t, double>> coeffs);

  int num_vars() const { return static_cast<int>(vars.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }

  double objective_value(const std::vector<double>& x) const;
  double row_activity(const Row& row, const std::vector<double>& x) const;
  // Largest bound or row violation of x (0 when feasible).
  double max_violation(const std::vector<double>& x) const;

  // Structural sanity: unique nonempty names, finite coefficients, coherent
  // bounds, indices in range. Throws Error on violation.
  void validate() const;
};

enum class SolveStatus {
  Optimal,
  Infeasible,
  Unbounded,
  IterationCap,  // simplex pivot cap hit
  NodeCap,       // branch-and-bound node cap hit
  TimeLimit,
};

const char* to_string(SolveStatus status);

struct SolveOptions {
  double feas_tol = 1e-7;        // row/bound feasibility
  double int_tol = 1e-6;         // integrality test in branch & bound
  std::int64_t pivot_cap = 1'000'000;
  std::int64_t node_cap = 1'000'000;
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

struct LpSolution {
  SolveStatus status = SolveStatus::Infeasible;
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> x;      // filled when a point is available
  std::vector<double> duals;  // per row, LP only; shadow-price sign convention
  std::int64_t iterations = 0;  // simplex pivots, or processed B&B nodes
};

// Bounded-variable primal simplex (dense tableau, composite phase 1,
// Dantzig pricing with a Bland fallback once the iteration count stalls).
// Duals follow the shadow-price convention: d objective / d rhs, in the
// user's objective sense.
LpSolution solve_lp(const LpModel& model, const SolveOptions& options = {});

// Best-bound branch & bound on the binary variables; branching picks the
// most fractional binary, ties broken by variable order. Deterministic.
LpSolution solve_milp(const LpModel& model, const SolveOptions& options = {});

// CPLEX-style LP text (Minimize/Maximize, Subject To, Bounds, Binaries, End).
std::string write_lp_file(const LpModel& model);

// Parses the subset of the LP format emitted by write_lp_file (plus common
// spelling variants). Throws ParseError on malformed input.
LpModel parse_lp_file(const std::string& text);

}  // namespace ddopt::lp
