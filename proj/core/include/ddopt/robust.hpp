#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ddopt/csp.hpp"
#include "ddopt/dd.hpp"
#include "ddopt/lp.hpp"

namespace ddopt {
namespace robust {

// Routing instance with release times, deadlines and budgeted service-time
// uncertainty. Vertices are 0..n; 0 is the start depot, n the end depot.
// A route departs vertex 0 at time 0, visits every customer 1..n-1 exactly
// once and ends at n. Service at vertex j lasts delta_j time units, where
// delta ranges over the budget set
//   { delta integer : lb <= delta <= ub componentwise, sum delta <= budget },
// with delta fixed to 0 at both depots.
struct RtsptwInstance {
  // Deadline checks: Arrival requires arrival_j <= d_j (service may finish
  // later); Completion requires arrival_j + delta_j <= d_j.
  enum class Semantics { Arrival, Completion };

  int n = 0;  // end-depot index; the instance has n + 1 vertices

  // cost[i][j] and travel[i][j] are nonnegative; -1 marks a missing edge.
  std::vector<std::vector<std::int64_t>> cost;
  std::vector<std::vector<std::int64_t>> travel;

  std::vector<std::int64_t> release;  // r_j, size n + 1, release[0] == 0
  std::vector<double> deadline;       // d_j, size n + 1; +infinity allowed

  std::vector<std::int64_t> delay_lb;  // l_j, size n + 1, 0 at depots
  std::vector<std::int64_t> delay_ub;  // u_j, size n + 1, 0 at depots
  std::int64_t budget = 0;

  Semantics semantics = Semantics::Arrival;

  // Geometry the generator drew the instance from (empty when hand-built).
  std::vector<std::array<std::int64_t, 2>> points;

  // Generator provenance, kept for reproducibility records.
  std::uint64_t seed = 0;
  std::int64_t window_width = 0;

  int num_vertices() const { return n + 1; }
  int num_customers() const { return n - 1; }

  // Structural checks: square matrices, window sanity (r <= d), depot
  // conventions (r_0 = 0, d_0 = +inf, zero depot delays), nonempty budget
  // set (sum of lower bounds <= budget). Throws Error on violation.
  void validate() const;
};

// One service-time realization. delta has one entry per vertex (size n + 1)
// with both depot entries equal to zero.
struct Scenario {
  std::vector<std::int64_t> delta;

  bool operator==(const Scenario& other) const { return delta == other.delta; }
};

// The all-lower-bounds scenario, the best case every other scenario weakly
// dominates.
Scenario nominal_scenario(const RtsptwInstance& inst);

// Deterministic simulation of one route under one scenario.
struct RouteCheck {
  bool feasible = false;
  int violation_pos = -1;  // first route position whose deadline fails
  std::vector<std::int64_t> arrival;     // per position 0..n
  std::vector<std::int64_t> completion;  // arrival + delta, per position
};

// Replays `route` (vertex sequence 0, ..., n covering every customer once)
// under the fixed scenario. arrival_k = max(r_vk, completion_{k-1} + travel);
// the deadline test follows inst.semantics. Throws Error if the route is
// malformed or uses a missing edge.
RouteCheck check_route(const RtsptwInstance& inst, const std::vector<int>& route,
                       const Scenario& scenario);

// Worst-case analysis of one route over the whole budget set.
struct SeparationResult {
  bool violated = false;
  int position = -1;  // first violated route position, route order
  int vertex = -1;    // vertex at that position
  Scenario witness;   // a scenario realizing the violation (iff violated)
  // Per route position: the maximum over all scenarios of the arrival time,
  // and of the completion time, at that position.
  std::vector<std::int64_t> worst_arrival;
  std::vector<std::int64_t> worst_completion;
};

// Exact separation by dynamic programming over (route position, budget
// spent). Returns the first position (in route order) whose worst-case
// arrival (or completion, per semantics) exceeds its deadline, with a
// witness scenario reconstructed by backtracking; vertices after the
// violation keep their lower-bound delays. No violation means the route is
// feasible for every scenario in the budget set.
SeparationResult separate(const RtsptwInstance& inst,
                          const std::vector<int>& route);

// Options for the route-diagram construction.
struct TspDdOptions {
  // Drop arcs whose earliest possible arrival (all delays at their lower
  // bounds) already violates the deadline of the entered vertex. Sound
  // because every scenario delays at least that much.
  bool prune_nominal = true;
  dd::CompileOptions compile;
};

// Layered diagram of all 0 -> n routes: layer j chooses the j-th vertex of
// the route, nodes are keyed by (visited-customer set, last vertex), arc
// value = entered vertex, arc length = edge cost. The diagram is left
// unreduced so that node states stay meaningful for time propagation.
// Requires n <= 16. Throws NoFeasiblePath when no route survives.
dd::DecisionDiagram build_tsp_dd(const RtsptwInstance& inst,
                                 const TspDdOptions& options = {});

// Turns a root-terminal path of the route diagram into the vertex sequence
// 0, v_1, ..., v_n.
std::vector<int> route_of_path(const dd::PathSolution& path);

struct IterationRecord {
  int iteration = 0;        // 1-based
  double objective = 0.0;   // route cost proposed this round
  int num_scenarios = 0;    // scenarios enforced while solving this round
  std::uint64_t labels = 0; // search effort (labels or simplex pivots)
  double seconds = 0.0;     // wall time of this round
};

struct RobustResult {
  std::vector<int> route;
  double objective = 0.0;
  std::vector<Scenario> scenarios;  // the final working scenario set
  std::vector<IterationRecord> log;
};

struct RobustSolveOptions {
  TspDdOptions dd;
  int dominance_store = 4;  // per-node label slots in the diagram search
  std::optional<std::chrono::steady_clock::time_point> deadline;
  lp::SolveOptions milp;  // used by the integer-programming variant
};

// Scenario-expansion solver on the route diagram: start from an empty
// scenario set, find the cheapest route whose arrival profile is feasible
// for every active scenario (depth-first search over the diagram with
// per-scenario time states), then ask `separate` for a violated scenario
// and repeat. Terminates with a route feasible for the whole budget set.
// Throws NoFeasiblePath when no robust-feasible route exists.
RobustResult solve_state_augmenting(const RtsptwInstance& inst,
                                    const RobustSolveOptions& options = {});

// Oracle: enumerate all routes of the (unpruned) diagram, keep the ones
// `separate` clears, return the cheapest. Requires n <= 10.
RobustResult brute_force_robust(const RtsptwInstance& inst);

// Mixed-integer route model over edge binaries x_ij plus one arrival
// variable per vertex and listed scenario, tied by big-M propagation rows
// (M = end-depot deadline). Scenario list may be empty (degree rows only).
struct IpBaselineModel {
  lp::LpModel model;
  std::vector<std::pair<int, int>> edges;  // edge (i, j) of column edge_var[k]
  std::vector<std::int32_t> edge_var;
  // w_var[s][j]: arrival variable of vertex j under scenario s.
  std::vector<std::vector<std::int32_t>> w_var;
};

IpBaselineModel build_ip_baseline(const RtsptwInstance& inst,
                                  const std::vector<Scenario>& scenarios);

// Scenario-expansion loop with the integer-programming model in place of
// the diagram search. The working set starts from the all-lower-bounds
// scenario so that the time-propagation rows are present from round one
// (without them the degree-only model admits disconnected subtours).
RobustResult solve_ip_iterative(const RtsptwInstance& inst,
                                const RobustSolveOptions& options = {});

// Most-violated-count separation model for a fixed route: binary v_k flags
// positions whose deadline breaks, service times are unary-encoded integer
// variables inside the budget set, and arrival equalities are linearized
// with indicator binaries. Maximizing sum(v) counts simultaneously violable
// deadlines; optimum 0 certifies robust feasibility of the route.
struct SepMilpModel {
  lp::LpModel model;
  std::vector<std::int32_t> w_var;  // arrival per route position
  std::vector<std::int32_t> v_var;  // violation flag per position, -1 if none
  std::vector<std::vector<std::int32_t>> delta_bits;  // unary bits per position
};

SepMilpModel build_sep_milp(const RtsptwInstance& inst,
                            const std::vector<int>& route, double eps = 1e-4);

// Extracts the scenario a solved separation model selected.
Scenario scenario_from_sep_solution(const RtsptwInstance& inst,
                                    const std::vector<int>& route,
                                    const SepMilpModel& sep,
                                    const std::vector<double>& x);

// Generic scenario-indexed linear restriction of diagram paths: for each
// scenario, row i constrains sum_a value_a * coeff[i][layer(a)-1] * y_a to
// at most rhs[i]. Coefficients and right-hand sides must be nonnegative.
struct RobustConstraintView {
  std::vector<std::vector<double>> coeff;  // rows x num_vars
  std::vector<double> rhs;                 // per row
};

// Stacks one block of side-constraint rows per scenario view, turning a
// robust restriction over a finite scenario list into a plain constrained
// shortest-path instance on the same diagram.
csp::SideConstraints stack_scenarios(const dd::DecisionDiagram& diagram,
                                     const std::vector<RobustConstraintView>& views);

// Random geometric instance: distinct integer points on a grid (so travel
// times are positive), travel = rounded Euclidean distance, cost = travel,
// windows of the given width centered on the arrival times of a random
// reference tour, every deadline extended by the budget; service bounds
// l = 0, u = 2 at customers. Deterministic in `seed`.
RtsptwInstance generate_rtsptw(int n, std::int64_t width, std::int64_t budget,
                               std::uint64_t seed);

}  // namespace robust
}  // namespace ddopt
