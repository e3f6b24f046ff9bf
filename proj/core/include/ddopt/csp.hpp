#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ddopt/dd.hpp"
#include "ddopt/lp.hpp"

namespace ddopt::csp {

// Nonnegative side constraints G y <= d over the arcs of a diagram: every
// stored coefficient is > 0 and every right-hand side >= 0.
struct SideConstraints {
  struct Entry {
    std::int32_t row = 0;
    std::int32_t arc = 0;
    double coeff = 0.0;
  };
  int num_rows = 0;
  std::vector<double> rhs;
  std::vector<Entry> entries;

  void add_row(double d);
  void add_entry(std::int32_t row, std::int32_t arc, double coeff);
  // Per-arc column view: (row, coeff) pairs, ordered by row.
  std::vector<std::vector<std::pair<std::int32_t, double>>> columns(
      int num_arcs) const;
  void validate(int num_arcs) const;
};

// Constrained shortest/longest path over a diagram.
struct CspInstance {
  dd::DecisionDiagram diagram;
  SideConstraints side;
  Sense sense = Sense::Min;
};

struct SearchStats {
  std::uint64_t labels_expanded = 0;   // labels extended (labeling) or nodes visited (pulse)
  std::uint64_t pruned_infeasible = 0;
  std::uint64_t pruned_bound = 0;
  std::uint64_t pruned_dominated = 0;
};

// Exact forward labeling with pairwise dominance at every node.
dd::PathSolution solve_labeling(const CspInstance& instance,
                                SearchStats* stats = nullptr);

struct PulseOptions {
  // Capacity of the per-node dominance store. Any size (including 0) is
  // correct; larger stores prune more.
  int dominance_store = 4;
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

// Depth-first search with infeasibility, bound and dominance pruning backed
// by two backward DP tables (minimum remaining consumption per row, best
// unconstrained completion cost).
dd::PathSolution solve_pulse(const CspInstance& instance,
                             const PulseOptions& options = {},
                             SearchStats* stats = nullptr);

// Arc-flow MILP: one binary per arc, unit source row, flow balance at every
// internal node, one row per side constraint.
lp::LpModel build_flow_milp(const CspInstance& instance);

// Expansion of the diagram over resource states: node (u, s) exists iff some
// root path reaching u consumes exactly s (componentwise <= rhs).
struct StateGraph {
  struct Node {
    std::int32_t dd_node = 0;
    std::vector<double> state;
  };
  struct Arc {
    std::int32_t tail = 0;
    std::int32_t head = 0;
    std::int32_t dd_arc = 0;
    double length = 0.0;
  };
  std::vector<Node> nodes;  // node 0 = (root, 0); creation order is topological
  std::vector<Arc> arcs;
  std::vector<std::int32_t> terminals;  // state-nodes sitting on the dd terminal
};

StateGraph expand_state_graph(const CspInstance& instance,
                              std::int64_t state_cap = 1'000'000);

// Best source-to-terminal value over the expanded graph (plain DP); equals
// the constrained path optimum.
double extreme_over_state_graph(const StateGraph& graph, Sense sense);

// Filters every root-terminal path by the side constraints. Exact oracle for
// small diagrams.
dd::PathSolution brute_force_csp(const CspInstance& instance,
                                 std::uint64_t path_cap = 1'000'000);

}  // namespace ddopt::csp
