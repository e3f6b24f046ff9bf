#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ddopt {

enum class Sense { Min, Max };

namespace dd {

// DP state attached to a node. Fixed-width integers keep state keys exact and
// hashable; problems with non-integer state should scale first.
using State = std::vector<std::int64_t>;

// Recursive model handed to compile(): an initial state, per-layer value
// domains, a (partial) transition function and per-arc stage costs. Layers
// are 1-based: layer j decides variable x_j. States that compare equal must
// have identical completion sets, since compilation merges them.
class DpSpec {
public:
  virtual ~DpSpec() = default;

  virtual State initial_state() const = 0;

  // Candidate arc values at `layer` out of `state`, in the order arcs should
  // be created. Values must be distinct.
  virtual std::vector<int> domain(const State& state, int layer) const = 0;

  // Successor state, or nullopt when assigning `value` at `layer` is
  // infeasible from `state`.
  virtual std::optional<State> transition(const State& state, int layer,
                                          int value) const = 0;

  // Contribution of the arc (state, layer, value) to the objective.
  virtual double stage_cost(const State& state, int layer, int value) const = 0;
};

struct Arc {
  std::int32_t tail = -1;
  std::int32_t head = -1;
  std::int32_t value = 0;
  double length = 0.0;
};

// Layered diagram. Node 0 is the root, the last node is the unique terminal.
// Arcs are sorted by (layer, tail, value) and indexed by a CSR offset table,
// so arc ids are a canonical ordering shared by every consumer (LP columns,
// DOT output, tie-breaking).
struct DecisionDiagram {
  int num_vars = 0;  // n; node layers run 1..n+1, arc layer = layer of tail
  std::int32_t root = 0;
  std::int32_t terminal = 0;
  std::vector<std::int32_t> node_layer;  // per node, 1-based
  std::vector<State> node_state;         // per node; empty vector at terminal
  std::vector<Arc> arcs;
  std::vector<std::int32_t> out_first;   // CSR: node u owns arcs [out_first[u], out_first[u+1])

  int num_nodes() const { return static_cast<int>(node_layer.size()); }
  int num_arcs() const { return static_cast<int>(arcs.size()); }
  int arc_layer(std::int32_t arc_id) const {
    return node_layer[arcs[arc_id].tail];
  }

  // Recomputes out_first from arcs; arcs must already be sorted by
  // (layer, tail, value).
  void rebuild_index();

  // Incoming arc ids per node, derived on demand.
  std::vector<std::vector<std::int32_t>> in_arcs() const;

  // Nodes of one layer, in node-id order.
  std::vector<std::int32_t> layer_nodes(int layer) const;

  // Internal consistency: layer structure, sortedness, CSR integrity,
  // single terminal. Throws Error on violation. Used by tests.
  void check() const;
};

struct CompileOptions {
  // Hard cap on the number of nodes in any single layer.
  std::int64_t layer_node_cap = 10'000'000;
};

// Builds the exact diagram of a DP model: one node per distinct reachable
// state per layer, one terminal, dead ends removed. Throws NoFeasiblePath if
// no assignment is feasible and LayerExplosion if a layer exceeds the cap.
DecisionDiagram compile(const DpSpec& spec, int num_vars,
                        const CompileOptions& options = {});

// Merges nodes with identical outgoing arc signatures, bottom-up, in one
// pass. Preserves the multiset of value/length path profiles. Idempotent.
DecisionDiagram reduce(const DecisionDiagram& diagram);

struct PathSolution {
  std::vector<std::int32_t> arc_ids;  // one per layer, root to terminal
  std::vector<int> values;            // arc values along the path
  double objective = 0.0;             // sum of arc lengths
};

// Shortest or longest root-terminal path by plain DP. Ties are broken toward
// the smallest arc id at every node, so the result is deterministic.
PathSolution extreme_path(const DecisionDiagram& diagram, Sense sense);

// Number of root-terminal paths, saturating at cap + 1.
std::uint64_t count_paths(const DecisionDiagram& diagram,
                          std::uint64_t cap = UINT64_MAX - 1);

// Calls visit for every root-terminal path in lexicographic arc-id order.
// Throws PathCapExceeded if the diagram holds more than `cap` paths.
void for_each_path(const DecisionDiagram& diagram,
                   const std::function<void(const PathSolution&)>& visit,
                   std::uint64_t cap = 1'000'000);

// Materialized variant of for_each_path.
std::vector<PathSolution> enumerate_paths(const DecisionDiagram& diagram,
                                          std::uint64_t cap = 1'000'000);

// Graphviz rendering: one statement per node, one per arc; value-0 arcs are
// dashed, all others solid and labeled with their value.
std::string export_dot(const DecisionDiagram& diagram);

// Removes arcs for which `keep` is false, then prunes nodes that can no
// longer lie on a root-terminal path. Node/arc ids are re-assigned in the
// canonical order. Throws NoFeasiblePath if nothing survives.
DecisionDiagram filter_arcs(const DecisionDiagram& diagram,
                            const std::function<bool(std::int32_t)>& keep);

// Binary knapsack-style model with one or more capacity rows: layer j picks
// x_j in {0,1}, state = accumulated row consumption, value-1 arcs cost
// profit[j-1]. Rows must be nonnegative so that the running-consumption
// feasibility check is exact.
class KnapsackSpec : public DpSpec {
public:
  KnapsackSpec(std::vector<std::vector<std::int64_t>> rows,
               std::vector<std::int64_t> capacities,
               std::vector<double> profits);

  int num_vars() const { return static_cast<int>(profits_.size()); }
  State initial_state() const override;
  std::vector<int> domain(const State& state, int layer) const override;
  std::optional<State> transition(const State& state, int layer,
                                  int value) const override;
  double stage_cost(const State& state, int layer, int value) const override;

private:
  std::vector<std::vector<std::int64_t>> rows_;  // rows_[i][j]: row i, item j
  std::vector<std::int64_t> capacities_;
  std::vector<double> profits_;
};

}  // namespace dd
}  // namespace ddopt
