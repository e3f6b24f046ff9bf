#include "ddopt/csp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "ddopt/errors.hpp"

namespace ddopt::csp {

namespace {
constexpr double kResTol = 1e-9;  // resource comparison tolerance
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

void SideConstraints::add_row(double d) {
  ++num_rows;
  rhs.push_back(d);
}

void SideConstraints::add_entry(std::int32_t row, std::int32_t arc, double coeff) {
  entries.push_back({row, arc, coeff});
}

std::vector<std::vector<std::pair<std::int32_t, double>>> SideConstraints::columns(
    int num_arcs) const {
  std::vector<std::vector<std::pair<std::int32_t, double>>> cols(num_arcs);
  for (const Entry& e : entries) cols[e.arc].emplace_back(e.row, e.coeff);
  for (auto& col : cols) std::sort(col.begin(), col.end());
  return cols;
}

void SideConstraints::validate(int num_arcs) const {
  if (static_cast<int>(rhs.size()) != num_rows)
    throw Error("SideConstraints: rhs size mismatch");
  for (double d : rhs)
    if (!(d >= 0.0)) throw Error("SideConstraints: negative right-hand side");
  for (const Entry& e : entries) {
    if (e.row < 0 || e.row >= num_rows) throw Error("SideConstraints: row out of range");
    if (e.arc < 0 || e.arc >= num_arcs) throw Error("SideConstraints: arc out of range");
    if (!(e.coeff > 0.0)) throw Error("SideConstraints: coefficients must be positive");
  }
}

namespace {

bool better_cost(double cand, double best, Sense sense) {
  return sense == Sense::Min ? cand < best : cand > best;
}

// cand dominates incumbent resources if componentwise <= within tolerance.
bool res_le(const std::vector<double>& a, const std::vector<double>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] > b[i] + kResTol) return false;
  return true;
}

dd::PathSolution rebuild_path(const dd::DecisionDiagram& diagram,
                              const std::vector<std::int32_t>& arc_ids) {
  dd::PathSolution path;
  path.arc_ids = arc_ids;
  for (std::int32_t a : arc_ids) {
    path.values.push_back(diagram.arcs[a].value);
    path.objective += diagram.arcs[a].length;
  }
  return path;
}

}  // namespace

dd::PathSolution solve_labeling(const CspInstance& instance, SearchStats* stats) {
  const dd::DecisionDiagram& dd = instance.diagram;
  instance.side.validate(dd.num_arcs());
  const auto cols = instance.side.columns(dd.num_arcs());
  const Sense sense = instance.sense;

  struct Label {
    std::vector<double> res;
    double cost = 0.0;
    std::int32_t parent = -1;  // arena index
    std::int32_t arc = -1;
  };
  std::vector<Label> arena;
  std::vector<std::vector<std::int32_t>> at_node(dd.num_nodes());

  arena.push_back({std::vector<double>(instance.side.num_rows, 0.0), 0.0, -1, -1});
  at_node[dd.root].push_back(0);

  SearchStats local;
  // Nodes in id order are topologically sorted (layer-major numbering).
  for (std::int32_t u = 0; u < dd.num_nodes(); ++u) {
    if (u == dd.terminal) continue;
    for (std::int32_t li : at_node[u]) {
      if (arena[li].arc == -2) continue;  // tombstone from dominance
      for (std::int32_t a = dd.out_first[u]; a < dd.out_first[u + 1]; ++a) {
        ++local.labels_expanded;
        Label cand;
        cand.res = arena[li].res;
        bool feasible = true;
        for (const auto& [row, coeff] : cols[a]) {
          cand.res[row] += coeff;
          if (cand.res[row] > instance.side.rhs[row] + kResTol) {
            feasible = false;
            break;
          }
        }
        if (!feasible) {
          ++local.pruned_infeasible;
          continue;
        }
        cand.cost = arena[li].cost + dd.arcs[a].length;
        cand.parent = li;
        cand.arc = a;
        const std::int32_t head = dd.arcs[a].head;

        // Pairwise dominance at the head node.
        bool dominated = false;
        auto& list = at_node[head];
        for (std::size_t k = 0; k < list.size();) {
          Label& other = arena[list[k]];
          if (other.arc == -2) {  // purge tombstones lazily
            list[k] = list.back();
            list.pop_back();
            continue;
          }
          const bool other_cost_ok = !better_cost(cand.cost, other.cost, sense);
          if (other_cost_ok && res_le(other.res, cand.res)) {
            dominated = true;
            break;
          }
          const bool cand_cost_ok = !better_cost(other.cost, cand.cost, sense);
          if (cand_cost_ok && res_le(cand.res, other.res)) {
            other.arc = -2;
            list[k] = list.back();
            list.pop_back();
            continue;
          }
          ++k;
        }
        if (dominated) {
          ++local.pruned_dominated;
          continue;
        }
        arena.push_back(std::move(cand));
        list.push_back(static_cast<std::int32_t>(arena.size()) - 1);
      }
    }
  }

  std::int32_t best = -1;
  for (std::int32_t li : at_node[dd.terminal]) {
    if (arena[li].arc == -2) continue;
    if (best < 0 || better_cost(arena[li].cost, arena[best].cost, sense)) best = li;
  }
  if (best < 0)
    throw NoFeasiblePath("solve_labeling: side constraints cut off every path");
  if (stats) *stats = local;

  std::vector<std::int32_t> arcs_rev;
  for (std::int32_t li = best; arena[li].arc >= 0; li = arena[li].parent)
    arcs_rev.push_back(arena[li].arc);
  std::reverse(arcs_rev.begin(), arcs_rev.end());
  return rebuild_path(dd, arcs_rev);
}

namespace {

// Backward tables for pulse pruning: per-row minimum remaining consumption
// and the unconstrained best completion cost.
struct PulseTables {
  std::vector<std::vector<double>> min_remaining;  // [row][node]
  std::vector<double> best_to_go;                  // [node]
};

PulseTables build_pulse_tables(const CspInstance& instance) {
  const dd::DecisionDiagram& dd = instance.diagram;
  const auto cols = instance.side.columns(dd.num_arcs());
  PulseTables t;
  t.min_remaining.assign(instance.side.num_rows,
                         std::vector<double>(dd.num_nodes(), kInf));
  const double worst = instance.sense == Sense::Min ? kInf : -kInf;
  t.best_to_go.assign(dd.num_nodes(), worst);
  for (auto& row : t.min_remaining) row[dd.terminal] = 0.0;
  t.best_to_go[dd.terminal] = 0.0;

  std::vector<double> arc_row(instance.side.num_rows);
  for (std::int32_t u = dd.num_nodes() - 1; u >= 0; --u) {
    if (u == dd.terminal) continue;
    for (std::int32_t a = dd.out_first[u]; a < dd.out_first[u + 1]; ++a) {
      const std::int32_t head = dd.arcs[a].head;
      std::fill(arc_row.begin(), arc_row.end(), 0.0);
      for (const auto& [row, coeff] : cols[a]) arc_row[row] = coeff;
      for (int i = 0; i < instance.side.num_rows; ++i)
        t.min_remaining[i][u] =
            std::min(t.min_remaining[i][u], arc_row[i] + t.min_remaining[i][head]);
      const double cand = dd.arcs[a].length + t.best_to_go[head];
      if (better_cost(cand, t.best_to_go[u], instance.sense))
        t.best_to_go[u] = cand;
    }
  }
  return t;
}

}  // namespace

dd::PathSolution solve_pulse(const CspInstance& instance,
                             const PulseOptions& options, SearchStats* stats) {
  const dd::DecisionDiagram& dd = instance.diagram;
  instance.side.validate(dd.num_arcs());
  const auto cols = instance.side.columns(dd.num_arcs());
  const Sense sense = instance.sense;
  const int m = instance.side.num_rows;
  const PulseTables tables = build_pulse_tables(instance);

  // Fixed-size dominance store per node, replaced round robin. Any capacity
  // is sound: a stored (resources, cost) pair only ever suppresses partial
  // paths it genuinely dominates.
  const int cap = std::max(0, options.dominance_store);
  std::vector<std::vector<double>> store_res(dd.num_nodes());
  std::vector<std::vector<double>> store_cost(dd.num_nodes());
  std::vector<int> store_next(dd.num_nodes(), 0);
  if (cap > 0)
    for (auto& v : store_cost) v.reserve(cap);

  SearchStats local;
  double incumbent = sense == Sense::Min ? kInf : -kInf;
  std::vector<std::int32_t> best_arcs;

  std::vector<double> res(m, 0.0);
  std::vector<std::int32_t> arc_stack;

  // Iterative DFS; each frame remembers the arc cursor and undo data.
  struct Frame {
    std::int32_t node;
    std::int32_t cursor;
    double cost;
  };
  std::vector<Frame> frames;
  frames.push_back({dd.root, dd.out_first[dd.root], 0.0});

  const auto deadline_hit = [&]() {
    return options.deadline && (local.labels_expanded & 1023) == 0 &&
           std::chrono::steady_clock::now() > *options.deadline;
  };

  while (!frames.empty()) {
    Frame& f = frames.back();
    if (f.cursor >= dd.out_first[f.node + 1]) {
      frames.pop_back();
      if (!arc_stack.empty()) {
        const std::int32_t a = arc_stack.back();
        arc_stack.pop_back();
        for (const auto& [row, coeff] : cols[a]) res[row] -= coeff;
        if (!frames.empty()) ++frames.back().cursor;
      }
      continue;
    }
    const std::int32_t a = f.cursor;
    const std::int32_t head = dd.arcs[a].head;
    const double cost = f.cost + dd.arcs[a].length;
    ++local.labels_expanded;
    if (deadline_hit()) throw TimeLimitExceeded("solve_pulse: deadline expired");

    // Tentatively consume the arc; undone on every pruned branch and when
    // backtracking past it.
    for (const auto& [row, coeff] : cols[a]) res[row] += coeff;
    const auto undo = [&]() {
      for (const auto& [row, coeff] : cols[a]) res[row] -= coeff;
    };

    // Infeasibility pruning: consumption so far plus the minimum any
    // completion still adds must fit every row.
    bool ok = true;
    for (int i = 0; i < m; ++i)
      if (res[i] + tables.min_remaining[i][head] > instance.side.rhs[i] + kResTol) {
        ok = false;
        break;
      }
    if (!ok) {
      undo();
      ++local.pruned_infeasible;
      ++f.cursor;
      continue;
    }

    // Bound pruning: even the unconstrained best completion cannot beat the
    // incumbent strictly.
    const double bound = cost + tables.best_to_go[head];
    const bool can_improve = sense == Sense::Min ? bound < incumbent
                                                 : bound > incumbent;
    if (!can_improve) {
      undo();
      ++local.pruned_bound;
      ++f.cursor;
      continue;
    }

    if (head == dd.terminal) {
      incumbent = cost;
      best_arcs = arc_stack;
      best_arcs.push_back(a);
      undo();
      ++f.cursor;
      continue;
    }

    // Dominance store at the head node (res currently holds the head state).
    if (cap > 0) {
      bool dominated = false;
      const auto& sres = store_res[head];
      const auto& scost = store_cost[head];
      for (int k = 0; k < static_cast<int>(scost.size()); ++k) {
        const double* sr = sres.data() + static_cast<std::size_t>(k) * m;
        bool le = true;
        for (int i = 0; i < m; ++i)
          if (sr[i] > res[i] + kResTol) { le = false; break; }
        if (le && !better_cost(cost, scost[k], sense)) {
          dominated = true;
          break;
        }
      }
      if (dominated) {
        undo();
        ++local.pruned_dominated;
        ++f.cursor;
        continue;
      }
      auto& dres = store_res[head];
      auto& dcost = store_cost[head];
      if (static_cast<int>(dcost.size()) < cap) {
        dcost.push_back(cost);
        dres.insert(dres.end(), res.begin(), res.end());
      } else {
        const int slot = store_next[head];
        dcost[slot] = cost;
        std::copy(res.begin(), res.end(),
                  dres.begin() + static_cast<std::size_t>(slot) * m);
        store_next[head] = (slot + 1) % cap;
      }
    }

    arc_stack.push_back(a);
    frames.push_back({head, dd.out_first[head], cost});
  }

  if (best_arcs.empty())
    throw NoFeasiblePath("solve_pulse: side constraints cut off every path");
  if (stats) *stats = local;
  return rebuild_path(dd, best_arcs);
}

lp::LpModel build_flow_milp(const CspInstance& instance) {
  const dd::DecisionDiagram& dd = instance.diagram;
  instance.side.validate(dd.num_arcs());
  lp::LpModel model;
  model.name = "csp_flow";
  model.sense = instance.sense;
  for (std::int32_t a = 0; a < dd.num_arcs(); ++a)
    model.add_binary("y" + std::to_string(a), dd.arcs[a].length);

  std::vector<std::pair<std::int32_t, double>> src;
  for (std::int32_t a = dd.out_first[dd.root]; a < dd.out_first[dd.root + 1]; ++a)
    src.emplace_back(a, 1.0);
  model.add_row("src", lp::RowSense::Eq, 1.0, std::move(src));

  const auto in = dd.in_arcs();
  for (std::int32_t u = 0; u < dd.num_nodes(); ++u) {
    if (u == dd.root || u == dd.terminal) continue;
    std::vector<std::pair<std::int32_t, double>> bal;
    for (std::int32_t a : in[u]) bal.emplace_back(a, 1.0);
    for (std::int32_t a = dd.out_first[u]; a < dd.out_first[u + 1]; ++a)
      bal.emplace_back(a, -1.0);
    model.add_row("bal_n" + std::to_string(u), lp::RowSense::Eq, 0.0, std::move(bal));
  }

  const auto cols = instance.side.columns(dd.num_arcs());
  for (int i = 0; i < instance.side.num_rows; ++i) {
    std::vector<std::pair<std::int32_t, double>> row;
    for (std::int32_t a = 0; a < dd.num_arcs(); ++a)
      for (const auto& [r, c] : cols[a])
        if (r == i) row.emplace_back(a, c);
    model.add_row("side" + std::to_string(i), lp::RowSense::Le,
                  instance.side.rhs[i], std::move(row));
  }
  return model;
}

StateGraph expand_state_graph(const CspInstance& instance, std::int64_t state_cap) {
  const dd::DecisionDiagram& dd = instance.diagram;
  instance.side.validate(dd.num_arcs());
  const auto cols = instance.side.columns(dd.num_arcs());

  StateGraph g;
  // Per dd-node map from state vector to state-node id. Processing dd nodes
  // in id order visits tails before heads, so creation order is topological.
  std::vector<std::map<std::vector<double>, std::int32_t>> seen(dd.num_nodes());
  g.nodes.push_back({dd.root, std::vector<double>(instance.side.num_rows, 0.0)});
  seen[dd.root].emplace(g.nodes[0].state, 0);

  std::vector<std::vector<std::int32_t>> at_node(dd.num_nodes());
  at_node[dd.root].push_back(0);

  for (std::int32_t u = 0; u < dd.num_nodes(); ++u) {
    if (u == dd.terminal) continue;
    for (std::size_t idx = 0; idx < at_node[u].size(); ++idx) {
      const std::int32_t sn = at_node[u][idx];
      for (std::int32_t a = dd.out_first[u]; a < dd.out_first[u + 1]; ++a) {
        std::vector<double> next = g.nodes[sn].state;
        bool feasible = true;
        for (const auto& [row, coeff] : cols[a]) {
          next[row] += coeff;
          if (next[row] > instance.side.rhs[row] + kResTol) {
            feasible = false;
            break;
          }
        }
        if (!feasible) continue;
        const std::int32_t head = dd.arcs[a].head;
        auto [it, inserted] =
            seen[head].emplace(next, static_cast<std::int32_t>(g.nodes.size()));
        if (inserted) {
          if (static_cast<std::int64_t>(g.nodes.size()) >= state_cap)
            throw StateCapExceeded("expand_state_graph: more than " +
                                   std::to_string(state_cap) + " state nodes");
          g.nodes.push_back({head, std::move(next)});
          at_node[head].push_back(it->second);
          if (head == dd.terminal) g.terminals.push_back(it->second);
        }
        g.arcs.push_back({sn, it->second, a, dd.arcs[a].length});
      }
    }
  }
  if (g.terminals.empty())
    throw NoFeasiblePath("expand_state_graph: side constraints cut off every path");
  return g;
}

double extreme_over_state_graph(const StateGraph& graph, Sense sense) {
  const double worst = sense == Sense::Min ? kInf : -kInf;
  std::vector<double> best(graph.nodes.size(), worst);
  best[0] = 0.0;
  // Arcs were created tail-first, so a single pass relaxes in topological order.
  for (const StateGraph::Arc& a : graph.arcs) {
    if (best[a.tail] == worst) continue;
    const double cand = best[a.tail] + a.length;
    if (better_cost(cand, best[a.head], sense)) best[a.head] = cand;
  }
  double out = worst;
  for (std::int32_t t : graph.terminals)
    if (better_cost(best[t], out, sense)) out = best[t];
  if (out == worst)
    throw NoFeasiblePath("extreme_over_state_graph: no terminal reachable");
  return out;
}

dd::PathSolution brute_force_csp(const CspInstance& instance,
                                 std::uint64_t path_cap) {
  const dd::DecisionDiagram& dd = instance.diagram;
  instance.side.validate(dd.num_arcs());
  const auto cols = instance.side.columns(dd.num_arcs());
  const Sense sense = instance.sense;

  dd::PathSolution best;
  bool found = false;
  std::vector<double> use(instance.side.num_rows);
  dd::for_each_path(
      dd,
      [&](const dd::PathSolution& p) {
        std::fill(use.begin(), use.end(), 0.0);
        for (std::int32_t a : p.arc_ids)
          for (const auto& [row, coeff] : cols[a]) use[row] += coeff;
        for (int i = 0; i < instance.side.num_rows; ++i)
          if (use[i] > instance.side.rhs[i] + kResTol) return;
        if (!found || better_cost(p.objective, best.objective, sense)) {
          best = p;
          found = true;
        }
      },
      path_cap);
  if (!found)
    throw NoFeasiblePath("brute_force_csp: side constraints cut off every path");
  return best;
}

}  // namespace ddopt::csp
