#include "ddopt/dd.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

#include "ddopt/errors.hpp"

namespace ddopt::dd {

void DecisionDiagram::rebuild_index() {
  const int n_nodes = num_nodes();
  out_first.assign(n_nodes + 1, 0);
  for (const Arc& a : arcs) out_first[a.tail + 1]++;
  for (int u = 0; u < n_nodes; ++u) out_first[u + 1] += out_first[u];
}

std::vector<std::vector<std::int32_t>> DecisionDiagram::in_arcs() const {
  std::vector<std::vector<std::int32_t>> in(num_nodes());
  for (std::int32_t a = 0; a < num_arcs(); ++a) in[arcs[a].head].push_back(a);
  return in;
}

std::vector<std::int32_t> DecisionDiagram::layer_nodes(int layer) const {
  std::vector<std::int32_t> out;
  for (std::int32_t u = 0; u < num_nodes(); ++u)
    if (node_layer[u] == layer) out.push_back(u);
  return out;
}

void DecisionDiagram::check() const {
  const int n_nodes = num_nodes();
  if (n_nodes == 0) throw Error("diagram has no nodes");
  if (root != 0 || node_layer[root] != 1) throw Error("root must be node 0 in layer 1");
  if (terminal != n_nodes - 1 || node_layer[terminal] != num_vars + 1)
    throw Error("terminal must be the last node, in layer n+1");
  for (int u = 1; u < n_nodes; ++u)
    if (node_layer[u] < node_layer[u - 1]) throw Error("node ids must be layer-major");
  if (layer_nodes(1).size() != 1 || layer_nodes(num_vars + 1).size() != 1)
    throw Error("layers 1 and n+1 must each hold a single node");
  if (static_cast<int>(out_first.size()) != n_nodes + 1 ||
      out_first[n_nodes] != num_arcs())
    throw Error("arc index table is inconsistent");
  for (std::int32_t a = 0; a < num_arcs(); ++a) {
    const Arc& arc = arcs[a];
    if (arc.tail < 0 || arc.tail >= n_nodes || arc.head < 0 || arc.head >= n_nodes)
      throw Error("arc endpoint out of range");
    if (node_layer[arc.head] != node_layer[arc.tail] + 1)
      throw Error("arcs must connect consecutive layers");
    if (a + 1 < num_arcs()) {
      const Arc& b = arcs[a + 1];
      auto ka = std::make_tuple(node_layer[arc.tail], arc.tail, arc.value);
      auto kb = std::make_tuple(node_layer[b.tail], b.tail, b.value);
      if (!(ka < kb)) throw Error("arcs must be strictly sorted by (layer, tail, value)");
    }
    if (a < out_first[arc.tail] || a >= out_first[arc.tail + 1])
      throw Error("arc index table disagrees with arc tails");
  }
  std::vector<int> in_deg(n_nodes, 0), out_deg(n_nodes, 0);
  for (const Arc& a : arcs) {
    out_deg[a.tail]++;
    in_deg[a.head]++;
  }
  for (int u = 0; u < n_nodes; ++u) {
    if (u != terminal && out_deg[u] == 0) throw Error("dead-end node survived");
    if (u != root && in_deg[u] == 0) throw Error("unreachable node survived");
  }
}

namespace {

struct RawArc {
  int layer = 0;
  std::int32_t tail_local = 0;  // discovery index within the tail layer
  std::int32_t head_local = 0;  // discovery index within the head layer
  int value = 0;
  double length = 0.0;
};

}  // namespace

DecisionDiagram compile(const DpSpec& spec, int num_vars,
                        const CompileOptions& options) {
  if (num_vars < 1) throw Error("compile: need at least one variable");

  // Forward sweep: one node per distinct state per layer. The terminal layer
  // merges every successor state of layer n into a single node.
  std::vector<std::map<State, std::int32_t>> states(num_vars + 2);
  std::vector<std::vector<const State*>> by_discovery(num_vars + 2);
  states[1].emplace(spec.initial_state(), 0);
  by_discovery[1].push_back(&states[1].begin()->first);

  std::vector<RawArc> raw;
  bool terminal_seen = false;
  for (int layer = 1; layer <= num_vars; ++layer) {
    if (states[layer].empty())
      throw NoFeasiblePath("compile: no reachable state in layer " +
                           std::to_string(layer));
    // Iterate tails in discovery order; arc order is fixed afterwards by the
    // canonical (layer, tail, value) sort.
    for (std::int32_t tl = 0; tl < static_cast<std::int32_t>(by_discovery[layer].size()); ++tl) {
      const State& s = *by_discovery[layer][tl];
      for (int value : spec.domain(s, layer)) {
        std::optional<State> next = spec.transition(s, layer, value);
        if (!next) continue;
        const double len = spec.stage_cost(s, layer, value);
        std::int32_t hl;
        if (layer == num_vars) {
          hl = 0;
          terminal_seen = true;
        } else {
          auto [it, inserted] = states[layer + 1].emplace(
              std::move(*next), static_cast<std::int32_t>(states[layer + 1].size()));
          if (inserted) {
            by_discovery[layer + 1].push_back(&it->first);
            if (static_cast<std::int64_t>(states[layer + 1].size()) >
                options.layer_node_cap)
              throw LayerExplosion("compile: layer " + std::to_string(layer + 1) +
                                   " exceeded " +
                                   std::to_string(options.layer_node_cap) +
                                   " nodes");
          }
          hl = it->second;
        }
        raw.push_back({layer, tl, hl, value, len});
      }
    }
  }
  if (!terminal_seen)
    throw NoFeasiblePath("compile: terminal layer is unreachable");

  // Backward pass: keep only nodes that reach the terminal.
  std::vector<std::vector<char>> alive(num_vars + 2);
  for (int layer = 1; layer <= num_vars; ++layer)
    alive[layer].assign(states[layer].size(), 0);
  alive[num_vars + 1].assign(1, 1);
  for (auto it = raw.rbegin(); it != raw.rend(); ++it)
    if (alive[it->layer + 1][it->head_local]) alive[it->layer][it->tail_local] = 1;
  if (!alive[1][0]) throw NoFeasiblePath("compile: root cannot reach terminal");

  // Canonical numbering: layer-major, states in lexicographic order within a
  // layer (std::map iteration order), dead nodes dropped.
  DecisionDiagram out;
  out.num_vars = num_vars;
  std::vector<std::vector<std::int32_t>> final_id(num_vars + 2);
  for (int layer = 1; layer <= num_vars; ++layer) {
    final_id[layer].assign(states[layer].size(), -1);
    for (const auto& [state, disc] : states[layer]) {
      if (!alive[layer][disc]) continue;
      final_id[layer][disc] = static_cast<std::int32_t>(out.node_layer.size());
      out.node_layer.push_back(layer);
      out.node_state.push_back(state);
    }
  }
  final_id[num_vars + 1].assign(1, static_cast<std::int32_t>(out.node_layer.size()));
  out.node_layer.push_back(num_vars + 1);
  out.node_state.emplace_back();
  out.root = 0;
  out.terminal = static_cast<std::int32_t>(out.node_layer.size()) - 1;

  for (const RawArc& a : raw) {
    if (!alive[a.layer][a.tail_local] || !alive[a.layer + 1][a.head_local]) continue;
    out.arcs.push_back({final_id[a.layer][a.tail_local],
                        final_id[a.layer + 1][a.head_local],
                        a.value, a.length});
  }
  std::sort(out.arcs.begin(), out.arcs.end(), [&](const Arc& x, const Arc& y) {
    return std::make_tuple(out.node_layer[x.tail], x.tail, x.value) <
           std::make_tuple(out.node_layer[y.tail], y.tail, y.value);
  });
  out.rebuild_index();
  return out;
}

DecisionDiagram reduce(const DecisionDiagram& diagram) {
  const int n_nodes = diagram.num_nodes();
  std::vector<std::int32_t> rep(n_nodes);
  for (int u = 0; u < n_nodes; ++u) rep[u] = u;

  // Bottom-up: by the time layer j is scanned, every deeper node already
  // points at its final representative, so one pass suffices.
  using Signature = std::vector<std::tuple<int, std::int32_t, double>>;
  for (int layer = diagram.num_vars; layer >= 2; --layer) {
    std::map<Signature, std::int32_t> seen;
    for (std::int32_t u : diagram.layer_nodes(layer)) {
      Signature sig;
      for (std::int32_t a = diagram.out_first[u]; a < diagram.out_first[u + 1]; ++a)
        sig.emplace_back(diagram.arcs[a].value, rep[diagram.arcs[a].head],
                         diagram.arcs[a].length);
      auto [it, inserted] = seen.emplace(std::move(sig), u);
      if (!inserted) rep[u] = it->second;
    }
  }

  DecisionDiagram out;
  out.num_vars = diagram.num_vars;
  std::vector<std::int32_t> new_id(n_nodes, -1);
  for (int u = 0; u < n_nodes; ++u) {
    if (rep[u] != u) continue;
    new_id[u] = static_cast<std::int32_t>(out.node_layer.size());
    out.node_layer.push_back(diagram.node_layer[u]);
    out.node_state.push_back(diagram.node_state[u]);
  }
  out.root = new_id[diagram.root];
  out.terminal = new_id[diagram.terminal];
  for (const Arc& a : diagram.arcs) {
    if (rep[a.tail] != a.tail) continue;  // merged nodes drop their arcs
    out.arcs.push_back({new_id[a.tail], new_id[rep[a.head]], a.value, a.length});
  }
  std::sort(out.arcs.begin(), out.arcs.end(), [&](const Arc& x, const Arc& y) {
    return std::make_tuple(out.node_layer[x.tail], x.tail, x.value) <
           std::make_tuple(out.node_layer[y.tail], y.tail, y.value);
  });
  out.rebuild_index();
  return out;
}

PathSolution extreme_path(const DecisionDiagram& diagram, Sense sense) {
  const int n_nodes = diagram.num_nodes();
  const double worst = sense == Sense::Min ? std::numeric_limits<double>::infinity()
                                           : -std::numeric_limits<double>::infinity();
  std::vector<double> cost_to_go(n_nodes, worst);
  std::vector<std::int32_t> choice(n_nodes, -1);
  cost_to_go[diagram.terminal] = 0.0;
  for (std::int32_t u = static_cast<std::int32_t>(n_nodes) - 1; u >= 0; --u) {
    if (u == diagram.terminal) continue;
    for (std::int32_t a = diagram.out_first[u]; a < diagram.out_first[u + 1]; ++a) {
      const double cand = diagram.arcs[a].length + cost_to_go[diagram.arcs[a].head];
      const bool better = sense == Sense::Min ? cand < cost_to_go[u]
                                              : cand > cost_to_go[u];
      if (better) {
        cost_to_go[u] = cand;
        choice[u] = a;
      }
    }
    if (choice[u] < 0) throw Error("extreme_path: node without outgoing arcs");
  }
  PathSolution path;
  path.objective = cost_to_go[diagram.root];
  for (std::int32_t u = diagram.root; u != diagram.terminal;
       u = diagram.arcs[choice[u]].head) {
    path.arc_ids.push_back(choice[u]);
    path.values.push_back(diagram.arcs[choice[u]].value);
  }
  return path;
}

std::uint64_t count_paths(const DecisionDiagram& diagram, std::uint64_t cap) {
  std::vector<std::uint64_t> count(diagram.num_nodes(), 0);
  count[diagram.terminal] = 1;
  for (std::int32_t u = diagram.num_nodes() - 1; u >= 0; --u) {
    if (u == diagram.terminal) continue;
    std::uint64_t total = 0;
    for (std::int32_t a = diagram.out_first[u]; a < diagram.out_first[u + 1]; ++a) {
      const std::uint64_t h = count[diagram.arcs[a].head];
      total = (h > cap - std::min(total, cap)) ? cap + 1 : total + h;
      if (total > cap) {
        total = cap + 1;
        break;
      }
    }
    count[u] = total;
  }
  return count[diagram.root];
}

void for_each_path(const DecisionDiagram& diagram,
                   const std::function<void(const PathSolution&)>& visit,
                   std::uint64_t cap) {
  if (count_paths(diagram, cap) > cap)
    throw PathCapExceeded("for_each_path: more than " + std::to_string(cap) +
                          " paths");
  PathSolution path;
  path.arc_ids.reserve(diagram.num_vars);
  path.values.reserve(diagram.num_vars);
  // Depth-first, taking arcs in id order at every node: paths come out in
  // lexicographic arc-id order.
  std::vector<std::int32_t> cursor{diagram.out_first[diagram.root]};
  while (!cursor.empty()) {
    const int depth = static_cast<int>(cursor.size()) - 1;
    const std::int32_t u = depth == 0 ? diagram.root
                                      : diagram.arcs[path.arc_ids[depth - 1]].head;
    if (cursor.back() >= diagram.out_first[u + 1]) {
      cursor.pop_back();
      if (!path.arc_ids.empty()) {
        path.objective -= diagram.arcs[path.arc_ids.back()].length;
        path.arc_ids.pop_back();
        path.values.pop_back();
        if (!cursor.empty()) ++cursor.back();
      }
      continue;
    }
    const std::int32_t a = cursor.back();
    path.arc_ids.push_back(a);
    path.values.push_back(diagram.arcs[a].value);
    path.objective += diagram.arcs[a].length;
    const std::int32_t head = diagram.arcs[a].head;
    if (head == diagram.terminal) {
      visit(path);
      path.objective -= diagram.arcs[a].length;
      path.arc_ids.pop_back();
      path.values.pop_back();
      ++cursor.back();
    } else {
      cursor.push_back(diagram.out_first[head]);
    }
  }
}

std::vector<PathSolution> enumerate_paths(const DecisionDiagram& diagram,
                                          std::uint64_t cap) {
  std::vector<PathSolution> out;
  for_each_path(diagram, [&](const PathSolution& p) { out.push_back(p); }, cap);
  return out;
}

namespace {

std::string format_length(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

}  // namespace

std::string export_dot(const DecisionDiagram& diagram) {
  std::ostringstream os;
  os << "digraph dd {\n  rankdir=TB;\n";
  for (std::int32_t u = 0; u < diagram.num_nodes(); ++u) {
    std::string label = u == diagram.root      ? "r"
                        : u == diagram.terminal ? "t"
                                                : "u" + std::to_string(u);
    os << "  n" << u << " [label=\"" << label << "\"];\n";
  }
  for (const Arc& a : diagram.arcs) {
    os << "  n" << a.tail << " -> n" << a.head << " [label=\"" << a.value;
    if (a.length != 0.0) os << "/" << format_length(a.length);
    os << "\", style=" << (a.value == 0 ? "dashed" : "solid") << "];\n";
  }
  os << "}\n";
  return os.str();
}

DecisionDiagram filter_arcs(const DecisionDiagram& diagram,
                            const std::function<bool(std::int32_t)>& keep) {
  const int n_nodes = diagram.num_nodes();
  std::vector<char> arc_keep(diagram.num_arcs());
  for (std::int32_t a = 0; a < diagram.num_arcs(); ++a) arc_keep[a] = keep(a);

  // A node survives if it still lies on some root-terminal path.
  std::vector<char> fwd(n_nodes, 0), bwd(n_nodes, 0);
  fwd[diagram.root] = 1;
  for (std::int32_t a = 0; a < diagram.num_arcs(); ++a)
    if (arc_keep[a] && fwd[diagram.arcs[a].tail]) fwd[diagram.arcs[a].head] = 1;
  bwd[diagram.terminal] = 1;
  for (std::int32_t a = diagram.num_arcs() - 1; a >= 0; --a)
    if (arc_keep[a] && bwd[diagram.arcs[a].head]) bwd[diagram.arcs[a].tail] = 1;
  if (!(fwd[diagram.terminal] && bwd[diagram.root]))
    throw NoFeasiblePath("filter_arcs: no root-terminal path remains");

  DecisionDiagram out;
  out.num_vars = diagram.num_vars;
  std::vector<std::int32_t> new_id(n_nodes, -1);
  for (int u = 0; u < n_nodes; ++u) {
    if (!(fwd[u] && bwd[u])) continue;
    new_id[u] = static_cast<std::int32_t>(out.node_layer.size());
    out.node_layer.push_back(diagram.node_layer[u]);
    out.node_state.push_back(diagram.node_state[u]);
  }
  out.root = new_id[diagram.root];
  out.terminal = new_id[diagram.terminal];
  for (std::int32_t a = 0; a < diagram.num_arcs(); ++a) {
    const Arc& arc = diagram.arcs[a];
    if (!arc_keep[a] || new_id[arc.tail] < 0 || new_id[arc.head] < 0) continue;
    out.arcs.push_back({new_id[arc.tail], new_id[arc.head], arc.value, arc.length});
  }
  // Relative arc order is unchanged, so the canonical sort is preserved.
  out.rebuild_index();
  return out;
}

KnapsackSpec::KnapsackSpec(std::vector<std::vector<std::int64_t>> rows,
                           std::vector<std::int64_t> capacities,
                           std::vector<double> profits)
    : rows_(std::move(rows)), capacities_(std::move(capacities)),
      profits_(std::move(profits)) {
  if (rows_.size() != capacities_.size())
    throw Error("KnapsackSpec: one capacity per row required");
  for (const auto& row : rows_) {
    if (row.size() != profits_.size())
      throw Error("KnapsackSpec: row width must match the number of items");
    for (std::int64_t w : row)
      if (w < 0) throw Error("KnapsackSpec: row coefficients must be nonnegative");
  }
}

State KnapsackSpec::initial_state() const {
  return State(rows_.size(), 0);
}

std::vector<int> KnapsackSpec::domain(const State&, int) const {
  return {0, 1};
}

std::optional<State> KnapsackSpec::transition(const State& state, int layer,
                                              int value) const {
  if (value == 0) return state;
  State next = state;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    next[i] += rows_[i][layer - 1];
    if (next[i] > capacities_[i]) return std::nullopt;
  }
  return next;
}

double KnapsackSpec::stage_cost(const State&, int layer, int value) const {
  return value == 1 ? profits_[layer - 1] : 0.0;
}

}  // namespace ddopt::dd
