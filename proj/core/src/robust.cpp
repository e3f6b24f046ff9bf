#include "ddopt/robust.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <utility>

#include "ddopt/errors.hpp"
#include "ddopt/rng.hpp"

namespace ddopt {
namespace robust {

namespace {

constexpr std::int64_t kBigTime = std::numeric_limits<std::int64_t>::max() / 4;

std::string name_of(const char* prefix, std::int64_t a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%lld", prefix, static_cast<long long>(a));
  return buf;
}

std::string name_of2(const char* prefix, std::int64_t a, std::int64_t b) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%s%lld_%lld", prefix,
                static_cast<long long>(a), static_cast<long long>(b));
  return buf;
}

// Deadline converted to an integer cap on the *arrival* time at vertex v
// when the service there lasts `delay`: Arrival semantics cap the arrival
// itself, Completion semantics cap arrival + delay.
std::int64_t arrival_cap(const RtsptwInstance& inst, int v, std::int64_t delay) {
  double d = inst.deadline[v];
  if (!std::isfinite(d)) return kBigTime;
  std::int64_t cap = static_cast<std::int64_t>(std::floor(d));
  if (inst.semantics == RtsptwInstance::Semantics::Completion) cap -= delay;
  return std::min(cap, kBigTime);
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(what);
}

void validate_route(const RtsptwInstance& inst, const std::vector<int>& route) {
  require(static_cast<int>(route.size()) == inst.n + 1,
          "route must visit every vertex exactly once");
  require(route.front() == 0 && route.back() == inst.n,
          "route must start at vertex 0 and end at the end depot");
  std::vector<char> seen(inst.n + 1, 0);
  for (int v : route) {
    require(v >= 0 && v <= inst.n, "route vertex out of range");
    require(!seen[v], "route repeats a vertex");
    seen[v] = 1;
  }
  for (std::size_t k = 1; k < route.size(); ++k) {
    require(inst.travel[route[k - 1]][route[k]] >= 0,
            "route uses a missing edge");
  }
}

}  // namespace

void RtsptwInstance::validate() const {
  require(n >= 2, "instance needs at least one customer between the depots");
  auto square = [&](const std::vector<std::vector<std::int64_t>>& m) {
    if (static_cast<int>(m.size()) != n + 1) return false;
    for (const auto& row : m)
      if (static_cast<int>(row.size()) != n + 1) return false;
    return true;
  };
  require(square(cost) && square(travel),
          "cost and travel must be (n+1) x (n+1)");
  require(static_cast<int>(release.size()) == n + 1 &&
              static_cast<int>(deadline.size()) == n + 1 &&
              static_cast<int>(delay_lb.size()) == n + 1 &&
              static_cast<int>(delay_ub.size()) == n + 1,
          "per-vertex arrays must have n+1 entries");
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      require(cost[i][j] >= -1 && travel[i][j] >= -1,
              "edge data must be nonnegative or -1 for a missing edge");
      require((cost[i][j] < 0) == (travel[i][j] < 0),
              "cost and travel must agree on which edges exist");
    }
  }
  require(release[0] == 0, "the start depot releases at time 0");
  require(!std::isfinite(deadline[0]) || deadline[0] >= 0,
          "start-depot deadline must be nonnegative");
  std::int64_t lb_sum = 0;
  for (int j = 0; j <= n; ++j) {
    require(release[j] >= 0, "release times must be nonnegative");
    require(std::isnan(deadline[j]) == false, "deadline must not be NaN");
    require(!(std::isfinite(deadline[j]) && deadline[j] < release[j]),
            "every window needs release <= deadline");
    require(delay_lb[j] >= 0 && delay_ub[j] >= delay_lb[j],
            "delay bounds need 0 <= lb <= ub");
    if (j == 0 || j == n) {
      require(delay_lb[j] == 0 && delay_ub[j] == 0,
              "depot service times are fixed to zero");
    }
    lb_sum += delay_lb[j];
  }
  require(lb_sum <= budget,
          "budget must admit at least the all-lower-bounds scenario");
}

Scenario nominal_scenario(const RtsptwInstance& inst) {
  Scenario s;
  s.delta = inst.delay_lb;
  return s;
}

RouteCheck check_route(const RtsptwInstance& inst, const std::vector<int>& route,
                       const Scenario& scenario) {
  inst.validate();
  validate_route(inst, route);
  require(static_cast<int>(scenario.delta.size()) == inst.n + 1,
          "scenario must assign a delay to every vertex");

  RouteCheck out;
  int m = static_cast<int>(route.size());
  out.arrival.assign(m, 0);
  out.completion.assign(m, 0);
  out.feasible = true;

  out.arrival[0] = 0;
  out.completion[0] = scenario.delta[0];
  for (int k = 1; k < m; ++k) {
    int prev = route[k - 1];
    int v = route[k];
    std::int64_t arr =
        std::max(inst.release[v], out.completion[k - 1] + inst.travel[prev][v]);
    out.arrival[k] = arr;
    out.completion[k] = arr + scenario.delta[v];
    std::int64_t checked = inst.semantics == RtsptwInstance::Semantics::Arrival
                               ? out.arrival[k]
                               : out.completion[k];
    if (out.feasible && std::isfinite(inst.deadline[v]) &&
        static_cast<double>(checked) > inst.deadline[v]) {
      out.feasible = false;
      out.violation_pos = k;
    }
  }
  return out;
}

SeparationResult separate(const RtsptwInstance& inst,
                          const std::vector<int>& route) {
  inst.validate();
  validate_route(inst, route);

  int m = inst.n + 1;  // route positions 0..n
  // Work with shifted delays z = delta - lb, so the budget row becomes
  // sum z <= spare; spending more than the total shifted capacity is
  // pointless, which caps the table width.
  std::int64_t spare = inst.budget;
  std::int64_t total_cap = 0;
  std::vector<std::int64_t> cap(m, 0);
  for (int k = 0; k < m; ++k) {
    int v = route[k];
    spare -= inst.delay_lb[v];
    cap[k] = inst.delay_ub[v] - inst.delay_lb[v];
    total_cap += cap[k];
  }
  std::int64_t width = std::min(spare, total_cap);
  if (width < 0) throw Error("budget set is empty");
  int b = static_cast<int>(width);

  // best[k][beta]: maximum completion time at position k when at most beta
  // shifted units were spent at positions 1..k.
  std::vector<std::vector<std::int64_t>> best(
      m, std::vector<std::int64_t>(b + 1, 0));
  SeparationResult out;
  out.worst_arrival.assign(m, 0);
  out.worst_completion.assign(m, 0);
  out.worst_completion[0] = 0;

  for (int k = 1; k < m; ++k) {
    int prev = route[k - 1];
    int v = route[k];
    std::int64_t t = inst.travel[prev][v];
    for (int beta = 0; beta <= b; ++beta) {
      std::int64_t best_here = 0;
      std::int64_t zmax = std::min<std::int64_t>(cap[k], beta);
      for (std::int64_t z = 0; z <= zmax; ++z) {
        std::int64_t arr =
            std::max(inst.release[v], best[k - 1][beta - z] + t);
        best_here = std::max(best_here, arr + inst.delay_lb[v] + z);
      }
      best[k][beta] = best_here;
    }
    out.worst_arrival[k] = std::max(inst.release[v], best[k - 1][b] + t);
    out.worst_completion[k] = best[k][b];
  }

  // First position, in route order, whose worst case breaks the deadline.
  bool arrival_mode = inst.semantics == RtsptwInstance::Semantics::Arrival;
  for (int k = 1; k < m; ++k) {
    int v = route[k];
    if (!std::isfinite(inst.deadline[v])) continue;
    std::int64_t worst =
        arrival_mode ? out.worst_arrival[k] : out.worst_completion[k];
    if (static_cast<double>(worst) <= inst.deadline[v]) continue;

    out.violated = true;
    out.position = k;
    out.vertex = v;

    // Reconstruct a witness: walk the table backwards choosing, at each
    // position, a shifted spend consistent with the recorded optimum.
    // Arrival mode maximizes the completion of the prefix ending one
    // position earlier; completion mode includes the violated position.
    out.witness.delta = inst.delay_lb;
    int start = arrival_mode ? k - 1 : k;
    std::int64_t beta = b;
    for (int p = start; p >= 1; --p) {
      int pv = route[p];
      std::int64_t tp = inst.travel[route[p - 1]][pv];
      std::int64_t zmax = std::min<std::int64_t>(cap[p], beta);
      for (std::int64_t z = zmax; z >= 0; --z) {
        std::int64_t arr =
            std::max(inst.release[pv], best[p - 1][beta - z] + tp);
        if (arr + inst.delay_lb[pv] + z == best[p][beta]) {
          out.witness.delta[pv] = inst.delay_lb[pv] + z;
          beta -= z;
          break;
        }
      }
    }

    RouteCheck replay = check_route(inst, route, out.witness);
    require(!replay.feasible && replay.violation_pos == k,
            "separation witness failed to reproduce the violation");
    return out;
  }
  return out;
}

namespace {

// Route model for the diagram compiler: state = (visited-customer bitmask,
// last vertex); layer j chooses the vertex at route position j, the final
// layer enters the end depot.
class TspSpec : public dd::DpSpec {
 public:
  explicit TspSpec(const RtsptwInstance& inst) : inst_(inst) {}

  dd::State initial_state() const override { return {0, 0}; }

  std::vector<int> domain(const dd::State& state, int layer) const override {
    int last = static_cast<int>(state[1]);
    std::vector<int> values;
    if (layer == inst_.n) {
      if (inst_.travel[last][inst_.n] >= 0) values.push_back(inst_.n);
      return values;
    }
    std::int64_t mask = state[0];
    for (int w = 1; w <= inst_.n - 1; ++w) {
      if (mask & (std::int64_t{1} << (w - 1))) continue;
      if (inst_.travel[last][w] < 0) continue;
      values.push_back(w);
    }
    return values;
  }

  std::optional<dd::State> transition(const dd::State& state, int layer,
                                      int value) const override {
    std::int64_t mask = state[0];
    if (layer < inst_.n) mask |= std::int64_t{1} << (value - 1);
    return dd::State{mask, value};
  }

  double stage_cost(const dd::State& state, int /*layer*/,
                    int value) const override {
    return static_cast<double>(inst_.cost[state[1]][value]);
  }

 private:
  const RtsptwInstance& inst_;
};

int last_vertex_of(const dd::DecisionDiagram& diagram, std::int32_t node) {
  if (node == diagram.root) return 0;
  const dd::State& s = diagram.node_state[node];
  require(s.size() == 2, "route diagram node lost its (visited, last) state");
  return static_cast<int>(s[1]);
}

// Earliest completion time per node when every delay sits at its lower
// bound; the best case any scenario can achieve.
std::vector<std::int64_t> earliest_completion(const RtsptwInstance& inst,
                                              const dd::DecisionDiagram& dd) {
  std::vector<std::int64_t> early(dd.num_nodes(), kBigTime);
  early[dd.root] = 0;
  for (std::int32_t a = 0; a < dd.num_arcs(); ++a) {
    const dd::Arc& arc = dd.arcs[a];
    if (early[arc.tail] >= kBigTime) continue;
    int last = last_vertex_of(dd, arc.tail);
    int w = arc.value;
    std::int64_t arr =
        std::max(inst.release[w], early[arc.tail] + inst.travel[last][w]);
    early[arc.head] =
        std::min(early[arc.head], arr + inst.delay_lb[w]);
  }
  return early;
}

}  // namespace

dd::DecisionDiagram build_tsp_dd(const RtsptwInstance& inst,
                                 const TspDdOptions& options) {
  inst.validate();
  require(inst.n <= 16, "route diagrams are capped at 16 vertices");
  TspSpec spec(inst);
  dd::DecisionDiagram diagram = dd::compile(spec, inst.n, options.compile);
  if (!options.prune_nominal) return diagram;

  // Drop arcs that violate a deadline even in the best case (all delays at
  // their lower bounds). Arc order is topological, so a single forward pass
  // gives exact earliest completions.
  std::vector<std::int64_t> early = earliest_completion(inst, diagram);
  auto keep = [&](std::int32_t a) {
    const dd::Arc& arc = diagram.arcs[a];
    if (early[arc.tail] >= kBigTime) return false;
    int last = last_vertex_of(diagram, arc.tail);
    int w = arc.value;
    std::int64_t arr =
        std::max(inst.release[w], early[arc.tail] + inst.travel[last][w]);
    return arr <= arrival_cap(inst, w, inst.delay_lb[w]);
  };
  return dd::filter_arcs(diagram, keep);
}

std::vector<int> route_of_path(const dd::PathSolution& path) {
  std::vector<int> route;
  route.reserve(path.values.size() + 1);
  route.push_back(0);
  for (int v : path.values) route.push_back(v);
  return route;
}

namespace {

struct PulseOutcome {
  std::vector<int> route;
  double objective = 0.0;
  std::uint64_t labels = 0;
};

// Cheapest route whose arrival profile stays feasible under every scenario
// in `active`, by depth-first search over the diagram with one completion
// time per scenario carried along each prefix.
PulseOutcome robust_pulse(const RtsptwInstance& inst,
                          const dd::DecisionDiagram& dd,
                          const std::vector<Scenario>& active,
                          const RobustSolveOptions& options) {
  PulseOutcome out;
  if (active.empty()) {
    dd::PathSolution best = dd::extreme_path(dd, Sense::Min);
    out.route = route_of_path(best);
    out.objective = best.objective;
    out.labels = 1;
    return out;
  }

  int num_nodes = dd.num_nodes();
  int s = static_cast<int>(active.size());

  // Backward tables: exact minimum cost to the terminal, and the latest
  // completion time at each node that still admits a feasible extension
  // when all remaining delays sit at their lower bounds.
  std::vector<double> to_go(num_nodes,
                            std::numeric_limits<double>::infinity());
  std::vector<std::int64_t> latest(num_nodes, -kBigTime);
  to_go[dd.terminal] = 0.0;
  latest[dd.terminal] = kBigTime;
  for (std::int32_t u = num_nodes - 1; u >= 0; --u) {
    for (std::int32_t a = dd.out_first[u]; a < dd.out_first[u + 1]; ++a) {
      const dd::Arc& arc = dd.arcs[a];
      to_go[u] = std::min(to_go[u], arc.length + to_go[arc.head]);
      if (latest[arc.head] <= -kBigTime) continue;
      int last = last_vertex_of(dd, u);
      int w = arc.value;
      std::int64_t cap = std::min(arrival_cap(inst, w, inst.delay_lb[w]),
                                  latest[arc.head] - inst.delay_lb[w]);
      if (inst.release[w] > cap) continue;  // even the earliest arrival fails
      latest[u] = std::max(latest[u],
                           std::min(kBigTime, cap - inst.travel[last][w]));
    }
  }
  if (!std::isfinite(to_go[dd.root])) {
    throw NoFeasiblePath("route diagram lost its terminal");
  }

  // Fixed-size dominance store per node: (cost, completion vector) of
  // recently expanded prefixes; a new prefix that is componentwise no
  // better than a stored one cannot lead anywhere better.
  int slots = std::max(0, options.dominance_store);
  std::vector<double> store_cost(
      static_cast<std::size_t>(num_nodes) * slots,
      std::numeric_limits<double>::infinity());
  std::vector<std::int64_t> store_e;
  std::vector<int> store_next(num_nodes, 0);
  if (slots > 0) {
    store_e.assign(static_cast<std::size_t>(num_nodes) * slots * s, 0);
  }

  struct Frame {
    std::int32_t node = 0;
    std::int32_t cursor = 0;   // next arc id to try
    double cost = 0.0;
    std::vector<std::int64_t> e;  // completion per scenario
  };

  std::vector<Frame> stack;
  std::vector<std::int32_t> arc_trail;
  stack.push_back(Frame{dd.root, dd.out_first[dd.root], 0.0,
                        std::vector<std::int64_t>(s, 0)});

  double inc_cost = std::numeric_limits<double>::infinity();
  std::vector<std::int32_t> inc_arcs;
  std::vector<std::int64_t> child_e(s, 0);

  while (!stack.empty()) {
    Frame& top = stack.back();
    if (top.cursor >= dd.out_first[top.node + 1]) {
      stack.pop_back();
      if (!arc_trail.empty()) arc_trail.pop_back();
      continue;
    }
    std::int32_t a = top.cursor++;
    const dd::Arc& arc = dd.arcs[a];
    ++out.labels;
    if (options.deadline && (out.labels & 1023u) == 0 &&
        std::chrono::steady_clock::now() > *options.deadline) {
      throw TimeLimitExceeded("diagram search hit its time limit");
    }

    double cost = top.cost + arc.length;
    if (cost + to_go[arc.head] >= inc_cost) continue;

    int last = last_vertex_of(dd, top.node);
    int w = arc.value;
    std::int64_t t = inst.travel[last][w];
    bool ok = true;
    for (int i = 0; i < s; ++i) {
      std::int64_t arr = std::max(inst.release[w], top.e[i] + t);
      std::int64_t delay = active[i].delta[w];
      if (arr > arrival_cap(inst, w, delay)) {
        ok = false;
        break;
      }
      std::int64_t e = arr + delay;
      if (e > latest[arc.head]) {
        ok = false;
        break;
      }
      child_e[i] = e;
    }
    if (!ok) continue;

    if (arc.head == dd.terminal) {
      if (cost < inc_cost) {
        inc_cost = cost;
        inc_arcs = arc_trail;
        inc_arcs.push_back(a);
      }
      continue;
    }

    if (slots > 0) {
      bool dominated = false;
      std::size_t base = static_cast<std::size_t>(arc.head) * slots;
      for (int k = 0; k < slots && !dominated; ++k) {
        if (store_cost[base + k] > cost) continue;
        const std::int64_t* se = &store_e[(base + k) * s];
        bool all = true;
        for (int i = 0; i < s; ++i) {
          if (se[i] > child_e[i]) {
            all = false;
            break;
          }
        }
        dominated = all;
      }
      if (dominated) continue;
      int slot = store_next[arc.head];
      store_next[arc.head] = (slot + 1) % slots;
      store_cost[base + slot] = cost;
      std::copy(child_e.begin(), child_e.end(),
                &store_e[(base + slot) * s]);
    }

    arc_trail.push_back(a);
    stack.push_back(Frame{arc.head, dd.out_first[arc.head], cost, child_e});
  }

  if (!std::isfinite(inc_cost)) {
    throw NoFeasiblePath("no route satisfies every active scenario");
  }
  out.objective = inc_cost;
  out.route.push_back(0);
  for (std::int32_t a : inc_arcs) out.route.push_back(dd.arcs[a].value);
  return out;
}

void append_scenario(std::vector<Scenario>& scenarios, const Scenario& witness) {
  for (const Scenario& s : scenarios) {
    if (s == witness) {
      throw Error("separation returned an already-enforced scenario");
    }
  }
  scenarios.push_back(witness);
}

}  // namespace

RobustResult solve_state_augmenting(const RtsptwInstance& inst,
                                    const RobustSolveOptions& options) {
  inst.validate();
  dd::DecisionDiagram diagram = build_tsp_dd(inst, options.dd);

  RobustResult result;
  for (int iteration = 1;; ++iteration) {
    auto tic = std::chrono::steady_clock::now();
    PulseOutcome round =
        robust_pulse(inst, diagram, result.scenarios, options);
    SeparationResult sep = separate(inst, round.route);
    auto toc = std::chrono::steady_clock::now();

    IterationRecord rec;
    rec.iteration = iteration;
    rec.objective = round.objective;
    rec.num_scenarios = static_cast<int>(result.scenarios.size());
    rec.labels = round.labels;
    rec.seconds = std::chrono::duration<double>(toc - tic).count();
    result.log.push_back(rec);

    if (!sep.violated) {
      result.route = round.route;
      result.objective = round.objective;
      return result;
    }
    append_scenario(result.scenarios, sep.witness);
    if (options.deadline &&
        std::chrono::steady_clock::now() > *options.deadline) {
      throw TimeLimitExceeded("scenario expansion hit its time limit");
    }
  }
}

RobustResult brute_force_robust(const RtsptwInstance& inst) {
  inst.validate();
  if (inst.n > 10) {
    throw CapExceeded("route enumeration is capped at 10 vertices");
  }
  TspDdOptions plain;
  plain.prune_nominal = false;
  dd::DecisionDiagram diagram = build_tsp_dd(inst, plain);

  RobustResult result;
  bool found = false;
  dd::for_each_path(diagram, [&](const dd::PathSolution& path) {
    std::vector<int> route = route_of_path(path);
    SeparationResult sep = separate(inst, route);
    if (sep.violated) return;
    if (!found || path.objective < result.objective) {
      found = true;
      result.route = route;
      result.objective = path.objective;
    }
  });
  if (!found) throw NoFeasiblePath("no robust-feasible route exists");
  return result;
}

IpBaselineModel build_ip_baseline(const RtsptwInstance& inst,
                                  const std::vector<Scenario>& scenarios) {
  inst.validate();
  require(std::isfinite(inst.deadline[inst.n]),
          "the time-propagation rows need a finite end-depot deadline");
  double horizon = inst.deadline[inst.n];

  IpBaselineModel out;
  out.model.name = "route";
  out.model.sense = Sense::Min;

  for (int i = 0; i < inst.n; ++i) {
    for (int j = 1; j <= inst.n; ++j) {
      if (i == j || inst.travel[i][j] < 0) continue;
      std::int32_t var = out.model.add_binary(
          name_of2("x", i, j), static_cast<double>(inst.cost[i][j]));
      out.edges.emplace_back(i, j);
      out.edge_var.push_back(var);
    }
  }

  out.w_var.assign(scenarios.size(), std::vector<std::int32_t>(inst.n + 1, -1));
  for (std::size_t sidx = 0; sidx < scenarios.size(); ++sidx) {
    const Scenario& sc = scenarios[sidx];
    require(static_cast<int>(sc.delta.size()) == inst.n + 1,
            "scenario must assign a delay to every vertex");
    for (int j = 0; j <= inst.n; ++j) {
      double lb = static_cast<double>(inst.release[j]);
      double ub = inst.deadline[j];
      if (inst.semantics == RtsptwInstance::Semantics::Completion &&
          std::isfinite(ub)) {
        ub -= static_cast<double>(sc.delta[j]);
      }
      if (j == 0) {
        lb = 0.0;
        ub = 0.0;
      }
      out.w_var[sidx][j] = out.model.add_var(
          name_of2("w", j, static_cast<std::int64_t>(sidx)), lb, ub, 0.0);
    }
  }

  // Exactly one departure per vertex except the end depot...
  for (int i = 0; i < inst.n; ++i) {
    std::vector<std::pair<std::int32_t, double>> coeffs;
    for (std::size_t k = 0; k < out.edges.size(); ++k) {
      if (out.edges[k].first == i) coeffs.emplace_back(out.edge_var[k], 1.0);
    }
    out.model.add_row(name_of("out", i), lp::RowSense::Eq, 1.0, coeffs);
  }
  // ...and one entry per vertex except the start depot.
  for (int j = 1; j <= inst.n; ++j) {
    std::vector<std::pair<std::int32_t, double>> coeffs;
    for (std::size_t k = 0; k < out.edges.size(); ++k) {
      if (out.edges[k].second == j) coeffs.emplace_back(out.edge_var[k], 1.0);
    }
    out.model.add_row(name_of("in", j), lp::RowSense::Eq, 1.0, coeffs);
  }

  // Time propagation per scenario and edge:
  //   w_j >= w_i + (delta_i + t_ij) x_ij - M (1 - x_ij).
  for (std::size_t sidx = 0; sidx < scenarios.size(); ++sidx) {
    const Scenario& sc = scenarios[sidx];
    for (std::size_t k = 0; k < out.edges.size(); ++k) {
      int i = out.edges[k].first;
      int j = out.edges[k].second;
      double step = static_cast<double>(sc.delta[i] + inst.travel[i][j]);
      std::vector<std::pair<std::int32_t, double>> coeffs;
      coeffs.emplace_back(out.w_var[sidx][j], 1.0);
      coeffs.emplace_back(out.w_var[sidx][i], -1.0);
      coeffs.emplace_back(out.edge_var[k], -(step + horizon));
      out.model.add_row(
          name_of2(("t" + std::to_string(sidx) + "_").c_str(), i, j),
          lp::RowSense::Ge, -horizon, coeffs);
    }
  }
  return out;
}

namespace {

std::vector<int> route_from_edges(const RtsptwInstance& inst,
                                  const IpBaselineModel& ip,
                                  const std::vector<double>& x) {
  std::vector<int> succ(inst.n + 1, -1);
  for (std::size_t k = 0; k < ip.edges.size(); ++k) {
    if (x[ip.edge_var[k]] > 0.5) {
      require(succ[ip.edges[k].first] < 0,
              "integer route model chose two departures from one vertex");
      succ[ip.edges[k].first] = ip.edges[k].second;
    }
  }
  std::vector<int> route;
  int v = 0;
  route.push_back(v);
  while (v != inst.n) {
    v = succ[v];
    require(v >= 0, "integer route model left a vertex without departure");
    route.push_back(v);
    require(static_cast<int>(route.size()) <= inst.n + 1,
            "integer route model produced a disconnected subtour");
  }
  require(static_cast<int>(route.size()) == inst.n + 1,
          "integer route model produced a disconnected subtour");
  return route;
}

}  // namespace

RobustResult solve_ip_iterative(const RtsptwInstance& inst,
                                const RobustSolveOptions& options) {
  inst.validate();
  RobustResult result;
  // The degree rows alone admit disconnected subtours; the all-lower-bounds
  // scenario is always valid and its propagation rows (positive travel
  // times) exclude every cycle that avoids the depots.
  result.scenarios.push_back(nominal_scenario(inst));

  for (int iteration = 1;; ++iteration) {
    auto tic = std::chrono::steady_clock::now();
    IpBaselineModel ip = build_ip_baseline(inst, result.scenarios);
    lp::SolveOptions milp = options.milp;
    if (options.deadline) milp.deadline = options.deadline;
    lp::LpSolution sol = lp::solve_milp(ip.model, milp);
    if (sol.status == lp::SolveStatus::Infeasible) {
      throw NoFeasiblePath("no robust-feasible route exists");
    }
    if (sol.status == lp::SolveStatus::TimeLimit) {
      throw TimeLimitExceeded("integer route model hit its time limit");
    }
    if (sol.status != lp::SolveStatus::Optimal) {
      throw CapExceeded("integer route model hit an iteration cap");
    }
    std::vector<int> route = route_from_edges(inst, ip, sol.x);
    SeparationResult sep = separate(inst, route);
    auto toc = std::chrono::steady_clock::now();

    IterationRecord rec;
    rec.iteration = iteration;
    rec.objective = sol.objective;
    rec.num_scenarios = static_cast<int>(result.scenarios.size());
    rec.labels = static_cast<std::uint64_t>(sol.iterations);
    rec.seconds = std::chrono::duration<double>(toc - tic).count();
    result.log.push_back(rec);

    if (!sep.violated) {
      result.route = route;
      result.objective = sol.objective;
      return result;
    }
    append_scenario(result.scenarios, sep.witness);
  }
}

SepMilpModel build_sep_milp(const RtsptwInstance& inst,
                            const std::vector<int>& route, double eps) {
  inst.validate();
  validate_route(inst, route);

  int m = inst.n + 1;
  SepMilpModel out;
  out.model.name = "separation";
  out.model.sense = Sense::Max;
  out.w_var.assign(m, -1);
  out.v_var.assign(m, -1);
  out.delta_bits.assign(m, {});

  // Upper bound on the arrival at each position: every delay at its upper
  // bound. Needed as big-M slack for the arrival equalities.
  std::vector<std::int64_t> hi(m, 0);
  std::vector<std::int64_t> lo(m, 0);
  for (int k = 1; k < m; ++k) {
    int prev = route[k - 1];
    int v = route[k];
    hi[k] = std::max(inst.release[v],
                     hi[k - 1] + inst.delay_ub[prev] + inst.travel[prev][v]);
    lo[k] = std::max(inst.release[v],
                     lo[k - 1] + inst.delay_lb[prev] + inst.travel[prev][v]);
  }

  out.w_var[0] = out.model.add_var("w0", 0.0, 0.0, 0.0);
  for (int k = 1; k < m; ++k) {
    int v = route[k];
    out.w_var[k] = out.model.add_var(
        name_of("w", k), static_cast<double>(inst.release[v]),
        static_cast<double>(hi[k]), 0.0);
  }
  for (int k = 1; k < m; ++k) {
    int v = route[k];
    std::int64_t bits = inst.delay_ub[v] - inst.delay_lb[v];
    for (std::int64_t r = 0; r < bits; ++r) {
      out.delta_bits[k].push_back(
          out.model.add_binary(name_of2("z", k, r), 0.0));
    }
  }
  for (int k = 1; k < m; ++k) {
    int v = route[k];
    std::int32_t var = out.model.add_binary(name_of("v", k), 1.0);
    out.v_var[k] = var;
    if (!std::isfinite(inst.deadline[v])) {
      out.model.vars[var].ub = 0.0;  // this deadline can never break
    }
  }
  // Indicator per position: on when the release time binds the arrival.
  std::vector<std::int32_t> pick(m, -1);
  for (int k = 1; k < m; ++k) {
    pick[k] = out.model.add_binary(name_of("p", k), 0.0);
  }

  auto delta_terms = [&](int k, double scale,
                         std::vector<std::pair<std::int32_t, double>>& coeffs) {
    for (std::int32_t bit : out.delta_bits[k]) coeffs.emplace_back(bit, scale);
  };

  for (int k = 1; k < m; ++k) {
    int prev = route[k - 1];
    int v = route[k];
    double t = static_cast<double>(inst.travel[prev][v]);
    double release = static_cast<double>(inst.release[v]);
    double step_lb = static_cast<double>(inst.delay_lb[prev]);

    // w_k >= w_{k-1} + delta_{k-1} + t  (lower half of the max)
    {
      std::vector<std::pair<std::int32_t, double>> coeffs;
      coeffs.emplace_back(out.w_var[k], 1.0);
      coeffs.emplace_back(out.w_var[k - 1], -1.0);
      if (k - 1 >= 1) delta_terms(k - 1, -1.0, coeffs);
      out.model.add_row(name_of("prop", k), lp::RowSense::Ge, t + step_lb,
                        coeffs);
    }
    // pick_k = 1: the release time binds, w_k <= r_v.
    {
      std::vector<std::pair<std::int32_t, double>> coeffs;
      coeffs.emplace_back(out.w_var[k], 1.0);
      coeffs.emplace_back(pick[k], static_cast<double>(hi[k]) - release);
      out.model.add_row(name_of("relcap", k), lp::RowSense::Le,
                        static_cast<double>(hi[k]), coeffs);
    }
    // pick_k = 0: the travel chain binds, w_k <= w_{k-1} + delta + t.
    {
      double slack =
          static_cast<double>(hi[k]) - (static_cast<double>(lo[k - 1]) + t);
      std::vector<std::pair<std::int32_t, double>> coeffs;
      coeffs.emplace_back(out.w_var[k], 1.0);
      coeffs.emplace_back(out.w_var[k - 1], -1.0);
      if (k - 1 >= 1) delta_terms(k - 1, -1.0, coeffs);
      coeffs.emplace_back(pick[k], -slack);
      out.model.add_row(name_of("chaincap", k), lp::RowSense::Le, t + step_lb,
                        coeffs);
    }
    // Violation flag: v_k = 1 forces the checked time past the deadline.
    // Arrival mode checks w_k itself; completion mode checks
    // w_k + delta_k = w_k + lb_k + (unary bits of k).
    if (std::isfinite(inst.deadline[v])) {
      std::vector<std::pair<std::int32_t, double>> coeffs;
      coeffs.emplace_back(out.w_var[k], 1.0);
      double threshold = inst.deadline[v] + eps;
      if (inst.semantics == RtsptwInstance::Semantics::Completion) {
        delta_terms(k, 1.0, coeffs);
        threshold -= static_cast<double>(inst.delay_lb[v]);
      }
      coeffs.emplace_back(out.v_var[k], -threshold);
      out.model.add_row(name_of("viol", k), lp::RowSense::Ge, 0.0, coeffs);
    }
  }

  // Budget row over the unary delay bits.
  {
    std::int64_t spare = inst.budget;
    for (int k = 0; k < m; ++k) spare -= inst.delay_lb[route[k]];
    std::vector<std::pair<std::int32_t, double>> coeffs;
    for (int k = 1; k < m; ++k) delta_terms(k, 1.0, coeffs);
    if (!coeffs.empty()) {
      out.model.add_row("budget", lp::RowSense::Le,
                        static_cast<double>(spare), coeffs);
    }
  }
  return out;
}

Scenario scenario_from_sep_solution(const RtsptwInstance& inst,
                                    const std::vector<int>& route,
                                    const SepMilpModel& sep,
                                    const std::vector<double>& x) {
  Scenario out;
  out.delta = inst.delay_lb;
  for (std::size_t k = 1; k < route.size(); ++k) {
    std::int64_t d = inst.delay_lb[route[k]];
    for (std::int32_t bit : sep.delta_bits[k]) {
      if (x[bit] > 0.5) ++d;
    }
    out.delta[route[k]] = d;
  }
  return out;
}

csp::SideConstraints stack_scenarios(
    const dd::DecisionDiagram& diagram,
    const std::vector<RobustConstraintView>& views) {
  csp::SideConstraints side;
  for (const RobustConstraintView& view : views) {
    require(view.coeff.size() == view.rhs.size(),
            "each scenario row needs a right-hand side");
    for (std::size_t i = 0; i < view.coeff.size(); ++i) {
      require(static_cast<int>(view.coeff[i].size()) == diagram.num_vars,
              "scenario rows need one coefficient per layer");
      side.add_row(view.rhs[i]);
      int row = side.num_rows - 1;
      for (std::int32_t a = 0; a < diagram.num_arcs(); ++a) {
        double g = diagram.arcs[a].value *
                   view.coeff[i][diagram.arc_layer(a) - 1];
        if (g != 0.0) side.add_entry(row, a, g);
      }
    }
  }
  side.validate(diagram.num_arcs());
  return side;
}

RtsptwInstance generate_rtsptw(int n, std::int64_t width, std::int64_t budget,
                               std::uint64_t seed) {
  if (n < 2) throw Error("instance needs at least one customer");
  if (width < 0 || budget < 0) {
    throw Error("window width and budget must be nonnegative");
  }

  Rng rng(seed);
  RtsptwInstance inst;
  inst.n = n;
  inst.seed = seed;
  inst.window_width = width;
  inst.budget = budget;

  // Distinct integer points on a 100 x 100 grid; both depots share one
  // location. Distinctness keeps every travel time >= 1, which the
  // propagation rows of the integer model rely on to exclude subtours.
  std::map<std::pair<std::int64_t, std::int64_t>, int> used;
  inst.points.resize(n + 1);
  for (int j = 0; j < n; ++j) {
    for (;;) {
      std::int64_t px = rng.uniform_int(0, 100);
      std::int64_t py = rng.uniform_int(0, 100);
      if (used.emplace(std::make_pair(px, py), j).second) {
        inst.points[j] = {px, py};
        break;
      }
    }
  }
  inst.points[n] = inst.points[0];

  inst.cost.assign(n + 1, std::vector<std::int64_t>(n + 1, -1));
  inst.travel.assign(n + 1, std::vector<std::int64_t>(n + 1, -1));
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      if (i == j) continue;
      double dx = static_cast<double>(inst.points[i][0] - inst.points[j][0]);
      double dy = static_cast<double>(inst.points[i][1] - inst.points[j][1]);
      std::int64_t t = std::llround(std::sqrt(dx * dx + dy * dy));
      inst.travel[i][j] = t;
      inst.cost[i][j] = t;
    }
  }

  // Random reference tour; windows of the given width are centered on its
  // cumulative travel times, so the tour itself is feasible when every
  // delay is at its lower bound.
  std::vector<int> tour(n - 1);
  std::iota(tour.begin(), tour.end(), 1);
  for (int k = n - 2; k > 0; --k) {
    std::int64_t pick = rng.uniform_int(0, k);
    std::swap(tour[k], tour[static_cast<int>(pick)]);
  }

  inst.release.assign(n + 1, 0);
  inst.deadline.assign(n + 1, std::numeric_limits<double>::infinity());
  inst.delay_lb.assign(n + 1, 0);
  inst.delay_ub.assign(n + 1, 0);
  for (int j = 1; j <= n - 1; ++j) inst.delay_ub[j] = 2;

  std::int64_t at = 0;
  int prev = 0;
  for (int k = 0; k < n - 1; ++k) {
    int v = tour[k];
    at += inst.travel[prev][v];
    inst.release[v] = std::max<std::int64_t>(0, at - width / 2);
    inst.deadline[v] = static_cast<double>(at + width / 2 + budget);
    prev = v;
  }
  at += inst.travel[prev][n];
  inst.release[n] = std::max<std::int64_t>(0, at - width / 2);
  inst.deadline[n] = static_cast<double>(at + width / 2 + budget);

  inst.validate();
  return inst;
}

}  // namespace robust
}  // namespace ddopt
