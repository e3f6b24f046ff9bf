#include "ddopt/bilevel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ddopt/errors.hpp"
#include "ddopt/rng.hpp"

namespace ddopt::bilevel {

namespace {
constexpr double kValTol = 1e-9;  // follower value comparisons (integer data)
}

const char* to_string(CoeffDist dist) {
  switch (dist) {
    case CoeffDist::U25: return "u25";
    case CoeffDist::U50: return "u50";
    case CoeffDist::U100: return "u100";
  }
  return "u25";
}

const char* to_string(DlPolicy policy) {
  return policy == DlPolicy::FollowerProfit ? "follower-profit" : "independent";
}

CoeffDist coeff_dist_from_string(const std::string& s) {
  if (s == "u25") return CoeffDist::U25;
  if (s == "u50") return CoeffDist::U50;
  if (s == "u100") return CoeffDist::U100;
  throw ParseError("unknown coefficient distribution '" + s + "'");
}

DlPolicy dl_policy_from_string(const std::string& s) {
  if (s == "follower-profit") return DlPolicy::FollowerProfit;
  if (s == "independent") return DlPolicy::Independent;
  throw ParseError("unknown d_leader policy '" + s + "'");
}

CpspInstance generate_cpsp(int n, double tightness, CoeffDist dist,
                           std::uint64_t seed, DlPolicy dl_policy) {
  if (n < 1) throw Error("generate_cpsp: n must be positive");
  CpspInstance inst;
  inst.n = n;
  inst.seed = seed;
  inst.tightness = tightness;
  inst.dist = dist;
  inst.dl_policy = dl_policy;

  const std::int64_t hi = dist == CoeffDist::U25   ? 25
                          : dist == CoeffDist::U50 ? 50
                                                   : 100;
  Rng rng(seed);
  // Draw order is part of the format: weights, then leader noise, follower
  // noise, and (only under the independent policy) d_leader noise.
  inst.a_leader.resize(n);
  std::int64_t weight_sum = 0;
  for (int j = 0; j < n; ++j) {
    inst.a_leader[j] = rng.uniform_int(1, hi);
    weight_sum += inst.a_leader[j];
  }
  inst.a_follower = inst.a_leader;
  inst.b_leader = std::llround(tightness * static_cast<double>(weight_sum));
  inst.b_follower = inst.b_leader;

  inst.c_leader.resize(n);
  for (int j = 0; j < n; ++j)
    inst.c_leader[j] = 5 * inst.a_leader[j] + rng.uniform_int(1, 10);
  inst.c_follower.resize(n);
  for (int j = 0; j < n; ++j)
    inst.c_follower[j] = 5 * inst.a_follower[j] + rng.uniform_int(1, 10);
  if (dl_policy == DlPolicy::FollowerProfit) {
    inst.d_leader = inst.c_follower;
  } else {
    inst.d_leader.resize(n);
    for (int j = 0; j < n; ++j)
      inst.d_leader[j] = 5 * inst.a_leader[j] + rng.uniform_int(1, 10);
  }
  return inst;
}

BilevelInstance to_bilevel(const CpspInstance& inst) {
  BilevelInstance b;
  b.n = inst.n;
  b.leader_obj_xl.assign(inst.c_leader.begin(), inst.c_leader.end());
  b.leader_obj_xf.resize(inst.n);
  for (int j = 0; j < inst.n; ++j)
    b.leader_obj_xf[j] = -static_cast<double>(inst.d_leader[j]);
  BilevelInstance::LeaderRow row;
  row.xl.assign(inst.a_leader.begin(), inst.a_leader.end());
  row.xf.assign(inst.n, 0.0);
  row.rhs = static_cast<double>(inst.b_leader);
  b.leader_rows.push_back(std::move(row));
  b.follower_profit.assign(inst.c_follower.begin(), inst.c_follower.end());
  b.follower_rows.push_back(inst.a_follower);
  b.follower_caps.push_back(inst.b_follower);
  return b;
}

dd::DecisionDiagram build_follower_dd(const BilevelInstance& inst) {
  dd::KnapsackSpec spec(inst.follower_rows, inst.follower_caps,
                        inst.follower_profit);
  return dd::compile(spec, inst.n);
}

dd::DecisionDiagram drop_negative_profit_picks(const BilevelInstance& inst,
                                               const dd::DecisionDiagram& diagram) {
  return dd::filter_arcs(diagram, [&](std::int32_t a) {
    const dd::Arc& arc = diagram.arcs[a];
    if (arc.value == 0) return true;
    return inst.follower_profit[diagram.arc_layer(a) - 1] >= 0.0;
  });
}

std::vector<double> compute_big_m(const BilevelInstance& inst,
                                  const dd::DecisionDiagram& diagram,
                                  const BigMOptions& options) {
  bool all_nonneg = true;
  for (std::int32_t a = 0; a < diagram.num_arcs(); ++a)
    if (diagram.arcs[a].value != 0 &&
        inst.follower_profit[diagram.arc_layer(a) - 1] < 0.0)
      all_nonneg = false;

  double spread = 0.0;  // sum of positive profits minus sum of negative ones
  for (double c : inst.follower_profit) spread += std::abs(c);

  std::vector<double> big_m(diagram.num_arcs(), 0.0);
  for (std::int32_t a = 0; a < diagram.num_arcs(); ++a) {
    if (diagram.arcs[a].value == 0) continue;
    big_m[a] = options.allow_shortcut && all_nonneg
                   ? diagram.arcs[a].length
                   : diagram.arcs[a].length + spread;
  }
  return big_m;
}

SingleLevelModel build_single_level_milp(const BilevelInstance& inst,
                                         const dd::DecisionDiagram& diagram,
                                         const std::vector<double>& big_m) {
  SingleLevelModel out;
  lp::LpModel& m = out.model;
  m.name = "single_level";
  m.sense = Sense::Max;

  out.xl.resize(inst.n);
  out.xf.resize(inst.n);
  for (int j = 0; j < inst.n; ++j)
    out.xl[j] = m.add_binary("xL" + std::to_string(j + 1), inst.leader_obj_xl[j]);
  for (int j = 0; j < inst.n; ++j)
    out.xf[j] = m.add_binary("xF" + std::to_string(j + 1), inst.leader_obj_xf[j]);

  out.y.resize(diagram.num_arcs());
  for (std::int32_t a = 0; a < diagram.num_arcs(); ++a)
    out.y[a] = m.add_var("y" + std::to_string(a), 0.0, 1.0, 0.0);

  out.pi.assign(diagram.num_nodes(), -1);
  for (std::int32_t u = 0; u < diagram.num_nodes(); ++u) {
    if (u == diagram.terminal) continue;  // terminal price pinned to zero
    out.pi[u] = m.add_var("pi" + std::to_string(u), -lp::kInf, lp::kInf, 0.0);
  }

  out.gamma.assign(diagram.num_arcs(), -1);
  for (std::int32_t a = 0; a < diagram.num_arcs(); ++a)
    if (diagram.arcs[a].value != 0)
      out.gamma[a] = m.add_var("g" + std::to_string(a), 0.0, lp::kInf, 0.0);

  // Leader rows.
  for (std::size_t r = 0; r < inst.leader_rows.size(); ++r) {
    const auto& row = inst.leader_rows[r];
    std::vector<std::pair<std::int32_t, double>> coeffs;
    for (int j = 0; j < inst.n; ++j) {
      if (row.xl[j] != 0.0) coeffs.emplace_back(out.xl[j], row.xl[j]);
      if (row.xf[j] != 0.0) coeffs.emplace_back(out.xf[j], row.xf[j]);
    }
    m.add_row("leader" + std::to_string(r), lp::RowSense::Le, row.rhs,
              std::move(coeffs));
  }

  // Path flow: unit source, balance at internal nodes.
  std::vector<std::pair<std::int32_t, double>> src;
  for (std::int32_t a = diagram.out_first[diagram.root];
       a < diagram.out_first[diagram.root + 1]; ++a)
    src.emplace_back(out.y[a], 1.0);
  m.add_row("src", lp::RowSense::Eq, 1.0, std::move(src));

  const auto in = diagram.in_arcs();
  for (std::int32_t u = 0; u < diagram.num_nodes(); ++u) {
    if (u == diagram.root || u == diagram.terminal) continue;
    std::vector<std::pair<std::int32_t, double>> bal;
    for (std::int32_t a : in[u]) bal.emplace_back(out.y[a], 1.0);
    for (std::int32_t a = diagram.out_first[u]; a < diagram.out_first[u + 1]; ++a)
      bal.emplace_back(out.y[a], -1.0);
    m.add_row("bal_n" + std::to_string(u), lp::RowSense::Eq, 0.0, std::move(bal));
  }

  // Blocking: a value-1 arc in layer j carries flow only if the leader left
  // item j free.
  for (std::int32_t a = 0; a < diagram.num_arcs(); ++a) {
    if (diagram.arcs[a].value == 0) continue;
    const int j = diagram.arc_layer(a) - 1;
    m.add_row("blk" + std::to_string(a), lp::RowSense::Le, 1.0,
              {{out.y[a], 1.0}, {out.xl[j], 1.0}});
  }

  // Dual feasibility. The follower maximizes, so prices satisfy
  // pi_tail - pi_head + gamma >= length on value-1 arcs and
  // pi_tail - pi_head >= 0 on value-0 arcs, with the terminal price 0.
  const auto pi_term = [&](std::vector<std::pair<std::int32_t, double>>& c,
                           std::int32_t node, double coef) {
    if (out.pi[node] >= 0) c.emplace_back(out.pi[node], coef);
  };
  for (std::int32_t a = 0; a < diagram.num_arcs(); ++a) {
    const dd::Arc& arc = diagram.arcs[a];
    std::vector<std::pair<std::int32_t, double>> c;
    pi_term(c, arc.tail, 1.0);
    pi_term(c, arc.head, -1.0);
    if (arc.value != 0) c.emplace_back(out.gamma[a], 1.0);
    m.add_row("dual" + std::to_string(a), lp::RowSense::Ge, arc.length,
              std::move(c));
  }

  // Strong duality, linearized: length.y - pi_root - sum gamma
  // + sum big_m . xL(layer) = 0.
  {
    std::vector<std::pair<std::int32_t, double>> c;
    std::vector<double> xl_coef(inst.n, 0.0);
    for (std::int32_t a = 0; a < diagram.num_arcs(); ++a) {
      if (diagram.arcs[a].length != 0.0)
        c.emplace_back(out.y[a], diagram.arcs[a].length);
      if (diagram.arcs[a].value != 0)
        xl_coef[diagram.arc_layer(a) - 1] += big_m[a];
    }
    c.emplace_back(out.pi[diagram.root], -1.0);
    for (std::int32_t a = 0; a < diagram.num_arcs(); ++a)
      if (out.gamma[a] >= 0) c.emplace_back(out.gamma[a], -1.0);
    for (int j = 0; j < inst.n; ++j)
      if (xl_coef[j] != 0.0) c.emplace_back(out.xl[j], xl_coef[j]);
    m.add_row("strong_duality", lp::RowSense::Eq, 0.0, std::move(c));
  }

  // Consistency: gamma_a >= big_m_a xL(layer(a)).
  for (std::int32_t a = 0; a < diagram.num_arcs(); ++a) {
    if (out.gamma[a] < 0) continue;
    const int j = diagram.arc_layer(a) - 1;
    m.add_row("cons" + std::to_string(a), lp::RowSense::Ge, 0.0,
              {{out.gamma[a], 1.0}, {out.xl[j], -big_m[a]}});
  }

  // Linking: the follower picks item j exactly when a value-1 arc of layer j
  // carries the flow.
  for (int j = 0; j < inst.n; ++j) {
    std::vector<std::pair<std::int32_t, double>> c{{out.xf[j], 1.0}};
    for (std::int32_t a = 0; a < diagram.num_arcs(); ++a)
      if (diagram.arcs[a].value != 0 && diagram.arc_layer(a) - 1 == j)
        c.emplace_back(out.y[a], -1.0);
    m.add_row("link" + std::to_string(j + 1), lp::RowSense::Eq, 0.0,
              std::move(c));
  }

  return out;
}

double follower_best_response(const BilevelInstance& inst,
                              const dd::DecisionDiagram& diagram,
                              const std::vector<int>& x_leader) {
  (void)inst;
  const dd::DecisionDiagram blocked =
      dd::filter_arcs(diagram, [&](std::int32_t a) {
        if (diagram.arcs[a].value == 0) return true;
        return x_leader[diagram.arc_layer(a) - 1] == 0;
      });
  return dd::extreme_path(blocked, Sense::Max).objective;
}

DdrResult solve_ddr(const BilevelInstance& inst, const BigMOptions& bigm,
                    const lp::SolveOptions& lp_options) {
  DdrResult out;
  const dd::DecisionDiagram full = dd::reduce(build_follower_dd(inst));

  bool any_negative = false;
  for (double c : inst.follower_profit) any_negative = any_negative || c < 0.0;
  dd::DecisionDiagram working =
      bigm.allow_shortcut && any_negative
          ? dd::reduce(drop_negative_profit_picks(inst, full))
          : full;

  const std::vector<double> big_m = compute_big_m(inst, working, bigm);
  out.stats.used_shortcut = false;
  for (std::int32_t a = 0; a < working.num_arcs(); ++a)
    if (working.arcs[a].value != 0) {
      out.stats.used_shortcut = big_m[a] == working.arcs[a].length;
      break;
    }

  out.milp = build_single_level_milp(inst, working, big_m);
  out.stats.dd_nodes = working.num_nodes();
  out.stats.dd_arcs = working.num_arcs();
  out.stats.milp_rows = out.milp.model.num_rows();
  out.stats.milp_cols = out.milp.model.num_vars();

  const lp::LpSolution sol = lp::solve_milp(out.milp.model, lp_options);
  out.stats.bb_nodes = sol.iterations;
  if (sol.status == lp::SolveStatus::Infeasible)
    throw NoFeasiblePath("solve_ddr: leader problem is infeasible");
  if (sol.status == lp::SolveStatus::NodeCap ||
      sol.status == lp::SolveStatus::IterationCap)
    throw CapExceeded("solve_ddr: branch-and-bound cap exceeded");
  if (sol.status == lp::SolveStatus::TimeLimit)
    throw TimeLimitExceeded("solve_ddr: deadline expired");
  if (sol.status != lp::SolveStatus::Optimal)
    throw Error("solve_ddr: unexpected solver status");

  BilevelSolution& s = out.solution;
  s.x_leader.resize(inst.n);
  s.x_follower.resize(inst.n);
  for (int j = 0; j < inst.n; ++j) {
    s.x_leader[j] = static_cast<int>(std::llround(sol.x[out.milp.xl[j]]));
    s.x_follower[j] = static_cast<int>(std::llround(sol.x[out.milp.xf[j]]));
  }
  s.leader_objective = sol.objective;
  s.follower_objective = 0.0;
  for (int j = 0; j < inst.n; ++j)
    if (s.x_follower[j]) s.follower_objective += inst.follower_profit[j];

  // Re-verify the certificate: the returned response must be follower-optimal
  // against the unpruned diagram.
  const double best = follower_best_response(inst, full, s.x_leader);
  if (std::abs(best - s.follower_objective) > 1e-6)
    throw Error("solve_ddr: returned response is not follower-optimal");

  out.milp_point = sol.x;
  out.diagram = std::move(working);
  return out;
}

BilevelSolution brute_force_bilevel(const BilevelInstance& inst, int max_vars) {
  if (inst.n > max_vars)
    throw CapExceeded("brute_force_bilevel: instance exceeds the cap");
  const dd::DecisionDiagram diagram = dd::reduce(build_follower_dd(inst));

  BilevelSolution best;
  bool found = false;
  std::vector<int> xl(inst.n);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << inst.n); ++mask) {
    for (int j = 0; j < inst.n; ++j) xl[j] = (mask >> j) & 1;

    dd::DecisionDiagram blocked;
    try {
      blocked = dd::filter_arcs(diagram, [&](std::int32_t a) {
        if (diagram.arcs[a].value == 0) return true;
        return xl[diagram.arc_layer(a) - 1] == 0;
      });
    } catch (const NoFeasiblePath&) {
      continue;  // cannot happen for knapsack followers (value-0 path remains)
    }
    const double follower_opt = dd::extreme_path(blocked, Sense::Max).objective;

    // Optimistic rule: among all follower-optimal responses, the one the
    // leader prefers counts — provided it satisfies the leader rows.
    double best_here = -std::numeric_limits<double>::infinity();
    std::vector<int> best_xf;
    dd::for_each_path(blocked, [&](const dd::PathSolution& p) {
      if (std::abs(p.objective - follower_opt) > kValTol) return;
      double leader_obj = 0.0;
      std::vector<int> xf(inst.n, 0);
      for (std::size_t k = 0; k < p.values.size(); ++k) xf[k] = p.values[k];
      for (const auto& row : inst.leader_rows) {
        double act = 0.0;
        for (int j = 0; j < inst.n; ++j)
          act += row.xl[j] * xl[j] + row.xf[j] * xf[j];
        if (act > row.rhs + kValTol) return;
      }
      for (int j = 0; j < inst.n; ++j)
        leader_obj += inst.leader_obj_xl[j] * xl[j] + inst.leader_obj_xf[j] * xf[j];
      if (leader_obj > best_here + kValTol) {
        best_here = leader_obj;
        best_xf = std::move(xf);
      }
    });
    if (best_xf.empty() && best_here == -std::numeric_limits<double>::infinity())
      continue;  // no follower-optimal response satisfies the leader rows

    if (!found || best_here > best.leader_objective + kValTol) {
      found = true;
      best.x_leader = xl;
      best.x_follower = best_xf;
      best.leader_objective = best_here;
      best.follower_objective = follower_opt;
    }
  }
  if (!found)
    throw NoFeasiblePath("brute_force_bilevel: no feasible leader decision");
  return best;
}

}  // namespace ddopt::bilevel
