#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddopt/dd.hpp"
#include "ddopt/lp.hpp"

namespace ddopt::bilevel {

enum class CoeffDist { U25, U50, U100 };
enum class DlPolicy { FollowerProfit, Independent };

const char* to_string(CoeffDist dist);
const char* to_string(DlPolicy policy);
CoeffDist coeff_dist_from_string(const std::string& s);
DlPolicy dl_policy_from_string(const std::string& s);

// Competitive project-selection instance: the leader reserves items under a
// budget and collects c_leader per reserved item, the follower then packs
// the remaining items into its own knapsack; each follower pick costs the
// leader d_leader. Integer data so files reproduce byte-for-byte.
struct CpspInstance {
  int n = 0;
  std::uint64_t seed = 0;
  double tightness = 0.5;
  CoeffDist dist = CoeffDist::U25;
  DlPolicy dl_policy = DlPolicy::FollowerProfit;
  std::vector<std::int64_t> c_leader, d_leader, c_follower;
  std::vector<std::int64_t> a_leader, a_follower;
  std::int64_t b_leader = 0, b_follower = 0;
};

CpspInstance generate_cpsp(int n, double tightness, CoeffDist dist,
                           std::uint64_t seed,
                           DlPolicy dl_policy = DlPolicy::FollowerProfit);

// Optimistic bilevel program over paired binary vectors: the leader picks
// x_leader subject to joint linear rows, the follower maximizes its profit
// over x_follower <= 1 - x_leader within its own knapsack rows, and among
// follower optima the leader-preferred response counts.
struct BilevelInstance {
  int n = 0;
  std::vector<double> leader_obj_xl;  // leader objective on x_leader
  std::vector<double> leader_obj_xf;  // leader objective on x_follower
  struct LeaderRow {
    std::vector<double> xl, xf;  // length n each
    double rhs = 0.0;            // row reads xl.xL + xf.xF <= rhs
  };
  std::vector<LeaderRow> leader_rows;
  std::vector<double> follower_profit;                   // follower maximizes
  std::vector<std::vector<std::int64_t>> follower_rows;  // nonnegative
  std::vector<std::int64_t> follower_caps;
};

BilevelInstance to_bilevel(const CpspInstance& inst);

// Compiles the follower's feasible set: one layer per item, value-1 arcs
// carry the item's follower profit as length.
dd::DecisionDiagram build_follower_dd(const BilevelInstance& inst);

// Removes value-1 arcs of items with negative follower profit. Valid when
// the follower rows are nonnegative: dropping such an item keeps any
// solution feasible and never lowers the follower optimum, so the optimal
// response set is unchanged.
dd::DecisionDiagram drop_negative_profit_picks(const BilevelInstance& inst,
                                               const dd::DecisionDiagram& diagram);

struct BigMOptions {
  // Use the tight per-arc constant (the arc length itself) when every
  // remaining pick has nonnegative profit; otherwise, or when disabled,
  // fall back to the general bound length + sum of positive profits - sum
  // of negative profits.
  bool allow_shortcut = true;
};

// Per-arc big-M for the strong-duality linearization (meaningful on value-1
// arcs; value-0 entries are 0).
std::vector<double> compute_big_m(const BilevelInstance& inst,
                                  const dd::DecisionDiagram& diagram,
                                  const BigMOptions& options = {});

// Single-level MILP equivalent to the bilevel program: leader objective and
// rows, follower path flow, dual feasibility with blocking prices, strong
// duality linearized with the given big-M, and the pick/flow linking. Only
// x_leader and x_follower are binary.
struct SingleLevelModel {
  lp::LpModel model;
  std::vector<std::int32_t> xl, xf;  // variable ids per item
  std::vector<std::int32_t> y;       // per arc
  std::vector<std::int32_t> pi;      // per node; -1 at the terminal (fixed 0)
  std::vector<std::int32_t> gamma;   // per arc; -1 on value-0 arcs
};

SingleLevelModel build_single_level_milp(const BilevelInstance& inst,
                                         const dd::DecisionDiagram& diagram,
                                         const std::vector<double>& big_m);

struct BilevelSolution {
  std::vector<int> x_leader, x_follower;
  double leader_objective = 0.0;
  double follower_objective = 0.0;
};

struct DdrStats {
  int dd_nodes = 0, dd_arcs = 0;
  int milp_rows = 0, milp_cols = 0;
  std::int64_t bb_nodes = 0;
  bool used_shortcut = false;
};

struct DdrResult {
  BilevelSolution solution;
  DdrStats stats;
  SingleLevelModel milp;
  std::vector<double> milp_point;  // optimal point of milp.model
  dd::DecisionDiagram diagram;     // reduced (and possibly pruned) follower diagram
};

// Full pipeline: compile, reduce, optional profit preprocessing, big-M,
// single-level MILP, branch & bound, and a follower-optimality recheck of
// the returned response by a blocked longest path. Throws NoFeasiblePath
// when the leader has no feasible decision.
DdrResult solve_ddr(const BilevelInstance& inst, const BigMOptions& bigm = {},
                    const lp::SolveOptions& lp_options = {});

// Enumerates leader vectors, solves the follower exactly on the blocked
// diagram, and applies the optimistic rule over all tied responses.
BilevelSolution brute_force_bilevel(const BilevelInstance& inst,
                                    int max_vars = 20);

// Follower optimum against a fixed leader vector (blocked longest path).
double follower_best_response(const BilevelInstance& inst,
                              const dd::DecisionDiagram& diagram,
                              const std::vector<int>& x_leader);

}  // namespace ddopt::bilevel
