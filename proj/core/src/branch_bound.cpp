#include <algorithm>
#include <cmath>
#include <vector>

#include "ddopt/errors.hpp"
#include "simplex_internal.hpp"

namespace ddopt::lp {

namespace {

struct Node {
  double bound;  // parent LP optimum, internal (minimization) sense
  std::vector<std::pair<std::int32_t, std::int8_t>> fixes;  // (binary, value)
};

}  // namespace

LpSolution solve_milp(const LpModel& model, const SolveOptions& options) {
  model.validate();

  std::vector<std::int32_t> binaries;
  for (std::int32_t j = 0; j < model.num_vars(); ++j)
    if (model.vars[j].binary) binaries.push_back(j);
  if (binaries.empty()) return solve_lp(model, options);

  const bool maximize = model.sense == Sense::Max;
  const auto internal = [&](double user) { return maximize ? -user : user; };

  detail::Simplex spx(model, options);
  LpSolution out;

  // Root relaxation.
  SolveStatus st = spx.solve();
  if (st != SolveStatus::Optimal) {
    out.status = st;
    out.iterations = 0;
    return out;
  }

  // Depth-first stack. Diving keeps consecutive relaxations one bound
  // change apart, so the warm-started simplex repairs them in a handful of
  // pivots, and it finds incumbents early, which drives the pruning. The
  // preferred child (the branch value the fractional point leans toward) is
  // pushed last so it is explored first.
  std::vector<Node> open;
  open.push_back({internal(spx.objective()), {}});
  std::int64_t processed = 0;

  bool have_incumbent = false;
  double inc_obj = kInf;  // internal sense
  std::vector<double> inc_x;

  while (!open.empty()) {
    if (options.deadline &&
        std::chrono::steady_clock::now() > *options.deadline) {
      out.status = SolveStatus::TimeLimit;
      break;
    }
    if (processed >= options.node_cap) {
      out.status = SolveStatus::NodeCap;
      break;
    }
    Node node = std::move(open.back());
    open.pop_back();
    ++processed;
    const double prune_tol = 1e-9 * (1.0 + std::abs(inc_obj));
    if (have_incumbent && node.bound >= inc_obj - prune_tol) continue;

    // Re-establish this node's bounds on the shared tableau.
    std::vector<std::int8_t> fixed(model.num_vars(), -1);
    for (const auto& [j, v] : node.fixes) fixed[j] = v;
    for (std::int32_t j : binaries) {
      const double lo = fixed[j] < 0 ? model.vars[j].lb : double(fixed[j]);
      const double hi = fixed[j] < 0 ? model.vars[j].ub : double(fixed[j]);
      spx.set_bounds(j, lo, hi);
    }

    st = spx.solve();
    if (st == SolveStatus::Infeasible) continue;
    if (st == SolveStatus::IterationCap || st == SolveStatus::TimeLimit) {
      out.status = st;
      break;
    }
    if (st == SolveStatus::Unbounded)
      throw Error("solve_milp: node relaxation unbounded below a bounded root");

    const double node_obj = internal(spx.objective());
    if (have_incumbent && node_obj >= inc_obj - prune_tol) continue;

    std::vector<double> x = spx.primal();

    // Most fractional binary, ties toward the smallest variable index.
    std::int32_t branch_var = -1;
    double most = options.int_tol;
    for (std::int32_t j : binaries) {
      const double frac = std::abs(x[j] - std::round(x[j]));
      if (frac > most) {
        most = frac;
        branch_var = j;
      }
    }

    if (branch_var < 0) {
      // Integral: snap the binaries exactly and keep the point if it is
      // genuinely feasible (it is, for integral row data; the check guards
      // against pathological models).
      for (std::int32_t j : binaries) x[j] = std::round(x[j]);
      if (model.max_violation(x) <= 10 * options.feas_tol) {
        const double cand = internal(model.objective_value(x));
        if (!have_incumbent || cand < inc_obj - 1e-12) {
          have_incumbent = true;
          inc_obj = cand;
          inc_x = x;
        }
      }
      continue;
    }

    const std::int8_t lean = x[branch_var] >= 0.5 ? 1 : 0;
    for (std::int8_t v : {std::int8_t(1 - lean), lean}) {
      Node child;
      child.bound = node_obj;
      child.fixes = node.fixes;
      child.fixes.emplace_back(branch_var, v);
      open.push_back(std::move(child));
    }
  }

  if (out.status != SolveStatus::NodeCap && out.status != SolveStatus::TimeLimit &&
      out.status != SolveStatus::IterationCap) {
    out.status = have_incumbent ? SolveStatus::Optimal : SolveStatus::Infeasible;
  }
  if (have_incumbent) {
    out.objective = maximize ? -inc_obj : inc_obj;
    out.x = std::move(inc_x);
  }
  out.iterations = processed;
  return out;
}

}  // namespace ddopt::lp
