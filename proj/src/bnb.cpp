#include "evgrid/bnb.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <memory>
#include <stdexcept>

namespace evgrid::milp {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::GapLimit: return "gap_limit";
    case SolveStatus::TimeLimit: return "time_limit";
  }
  return "?";
}

namespace {

struct Node {
  long id = 0;
  int depth = 0;
  double bound = -kInf;
  std::vector<std::pair<int, double>> lower_changes;  // (var, new lb)
  std::vector<std::pair<int, double>> upper_changes;  // (var, new ub)
  Basis basis;  // parent's final basis
};

// Single pass of singleton-row absorption plus integer bound rounding.
void tighten_bounds(const Model& model, std::vector<double>& lb, std::vector<double>& ub) {
  for (int r = 0; r < model.num_constraints(); ++r) {
    const auto& row = model.row(r);
    if (row.terms.size() != 1) continue;
    const int v = row.terms[0].var;
    const double a = row.terms[0].coef;
    const double b = row.rhs / a;
    const bool flip = a < 0;
    switch (row.sense) {
      case Sense::LE:
        if (!flip) ub[v] = std::min(ub[v], b);
        else lb[v] = std::max(lb[v], b);
        break;
      case Sense::GE:
        if (!flip) lb[v] = std::max(lb[v], b);
        else ub[v] = std::min(ub[v], b);
        break;
      case Sense::EQ:
        lb[v] = std::max(lb[v], b);
        ub[v] = std::min(ub[v], b);
        break;
    }
  }
  for (int v = 0; v < model.num_vars(); ++v) {
    if (!model.var(v).integer) continue;
    lb[v] = std::ceil(lb[v] - 1e-9);
    ub[v] = std::floor(ub[v] + 1e-9);
  }
}

double relative_gap(double incumbent, double bound) {
  return (incumbent - bound) / std::max(1.0, std::abs(incumbent));
}

}  // namespace

SolveResult branch_and_bound(const Model& model, const SolveOptions& opts,
                             const std::vector<double>* warm_start) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const auto deadline = t0 + std::chrono::duration_cast<clock::duration>(
                                 std::chrono::duration<double>(opts.time_limit));
  auto elapsed = [&]() { return std::chrono::duration<double>(clock::now() - t0).count(); };

  for (int v = 0; v < model.num_vars(); ++v) {
    const auto& def = model.var(v);
    if (def.integer && (def.lb == -kInf || def.ub == kInf))
      throw std::invalid_argument("integer variable '" + def.name + "' must have finite bounds");
  }

  SolveResult res;
  res.bound = -kInf;

  std::vector<double> root_lb(model.num_vars()), root_ub(model.num_vars());
  for (int v = 0; v < model.num_vars(); ++v) {
    root_lb[v] = model.var(v).lb;
    root_ub[v] = model.var(v).ub;
  }
  tighten_bounds(model, root_lb, root_ub);
  for (int v = 0; v < model.num_vars(); ++v) {
    if (root_lb[v] > root_ub[v] + 1e-12) {
      res.status = SolveStatus::Infeasible;
      res.wall_time = elapsed();
      return res;
    }
  }

  if (warm_start) {
    if (static_cast<int>(warm_start->size()) != model.num_vars())
      throw std::invalid_argument("warm start has wrong dimension");
    if (model.is_feasible(*warm_start, opts.int_tol)) {
      res.has_incumbent = true;
      res.values = *warm_start;
      // snap integers so downstream consumers see clean values
      for (int v = 0; v < model.num_vars(); ++v) {
        if (model.var(v).integer) res.values[v] = std::round(res.values[v]);
      }
      res.objective = model.objective_value(res.values);
    }
  }

  SimplexSolver solver(model);
  std::deque<std::unique_ptr<Node>> open;
  long next_id = 0;
  {
    auto root = std::make_unique<Node>();
    root->id = next_id++;
    open.push_back(std::move(root));
  }

  // global dual bound = weakest unexplored subproblem, monotone by construction
  auto global_bound = [&](double current) {
    double b = current;
    for (const auto& n : open) b = std::min(b, n->bound);
    return b;
  };
  auto log_line = [&](double node_bound) {
    if (!opts.log) return;
    const double bound = global_bound(node_bound);
    const double inc = res.has_incumbent ? res.objective : kInf;
    const double gap = res.has_incumbent && bound > -kInf ? relative_gap(inc, bound) : kInf;
    (*opts.log) << res.node_count << ',' << bound << ',' << (res.has_incumbent ? std::to_string(inc) : "-")
                << ',' << (gap == kInf ? std::string("-") : std::to_string(gap)) << ',' << elapsed() << '\n';
  };

  std::vector<double> lb(model.num_vars()), ub(model.num_vars());
  bool hit_time = false, hit_nodes = false;
  bool root_unbounded = false;

  // root reduced costs support fixing integers once an incumbent exists:
  // pushing a nonbasic integer one unit off its bound costs at least |d_j|
  // over the root bound, so anything beyond the incumbent can be pinned
  double root_obj = -kInf;
  std::vector<double> root_redcost;
  long fixed_by_redcost = 0;
  auto apply_reduced_cost_fixing = [&]() {
    if (root_redcost.empty() || !res.has_incumbent) return;
    for (int v = 0; v < model.num_vars(); ++v) {
      if (!model.var(v).integer || root_lb[v] >= root_ub[v]) continue;
      const double d = root_redcost[v];
      if (d > 1e-9 && root_obj + d > res.objective - 1e-9) {
        root_ub[v] = root_lb[v];
        ++fixed_by_redcost;
      } else if (d < -1e-9 && root_obj - d > res.objective - 1e-9) {
        root_lb[v] = root_ub[v];
        ++fixed_by_redcost;
      }
    }
  };

  while (!open.empty()) {
    if (clock::now() >= deadline) {
      hit_time = true;
      break;
    }
    if (opts.node_limit >= 0 && res.node_count >= opts.node_limit) {
      hit_nodes = true;
      break;
    }

    // prune by bound against the incumbent
    if (res.has_incumbent) {
      std::erase_if(open, [&](const std::unique_ptr<Node>& n) {
        return n->bound > -kInf && relative_gap(res.objective, n->bound) <= opts.gap_tol;
      });
      if (open.empty()) break;
    }

    // node selection: plunge depth-first until an incumbent exists, then best bound
    size_t pick = 0;
    if (!res.has_incumbent) {
      for (size_t i = 1; i < open.size(); ++i) {
        if (open[i]->depth > open[pick]->depth ||
            (open[i]->depth == open[pick]->depth && open[i]->id > open[pick]->id))
          pick = i;
      }
    } else {
      for (size_t i = 1; i < open.size(); ++i) {
        if (open[i]->bound < open[pick]->bound - 1e-15 ||
            (std::abs(open[i]->bound - open[pick]->bound) <= 1e-15 && open[i]->id < open[pick]->id))
          pick = i;
      }
    }
    std::unique_ptr<Node> node = std::move(open[pick]);
    open.erase(open.begin() + static_cast<long>(pick));

    lb = root_lb;
    ub = root_ub;
    for (const auto& [v, b] : node->lower_changes) lb[v] = std::max(lb[v], b);
    for (const auto& [v, b] : node->upper_changes) ub[v] = std::min(ub[v], b);

    LpOptions lp_opts;
    lp_opts.deadline = deadline;
    Basis basis = node->basis;
    LpResult lp = solver.solve(lb, ub, lp_opts, &basis);
    res.lp_iterations += lp.iterations;
    ++res.node_count;

    if (lp.status == LpStatus::TimeLimit) {
      hit_time = true;
      // conservative: node stays unexplored, bound unchanged
      open.push_back(std::move(node));
      break;
    }
    if (lp.status == LpStatus::Infeasible) {
      log_line(node->bound);
      continue;
    }
    if (lp.status == LpStatus::Unbounded) {
      // a child region is contained in the root's, so this can only be the root
      if (node->depth == 0) {
        root_unbounded = true;
        break;
      }
      continue;
    }
    if (lp.status == LpStatus::IterLimit || lp.status == LpStatus::Singular) {
      if (node->depth == 0) throw std::runtime_error("LP solve failed at root: " + lp.diagnostics);
      // conservative: keep the node so the dual bound stays valid, stop the search
      open.push_back(std::move(node));
      hit_time = true;
      break;
    }

    const double node_bound = lp.objective;
    if (node->depth == 0 && root_redcost.empty()) {
      root_obj = lp.objective;
      root_redcost = lp.reduced_costs;
      apply_reduced_cost_fixing();
    }
    if (res.has_incumbent && relative_gap(res.objective, node_bound) <= opts.gap_tol) {
      log_line(node_bound);
      continue;
    }

    // fractional integer with value closest to .5; lowest index ties
    int branch_var = -1;
    double best_frac_dist = kInf;
    for (int v = 0; v < model.num_vars(); ++v) {
      if (!model.var(v).integer) continue;
      const double x = lp.x[v];
      const double frac = x - std::floor(x);
      if (frac > opts.int_tol && frac < 1.0 - opts.int_tol) {
        const double dist = std::abs(frac - 0.5);
        if (dist < best_frac_dist - 1e-12) {
          best_frac_dist = dist;
          branch_var = v;
        }
      }
    }

    if (branch_var < 0) {
      // integer feasible: snap and accept if it improves
      std::vector<double> cand = lp.x;
      for (int v = 0; v < model.num_vars(); ++v) {
        if (model.var(v).integer) cand[v] = std::round(cand[v]);
        cand[v] = std::min(std::max(cand[v], root_lb[v]), root_ub[v]);
      }
      if (model.is_feasible(cand, 1e-6)) {
        const double obj = model.objective_value(cand);
        if (!res.has_incumbent || obj < res.objective - 1e-9) {
          res.has_incumbent = true;
          res.objective = obj;
          res.values = std::move(cand);
          apply_reduced_cost_fixing();
        }
      }
      log_line(node_bound);
      continue;
    }

    const double xv = lp.x[branch_var];
    auto down = std::make_unique<Node>();
    down->id = next_id++;
    down->depth = node->depth + 1;
    down->bound = node_bound;
    down->lower_changes = node->lower_changes;
    down->upper_changes = node->upper_changes;
    down->upper_changes.emplace_back(branch_var, std::floor(xv));
    down->basis = basis;
    auto up = std::make_unique<Node>();
    up->id = next_id++;
    up->depth = node->depth + 1;
    up->bound = node_bound;
    up->lower_changes = node->lower_changes;
    up->upper_changes = node->upper_changes;
    up->lower_changes.emplace_back(branch_var, std::ceil(xv));
    up->basis = std::move(basis);
    log_line(node_bound);
    open.push_back(std::move(down));
    open.push_back(std::move(up));
  }

  // dual bound: min over open nodes, or proven when the tree is exhausted
  double open_bound = kInf;
  for (const auto& n : open) open_bound = std::min(open_bound, n->bound > -kInf ? n->bound : -kInf);
  if (open.empty()) {
    res.bound = res.has_incumbent ? res.objective : kInf;
  } else {
    res.bound = open_bound;
  }

  res.wall_time = elapsed();
  if (root_unbounded) {
    res.status = SolveStatus::Unbounded;
  } else if (!res.has_incumbent) {
    if (hit_time || hit_nodes) {
      res.status = SolveStatus::TimeLimit;
    } else {
      res.status = SolveStatus::Infeasible;
    }
  } else {
    res.gap = open.empty() ? 0.0 : relative_gap(res.objective, res.bound);
    if (res.gap <= opts.gap_tol) {
      res.status = opts.gap_tol <= 1e-6 ? SolveStatus::Optimal : SolveStatus::GapLimit;
      if (open.empty()) res.status = SolveStatus::Optimal;
    } else if (hit_time || hit_nodes) {
      res.status = SolveStatus::TimeLimit;
    } else {
      res.status = SolveStatus::GapLimit;
    }
  }
  if (res.status == SolveStatus::Optimal) res.gap = std::max(res.gap, 0.0);
  return res;
}

}  // namespace evgrid::milp
