#pragma once

#include <ostream>
#include <vector>

#include "evgrid/model.hpp"
#include "evgrid/simplex.hpp"

namespace evgrid::milp {

enum class SolveStatus { Optimal, Infeasible, Unbounded, GapLimit, TimeLimit };

const char* to_string(SolveStatus s);

struct SolveOptions {
  double gap_tol = 1e-6;       // relative
  double time_limit = 300.0;   // seconds
  long node_limit = -1;        // <0: unlimited
  int threads = 1;             // >1 is accepted but search stays serial (determinism reference)
  double int_tol = 1e-6;
  std::ostream* log = nullptr;  // solver log lines: node,bound,incumbent,gap,time
};

struct SolveResult {
  SolveStatus status = SolveStatus::Infeasible;
  double objective = 0.0;  // incumbent objective (valid when has_incumbent)
  double bound = -kInf;    // best dual bound
  double gap = kInf;
  bool has_incumbent = false;
  std::vector<double> values;
  long node_count = 0;
  long lp_iterations = 0;
  double wall_time = 0.0;
};

// Best-first branch and bound with depth-first plunging until the first
// incumbent, most-fractional branching and deterministic tie breaking.
// warm_start, when given, is validated against the model and seeds the
// incumbent if it is integer feasible.
SolveResult branch_and_bound(const Model& model, const SolveOptions& opts = {},
                             const std::vector<double>* warm_start = nullptr);

}  // namespace evgrid::milp
