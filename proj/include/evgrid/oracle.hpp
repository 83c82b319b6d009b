#pragma once

#include <span>
#include <vector>

#include "evgrid/instance.hpp"
#include "evgrid/vrp.hpp"

namespace evgrid::oracle {

struct ChargeStop {
  int vehicle = -1;
  int node = -1;
  double minutes = 0.0;
};

struct EnumeratedSolution {
  bool feasible = false;
  double objective = 0.0;
  std::vector<vrp::Route> routes;
  std::vector<ChargeStop> charging;
};

// Exhaustive reference solver for tiny instances: every ordered partition of
// the customers into at most |V| routes, with charging decided per route by
// enumerating station subsets and charging minimally. Completely separate
// from the MILP path; used to certify it.
//
// `load_buffer` holds the per-node quantile * sigma term of the
// chance-constrained load recursion; empty means deterministic.
// `all_objectives`, when given, collects the objective of every feasible
// plan enumerated (debugging aid).
EnumeratedSolution enumerate_optimal(const ProblemInstance& inst, std::span<const double> load_buffer = {},
                                     int max_customers = 7, std::vector<double>* all_objectives = nullptr);

}  // namespace evgrid::oracle
