#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evgrid/energy.hpp"
#include "evgrid/grid.hpp"
#include "evgrid/instance.hpp"
#include "evgrid/model.hpp"
#include "evgrid/stochastic.hpp"
#include "evgrid/vrp.hpp"

namespace evgrid::milp {

enum class ModelMode { Deterministic, ChanceConstrained };

const char* to_string(ModelMode m);

// The full co-optimization model: routing, energy, grid, coupling and the
// charged-energy envelope, with objective C^T x T + C^E w. The two modes
// differ in exactly one family: load propagation is either the mean-demand
// row or its quantile-buffered reformulation, emitted at the same position
// so the matrices stay comparable row by row.
struct AssembledModel {
  Model model;
  ModelMode mode = ModelMode::Deterministic;
  vrp::RoutingVariables routing;
  energy::StationSet stations;
  energy::EnergyVariables energy;
  grid::GridVariables grid;
  vrp::BigM bigm;
  stochastic::RiskSpec risk;
  std::map<std::string, int> family_rows;  // audit: family name -> row count
  std::vector<std::string> warnings;       // advisory notes from the builders
};

AssembledModel assemble(const ProblemInstance& inst, ModelMode mode, double eps_override = -1.0);

// Feasible warm start built from a capacity-aware packing (tour-order
// chunking first, first-fit-decreasing fallback) with loads, times, battery,
// charging and grid values filled in. Empty when no packing validates.
std::optional<std::vector<double>> heuristic_start(const AssembledModel& am, const ProblemInstance& inst);

}  // namespace evgrid::milp
