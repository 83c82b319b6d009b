#pragma once

#include <span>
#include <string>
#include <vector>

#include "evgrid/model.hpp"

namespace evgrid {
struct ProblemInstance;
namespace energy {
struct StationSet;
struct EnergyVariables;
}  // namespace energy
}  // namespace evgrid

namespace evgrid::grid {

struct GridNode {
  std::string name;
  double base_p = 0.0;  // kW
  double base_q = 0.0;  // kVar
  double gen_p_min = 0.0, gen_p_max = 0.0;
  double gen_q_min = 0.0, gen_q_max = 0.0;
  double v_min = 0.95, v_max = 1.05;  // per unit
};

// Lines are oriented away from the slack node. Flow variables are positive
// when power is delivered downstream (toward `to`).
struct GridLine {
  int from = -1, to = -1;
  double r = 0.0, x = 0.0;
  double p_limit = milp::kInf, q_limit = milp::kInf;
};

struct GridNetwork {
  std::vector<GridNode> nodes;
  std::vector<GridLine> lines;
  int slack = 0;
  // flow limits are one-sided by default; this opt-in adds -limit lower bounds
  bool symmetric_flow_bounds = false;

  int node_index(const std::string& name) const;
  int num_nodes() const { return static_cast<int>(nodes.size()); }
};

// Throws if the line graph is not a tree rooted at the slack node.
// Returns parent line index per node (-1 for slack) in BFS order.
std::vector<int> check_radial(const GridNetwork& g);

struct GridVariables {
  std::vector<int> p_flow, q_flow;  // per line
  std::vector<int> p_gen, q_gen;    // per node
  std::vector<int> u;               // per node, squared voltage magnitude
  std::vector<int> p_d;             // per node, total consumption; empty unless coupled
};

GridVariables register_grid_variables(milp::Model& m, const GridNetwork& g, bool with_coupling);

// LinDistFlow rows: per-line active/reactive balance, the voltage drop
// u_m = u_n - 2(r p + x q), and a root balance closing the slack node.
// When `vars.p_d` is present the balance rows consume p_d instead of the
// static base load.
std::vector<int> build_lindistflow(milp::Model& m, const GridNetwork& g, const GridVariables& vars);

// p_d[n] = base load + sum of charge rates of vehicles charging at stations
// on n; plain p_d[n] = base load everywhere else.
std::vector<int> couple_charging(milp::Model& m, const ProblemInstance& inst,
                                 const energy::StationSet& stations,
                                 const energy::EnergyVariables& evars, const GridVariables& gvars);

struct SweepResult {
  std::vector<double> p_flow, q_flow;  // per line
  std::vector<double> u;               // per node
  double slack_p = 0.0, slack_q = 0.0; // injection required at the slack node
};

// Direct evaluator: aggregates net consumption downstream for flows, then
// propagates squared voltages from the slack (held at slack_u) to the leaves.
// Injections are net consumption (load minus generation), slack excluded.
SweepResult radial_sweep(const GridNetwork& g, std::span<const double> p_consumption,
                         std::span<const double> q_consumption, double slack_u = 1.0);

}  // namespace evgrid::grid
