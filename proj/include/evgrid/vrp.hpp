#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "evgrid/instance.hpp"
#include "evgrid/model.hpp"

namespace evgrid::vrp {

struct BigM {
  double m_load = 0.0;    // passengers
  double m_time = 0.0;    // minutes
  double m_energy = 0.0;  // kWh
};

// M_load = max capacity + max_j(E[P_j] + zmax sigma_j)
// M_time = max_j LT_j + max_k Tbar_k + max_ij T_ij
// M_energy = max Ebar + max_k Tbar_k * max R + max C * max_ij T_ij
// zmax is the largest load quantile in play: 0 for the deterministic model,
// max_j Phi^-1(1-eps_j) clamped at 0 for the chance-constrained one.
BigM compute_big_m(const ProblemInstance& inst, double zmax = 0.0);

struct RoutingVariables {
  int n0 = 0;  // transport nodes including depot
  int nv = 0;
  std::vector<int> x;      // (i, j, v), diagonal fixed to zero
  std::vector<int> l0;     // per vehicle
  std::vector<int> load;   // (customer j >= 1, v)
  std::vector<int> time;   // (node j, v)
  std::vector<int> order;  // pi, customer j >= 1

  int xi(int i, int j, int v) const { return x[(i * n0 + j) * nv + v]; }
  int li(int j, int v) const { return load[(j - 1) * nv + v]; }
  int ti(int j, int v) const { return time[j * nv + v]; }
  int pi(int j) const { return order[j - 1]; }
};

// Bounds registered here: x binary, loads in [0, capacity] (including the
// depot load, which is what lets M_load switch rows off), arrival times in
// the node windows, pi in [0, |J0|].
RoutingVariables register_routing_variables(milp::Model& m, const ProblemInstance& inst);

// Per-family row emission. `charge_time_at` maps transport node -> tau
// variable for vehicle v (or -1), supplied by the energy module so the time
// propagation picks up charging dwell at stations.
struct RoutingRows {
  std::vector<int> assignment;
  std::vector<int> flow;
  std::vector<int> depot_load;
  std::vector<int> load_propagation;
  std::vector<int> capacity;
  std::vector<int> subtour;
  std::vector<int> time_propagation;
};

// `load_family`, when set, replaces the deterministic load-propagation
// family (it is emitted at the same position either way, so deterministic
// and chance-constrained matrices line up row by row).
RoutingRows build_routing_constraints(milp::Model& m, const ProblemInstance& inst, const RoutingVariables& vars,
                                      const BigM& bigm,
                                      const std::vector<std::vector<int>>& charge_time_at,
                                      const std::function<std::vector<int>()>& load_family = {});

// The deterministic load family alone:
//   l_jv >= l_iv - D_j + P_j - M(1 - x_ijv)
std::vector<int> build_load_propagation(milp::Model& m, const ProblemInstance& inst,
                                        const RoutingVariables& vars, const BigM& bigm);

struct Route {
  int vehicle = -1;
  std::vector<int> nodes;  // depot-rooted: 0, ..., 0; empty when undeployed
  bool deployed() const { return nodes.size() > 2; }
};

// Chains arcs with x > 0.5 per vehicle. Throws on fractional x beyond the
// tolerance or on arcs unreachable from the depot.
std::vector<Route> extract_routes(std::span<const double> values, const RoutingVariables& vars,
                                  const ProblemInstance& inst, double int_tol = 1e-6);

struct Violation {
  std::string family;
  int vehicle = -1;
  int node = -1;
  double slack = 0.0;  // negative = amount violated
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string to_text() const;  // one line per violation
};

// Replays each route: loads (with the quantile buffer when zquant is set),
// windows, capacity, and battery dynamics with minimal charging.
ValidationReport validate_routes(std::span<const Route> routes, const ProblemInstance& inst,
                                 double tol = 1e-6, std::span<const double> load_quantile = {});

}  // namespace evgrid::vrp
