#pragma once

#include <span>
#include <vector>

#include "evgrid/instance.hpp"
#include "evgrid/model.hpp"
#include "evgrid/vrp.hpp"

namespace evgrid::energy {

// Assembly-time view of the charging stations. The depot acts as a station
// with zero minimum dwell and the horizon as maximum, so vehicles recharge
// to full between tours; it is appended last unless the instance already
// declares a depot station, and it does not load the grid.
struct StationSet {
  struct Entry {
    int transport_node = -1;
    int grid_node = -1;
    double t_min = 0.0, t_max = 0.0;
    double power_min = 0.0, power_max = 0.0;  // envelope box for p^c
    bool grid_coupled = false;
  };
  std::vector<Entry> entries;
  std::vector<int> station_of_node;  // transport node -> station index or -1

  int size() const { return static_cast<int>(entries.size()); }
};

StationSet make_station_set(const ProblemInstance& inst);

struct EnergyVariables {
  int nk = 0, nv = 0;
  std::vector<int> e;       // (node j, v) battery level on arrival, within [Emin, Emax]
  std::vector<int> tau;     // (station k, v) charge duration, [0, t_max]
  std::vector<int> y;       // (station k, v) binary charging indicator
  std::vector<int> p_c;     // per station, charging power within its box
  std::vector<int> w;       // (station k, v) linearized power x duration

  int ei(int j, int v) const { return e[j * nv + v]; }
  int taui(int k, int v) const { return tau[k * nv + v]; }
  int yi(int k, int v) const { return y[k * nv + v]; }
  int wi(int k, int v) const { return w[k * nv + v]; }
};

EnergyVariables register_energy_variables(milp::Model& m, const ProblemInstance& inst, const StationSet& stations);

// tau variable per (transport node, vehicle), -1 when no station there;
// handed to the routing time propagation.
std::vector<std::vector<int>> charge_time_lookup(const ProblemInstance& inst, const StationSet& stations,
                                                 const EnergyVariables& vars);

struct EnergyRows {
  std::vector<int> propagation;      // battery dynamics along traveled arcs
  std::vector<int> travel_bound;     // per-arc travel time cap before recharge
  std::vector<int> charge_bounds;    // tmin y <= tau <= tmax y
  std::vector<int> no_overcharge;    // e + tau R <= Emax at stations
  // advisory only: vehicles whose usable battery cannot cover the longest arc
  // when no en-route stations exist
  std::vector<std::string> warnings;
};

EnergyRows build_energy_constraints(milp::Model& m, const ProblemInstance& inst, const StationSet& stations,
                                    const vrp::RoutingVariables& rvars, const EnergyVariables& evars,
                                    const vrp::BigM& bigm);

// The two upper envelope planes over the box [p_lo,p_hi] x [t_lo,t_hi]:
//   w <= p_hi tau + p t_lo - p_hi t_lo
//   w <= p t_hi + p_lo tau - p_lo t_hi
// The product carries positive cost in the objective, so only the upper
// planes are emitted.
std::vector<int> build_mccormick(milp::Model& m, const StationSet& stations, const EnergyVariables& vars);

// min of the two planes at a point; the tightness tests drive this directly
double mccormick_upper(double p, double tau, double p_lo, double p_hi, double t_lo, double t_hi);

struct BatteryTrace {
  struct Stop {
    int node = -1;
    double energy_on_arrival = 0.0;
    double charge_added = 0.0;
  };
  int vehicle = -1;
  std::vector<Stop> stops;
};

// Reconstructs the battery profile of a route from solved variable values.
BatteryTrace battery_trace(const vrp::Route& route, std::span<const double> values,
                           const ProblemInstance& inst, const StationSet& stations, const EnergyVariables& evars);

}  // namespace evgrid::energy
