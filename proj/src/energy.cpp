#include "evgrid/energy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evgrid::energy {

StationSet make_station_set(const ProblemInstance& inst) {
  StationSet set;
  set.station_of_node.assign(inst.num_nodes(), -1);
  double fleet_e_min = milp::kInf, fleet_e_max = 0.0;
  for (const auto& v : inst.vehicles) {
    fleet_e_min = std::min(fleet_e_min, v.battery_min);
    fleet_e_max = std::max(fleet_e_max, v.battery_max);
  }
  bool depot_declared = false;
  for (const auto& st : inst.stations) {
    StationSet::Entry e;
    e.transport_node = st.transport_node;
    e.grid_node = st.grid_node;
    e.t_min = st.min_charge_time;
    e.t_max = st.max_charge_time;
    e.grid_coupled = true;
    if (st.has_power_bounds) {
      e.power_min = st.power_min;
      e.power_max = st.power_max;
    } else {
      // default box: the fleet's battery energy bounds stand in for power
      e.power_min = fleet_e_min;
      e.power_max = fleet_e_max;
    }
    if (st.transport_node == 0) depot_declared = true;
    set.station_of_node[st.transport_node] = set.size();
    set.entries.push_back(e);
  }
  if (!depot_declared) {
    StationSet::Entry e;
    e.transport_node = 0;
    e.grid_node = -1;
    e.t_min = 0.0;
    e.t_max = inst.horizon;
    e.power_min = fleet_e_min;
    e.power_max = fleet_e_max;
    e.grid_coupled = false;  // depot recharge happens after the window
    set.station_of_node[0] = set.size();
    set.entries.push_back(e);
  }
  return set;
}

EnergyVariables register_energy_variables(milp::Model& m, const ProblemInstance& inst,
                                          const StationSet& stations) {
  EnergyVariables vars;
  const int n = inst.num_nodes();
  const int nv = static_cast<int>(inst.vehicles.size());
  vars.nk = stations.size();
  vars.nv = nv;
  for (int j = 0; j < n; ++j)
    for (int v = 0; v < nv; ++v)
      vars.e.push_back(m.add_var("e[" + inst.node_names[j] + "," + std::to_string(v) + "]",
                                 inst.vehicles[v].battery_min, inst.vehicles[v].battery_max));
  for (int k = 0; k < stations.size(); ++k) {
    const auto& st = stations.entries[k];
    const std::string tag = inst.node_names[st.transport_node];
    for (int v = 0; v < nv; ++v) vars.tau.push_back(m.add_var("tau[" + tag + "," + std::to_string(v) + "]", 0.0, st.t_max));
    for (int v = 0; v < nv; ++v) vars.y.push_back(m.add_var("y[" + tag + "," + std::to_string(v) + "]", 0.0, 1.0, true));
  }
  for (int k = 0; k < stations.size(); ++k) {
    const auto& st = stations.entries[k];
    vars.p_c.push_back(m.add_var("pc[" + inst.node_names[st.transport_node] + "]", st.power_min, st.power_max));
  }
  for (int k = 0; k < stations.size(); ++k) {
    const auto& st = stations.entries[k];
    const std::string tag = inst.node_names[st.transport_node];
    for (int v = 0; v < nv; ++v)
      vars.w.push_back(m.add_var("w[" + tag + "," + std::to_string(v) + "]", 0.0, st.power_max * st.t_max));
  }
  return vars;
}

std::vector<std::vector<int>> charge_time_lookup(const ProblemInstance& inst, const StationSet& stations,
                                                 const EnergyVariables& vars) {
  std::vector<std::vector<int>> lookup(inst.num_nodes(), std::vector<int>(vars.nv, -1));
  for (int node = 0; node < inst.num_nodes(); ++node) {
    const int k = stations.station_of_node[node];
    if (k < 0) continue;
    for (int v = 0; v < vars.nv; ++v) lookup[node][v] = vars.taui(k, v);
  }
  return lookup;
}

EnergyRows build_energy_constraints(milp::Model& m, const ProblemInstance& inst, const StationSet& stations,
                                    const vrp::RoutingVariables& rvars, const EnergyVariables& evars,
                                    const vrp::BigM& bigm) {
  EnergyRows rows;
  const int n = inst.num_nodes();
  const int nv = evars.nv;

  if (inst.stations.empty()) {
    double longest = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) longest = std::max(longest, inst.travel_time[i][j]);
    for (const auto& veh : inst.vehicles) {
      if (veh.battery_max - veh.battery_min < veh.consumption_rate * longest)
        rows.warnings.push_back("vehicle '" + veh.name + "' cannot cover the longest arc (" +
                                std::to_string(veh.consumption_rate * longest) +
                                " kWh) without en-route charging; the model is likely infeasible");
    }
  }

  // battery level propagation: e_jv <= e_iv + tau R - C x T + M(1 - x)
  for (int i = 0; i < n; ++i) {
    const int k_at_i = stations.station_of_node[i];
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      for (int v = 0; v < nv; ++v) {
        const auto& veh = inst.vehicles[v];
        std::vector<milp::LinearTerm> terms{{evars.ei(j, v), 1.0}, {evars.ei(i, v), -1.0}};
        if (k_at_i >= 0) terms.push_back({evars.taui(k_at_i, v), -veh.charge_rate});
        terms.push_back({rvars.xi(i, j, v), veh.consumption_rate * inst.travel_time[i][j] + bigm.m_energy});
        rows.propagation.push_back(m.add_constraint(
            "energy[" + inst.node_names[i] + "," + inst.node_names[j] + "," + std::to_string(v) + "]",
            std::move(terms), milp::Sense::LE, bigm.m_energy));
      }
    }
  }

  // per-arc travel time bound before recharge, one fleet-wide constant
  double t_rech = milp::kInf;
  for (const auto& veh : inst.vehicles) t_rech = std::min(t_rech, veh.max_time_before_recharge);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || inst.travel_time[i][j] == 0.0) continue;
      std::vector<milp::LinearTerm> terms;
      for (int v = 0; v < nv; ++v) terms.push_back({rvars.xi(i, j, v), inst.travel_time[i][j]});
      rows.travel_bound.push_back(m.add_constraint(
          "trech[" + inst.node_names[i] + "," + inst.node_names[j] + "]", std::move(terms), milp::Sense::LE, t_rech));
    }
  }

  // charging time window tied to the commitment variable
  for (int k = 0; k < stations.size(); ++k) {
    const auto& st = stations.entries[k];
    const std::string tag = inst.node_names[st.transport_node];
    for (int v = 0; v < nv; ++v) {
      rows.charge_bounds.push_back(m.add_constraint("chg_lo[" + tag + "," + std::to_string(v) + "]",
                                                    {{evars.taui(k, v), 1.0}, {evars.yi(k, v), -st.t_min}},
                                                    milp::Sense::GE, 0.0));
      rows.charge_bounds.push_back(m.add_constraint("chg_hi[" + tag + "," + std::to_string(v) + "]",
                                                    {{evars.taui(k, v), 1.0}, {evars.yi(k, v), -st.t_max}},
                                                    milp::Sense::LE, 0.0));
    }
  }

  // no overcharge past the battery ceiling
  for (int k = 0; k < stations.size(); ++k) {
    const auto& st = stations.entries[k];
    const std::string tag = inst.node_names[st.transport_node];
    for (int v = 0; v < nv; ++v) {
      rows.no_overcharge.push_back(m.add_constraint(
          "nochg[" + tag + "," + std::to_string(v) + "]",
          {{evars.ei(st.transport_node, v), 1.0}, {evars.taui(k, v), inst.vehicles[v].charge_rate}},
          milp::Sense::LE, inst.vehicles[v].battery_max));
    }
  }
  return rows;
}

std::vector<int> build_mccormick(milp::Model& m, const StationSet& stations, const EnergyVariables& vars) {
  std::vector<int> rows;
  for (int k = 0; k < stations.size(); ++k) {
    const auto& st = stations.entries[k];
    if (st.power_min > st.power_max || st.t_min > st.t_max)
      throw std::invalid_argument("inverted envelope box at station " + std::to_string(k));
    for (int v = 0; v < vars.nv; ++v) {
      rows.push_back(m.add_constraint(
          "mcc_a[" + std::to_string(k) + "," + std::to_string(v) + "]",
          {{vars.wi(k, v), 1.0}, {vars.taui(k, v), -st.power_max}, {vars.p_c[k], -st.t_min}},
          milp::Sense::LE, -st.power_max * st.t_min));
      rows.push_back(m.add_constraint(
          "mcc_b[" + std::to_string(k) + "," + std::to_string(v) + "]",
          {{vars.wi(k, v), 1.0}, {vars.p_c[k], -st.t_max}, {vars.taui(k, v), -st.power_min}},
          milp::Sense::LE, -st.power_min * st.t_max));
    }
  }
  return rows;
}

double mccormick_upper(double p, double tau, double p_lo, double p_hi, double t_lo, double t_hi) {
  const double plane_a = p_hi * tau + p * t_lo - p_hi * t_lo;
  const double plane_b = p * t_hi + p_lo * tau - p_lo * t_hi;
  return std::min(plane_a, plane_b);
}

BatteryTrace battery_trace(const vrp::Route& route, std::span<const double> values,
                           const ProblemInstance& inst, const StationSet& stations,
                           const EnergyVariables& evars) {
  BatteryTrace trace;
  trace.vehicle = route.vehicle;
  const int v = route.vehicle;
  if (route.nodes.empty()) {
    BatteryTrace::Stop stop;
    stop.node = 0;
    stop.energy_on_arrival = values[evars.ei(0, v)];
    trace.stops.push_back(stop);
    return trace;
  }
  for (size_t s = 0; s < route.nodes.size(); ++s) {
    const int node = route.nodes[s];
    BatteryTrace::Stop stop;
    stop.node = node;
    stop.energy_on_arrival = values[evars.ei(node, v)];
    const int k = stations.station_of_node[node];
    if (k >= 0 && s + 1 < route.nodes.size())
      stop.charge_added = values[evars.taui(k, v)] * inst.vehicles[v].charge_rate;
    trace.stops.push_back(stop);
  }
  return trace;
}

}  // namespace evgrid::energy
