#include "evgrid/assemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace evgrid::milp {

const char* to_string(ModelMode m) {
  return m == ModelMode::Deterministic ? "det" : "cc";
}

AssembledModel assemble(const ProblemInstance& inst, ModelMode mode, double eps_override) {
  AssembledModel am;
  am.mode = mode;
  am.risk = stochastic::make_risk_spec(inst, eps_override);
  const double zmax = mode == ModelMode::ChanceConstrained ? stochastic::max_quantile(am.risk) : 0.0;
  am.bigm = vrp::compute_big_m(inst, zmax);

  Model& m = am.model;
  am.routing = vrp::register_routing_variables(m, inst);
  am.stations = energy::make_station_set(inst);
  am.energy = energy::register_energy_variables(m, inst, am.stations);
  am.grid = grid::register_grid_variables(m, inst.grid, /*with_coupling=*/true);

  // objective: travel time cost on arcs, electricity cost on charged energy
  for (int i = 0; i < inst.num_nodes(); ++i)
    for (int j = 0; j < inst.num_nodes(); ++j)
      for (int v = 0; v < am.routing.nv; ++v)
        m.set_objective(am.routing.xi(i, j, v), inst.cost_time * inst.travel_time[i][j]);
  for (int k = 0; k < am.stations.size(); ++k)
    for (int v = 0; v < am.energy.nv; ++v) m.set_objective(am.energy.wi(k, v), inst.cost_energy);

  const auto charge_at = energy::charge_time_lookup(inst, am.stations, am.energy);

  std::function<std::vector<int>()> load_family;
  if (mode == ModelMode::ChanceConstrained) {
    load_family = [&]() { return stochastic::reformulate_chance_constraints(m, inst, am.routing, am.bigm, am.risk); };
  }
  const vrp::RoutingRows routing_rows =
      vrp::build_routing_constraints(m, inst, am.routing, am.bigm, charge_at, load_family);

  const energy::EnergyRows energy_rows =
      energy::build_energy_constraints(m, inst, am.stations, am.routing, am.energy, am.bigm);
  am.warnings = energy_rows.warnings;
  const std::vector<int> mcc = energy::build_mccormick(m, am.stations, am.energy);
  const std::vector<int> ldf = grid::build_lindistflow(m, inst.grid, am.grid);
  const std::vector<int> cpl = grid::couple_charging(m, inst, am.stations, am.energy, am.grid);

  am.family_rows = {
      {"assignment", static_cast<int>(routing_rows.assignment.size())},
      {"flow", static_cast<int>(routing_rows.flow.size())},
      {"depot_load", static_cast<int>(routing_rows.depot_load.size())},
      {"load", static_cast<int>(routing_rows.load_propagation.size())},
      {"capacity", static_cast<int>(routing_rows.capacity.size())},
      {"subtour", static_cast<int>(routing_rows.subtour.size())},
      {"time", static_cast<int>(routing_rows.time_propagation.size())},
      {"energy", static_cast<int>(energy_rows.propagation.size())},
      {"travel_bound", static_cast<int>(energy_rows.travel_bound.size())},
      {"charge_bounds", static_cast<int>(energy_rows.charge_bounds.size())},
      {"no_overcharge", static_cast<int>(energy_rows.no_overcharge.size())},
      {"mccormick", static_cast<int>(mcc.size())},
      {"lindistflow", static_cast<int>(ldf.size())},
      {"coupling", static_cast<int>(cpl.size())},
  };
  return am;
}

namespace {

struct RoutePlan {
  std::vector<int> nodes;       // customers only, in visit order
  std::vector<double> arrival;  // per visited customer, then the return time last
  std::vector<double> energy;   // arrival energy per visited customer
  std::vector<double> tau;      // charge time per visited customer (0 off-station)
  std::vector<double> load;     // planned load after each customer
  double l0 = 0.0;
  double return_energy = 0.0;
  double return_time = 0.0;
};

struct Packer {
  const ProblemInstance& inst;
  const energy::StationSet& stations;
  std::vector<double> buffer;  // per node quantile * sigma

  double net_gain(int j) const {
    return inst.demand.mean_pickup[j] - inst.demand.mean_dropoff[j] + buffer[j];
  }

  // load-only feasibility of a candidate customer set in tour order
  bool load_fits(const std::vector<int>& members, double capacity) const {
    double l0 = 0.0;
    for (int j : members) l0 += inst.demand.mean_dropoff[j];
    if (l0 > capacity + 1e-9) return false;
    double load = l0;
    for (int j : members) {
      load = std::max(0.0, load + net_gain(j));
      if (load > capacity + 1e-9) return false;
    }
    return true;
  }

  // Full simulation with times, battery and minimal charging. Tries charging
  // subsets from cheapest upward; returns false when none passes.
  bool simulate(const std::vector<int>& members, int vehicle, RoutePlan* plan) const {
    const auto& veh = inst.vehicles[vehicle];
    const auto& d = inst.demand;
    std::vector<int> seq{0};
    seq.insert(seq.end(), members.begin(), members.end());
    seq.push_back(0);
    const int len = static_cast<int>(seq.size());

    std::vector<int> station_stops;
    for (int s = 1; s + 1 < len; ++s)
      if (stations.station_of_node[seq[s]] >= 0) station_stops.push_back(s);

    for (int mask = 0; mask < (1 << station_stops.size()); ++mask) {
      std::vector<char> active(len, 0);
      for (size_t b = 0; b < station_stops.size(); ++b)
        if (mask & (1 << b)) active[station_stops[b]] = 1;

      std::vector<double> to_refuel(len, 0.0);
      for (int s = len - 2; s >= 0; --s) {
        const double leg = veh.consumption_rate * inst.travel_time[seq[s]][seq[s + 1]];
        const bool refuel_next = (s + 1 == len - 1) || active[s + 1];
        to_refuel[s] = leg + (refuel_next ? 0.0 : to_refuel[s + 1]);
      }

      RoutePlan cand;
      cand.nodes = members;
      double e = veh.battery_max;
      double t = -1.0, tau_prev = 0.0;
      bool ok = true;
      for (int s = 1; s < len && ok; ++s) {
        const int j = seq[s];
        const double travel = inst.travel_time[seq[s - 1]][j];
        e -= veh.consumption_rate * travel;
        if (e < veh.battery_min - 1e-9) {
          ok = false;
          break;
        }
        const double et = j == 0 ? 0.0 : d.earliest[j];
        const double lt = j == 0 ? inst.horizon : d.latest[j];
        t = t < 0 ? et : std::max(et, t + tau_prev + travel);
        if (t > lt + 1e-9) {
          ok = false;
          break;
        }
        tau_prev = 0.0;
        if (s < len - 1) {
          double tau = 0.0;
          if (active[s]) {
            const auto& st = stations.entries[stations.station_of_node[j]];
            const double need = std::max(0.0, to_refuel[s] + veh.battery_min - e);
            tau = std::max(need / veh.charge_rate, st.t_min);
            if (tau > st.t_max + 1e-9 || e + tau * veh.charge_rate > veh.battery_max + 1e-9) {
              ok = false;
              break;
            }
          }
          cand.arrival.push_back(t);
          cand.energy.push_back(e);
          cand.tau.push_back(tau);
          e = std::min(e + tau * veh.charge_rate, veh.battery_max);
          tau_prev = tau;
        } else {
          cand.return_time = t;
          cand.return_energy = e;
        }
      }
      if (!ok) continue;
      cand.l0 = 0.0;
      for (int j : members) cand.l0 += d.mean_dropoff[j];
      double load = cand.l0;
      for (int j : members) {
        load = std::max(0.0, load + net_gain(j));
        cand.load.push_back(load);
      }
      if (cand.l0 > veh.capacity + 1e-9 ||
          (!cand.load.empty() && *std::max_element(cand.load.begin(), cand.load.end()) > veh.capacity + 1e-9))
        continue;
      *plan = std::move(cand);
      return true;
    }
    return false;
  }
};

std::vector<int> nearest_neighbour_order(const ProblemInstance& inst) {
  const int n = inst.num_nodes();
  std::vector<char> used(n, 0);
  std::vector<int> tour;
  int cur = 0;
  used[0] = 1;
  for (int step = 1; step < n; ++step) {
    int best = -1;
    for (int j = 1; j < n; ++j) {
      if (used[j]) continue;
      if (best < 0 || inst.travel_time[cur][j] < inst.travel_time[cur][best]) best = j;
    }
    used[best] = 1;
    tour.push_back(best);
    cur = best;
  }
  return tour;
}

}  // namespace

std::optional<std::vector<double>> heuristic_start(const AssembledModel& am, const ProblemInstance& inst) {
  const int n = inst.num_nodes();
  const int nv = am.routing.nv;
  Packer packer{inst, am.stations, {}};
  packer.buffer.assign(n, 0.0);
  if (am.mode == ModelMode::ChanceConstrained)
    for (int j = 1; j < n; ++j) packer.buffer[j] = am.risk.quantile[j] * am.risk.sigma[j];

  const std::vector<int> tour = nearest_neighbour_order(inst);
  std::vector<int> tour_pos(n, 0);
  for (size_t i = 0; i < tour.size(); ++i) tour_pos[tour[i]] = static_cast<int>(i);

  // strategy A: chunk the tour greedily; strategy B: first-fit-decreasing
  std::vector<std::vector<std::vector<int>>> packings;
  {
    std::vector<std::vector<int>> chunks;
    std::vector<int> cur;
    for (int j : tour) {
      std::vector<int> cand = cur;
      cand.push_back(j);
      const double cap = inst.vehicles[std::min(chunks.size(), static_cast<size_t>(nv - 1))].capacity;
      if (packer.load_fits(cand, cap)) {
        cur = std::move(cand);
      } else {
        if (!cur.empty()) chunks.push_back(cur);
        cur = {j};
      }
    }
    if (!cur.empty()) chunks.push_back(cur);
    if (static_cast<int>(chunks.size()) <= nv) packings.push_back(std::move(chunks));
  }
  {
    std::vector<int> items(tour);
    std::sort(items.begin(), items.end(), [&](int a, int b) {
      const double wa = std::max(inst.demand.mean_dropoff[a], packer.net_gain(a));
      const double wb = std::max(inst.demand.mean_dropoff[b], packer.net_gain(b));
      if (wa != wb) return wa > wb;
      return a < b;
    });
    std::vector<std::vector<int>> bins;
    bool ok = true;
    for (int j : items) {
      bool placed = false;
      for (size_t b = 0; b < bins.size() && !placed; ++b) {
        std::vector<int> cand = bins[b];
        cand.push_back(j);
        std::sort(cand.begin(), cand.end(), [&](int a, int c) { return tour_pos[a] < tour_pos[c]; });
        if (packer.load_fits(cand, inst.vehicles[b].capacity)) {
          bins[b] = std::move(cand);
          placed = true;
        }
      }
      if (!placed) {
        if (static_cast<int>(bins.size()) >= nv) {
          ok = false;
          break;
        }
        bins.push_back({j});
      }
    }
    if (ok) packings.push_back(std::move(bins));
  }
  // fewer routes first: travel cost favors thin fleets
  std::stable_sort(packings.begin(), packings.end(),
                   [](const auto& a, const auto& b) { return a.size() < b.size(); });

  for (const auto& packing : packings) {
    std::vector<RoutePlan> plans(nv);
    std::vector<bool> deployed(nv, false);
    bool ok = true;
    for (size_t r = 0; r < packing.size() && ok; ++r) {
      deployed[r] = true;
      ok = packer.simulate(packing[r], static_cast<int>(r), &plans[r]);
    }
    if (!ok) continue;

    // assemble the full variable vector
    std::vector<double> vals(am.model.num_vars(), 0.0);
    for (int v = 0; v < am.model.num_vars(); ++v) {
      const auto& def = am.model.var(v);
      vals[v] = def.lb > -kInf ? def.lb : 0.0;
    }
    // defaults: unvisited times at the window start, batteries full
    for (int j = 0; j < n; ++j)
      for (int v = 0; v < nv; ++v) {
        vals[am.routing.ti(j, v)] = j == 0 ? 0.0 : inst.demand.earliest[j];
        vals[am.energy.ei(j, v)] = inst.vehicles[v].battery_max;
      }
    for (int k = 0; k < am.stations.size(); ++k) vals[am.energy.p_c[k]] = am.stations.entries[k].power_max;

    for (int v = 0; v < nv; ++v) {
      if (!deployed[v]) continue;
      const RoutePlan& plan = plans[v];
      int prev = 0;
      for (size_t s = 0; s < plan.nodes.size(); ++s) {
        const int j = plan.nodes[s];
        vals[am.routing.xi(prev, j, v)] = 1.0;
        vals[am.routing.ti(j, v)] = plan.arrival[s];
        vals[am.routing.li(j, v)] = plan.load[s];
        vals[am.routing.pi(j)] = static_cast<double>(s + 1);
        vals[am.energy.ei(j, v)] = plan.energy[s];
        const int k = am.stations.station_of_node[j];
        if (k >= 0) {
          vals[am.energy.taui(k, v)] = plan.tau[s];
          vals[am.energy.yi(k, v)] = plan.tau[s] > 0 ? 1.0 : 0.0;
        }
        prev = j;
      }
      vals[am.routing.xi(prev, 0, v)] = 1.0;
      vals[am.routing.ti(0, v)] = plan.return_time;
      vals[am.routing.l0[v]] = plan.l0;
      // depot battery: arrive with the return energy, recharge to full
      const auto& veh = inst.vehicles[v];
      const double e0 = std::min(plan.return_energy, veh.battery_max);
      vals[am.energy.ei(0, v)] = e0;
      const int k0 = am.stations.station_of_node[0];
      const double tau0 = (veh.battery_max - e0) / veh.charge_rate;
      vals[am.energy.taui(k0, v)] = tau0;
      vals[am.energy.yi(k0, v)] = tau0 > 0 ? 1.0 : 0.0;
    }

    // grid: coupled consumption, then a sweep fills flows, voltages, slack gen
    const auto& g = inst.grid;
    std::vector<double> pd(g.num_nodes(), 0.0), qd(g.num_nodes(), 0.0);
    for (int node = 0; node < g.num_nodes(); ++node) {
      pd[node] = g.nodes[node].base_p;
      qd[node] = g.nodes[node].base_q;
    }
    for (int k = 0; k < am.stations.size(); ++k) {
      const auto& st = am.stations.entries[k];
      if (!st.grid_coupled) continue;
      for (int v = 0; v < nv; ++v)
        if (vals[am.energy.yi(k, v)] > 0.5) pd[st.grid_node] += inst.vehicles[v].charge_rate;
    }
    const grid::SweepResult sweep = grid::radial_sweep(g, pd, qd, 1.0);
    for (int node = 0; node < g.num_nodes(); ++node) {
      vals[am.grid.p_d[node]] = pd[node];
      vals[am.grid.u[node]] = sweep.u[node];
      vals[am.grid.p_gen[node]] = node == g.slack ? sweep.slack_p : 0.0;
      vals[am.grid.q_gen[node]] = node == g.slack ? sweep.slack_q : 0.0;
    }
    for (size_t l = 0; l < g.lines.size(); ++l) {
      vals[am.grid.p_flow[l]] = sweep.p_flow[l];
      vals[am.grid.q_flow[l]] = sweep.q_flow[l];
    }

    if (am.model.is_feasible(vals, 1e-6)) return vals;
  }
  return std::nullopt;
}

}  // namespace evgrid::milp
