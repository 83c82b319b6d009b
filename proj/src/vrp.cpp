#include "evgrid/vrp.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace evgrid::vrp {

BigM compute_big_m(const ProblemInstance& inst, double zmax) {
  BigM m;
  const int n = inst.num_nodes();
  double max_cap = 0.0, max_demand = 0.0;
  for (const auto& v : inst.vehicles) max_cap = std::max(max_cap, v.capacity);
  for (int j = 1; j < n; ++j)
    max_demand = std::max(max_demand, inst.demand.mean_pickup[j] + zmax * inst.demand.net_std[j]);
  m.m_load = max_cap + max_demand;

  double max_lt = 0.0, max_tt = 0.0, max_charge = 0.0;
  for (int j = 1; j < n; ++j) max_lt = std::max(max_lt, inst.demand.latest[j]);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) max_tt = std::max(max_tt, inst.travel_time[i][j]);
  for (const auto& s : inst.stations) max_charge = std::max(max_charge, s.max_charge_time);
  m.m_time = max_lt + max_charge + max_tt;

  double max_batt = 0.0, max_rate = 0.0, max_cons = 0.0;
  for (const auto& v : inst.vehicles) {
    max_batt = std::max(max_batt, v.battery_max);
    max_rate = std::max(max_rate, v.charge_rate);
    max_cons = std::max(max_cons, v.consumption_rate);
  }
  m.m_energy = max_batt + max_charge * max_rate + max_cons * max_tt;
  // degenerate customer-free instances still need positive constants
  m.m_load = std::max(m.m_load, 1.0);
  m.m_time = std::max(m.m_time, 1.0);
  m.m_energy = std::max(m.m_energy, 1.0);
  return m;
}

RoutingVariables register_routing_variables(milp::Model& m, const ProblemInstance& inst) {
  RoutingVariables vars;
  const int n = inst.num_nodes();
  const int nv = static_cast<int>(inst.vehicles.size());
  vars.n0 = n;
  vars.nv = nv;
  vars.x.resize(static_cast<size_t>(n) * n * nv);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int v = 0; v < nv; ++v) {
        const double ub = i == j ? 0.0 : 1.0;
        vars.x[(static_cast<size_t>(i) * n + j) * nv + v] =
            m.add_var("x[" + inst.node_names[i] + "," + inst.node_names[j] + "," + std::to_string(v) + "]", 0.0,
                      ub, true);
      }
    }
  }
  for (int v = 0; v < nv; ++v)
    vars.l0.push_back(m.add_var("l0[" + std::to_string(v) + "]", 0.0, inst.vehicles[v].capacity));
  for (int j = 1; j < n; ++j)
    for (int v = 0; v < nv; ++v)
      vars.load.push_back(m.add_var("l[" + inst.node_names[j] + "," + std::to_string(v) + "]", 0.0,
                                    inst.vehicles[v].capacity));
  for (int j = 0; j < n; ++j) {
    const double et = j == 0 ? 0.0 : inst.demand.earliest[j];
    const double lt = j == 0 ? inst.horizon : inst.demand.latest[j];
    for (int v = 0; v < nv; ++v)
      vars.time.push_back(m.add_var("t[" + inst.node_names[j] + "," + std::to_string(v) + "]", et, lt));
  }
  for (int j = 1; j < n; ++j)
    vars.order.push_back(m.add_var("pi[" + inst.node_names[j] + "]", 0.0, static_cast<double>(n)));
  return vars;
}

std::vector<int> build_load_propagation(milp::Model& m, const ProblemInstance& inst,
                                        const RoutingVariables& vars, const BigM& bigm) {
  std::vector<int> rows;
  const int n = inst.num_nodes();
  for (int i = 0; i < n; ++i) {
    for (int j = 1; j < n; ++j) {
      if (i == j) continue;
      for (int v = 0; v < vars.nv; ++v) {
        // l_jv >= l_iv - D_j + P_j - M(1 - x_ijv)
        const int li = i == 0 ? vars.l0[v] : vars.li(i, v);
        const double rhs = inst.demand.mean_pickup[j] - inst.demand.mean_dropoff[j] - bigm.m_load;
        rows.push_back(m.add_constraint(
            "load[" + inst.node_names[i] + "," + inst.node_names[j] + "," + std::to_string(v) + "]",
            {{vars.li(j, v), 1.0}, {li, -1.0}, {vars.xi(i, j, v), -bigm.m_load}}, milp::Sense::GE, rhs));
      }
    }
  }
  return rows;
}

RoutingRows build_routing_constraints(milp::Model& m, const ProblemInstance& inst, const RoutingVariables& vars,
                                      const BigM& bigm, const std::vector<std::vector<int>>& charge_time_at,
                                      const std::function<std::vector<int>()>& load_family) {
  const int n = inst.num_nodes();
  const int nv = vars.nv;
  if (vars.n0 != n || static_cast<int>(inst.vehicles.size()) != nv)
    throw std::invalid_argument("routing variables do not match the instance dimensions");
  RoutingRows rows;

  // every customer is served by exactly one vehicle
  for (int j = 1; j < n; ++j) {
    std::vector<milp::LinearTerm> terms;
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      for (int v = 0; v < nv; ++v) terms.push_back({vars.xi(i, j, v), 1.0});
    }
    rows.assignment.push_back(m.add_constraint("assign[" + inst.node_names[j] + "]", std::move(terms),
                                               milp::Sense::EQ, 1.0));
  }

  // flow conservation at customer nodes
  for (int s = 1; s < n; ++s) {
    for (int v = 0; v < nv; ++v) {
      std::vector<milp::LinearTerm> terms;
      for (int i = 0; i < n; ++i) {
        if (i == s) continue;
        terms.push_back({vars.xi(i, s, v), 1.0});
        terms.push_back({vars.xi(s, i, v), -1.0});
      }
      rows.flow.push_back(m.add_constraint("flow[" + inst.node_names[s] + "," + std::to_string(v) + "]",
                                           std::move(terms), milp::Sense::EQ, 0.0));
    }
  }

  // initial load covers every drop-off on the tour
  for (int v = 0; v < nv; ++v) {
    std::vector<milp::LinearTerm> terms{{vars.l0[v], 1.0}};
    for (int i = 0; i < n; ++i) {
      for (int j = 1; j < n; ++j) {
        if (i == j) continue;
        const double dj = inst.demand.mean_dropoff[j];
        if (dj != 0.0) terms.push_back({vars.xi(i, j, v), -dj});
      }
    }
    rows.depot_load.push_back(
        m.add_constraint("depot_load[" + std::to_string(v) + "]", std::move(terms), milp::Sense::EQ, 0.0));
  }

  rows.load_propagation = load_family ? load_family() : build_load_propagation(m, inst, vars, bigm);

  // explicit capacity rows (the load bounds already enforce them)
  for (int j = 1; j < n; ++j)
    for (int v = 0; v < nv; ++v)
      rows.capacity.push_back(m.add_constraint("cap[" + inst.node_names[j] + "," + std::to_string(v) + "]",
                                               {{vars.li(j, v), 1.0}}, milp::Sense::LE,
                                               inst.vehicles[v].capacity));

  // MTZ ordering between customers
  for (int i = 1; i < n; ++i) {
    for (int j = 1; j < n; ++j) {
      if (i == j) continue;
      std::vector<milp::LinearTerm> terms{{vars.pi(j), 1.0}, {vars.pi(i), -1.0}};
      for (int v = 0; v < nv; ++v) terms.push_back({vars.xi(i, j, v), -static_cast<double>(n)});
      rows.subtour.push_back(m.add_constraint("mtz[" + inst.node_names[i] + "," + inst.node_names[j] + "]",
                                              std::move(terms), milp::Sense::GE, 1.0 - n));
    }
  }

  // arrival time propagation from customers; charging dwell applies when the
  // tail node hosts a station
  for (int i = 1; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      for (int v = 0; v < nv; ++v) {
        std::vector<milp::LinearTerm> terms{{vars.ti(j, v), 1.0}, {vars.ti(i, v), -1.0}};
        if (!charge_time_at.empty() && charge_time_at[i][v] >= 0) terms.push_back({charge_time_at[i][v], -1.0});
        terms.push_back({vars.xi(i, j, v), -(inst.travel_time[i][j] + bigm.m_time)});
        rows.time_propagation.push_back(
            m.add_constraint("time[" + inst.node_names[i] + "," + inst.node_names[j] + "," + std::to_string(v) + "]",
                             std::move(terms), milp::Sense::GE, -bigm.m_time));
      }
    }
  }
  return rows;
}

std::vector<Route> extract_routes(std::span<const double> values, const RoutingVariables& vars,
                                  const ProblemInstance& inst, double int_tol) {
  (void)inst;
  const int n = vars.n0;
  std::vector<Route> routes;
  for (int v = 0; v < vars.nv; ++v) {
    Route route;
    route.vehicle = v;
    std::vector<std::vector<int>> next(n);
    int arc_count = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const double xv = values[vars.xi(i, j, v)];
        if (xv > 1.0 + int_tol || (xv > int_tol && xv < 1.0 - int_tol))
          throw std::invalid_argument("fractional arc value " + std::to_string(xv) + " for vehicle " +
                                      std::to_string(v));
        if (xv > 0.5) {
          next[i].push_back(j);
          ++arc_count;
        }
      }
    }
    if (arc_count == 0) {
      routes.push_back(std::move(route));
      continue;
    }
    route.nodes.push_back(0);
    int used = 0;
    std::vector<size_t> cursor(n, 0);
    int cur = 0;
    while (true) {
      if (cursor[cur] >= next[cur].size()) break;
      const int nxt = next[cur][cursor[cur]++];
      route.nodes.push_back(nxt);
      ++used;
      cur = nxt;
      if (cur == 0 && cursor[0] >= next[0].size()) break;
    }
    if (used != arc_count || route.nodes.back() != 0)
      throw std::invalid_argument("arc set of vehicle " + std::to_string(v) +
                                  " is not a depot-rooted tour (solver bug)");
    routes.push_back(std::move(route));
  }
  return routes;
}

namespace {

struct RouteSim {
  const ProblemInstance& inst;
  std::span<const double> buffer;  // per-node quantile * sigma, may be empty

  double buffered_pickup(int j) const {
    const double b = buffer.empty() ? 0.0 : buffer[j];
    return inst.demand.mean_pickup[j] - inst.demand.mean_dropoff[j] + b;
  }

  int station_index(int node) const {
    for (size_t k = 0; k < inst.stations.size(); ++k)
      if (inst.stations[k].transport_node == node) return static_cast<int>(k);
    return -1;
  }

  // Replays one route under a fixed set of active charging stops.
  // Appends violations; returns count added.
  int replay(const Route& route, const std::vector<char>& active, std::vector<Violation>* out,
             double tol) const {
    int added = 0;
    const auto& d = inst.demand;
    const auto& veh = inst.vehicles[route.vehicle];
    auto violate = [&](const std::string& family, int node, double slack, const std::string& detail) {
      if (out) out->push_back({family, route.vehicle, node, slack, detail});
      ++added;
    };
    const auto& seq = route.nodes;
    const int len = static_cast<int>(seq.size());

    // loads: start with every drop-off on board
    double load = 0.0;
    for (int s = 1; s + 1 < len; ++s) load += d.mean_dropoff[seq[s]];
    if (load > veh.capacity + tol) violate("capacity", 0, veh.capacity - load, "initial load exceeds capacity");
    for (int s = 1; s + 1 < len; ++s) {
      const int j = seq[s];
      load = std::max(0.0, load + buffered_pickup(j));  // net change is P - D plus the buffer
      if (load > veh.capacity + tol) violate("capacity", j, veh.capacity - load, "load exceeds capacity");
    }

    // consumption to the next active refuel point (or the final depot)
    std::vector<double> to_refuel(len, 0.0);
    for (int s = len - 2; s >= 0; --s) {
      const double leg = veh.consumption_rate * inst.travel_time[seq[s]][seq[s + 1]];
      const bool next_refuels = (s + 1 == len - 1) || (active[s + 1] != 0);
      to_refuel[s] = leg + (next_refuels ? 0.0 : to_refuel[s + 1]);
    }

    double t = -1.0;  // departure time is free; set on the first customer
    double e = veh.battery_max;
    double tau_prev = 0.0;
    for (int s = 1; s < len; ++s) {
      const int j = seq[s];
      const double travel = inst.travel_time[seq[s - 1]][j];
      e -= veh.consumption_rate * travel;
      if (e < veh.battery_min - tol) violate("battery", j, e - veh.battery_min, "battery below minimum");
      const double et = j == 0 ? 0.0 : d.earliest[j];
      const double lt = j == 0 ? inst.horizon : d.latest[j];
      t = t < 0 ? std::max(et, 0.0) : std::max(et, t + tau_prev + travel);
      if (t > lt + tol) violate("time_window", j, lt - t, "arrival after the latest time");
      tau_prev = 0.0;
      if (s < len - 1 && active[s]) {
        const int k = station_index(j);
        const auto& st = inst.stations[k];
        const double need = std::max(0.0, to_refuel[s] + veh.battery_min - e);
        double tau = std::max(need / veh.charge_rate, st.min_charge_time);
        if (tau > st.max_charge_time + tol)
          violate("charge_time", j, st.max_charge_time - tau, "charge need exceeds the station maximum");
        if (e + tau * veh.charge_rate > veh.battery_max + tol)
          violate("overcharge", j, veh.battery_max - e - tau * veh.charge_rate, "charging past battery capacity");
        e = std::min(e + tau * veh.charge_rate, veh.battery_max);
        tau_prev = tau;
      }
    }
    return added;
  }
};

}  // namespace

std::string ValidationReport::to_text() const {
  std::ostringstream os;
  for (const auto& v : violations) {
    os << v.family << " vehicle=" << v.vehicle << " node=" << v.node << " slack=" << v.slack << ' ' << v.detail
       << '\n';
  }
  return os.str();
}

ValidationReport validate_routes(std::span<const Route> routes, const ProblemInstance& inst, double tol,
                                 std::span<const double> load_quantile) {
  ValidationReport report;
  const int n = inst.num_nodes();

  std::vector<int> visits(n, 0);
  for (const auto& route : routes) {
    if (route.nodes.empty()) continue;
    if (route.nodes.front() != 0 || route.nodes.back() != 0)
      report.violations.push_back({"structure", route.vehicle, route.nodes.front(), 0.0,
                                   "route does not start and end at the depot"});
    for (size_t s = 1; s + 1 < route.nodes.size(); ++s)
      if (route.nodes[s] != 0) ++visits[route.nodes[s]];
  }
  for (int j = 1; j < n; ++j) {
    if (visits[j] != 1)
      report.violations.push_back(
          {"assignment", -1, j, static_cast<double>(visits[j] - 1),
           visits[j] == 0 ? "customer never served" : "customer served more than once"});
  }

  RouteSim sim{inst, load_quantile};
  for (const auto& route : routes) {
    if (!route.deployed()) continue;
    // station stops along this route
    std::vector<int> station_stops;
    for (size_t s = 1; s + 1 < route.nodes.size(); ++s)
      if (sim.station_index(route.nodes[s]) >= 0) station_stops.push_back(static_cast<int>(s));
    const int patterns = 1 << station_stops.size();
    std::vector<Violation> best;
    bool ok = false;
    for (int mask = 0; mask < patterns && !ok; ++mask) {
      std::vector<char> active(route.nodes.size(), 0);
      for (size_t b = 0; b < station_stops.size(); ++b)
        if (mask & (1 << b)) active[station_stops[b]] = 1;
      std::vector<Violation> got;
      sim.replay(route, active, &got, tol);
      if (got.empty()) ok = true;
      else if (best.empty() || got.size() < best.size()) best = std::move(got);
    }
    if (!ok)
      for (auto& v : best) report.violations.push_back(std::move(v));
  }
  return report;
}

}  // namespace evgrid::vrp
