#include "evgrid/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace evgrid::oracle {

namespace {

struct RouteCheck {
  bool feasible = false;
  double travel = 0.0;                        // minutes on the road
  std::vector<std::pair<int, double>> taus;   // (node, minutes) where charging happens
};

// Independent replay of one candidate route: loads with the optional buffer,
// earliest arrival times, battery dynamics departing full from the depot and
// charging as little as possible. Station subsets are enumerated outright.
RouteCheck check_route(const ProblemInstance& inst, int vehicle, const std::vector<int>& members,
                       std::span<const double> load_buffer) {
  RouteCheck out;
  const auto& veh = inst.vehicles[vehicle];
  const auto& d = inst.demand;

  double l0 = 0.0;
  for (int j : members) l0 += d.mean_dropoff[j];
  if (l0 > veh.capacity + 1e-9) return out;
  double load = l0;
  for (int j : members) {
    const double buf = load_buffer.empty() ? 0.0 : load_buffer[j];
    load = std::max(0.0, load - d.mean_dropoff[j] + d.mean_pickup[j] + buf);
    if (load > veh.capacity + 1e-9) return out;
  }

  std::vector<int> seq{0};
  seq.insert(seq.end(), members.begin(), members.end());
  seq.push_back(0);
  const int len = static_cast<int>(seq.size());
  double travel = 0.0;
  for (int s = 0; s + 1 < len; ++s) travel += inst.travel_time[seq[s]][seq[s + 1]];

  std::vector<int> station_idx(len, -1);
  std::vector<int> stops;
  for (int s = 1; s + 1 < len; ++s) {
    for (size_t k = 0; k < inst.stations.size(); ++k) {
      if (inst.stations[k].transport_node == seq[s]) {
        station_idx[s] = static_cast<int>(k);
        stops.push_back(s);
        break;
      }
    }
  }

  for (int mask = 0; mask < (1 << stops.size()); ++mask) {
    std::vector<char> active(len, 0);
    for (size_t b = 0; b < stops.size(); ++b)
      if (mask & (1 << b)) active[stops[b]] = 1;

    std::vector<double> to_refuel(len, 0.0);
    for (int s = len - 2; s >= 0; --s) {
      const double leg = veh.consumption_rate * inst.travel_time[seq[s]][seq[s + 1]];
      const bool refuel_next = (s + 1 == len - 1) || active[s + 1];
      to_refuel[s] = leg + (refuel_next ? 0.0 : to_refuel[s + 1]);
    }

    double e = veh.battery_max;
    double t = -1.0, tau_prev = 0.0;
    std::vector<std::pair<int, double>> taus;
    bool ok = true;
    for (int s = 1; s < len && ok; ++s) {
      const int j = seq[s];
      const double leg = inst.travel_time[seq[s - 1]][j];
      e -= veh.consumption_rate * leg;
      if (e < veh.battery_min - 1e-9) ok = false;
      if (!ok) break;
      const double et = j == 0 ? 0.0 : d.earliest[j];
      const double lt = j == 0 ? inst.horizon : d.latest[j];
      t = t < 0 ? et : std::max(et, t + tau_prev + leg);
      if (t > lt + 1e-9) ok = false;
      tau_prev = 0.0;
      if (ok && s < len - 1 && active[s]) {
        const auto& st = inst.stations[station_idx[s]];
        const double need = std::max(0.0, to_refuel[s] + veh.battery_min - e);
        const double tau = std::max(need / veh.charge_rate, st.min_charge_time);
        if (tau > st.max_charge_time + 1e-9 || e + tau * veh.charge_rate > veh.battery_max + 1e-9) {
          ok = false;
        } else {
          e += tau * veh.charge_rate;
          taus.emplace_back(j, tau);
          tau_prev = tau;
        }
      }
    }
    if (ok) {
      out.feasible = true;
      out.travel = travel;
      out.taus = std::move(taus);
      return out;
    }
  }
  return out;
}

}  // namespace

EnumeratedSolution enumerate_optimal(const ProblemInstance& inst, std::span<const double> load_buffer,
                                     int max_customers, std::vector<double>* all_objectives) {
  const int n = inst.num_customers();
  const int nv = static_cast<int>(inst.vehicles.size());
  if (n > max_customers)
    throw std::invalid_argument("instance has " + std::to_string(n) + " customers, oracle cap is " +
                                std::to_string(max_customers));

  // route cost and charging are separable per (vehicle, ordered member list):
  // memoize candidate route checks
  std::map<std::pair<int, std::vector<int>>, RouteCheck> memo;
  auto route_check = [&](int vehicle, const std::vector<int>& members) -> const RouteCheck& {
    auto key = std::make_pair(vehicle, members);
    auto it = memo.find(key);
    if (it == memo.end()) it = memo.emplace(std::move(key), check_route(inst, vehicle, members, load_buffer)).first;
    return it->second;
  };

  double min_trech = milp::kInf;
  for (const auto& v : inst.vehicles) min_trech = std::min(min_trech, v.max_time_before_recharge);

  EnumeratedSolution best;
  std::vector<std::vector<int>> assignment(nv);
  std::vector<int> flat_best;

  auto consider = [&]() {
    // orderings explored per vehicle via next_permutation, recursively
    std::vector<std::vector<int>> orders(nv);
    double total = 0.0;
    std::vector<ChargeStop> charging;
    std::map<std::pair<int, int>, int> arc_use;

    auto rec = [&](auto&& self, int v) -> void {
      if (v == nv) {
        // shared-arc travel bound across the fleet
        for (const auto& [arc, count] : arc_use) {
          if (count * inst.travel_time[arc.first][arc.second] > min_trech + 1e-9) return;
        }
        const double obj = inst.cost_time * total;  // the charged-energy term prices at zero
        if (all_objectives) all_objectives->push_back(obj);
        std::vector<int> flat;
        for (const auto& o : orders) {
          flat.push_back(-1);
          flat.insert(flat.end(), o.begin(), o.end());
        }
        const bool better = !best.feasible || obj < best.objective - 1e-12 ||
                            (std::abs(obj - best.objective) <= 1e-12 && flat < flat_best);
        if (better) {
          best.feasible = true;
          best.objective = obj;
          best.charging = charging;
          best.routes.clear();
          for (int rv = 0; rv < nv; ++rv) {
            vrp::Route route;
            route.vehicle = rv;
            if (!orders[rv].empty()) {
              route.nodes.push_back(0);
              route.nodes.insert(route.nodes.end(), orders[rv].begin(), orders[rv].end());
              route.nodes.push_back(0);
            }
            best.routes.push_back(std::move(route));
          }
          flat_best = std::move(flat);
        }
        return;
      }
      if (assignment[v].empty()) {
        self(self, v + 1);
        return;
      }
      std::vector<int> perm = assignment[v];
      std::sort(perm.begin(), perm.end());
      do {
        const RouteCheck& rc = route_check(v, perm);
        if (!rc.feasible) continue;
        orders[v] = perm;
        total += rc.travel;
        const size_t mark = charging.size();
        for (const auto& [node, tau] : rc.taus) charging.push_back({v, node, tau});
        int prev = 0;
        std::vector<std::pair<int, int>> arcs;
        for (int j : perm) {
          arcs.emplace_back(prev, j);
          prev = j;
        }
        arcs.emplace_back(prev, 0);
        for (const auto& a : arcs) ++arc_use[a];
        self(self, v + 1);
        for (const auto& a : arcs) {
          if (--arc_use[a] == 0) arc_use.erase(a);
        }
        charging.resize(mark);
        total -= rc.travel;
        orders[v].clear();
      } while (std::next_permutation(perm.begin(), perm.end()));
    };
    rec(rec, 0);
  };

  // every function customers -> vehicles
  std::vector<int> owner(n, 0);
  auto assign_rec = [&](auto&& self, int idx) -> void {
    if (idx == n) {
      for (auto& a : assignment) a.clear();
      for (int c = 0; c < n; ++c) assignment[owner[c]].push_back(c + 1);
      consider();
      return;
    }
    for (int v = 0; v < nv; ++v) {
      owner[idx] = v;
      self(self, idx + 1);
    }
  };
  assign_rec(assign_rec, 0);

  if (best.feasible) {
    // pad undeployed vehicles so routes always cover the fleet
    while (static_cast<int>(best.routes.size()) < nv) {
      vrp::Route r;
      r.vehicle = static_cast<int>(best.routes.size());
      best.routes.push_back(r);
    }
  }
  return best;
}

}  // namespace evgrid::oracle
