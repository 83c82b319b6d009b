#include "doctest.h"

#include <cmath>

#include "evgrid/assemble.hpp"
#include "evgrid/bnb.hpp"
#include "evgrid/energy.hpp"
#include "evgrid/rng.hpp"
#include "helpers.hpp"

using namespace evgrid;
using namespace evgrid::energy;

TEST_CASE("energy: station set appends a depot station with horizon dwell") {
  const ProblemInstance inst = test_helpers::line_instance(3, 1, {2});
  const StationSet set = make_station_set(inst);
  REQUIRE(set.size() == 2);
  CHECK(set.entries[0].transport_node == 2);
  CHECK(set.entries[0].grid_coupled);
  CHECK(set.entries[1].transport_node == 0);
  CHECK(set.entries[1].t_min == 0.0);
  CHECK(set.entries[1].t_max == inst.horizon);
  CHECK(!set.entries[1].grid_coupled);
}

TEST_CASE("energy: declared depot station is respected as written") {
  ProblemInstance inst = test_helpers::line_instance(2, 1);
  inst.stations.push_back({0, 1, 5.0, 45.0, false, 0.0, 0.0});
  const StationSet set = make_station_set(inst);
  REQUIRE(set.size() == 1);
  CHECK(set.entries[0].transport_node == 0);
  CHECK(set.entries[0].t_max == 45.0);
  CHECK(set.entries[0].grid_coupled);
}

TEST_CASE("energy: propagation row substitutes to e_j <= e_i - C T on a used arc") {
  // arc 0->1 with T=10, C=0.5 and no station at the tail
  ProblemInstance inst = test_helpers::line_instance(2, 1, {2});
  const milp::AssembledModel am = milp::assemble(inst, milp::ModelMode::Deterministic);
  const auto& m = am.model;
  int row_id = -1;
  for (int r = 0; r < m.num_constraints(); ++r)
    if (m.row(r).name == "energy[c1,c2,0]") row_id = r;
  REQUIRE(row_id >= 0);
  const auto& row = m.row(row_id);
  // row: e_j - e_i + (C T + M) x <= M; at x=1: e_j - e_i <= -C T = -5
  double x_coef = 0.0;
  for (const auto& t : row.terms)
    if (t.var == am.routing.xi(1, 2, 0)) x_coef = t.coef;
  CHECK(row.rhs - x_coef == doctest::Approx(-inst.vehicles[0].consumption_rate * inst.travel_time[1][2]));
  CHECK(inst.vehicles[0].consumption_rate * inst.travel_time[1][2] == doctest::Approx(5.0));
}

TEST_CASE("energy: y = 0 pins tau to zero through the charge bounds") {
  const ProblemInstance inst = test_helpers::line_instance(2, 1, {1});
  milp::Model m;
  const StationSet set = make_station_set(inst);
  const EnergyVariables evars = register_energy_variables(m, inst, set);
  const vrp::RoutingVariables rvars = vrp::register_routing_variables(m, inst);
  build_energy_constraints(m, inst, set, rvars, evars, vrp::compute_big_m(inst));
  m.tighten_bounds(evars.yi(0, 0), 0.0, 0.0);
  m.set_objective(evars.taui(0, 0), -1.0);  // push tau as high as the rows allow
  const milp::LpResult lp = milp::solve_lp(m);
  REQUIRE(lp.status == milp::LpStatus::Optimal);
  CHECK(lp.x[evars.taui(0, 0)] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("energy: no-overcharge caps tau at (Emax - e)/R") {
  // e = 70, Emax = 75, R = 1 -> tau <= 5
  ProblemInstance inst = test_helpers::line_instance(2, 1, {1});
  inst.vehicles[0].battery_max = 75.0;
  inst.vehicles[0].charge_rate = 1.0;
  milp::Model m;
  const StationSet set = make_station_set(inst);
  const EnergyVariables evars = register_energy_variables(m, inst, set);
  const vrp::RoutingVariables rvars = vrp::register_routing_variables(m, inst);
  build_energy_constraints(m, inst, set, rvars, evars, vrp::compute_big_m(inst));
  m.tighten_bounds(evars.ei(1, 0), 70.0, 70.0);
  m.tighten_bounds(evars.yi(0, 0), 1.0, 1.0);
  m.set_objective(evars.taui(0, 0), -1.0);
  const milp::LpResult lp = milp::solve_lp(m);
  REQUIRE(lp.status == milp::LpStatus::Optimal);
  CHECK(lp.x[evars.taui(0, 0)] == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("mccormick: plane arithmetic at the box corners and inside") {
  // at tau = t_lo the first plane collapses to the exact product bound
  CHECK(mccormick_upper(30.0, 5.0, 0.0, 50.0, 5.0, 30.0) == doctest::Approx(30.0 * 5.0));
  // zero lower bounds: planes reduce to p_hi tau and p t_hi
  CHECK(mccormick_upper(20.0, 10.0, 0.0, 50.0, 0.0, 30.0) == doctest::Approx(std::min(50.0 * 10.0, 20.0 * 30.0)));
  // the worked point: p in [0,50], tau in [0,30] at (25, 15) -> 750
  CHECK(mccormick_upper(25.0, 15.0, 0.0, 50.0, 0.0, 30.0) == doctest::Approx(750.0));
  CHECK(mccormick_upper(25.0, 15.0, 0.0, 50.0, 0.0, 30.0) >= 25.0 * 15.0);
}

TEST_CASE("mccormick: envelope dominates the product, exactly on the box edges") {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const double p_lo = rng.uniform(0.0, 10.0);
    const double p_hi = p_lo + rng.uniform(0.1, 60.0);
    const double t_lo = rng.uniform(0.0, 5.0);
    const double t_hi = t_lo + rng.uniform(0.1, 40.0);
    const double p = rng.uniform(p_lo, p_hi);
    const double tau = rng.uniform(t_lo, t_hi);
    const double env = mccormick_upper(p, tau, p_lo, p_hi, t_lo, t_hi);
    CHECK(env >= p * tau - 1e-9);
    CHECK(std::abs(mccormick_upper(p_hi, tau, p_lo, p_hi, t_lo, t_hi) - p_hi * tau) < 1e-9);
    CHECK(std::abs(mccormick_upper(p, t_lo, p_lo, p_hi, t_lo, t_hi) - p * t_lo) < 1e-9);
    CHECK(std::abs(mccormick_upper(p_lo, tau, p_lo, p_hi, t_lo, t_hi) - p_lo * tau) < 1e-9);
    CHECK(std::abs(mccormick_upper(p, t_hi, p_lo, p_hi, t_lo, t_hi) - p * t_hi) < 1e-9);
  }
}

TEST_CASE("mccormick: emitted rows hold for every solution with slack >= -1e-6") {
  const ProblemInstance inst = test_helpers::line_instance(3, 1, {2});
  const milp::AssembledModel am = milp::assemble(inst, milp::ModelMode::Deterministic);
  milp::SolveOptions opts;
  opts.time_limit = 60.0;
  const auto warm = milp::heuristic_start(am, inst);
  const milp::SolveResult res = milp::branch_and_bound(am.model, opts, warm ? &*warm : nullptr);
  REQUIRE(res.has_incumbent);
  for (int k = 0; k < am.stations.size(); ++k) {
    const auto& st = am.stations.entries[k];
    for (int v = 0; v < am.energy.nv; ++v) {
      const double w = res.values[am.energy.wi(k, v)];
      const double tau = res.values[am.energy.taui(k, v)];
      const double p = res.values[am.energy.p_c[k]];
      CHECK(w <= mccormick_upper(p, tau, st.power_min, st.power_max, st.t_min, st.t_max) + 1e-6);
      if (res.values[am.energy.yi(k, v)] < 0.5) {
        CHECK(tau == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(w * inst.cost_energy == doctest::Approx(0.0).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("battery: forced mid-route charging appears exactly once in the trace") {
  // battery too small for the full line without one stop at the station
  ProblemInstance inst = test_helpers::line_instance(3, 1, {2}, 100.0, /*battery=*/26.0, /*consumption=*/0.5);
  // depot->1->2->3->0: legs 10,10,10,30 at 0.5 kWh/min = 30 kWh total
  const milp::AssembledModel am = milp::assemble(inst, milp::ModelMode::Deterministic);
  milp::SolveOptions opts;
  opts.time_limit = 120.0;
  const auto warm = milp::heuristic_start(am, inst);
  const milp::SolveResult res = milp::branch_and_bound(am.model, opts, warm ? &*warm : nullptr);
  REQUIRE(res.has_incumbent);
  const auto routes = vrp::extract_routes(res.values, am.routing, inst);
  int positive_charges = 0;
  for (const auto& route : routes) {
    const BatteryTrace trace = battery_trace(route, res.values, inst, am.stations, am.energy);
    for (size_t s = 0; s + 1 < trace.stops.size(); ++s) {
      const auto& stop = trace.stops[s];
      if (stop.charge_added > 1e-9) {
        ++positive_charges;
        CHECK(am.stations.station_of_node[stop.node] >= 0);  // only stations add charge
      }
      CHECK(stop.energy_on_arrival >= inst.vehicles[route.vehicle].battery_min - 1e-6);
      CHECK(stop.energy_on_arrival <= inst.vehicles[route.vehicle].battery_max + 1e-6);
    }
    // monotone nonincreasing between consecutive non-charging stops
    for (size_t s = 0; s + 1 < trace.stops.size(); ++s) {
      if (trace.stops[s].charge_added <= 1e-9 && trace.stops[s].node != 0)
        CHECK(trace.stops[s + 1].energy_on_arrival <= trace.stops[s].energy_on_arrival + 1e-6);
    }
  }
  CHECK(positive_charges >= 1);
}

TEST_CASE("battery: undeployed vehicle yields a single depot entry") {
  const ProblemInstance inst = test_helpers::line_instance(2, 2);
  const milp::AssembledModel am = milp::assemble(inst, milp::ModelMode::Deterministic);
  std::vector<double> vals(am.model.num_vars(), 0.0);
  vals[am.energy.ei(0, 1)] = inst.vehicles[1].battery_max;
  vrp::Route empty;
  empty.vehicle = 1;
  const BatteryTrace trace = battery_trace(empty, vals, inst, am.stations, am.energy);
  REQUIRE(trace.stops.size() == 1);
  CHECK(trace.stops[0].node == 0);
  CHECK(trace.stops[0].energy_on_arrival == inst.vehicles[1].battery_max);
}

TEST_CASE("energy: station-free instance with a short battery warns, not throws") {
  ProblemInstance inst = test_helpers::line_instance(3, 1, {}, 100.0, /*battery=*/9.0, /*consumption=*/0.5);
  // longest arc is 30 min -> 15 kWh need against 9 - 5 = 4 usable
  const milp::AssembledModel am = milp::assemble(inst, milp::ModelMode::Deterministic);
  REQUIRE(!am.warnings.empty());
  CHECK(am.warnings[0].find("longest arc") != std::string::npos);
}
