#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "evgrid/assemble.hpp"
#include "evgrid/energy.hpp"
#include "evgrid/stochastic.hpp"

namespace evgrid::report {

struct Breakdown {
  double travel_cost = 0.0;
  double energy_cost = 0.0;
  double total = 0.0;
};

// travel = C^T sum x T over arcs, energy = C^E sum w; total is their sum and
// matches the solver objective within tolerance on any feasible solution
Breakdown objective_breakdown(const milp::AssembledModel& am, const ProblemInstance& inst,
                              std::span<const double> values);

struct EmissionFactors {
  double electricity = 0.257;         // kgCO2e per kWh
  double liquid_fuel_per_unit = 2.26; // kgCO2e per unit of fuel
  double per_vehicle_avg = 19.23;     // kgCO2e per vehicle
  // fuel-equivalence policy: how many kWh one fuel unit stands for.
  // The comparison rows depend on this choice; they are not measurements.
  double kwh_per_fuel_unit = 33.4;
};

double electric_emissions(double energy_kwh, const EmissionFactors& f);
double liquid_fuel_emissions(double energy_kwh, int vehicles, const EmissionFactors& f);

struct EmissionRow {
  std::string type;
  int vehicles = 0;
  double passengers = 0.0;
  double energy_kwh = 0.0;  // negative = not applicable
  double emissions_kg = 0.0;
};

// EV row, policy-dependent liquid-fuel comparison row, percent reduction.
std::vector<EmissionRow> emissions_report(const std::string& fleet_label, double energy_kwh, int vehicles,
                                          double passengers, const EmissionFactors& factors);

struct RunSummary {
  std::string code;  // D-L5 / U-L5 labeling
  int locations = 0;
  double expected_passengers = 0.0;
  int routes = 0;
  double objective = 0.0;
};

RunSummary make_summary(bool stochastic, int locations, double expected_passengers, int routes, double objective);

// one row per run; when both modes of a size are present a comparison flag
// line reports whether the stochastic run deployed at least as many routes
void write_summary_csv(std::ostream& os, std::span<const RunSummary> rows);
void write_emissions_csv(std::ostream& os, std::span<const EmissionRow> rows);
void write_battery_traces_csv(std::ostream& os, std::span<const energy::BatteryTrace> traces,
                              const ProblemInstance& inst);
void write_grid_snapshot_csv(std::ostream& os, const ProblemInstance& inst, std::span<const double> u,
                             std::span<const double> p_gen, std::span<const double> q_gen);
void write_violations_csv(std::ostream& os, std::span<const stochastic::ViolationRate> rates);

// small self-contained SVG emitters (objective bars, battery level polylines)
void write_objective_svg(std::ostream& os, std::span<const RunSummary> rows);
void write_energy_svg(std::ostream& os, std::span<const energy::BatteryTrace> traces,
                      const ProblemInstance& inst);

}  // namespace evgrid::report
