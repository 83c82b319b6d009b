#include "evgrid/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

namespace evgrid::report {

namespace {
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
std::string fmt2(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}
}  // namespace

Breakdown objective_breakdown(const milp::AssembledModel& am, const ProblemInstance& inst,
                              std::span<const double> values) {
  Breakdown b;
  for (int i = 0; i < inst.num_nodes(); ++i)
    for (int j = 0; j < inst.num_nodes(); ++j)
      for (int v = 0; v < am.routing.nv; ++v)
        b.travel_cost += inst.cost_time * inst.travel_time[i][j] * values[am.routing.xi(i, j, v)];
  for (int k = 0; k < am.stations.size(); ++k)
    for (int v = 0; v < am.energy.nv; ++v) b.energy_cost += inst.cost_energy * values[am.energy.wi(k, v)];
  b.total = b.travel_cost + b.energy_cost;
  return b;
}

double electric_emissions(double energy_kwh, const EmissionFactors& f) { return energy_kwh * f.electricity; }

double liquid_fuel_emissions(double energy_kwh, int vehicles, const EmissionFactors& f) {
  const double fuel_units = energy_kwh / f.kwh_per_fuel_unit;
  return fuel_units * f.liquid_fuel_per_unit + vehicles * f.per_vehicle_avg;
}

std::vector<EmissionRow> emissions_report(const std::string& fleet_label, double energy_kwh, int vehicles,
                                          double passengers, const EmissionFactors& factors) {
  std::vector<EmissionRow> rows;
  rows.push_back({fleet_label + " (EV)", vehicles, passengers, energy_kwh, electric_emissions(energy_kwh, factors)});
  const double liquid = liquid_fuel_emissions(energy_kwh, vehicles, factors);
  rows.push_back({fleet_label + " (Liquid fuel, policy)", vehicles, passengers, -1.0, liquid});
  const double reduction = liquid > 0 ? (liquid - rows[0].emissions_kg) / liquid * 100.0 : 0.0;
  rows.push_back({fleet_label + " (reduction %)", 0, 0.0, -1.0, reduction});
  return rows;
}

RunSummary make_summary(bool stochastic, int locations, double expected_passengers, int routes,
                        double objective) {
  RunSummary s;
  s.code = std::string(stochastic ? "U" : "D") + "-L" + std::to_string(locations);
  s.locations = locations;
  s.expected_passengers = expected_passengers;
  s.routes = routes;
  s.objective = objective;
  return s;
}

void write_summary_csv(std::ostream& os, std::span<const RunSummary> rows) {
  os << "code,locations,expected_passengers,routes,objective\n";
  for (const auto& r : rows)
    os << r.code << ',' << r.locations << ',' << fmt(r.expected_passengers) << ',' << r.routes << ','
       << fmt(r.objective) << '\n';
  // pairwise flag: did uncertainty deploy at least as many routes?
  std::map<int, std::pair<int, int>> by_size;  // locations -> (det routes, sto routes)
  for (const auto& r : rows) {
    auto& e = by_size.try_emplace(r.locations, -1, -1).first->second;
    (r.code[0] == 'D' ? e.first : e.second) = r.routes;
  }
  for (const auto& [size, pair] : by_size) {
    if (pair.first >= 0 && pair.second >= 0)
      os << "# uncertainty_routes_geq_deterministic,L" << size << ','
         << (pair.second >= pair.first ? "yes" : "no") << '\n';
  }
}

void write_emissions_csv(std::ostream& os, std::span<const EmissionRow> rows) {
  os << "type,vehicles,passengers,energy_kwh,emissions_kgco2e\n";
  for (const auto& r : rows) {
    os << r.type << ',' << r.vehicles << ',' << fmt(r.passengers) << ','
       << (r.energy_kwh < 0 ? std::string("-") : fmt(r.energy_kwh)) << ',' << fmt2(r.emissions_kg) << '\n';
  }
}

void write_battery_traces_csv(std::ostream& os, std::span<const energy::BatteryTrace> traces,
                              const ProblemInstance& inst) {
  os << "vehicle,node_sequence_index,node,energy_kwh,charge_added_kwh\n";
  for (const auto& tr : traces) {
    for (size_t s = 0; s < tr.stops.size(); ++s) {
      os << tr.vehicle << ',' << s << ',' << inst.node_names[tr.stops[s].node] << ','
         << fmt(tr.stops[s].energy_on_arrival) << ',' << fmt(tr.stops[s].charge_added) << '\n';
    }
  }
}

void write_grid_snapshot_csv(std::ostream& os, const ProblemInstance& inst, std::span<const double> u,
                             std::span<const double> p_gen, std::span<const double> q_gen) {
  os << "node,u,voltage_pu,p_gen,q_gen\n";
  for (int n = 0; n < inst.grid.num_nodes(); ++n) {
    os << inst.grid.nodes[n].name << ',' << fmt(u[n]) << ',' << fmt(std::sqrt(std::max(u[n], 0.0))) << ','
       << fmt(p_gen[n]) << ',' << fmt(q_gen[n]) << '\n';
  }
}

void write_violations_csv(std::ostream& os, std::span<const stochastic::ViolationRate> rates) {
  os << "node,epsilon,measured_rate,samples\n";
  for (const auto& r : rates)
    os << r.node << ',' << fmt(r.epsilon) << ',' << fmt(r.rate) << ',' << r.samples << '\n';
}

void write_objective_svg(std::ostream& os, std::span<const RunSummary> rows) {
  const int w = 80, gap = 20, h = 240, base = 200;
  double max_obj = 1e-9;
  for (const auto& r : rows) max_obj = std::max(max_obj, r.objective);
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << rows.size() * (w + gap) + gap << "' height='" << h
     << "'>\n";
  int x = gap;
  for (const auto& r : rows) {
    const int bar = static_cast<int>(r.objective / max_obj * 160.0);
    os << "<rect x='" << x << "' y='" << base - bar << "' width='" << w << "' height='" << bar
       << "' fill='" << (r.code[0] == 'D' ? "#4878a8" : "#a84848") << "'/>\n";
    os << "<text x='" << x + w / 2 << "' y='" << base + 16 << "' font-size='12' text-anchor='middle'>" << r.code
       << "</text>\n";
    os << "<text x='" << x + w / 2 << "' y='" << base - bar - 6 << "' font-size='11' text-anchor='middle'>"
       << fmt2(r.objective) << "</text>\n";
    x += w + gap;
  }
  os << "</svg>\n";
}

void write_energy_svg(std::ostream& os, std::span<const energy::BatteryTrace> traces,
                      const ProblemInstance& inst) {
  static const char* kColors[] = {"#4878a8", "#a84848", "#48a860", "#a88a48", "#7848a8", "#48a8a0"};
  double e_max = 1.0;
  size_t longest = 2;
  for (const auto& tr : traces) {
    longest = std::max(longest, tr.stops.size());
    for (const auto& s : tr.stops) e_max = std::max(e_max, s.energy_on_arrival + s.charge_added);
  }
  const int width = 560, height = 260, left = 40, bottom = 220;
  const double dx = (width - left - 20) / static_cast<double>(longest - 1);
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height << "'>\n";
  os << "<line x1='" << left << "' y1='20' x2='" << left << "' y2='" << bottom << "' stroke='black'/>\n";
  os << "<line x1='" << left << "' y1='" << bottom << "' x2='" << width - 20 << "' y2='" << bottom
     << "' stroke='black'/>\n";
  int ci = 0;
  for (const auto& tr : traces) {
    if (tr.stops.empty()) continue;
    os << "<polyline fill='none' stroke='" << kColors[ci % 6] << "' points='";
    for (size_t s = 0; s < tr.stops.size(); ++s) {
      // two points per stop when charging: arrival level, then post-charge
      const double x = left + dx * static_cast<double>(s);
      const double y = bottom - tr.stops[s].energy_on_arrival / e_max * 180.0;
      os << x << ',' << y << ' ';
      if (tr.stops[s].charge_added > 0) {
        const double y2 = bottom - (tr.stops[s].energy_on_arrival + tr.stops[s].charge_added) / e_max * 180.0;
        os << x + dx * 0.3 << ',' << y2 << ' ';
      }
    }
    os << "'/>\n";
    ++ci;
  }
  for (size_t s = 0; s < longest; ++s)
    os << "<text x='" << left + dx * static_cast<double>(s) << "' y='" << bottom + 14
       << "' font-size='10' text-anchor='middle'>" << s << "</text>\n";
  (void)inst;
  os << "</svg>\n";
}

}  // namespace evgrid::report
