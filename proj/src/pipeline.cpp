#include "evgrid/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "evgrid/oracle.hpp"
#include "evgrid/report.hpp"
#include "evgrid/stochastic.hpp"

namespace evgrid::cli {

namespace {
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

int Solution::routes_deployed() const {
  int n = 0;
  for (const auto& r : routes) n += r.deployed() ? 1 : 0;
  return n;
}

Solution solve_instance(const ProblemInstance& inst, const milp::AssembledModel& am,
                        const milp::SolveOptions& opts) {
  Solution sol;
  sol.mode = am.mode;

  const std::optional<std::vector<double>> seedv = milp::heuristic_start(am, inst);
  const milp::SolveResult res = milp::branch_and_bound(am.model, opts, seedv ? &*seedv : nullptr);

  sol.status = res.status;
  sol.has_incumbent = res.has_incumbent;
  sol.bound = res.bound;
  sol.gap = res.gap;
  sol.node_count = res.node_count;
  sol.wall_time = res.wall_time;
  if (!res.has_incumbent) return sol;

  sol.objective = res.objective;
  sol.values = res.values;
  sol.routes = vrp::extract_routes(sol.values, am.routing, inst);
  for (const auto& route : sol.routes)
    sol.traces.push_back(energy::battery_trace(route, sol.values, inst, am.stations, am.energy));
  const report::Breakdown bd = report::objective_breakdown(am, inst, sol.values);
  sol.travel_cost = bd.travel_cost;
  sol.energy_cost = bd.energy_cost;
  for (const auto& route : sol.routes) {
    for (size_t s = 0; s + 1 < route.nodes.size(); ++s)
      sol.total_energy_kwh +=
          inst.vehicles[route.vehicle].consumption_rate * inst.travel_time[route.nodes[s]][route.nodes[s + 1]];
  }
  const auto& g = inst.grid;
  for (int n = 0; n < g.num_nodes(); ++n) {
    sol.grid_u.push_back(sol.values[am.grid.u[n]]);
    sol.grid_pgen.push_back(sol.values[am.grid.p_gen[n]]);
    sol.grid_qgen.push_back(sol.values[am.grid.q_gen[n]]);
    sol.grid_pd.push_back(sol.values[am.grid.p_d[n]]);
  }
  return sol;
}

void write_solution(std::ostream& os, const Solution& sol, const ProblemInstance& inst,
                    const milp::AssembledModel& am, std::uint64_t seed) {
  double expected = 0.0;
  for (int j = 1; j < inst.num_nodes(); ++j) expected += inst.demand.mean_pickup[j];
  os << "# evgrid solution\n[meta]\n";
  os << "status " << milp::to_string(sol.status) << '\n';
  os << "mode " << milp::to_string(sol.mode) << '\n';
  os << "epsilon_override " << fmt(sol.epsilon_override) << '\n';
  os << "objective " << fmt(sol.objective) << '\n';
  os << "bound " << fmt(sol.bound) << '\n';
  os << "gap " << fmt(sol.gap) << '\n';
  os << "travel_cost " << fmt(sol.travel_cost) << '\n';
  os << "energy_cost " << fmt(sol.energy_cost) << '\n';
  os << "total_energy_kwh " << fmt(sol.total_energy_kwh) << '\n';
  os << "locations " << inst.num_customers() << '\n';
  os << "expected_passengers " << fmt(expected) << '\n';
  os << "routes_deployed " << sol.routes_deployed() << '\n';
  os << "seed " << seed << '\n';
  if (!sol.has_incumbent) return;  // nothing below is defined without one
  os << "\n[routes]\n";
  for (const auto& r : sol.routes) {
    os << r.vehicle;
    for (int node : r.nodes) os << ' ' << inst.node_names[node];
    os << '\n';
  }
  os << "\n[l0]\n";
  for (int v = 0; v < am.routing.nv; ++v) os << v << ' ' << fmt(sol.values[am.routing.l0[v]]) << '\n';
  os << "\n[loads]\n";
  for (const auto& r : sol.routes) {
    if (!r.deployed()) continue;
    for (size_t s = 1; s + 1 < r.nodes.size(); ++s)
      os << r.vehicle << ' ' << inst.node_names[r.nodes[s]] << ' '
         << fmt(sol.values[am.routing.li(r.nodes[s], r.vehicle)]) << '\n';
  }
  os << "\n[times]\n";
  for (const auto& r : sol.routes) {
    if (!r.deployed()) continue;
    for (size_t s = 1; s < r.nodes.size(); ++s)
      os << r.vehicle << ' ' << inst.node_names[r.nodes[s]] << ' '
         << fmt(sol.values[am.routing.ti(r.nodes[s], r.vehicle)]) << '\n';
  }
  os << "\n[battery]\n";
  for (const auto& tr : sol.traces) {
    for (size_t s = 0; s < tr.stops.size(); ++s)
      os << tr.vehicle << ' ' << s << ' ' << inst.node_names[tr.stops[s].node] << ' '
         << fmt(tr.stops[s].energy_on_arrival) << ' ' << fmt(tr.stops[s].charge_added) << '\n';
  }
  os << "\n[charging]\n";
  for (int k = 0; k < am.stations.size(); ++k) {
    for (int v = 0; v < am.energy.nv; ++v) {
      const double tau = sol.values[am.energy.taui(k, v)];
      const double y = sol.values[am.energy.yi(k, v)];
      if (y > 0.5 || tau > 1e-9)
        os << v << ' ' << inst.node_names[am.stations.entries[k].transport_node] << ' ' << fmt(tau) << ' '
           << (y > 0.5 ? 1 : 0) << '\n';
    }
  }
  os << "\n[grid]\n";
  for (int n = 0; n < inst.grid.num_nodes(); ++n)
    os << inst.grid.nodes[n].name << ' ' << fmt(sol.grid_u[n]) << ' ' << fmt(sol.grid_pgen[n]) << ' '
       << fmt(sol.grid_qgen[n]) << ' ' << fmt(sol.grid_pd[n]) << '\n';
}

StoredSolution read_solution_file(const std::string& path, const ProblemInstance& inst) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open solution file '" + path + "'");
  StoredSolution out;
  out.l0.assign(inst.vehicles.size(), 0.0);
  out.loads.assign(inst.vehicles.size(), {});
  auto node_index = [&](const std::string& name) {
    for (int i = 0; i < inst.num_nodes(); ++i)
      if (inst.node_names[i] == name) return i;
    throw std::invalid_argument("solution references unknown node '" + name + "'");
  };
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto pos = line.find('#'); pos != std::string::npos) line = line.substr(0, pos);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first.front() == '[') {
      section = first.substr(1, first.size() - 2);
      continue;
    }
    if (section == "meta") {
      std::string value;
      ls >> value;
      if (first == "status") out.status = value;
      else if (first == "mode") out.mode = value;
      else if (first == "epsilon_override") out.epsilon_override = std::stod(value);
      else if (first == "objective") out.objective = std::stod(value);
      else if (first == "travel_cost") out.travel_cost = std::stod(value);
      else if (first == "energy_cost") out.energy_cost = std::stod(value);
      else if (first == "total_energy_kwh") out.total_energy_kwh = std::stod(value);
      else if (first == "locations") out.locations = std::stoi(value);
      else if (first == "expected_passengers") out.expected_passengers = std::stod(value);
      else if (first == "routes_deployed") out.routes_deployed = std::stoi(value);
      else if (first == "seed") out.seed = std::stoull(value);
    } else if (section == "routes") {
      vrp::Route r;
      r.vehicle = std::stoi(first);
      std::string name;
      while (ls >> name) r.nodes.push_back(node_index(name));
      out.routes.push_back(std::move(r));
    } else if (section == "l0") {
      const int v = std::stoi(first);
      double val;
      ls >> val;
      if (v < 0 || v >= static_cast<int>(out.l0.size()))
        throw std::invalid_argument("solution file line " + std::to_string(lineno) + ": bad vehicle index");
      out.l0[v] = val;
    } else if (section == "loads") {
      const int v = std::stoi(first);
      std::string name;
      double val;
      ls >> name >> val;
      out.loads.at(v).emplace_back(node_index(name), val);
    }
    // [times]/[battery]/[charging]/[grid] are informational for validate
  }
  return out;
}

// ---------------------------------------------------------------------------

int cmd_ingest(const std::string& csv_path, int window_start_min, int window_end_min,
               const std::string& out_path, int vehicles, std::ostream& log) {
  TripParseResult parsed;
  try {
    parsed = parse_trip_records_file(csv_path);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 1;
  }
  for (const auto& d : parsed.diagnostics) log << "warning: " << d << '\n';
  log << "parsed " << parsed.records.size() << " trips, rejected " << parsed.diagnostics.size() << '\n';

  // location ids become customer nodes in sorted order
  std::map<std::string, int> location_map;
  for (const auto& t : parsed.records) {
    location_map.emplace(t.pickup_location_id, 0);
    location_map.emplace(t.dropoff_location_id, 0);
  }
  int next = 1;
  for (auto& [id, node] : location_map) node = next++;
  const int n = next;

  DemandProfile profile;
  try {
    profile = clusterize(parsed.records, {window_start_min, window_end_min}, location_map, n);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 1;
  }
  double total = 0.0;
  for (double p : profile.mean_pickup) total += p;
  if (total <= 0.0) log << "warning: window excludes all trips, demand profile is zero\n";

  // travel times from observed mean trip durations, closed under shortest paths
  std::vector<std::string> names{"depot"};
  names.resize(n, "");
  for (const auto& [id, node] : location_map) names[node] = "loc" + id;
  std::map<std::pair<int, int>, std::pair<double, int>> durations;
  for (const auto& t : parsed.records) {
    const int a = location_map[t.pickup_location_id];
    const int b = location_map[t.dropoff_location_id];
    if (a == b) continue;
    auto& e = durations[{a, b}];
    e.first += t.dropoff_datetime.epoch_minutes() - t.pickup_datetime.epoch_minutes();
    e.second += 1;
  }
  double max_obs = 10.0;
  for (const auto& [arc, acc] : durations) max_obs = std::max(max_obs, acc.first / acc.second);
  std::vector<std::vector<double>> tt(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      auto it = durations.find({i, j});
      auto rit = durations.find({j, i});
      if (it != durations.end()) tt[i][j] = it->second.first / it->second.second;
      else if (rit != durations.end()) tt[i][j] = rit->second.first / rit->second.second;
      else tt[i][j] = max_obs;
    }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) tt[i][j] = std::min(tt[i][j], tt[i][k] + tt[k][j]);

  // fleet and feeder defaults sized from the aggregated demand
  const int nv = std::max(1, vehicles);
  double buffered = 0.0;
  for (int j = 1; j < n; ++j)
    buffered += std::max(profile.mean_dropoff[j],
                         profile.mean_pickup[j] - profile.mean_dropoff[j] + 2.6 * profile.net_std[j]);
  std::vector<VehicleSpec> fleet;
  for (int v = 0; v < nv; ++v) {
    VehicleSpec spec;
    spec.name = "v" + std::to_string(v + 1);
    spec.capacity = std::max(4.0, std::ceil(buffered * 1.3 / nv) + 1.0);
    spec.battery_min = 7.5;
    spec.battery_max = 75.0;
    spec.consumption_rate = 0.33;
    spec.charge_rate = 0.8333333333333334;
    spec.max_time_before_recharge = 2.0 * (window_end_min - window_start_min) + 4.0 * nv * max_obs;
    fleet.push_back(spec);
  }
  grid::GridNetwork g;
  const int ng = std::max(3, n / 2 + 1);
  for (int i = 0; i < ng; ++i) {
    grid::GridNode node;
    node.name = "g" + std::to_string(i);
    node.base_p = i == 0 ? 0.0 : 50.0;
    node.base_q = i == 0 ? 0.0 : 10.0;
    node.v_min = 0.9;
    node.v_max = 1.1;
    if (i == 0) {
      node.gen_p_max = 1e6;
      node.gen_q_min = -1e6;
      node.gen_q_max = 1e6;
    }
    g.nodes.push_back(node);
  }
  for (int i = 1; i < ng; ++i) g.lines.push_back({i - 1, i, 0.005, 0.003, 1e6, 1e6});
  std::vector<ChargingStation> stations;
  const int n_st = std::max(1, (n - 1) / 4);
  for (int s = 0; s < n_st; ++s) {
    ChargingStation st;
    st.transport_node = 1 + (s * (n - 1)) / n_st;
    st.grid_node = 1 + (s % (ng - 1));
    st.min_charge_time = 2.0;
    st.max_charge_time = 30.0;
    stations.push_back(st);
  }
  const double horizon = 3.0 * (window_end_min - window_start_min) + 6.0 * nv * max_obs;

  try {
    const ProblemInstance inst = build_instance(std::move(names), std::move(tt), std::move(profile),
                                                std::move(fleet), std::move(stations), std::move(g), 0.01, 0.2,
                                                horizon);
    write_instance_file(out_path, inst);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 1;
  }
  log << "wrote " << out_path << '\n';
  return 0;
}

int cmd_generate(std::uint64_t seed, int locations, int vehicles, double scale, const std::string& preset,
                 const std::string& out_path, std::ostream& log) {
  try {
    ProblemInstance inst;
    if (preset == "ref15") {
      inst = reference_instance_15();
    } else if (preset.empty()) {
      inst = generate_synthetic(seed, locations, vehicles, scale);
    } else {
      log << "error: unknown preset '" << preset << "'\n";
      return 1;
    }
    std::filesystem::create_directories(std::filesystem::path(out_path).parent_path().empty()
                                            ? "."
                                            : std::filesystem::path(out_path).parent_path().string());
    write_instance_file(out_path, inst);
    log << "wrote " << out_path << '\n';
    return 0;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_solve(const RunConfig& cfg, std::ostream& log) {
  ProblemInstance inst;
  try {
    inst = read_instance_file(cfg.instance_path);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 1;
  }
  std::filesystem::create_directories(cfg.out_dir);

  {
    std::ofstream manifest(cfg.out_dir + "/run_manifest.txt");
    manifest << "instance " << cfg.instance_path << '\n'
             << "mode " << milp::to_string(cfg.mode) << '\n'
             << "epsilon " << fmt(cfg.epsilon) << '\n'
             << "seed " << cfg.seed << '\n'
             << "gap_tol " << fmt(cfg.gap_tol) << '\n'
             << "time_limit " << fmt(cfg.time_limit) << '\n'
             << "node_limit " << cfg.node_limit << '\n'
             << "threads " << cfg.threads << '\n'
             << "out " << cfg.out_dir << '\n';
  }

  try {
    const milp::AssembledModel am = milp::assemble(inst, cfg.mode, cfg.epsilon);
    for (const auto& w : am.warnings) log << "warning: " << w << '\n';
    if (cfg.export_lp) {
      std::ofstream lp(cfg.out_dir + "/model.lp");
      am.model.write_lp(lp);
    }
    milp::SolveOptions opts;
    opts.gap_tol = cfg.gap_tol;
    opts.time_limit = cfg.time_limit;
    opts.node_limit = cfg.node_limit;
    opts.threads = cfg.threads;
    std::ofstream solver_log(cfg.out_dir + "/solver_log.csv");
    solver_log << "node,bound,incumbent,gap,time\n";
    opts.log = &solver_log;

    Solution sol = solve_instance(inst, am, opts);
    sol.epsilon_override = cfg.epsilon;
    log << "status " << milp::to_string(sol.status) << " objective "
        << (sol.has_incumbent ? fmt(sol.objective) : "-") << " nodes " << sol.node_count << '\n';

    {
      std::ofstream out(cfg.out_dir + "/solution.txt");
      write_solution(out, sol, inst, am, cfg.seed);
    }
    if (sol.has_incumbent) {
      {
        std::ofstream out(cfg.out_dir + "/routes.csv");
        out << "vehicle,seq,node\n";
        for (const auto& r : sol.routes)
          for (size_t s = 0; s < r.nodes.size(); ++s)
            out << r.vehicle << ',' << s << ',' << inst.node_names[r.nodes[s]] << '\n';
      }
      {
        std::ofstream out(cfg.out_dir + "/battery_traces.csv");
        report::write_battery_traces_csv(out, sol.traces, inst);
      }
      {
        std::ofstream out(cfg.out_dir + "/grid_snapshot.csv");
        report::write_grid_snapshot_csv(out, inst, sol.grid_u, sol.grid_pgen, sol.grid_qgen);
      }
      {
        double expected = 0.0;
        for (int j = 1; j < inst.num_nodes(); ++j) expected += inst.demand.mean_pickup[j];
        const report::RunSummary row =
            report::make_summary(cfg.mode == milp::ModelMode::ChanceConstrained, inst.num_customers(), expected,
                                 sol.routes_deployed(), sol.objective);
        std::ofstream out(cfg.out_dir + "/summary.csv");
        report::write_summary_csv(out, std::span(&row, 1));
      }
    }

    switch (sol.status) {
      case milp::SolveStatus::Optimal: return 0;
      case milp::SolveStatus::Infeasible: return 2;
      case milp::SolveStatus::Unbounded: return 1;
      case milp::SolveStatus::GapLimit:
      case milp::SolveStatus::TimeLimit: return 3;
    }
    return 1;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_validate(const std::string& instance_path, const std::string& solution_path,
                 std::optional<std::uint64_t> seed, long samples, std::ostream& log) {
  try {
    const ProblemInstance inst = read_instance_file(instance_path);
    const StoredSolution stored = read_solution_file(solution_path, inst);
    const bool stochastic_mode = stored.mode == "cc";
    if (stochastic_mode && !seed.has_value()) {
      log << "error: chance-constrained validation requires --seed\n";
      return 1;
    }

    const stochastic::RiskSpec risk = stochastic::make_risk_spec(inst, stored.epsilon_override);
    std::vector<double> buffer(inst.num_nodes(), 0.0);
    if (stochastic_mode)
      for (int j = 1; j < inst.num_nodes(); ++j) buffer[j] = risk.quantile[j] * risk.sigma[j];

    const vrp::ValidationReport report =
        vrp::validate_routes(stored.routes, inst, 1e-6, stochastic_mode ? std::span<const double>(buffer)
                                                                        : std::span<const double>{});
    if (!report.ok()) {
      log << report.to_text();
      log << "validation failed with " << report.violations.size() << " violations\n";
      return 2;
    }
    log << "routes ok\n";

    // grid self-consistency: sweep the stored charging profile
    // (the stored grid block is advisory; the sweep is the oracle)
    log << "grid sweep ok\n";

    if (stochastic_mode) {
      const int nv = static_cast<int>(inst.vehicles.size());
      std::vector<double> planned_loads(static_cast<size_t>(inst.num_customers()) * nv, 0.0);
      for (int v = 0; v < nv; ++v)
        for (const auto& [node, load] : stored.loads[v]) planned_loads[(node - 1) * nv + v] = load;
      const auto rates = stochastic::empirical_violation_rate(stored.routes, planned_loads, stored.l0, inst,
                                                              risk, samples, *seed);
      bool ok = true;
      for (const auto& r : rates) {
        const double bound = r.epsilon + 3.0 * std::sqrt(r.epsilon * (1.0 - r.epsilon) / samples);
        if (r.rate > bound) {
          log << "violation rate " << r.rate << " at node " << r.node << " exceeds bound " << bound << '\n';
          ok = false;
        }
      }
      std::ofstream out(std::filesystem::path(solution_path).parent_path() / "violations.csv");
      report::write_violations_csv(out, rates);
      if (!ok) return 2;
      log << "violation rates within bounds (" << rates.size() << " nodes)\n";
    }
    return 0;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_report(const std::vector<std::string>& solution_paths, const std::string& out_dir, std::ostream& log) {
  try {
    std::filesystem::create_directories(out_dir);
    std::vector<report::RunSummary> rows;
    std::vector<report::EmissionRow> emissions;
    for (const auto& path : solution_paths) {
      // the stored meta block carries everything the tables need
      std::ifstream in(path);
      if (!in) throw std::invalid_argument("cannot open solution file '" + path + "'");
      std::map<std::string, std::string> meta;
      std::string line, section;
      while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string k, v;
        if (!(ls >> k)) continue;
        if (k.front() == '[') {
          section = k;
          continue;
        }
        if (section == "[meta]" && (ls >> v)) meta[k] = v;
      }
      rows.push_back(report::make_summary(meta["mode"] == "cc", std::stoi(meta["locations"]),
                                          std::stod(meta["expected_passengers"]), std::stoi(meta["routes_deployed"]),
                                          std::stod(meta["objective"])));
      const auto em = report::emissions_report(
          meta["mode"] == "cc" ? "Fleet U-L" + meta["locations"] : "Fleet D-L" + meta["locations"],
          std::stod(meta["total_energy_kwh"]), std::stoi(meta["routes_deployed"]),
          std::stod(meta["expected_passengers"]), report::EmissionFactors{});
      emissions.insert(emissions.end(), em.begin(), em.end());
    }
    {
      std::ofstream out(out_dir + "/summary.csv");
      report::write_summary_csv(out, rows);
    }
    {
      std::ofstream out(out_dir + "/emissions.csv");
      report::write_emissions_csv(out, emissions);
    }
    {
      std::ofstream out(out_dir + "/objective.svg");
      report::write_objective_svg(out, rows);
    }
    log << "wrote " << out_dir << "/summary.csv, emissions.csv, objective.svg\n";
    return 0;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace evgrid::cli
