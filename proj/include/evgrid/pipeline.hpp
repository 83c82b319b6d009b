#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "evgrid/assemble.hpp"
#include "evgrid/bnb.hpp"
#include "evgrid/energy.hpp"
#include "evgrid/instance.hpp"
#include "evgrid/vrp.hpp"

namespace evgrid::cli {

struct RunConfig {
  std::string instance_path;
  milp::ModelMode mode = milp::ModelMode::Deterministic;
  double epsilon = -1.0;  // <=0: use the per-node values from the instance
  std::uint64_t seed = 0;
  bool seed_set = false;
  double gap_tol = 1e-6;
  double time_limit = 300.0;
  long node_limit = -1;
  int threads = 1;
  std::string out_dir = ".";
  bool export_lp = false;
};

struct Solution {
  milp::SolveStatus status = milp::SolveStatus::Infeasible;
  milp::ModelMode mode = milp::ModelMode::Deterministic;
  double epsilon_override = -1.0;
  bool has_incumbent = false;
  double objective = 0.0, bound = 0.0, gap = 0.0;
  long node_count = 0;
  double wall_time = 0.0;
  std::vector<double> values;
  std::vector<vrp::Route> routes;
  std::vector<energy::BatteryTrace> traces;
  double travel_cost = 0.0, energy_cost = 0.0;
  double total_energy_kwh = 0.0;  // consumption over all route legs
  std::vector<double> grid_u, grid_pgen, grid_qgen, grid_pd;

  int routes_deployed() const;
};

// assemble -> heuristic seed -> branch and bound -> extraction
Solution solve_instance(const ProblemInstance& inst, const milp::AssembledModel& am,
                        const milp::SolveOptions& opts);

// Round-trippable solution file. Carries everything `validate` needs.
void write_solution(std::ostream& os, const Solution& sol, const ProblemInstance& inst,
                    const milp::AssembledModel& am, std::uint64_t seed);

struct StoredSolution {
  std::string status;
  std::string mode;
  double epsilon_override = -1.0;
  double objective = 0.0, travel_cost = 0.0, energy_cost = 0.0, total_energy_kwh = 0.0;
  int locations = 0;
  double expected_passengers = 0.0;
  int routes_deployed = 0;
  std::uint64_t seed = 0;
  std::vector<vrp::Route> routes;
  std::vector<double> l0;                                  // per vehicle
  std::vector<std::vector<std::pair<int, double>>> loads;  // per vehicle: (node, load)
};

StoredSolution read_solution_file(const std::string& path, const ProblemInstance& inst);

// Subcommand bodies; each returns a process exit code:
// 0 ok/optimal, 1 input error, 2 infeasible, 3 limit reached.
int cmd_ingest(const std::string& csv_path, int window_start_min, int window_end_min,
               const std::string& out_path, int vehicles, std::ostream& log);
int cmd_generate(std::uint64_t seed, int locations, int vehicles, double scale, const std::string& preset,
                 const std::string& out_path, std::ostream& log);
int cmd_solve(const RunConfig& cfg, std::ostream& log);
int cmd_validate(const std::string& instance_path, const std::string& solution_path,
                 std::optional<std::uint64_t> seed, long samples, std::ostream& log);
int cmd_report(const std::vector<std::string>& solution_paths, const std::string& out_dir, std::ostream& log);

}  // namespace evgrid::cli
