// Command line front end: ingest -> generate/solve -> validate -> report.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "evgrid/pipeline.hpp"

using namespace evgrid;

int main(int argc, char** argv) {
  CLI::App app{"EV fleet routing and distribution grid co-optimization"};
  app.require_subcommand(1);

  const char* env_out = std::getenv("EVGRID_OUT");
  const std::string default_out = env_out ? env_out : ".";

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Aggregate trip records into an instance file");
  std::string ingest_csv, ingest_out = default_out + "/instance.txt";
  int window_start = 6 * 60, window_end = 11 * 60, ingest_vehicles = 4;
  ingest->add_option("csv", ingest_csv, "trip record CSV")->required();
  ingest->add_option("--window-start", window_start, "window start, minutes of day");
  ingest->add_option("--window-end", window_end, "window end, minutes of day");
  ingest->add_option("--vehicles", ingest_vehicles, "fleet size to write");
  ingest->add_option("--out", ingest_out, "output instance file");

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic instance");
  std::uint64_t gen_seed = 1;
  int gen_locations = 5, gen_vehicles = 2;
  double gen_scale = 224.0;
  std::string gen_preset, gen_out = default_out + "/instance.txt";
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--locations", gen_locations, "customer count");
  gen->add_option("--vehicles", gen_vehicles, "fleet size");
  gen->add_option("--scale", gen_scale, "expected passengers");
  gen->add_option("--preset", gen_preset, "named instance (ref15)");
  gen->add_option("--out", gen_out, "output instance file");

  // solve
  auto* solve = app.add_subcommand("solve", "Assemble and solve an instance");
  cli::RunConfig cfg;
  cfg.out_dir = default_out;
  std::string mode = "det";
  solve->add_option("instance", cfg.instance_path, "instance file")->required();
  solve->add_option("--mode", mode, "det or cc")->check(CLI::IsMember({"det", "cc"}));
  solve->add_option("--epsilon", cfg.epsilon, "override every node's risk tolerance");
  solve->add_option("--seed", cfg.seed, "run seed (recorded, used by validation)");
  solve->add_option("--gap", cfg.gap_tol, "relative gap tolerance");
  solve->add_option("--time-limit", cfg.time_limit, "seconds");
  solve->add_option("--node-limit", cfg.node_limit, "branch and bound node cap");
  solve->add_option("--threads", cfg.threads, "solver threads (search stays deterministic)");
  solve->add_option("--out", cfg.out_dir, "output directory");
  solve->add_flag("--export-lp", cfg.export_lp, "also write model.lp");
  std::string solve_config;
  solve->add_option("--config", solve_config, "key=value file with the same keys; flags take precedence");

  // validate
  auto* val = app.add_subcommand("validate", "Re-check a solution against its instance");
  std::string val_instance, val_solution;
  std::optional<std::uint64_t> val_seed;
  long val_samples = 10000;
  std::uint64_t val_seed_raw = 0;
  bool val_seed_set = false;
  val->add_option("instance", val_instance, "instance file")->required();
  val->add_option("solution", val_solution, "solution file")->required();
  auto* seed_opt = val->add_option("--seed", val_seed_raw, "Monte-Carlo seed (required for cc solutions)");
  val->add_option("--samples", val_samples, "Monte-Carlo sample count");

  // report
  auto* rep = app.add_subcommand("report", "Summaries and emission tables from solution files");
  std::vector<std::string> rep_paths;
  std::string rep_out = default_out;
  rep->add_option("solutions", rep_paths, "solution files")->required();
  rep->add_option("--out", rep_out, "output directory");

  CLI11_PARSE(app, argc, argv);
  val_seed_set = seed_opt->count() > 0;
  if (val_seed_set) val_seed = val_seed_raw;

  if (ingest->parsed())
    return cli::cmd_ingest(ingest_csv, window_start, window_end, ingest_out, ingest_vehicles, std::cout);
  if (gen->parsed())
    return cli::cmd_generate(gen_seed, gen_locations, gen_vehicles, gen_scale, gen_preset, gen_out, std::cout);
  if (solve->parsed()) {
    if (!solve_config.empty()) {
      // precedence: command-line flags beat the file, the file beats defaults
      std::ifstream in(solve_config);
      if (!in) {
        std::cerr << "error: cannot open config file '" << solve_config << "'\n";
        return 1;
      }
      std::string line;
      while (std::getline(in, line)) {
        if (auto pos = line.find('#'); pos != std::string::npos) line = line.substr(0, pos);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string v) {
          const auto a = v.find_first_not_of(" \t");
          const auto b = v.find_last_not_of(" \t");
          return a == std::string::npos ? std::string() : v.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto unset = [&](const std::string& flag) { return solve->count(flag) == 0; };
        try {
          if (key == "mode" && unset("--mode")) mode = value;
          else if (key == "epsilon" && unset("--epsilon")) cfg.epsilon = std::stod(value);
          else if (key == "seed" && unset("--seed")) cfg.seed = std::stoull(value);
          else if (key == "gap" && unset("--gap")) cfg.gap_tol = std::stod(value);
          else if (key == "time-limit" && unset("--time-limit")) cfg.time_limit = std::stod(value);
          else if (key == "node-limit" && unset("--node-limit")) cfg.node_limit = std::stol(value);
          else if (key == "threads" && unset("--threads")) cfg.threads = std::stoi(value);
          else if (key == "out" && unset("--out")) cfg.out_dir = value;
        } catch (const std::exception&) {
          std::cerr << "error: bad value for '" << key << "' in " << solve_config << "\n";
          return 1;
        }
      }
    }
    cfg.mode = mode == "cc" ? milp::ModelMode::ChanceConstrained : milp::ModelMode::Deterministic;
    return cli::cmd_solve(cfg, std::cout);
  }
  if (val->parsed()) return cli::cmd_validate(val_instance, val_solution, val_seed, val_samples, std::cout);
  if (rep->parsed()) return cli::cmd_report(rep_paths, rep_out, std::cout);
  return 1;
}
