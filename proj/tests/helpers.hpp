#pragma once

#include <string>
#include <vector>

#include "evgrid/instance.hpp"

// Hand-sized instances for unit tests.
namespace test_helpers {

inline evgrid::grid::GridNetwork tiny_grid(int nodes = 3) {
  evgrid::grid::GridNetwork g;
  g.slack = 0;
  for (int i = 0; i < nodes; ++i) {
    evgrid::grid::GridNode n;
    n.name = "g" + std::to_string(i);
    n.base_p = i == 0 ? 0.0 : 1.0;
    n.base_q = i == 0 ? 0.0 : 0.2;
    n.v_min = 0.8;
    n.v_max = 1.2;
    if (i == 0) {
      n.gen_p_max = 1e6;
      n.gen_q_min = -1e6;
      n.gen_q_max = 1e6;
    }
    g.nodes.push_back(n);
  }
  for (int i = 1; i < nodes; ++i) g.lines.push_back({i - 1, i, 0.005, 0.003, 1e6, 1e6});
  return g;
}

// Customers on a line at 10-minute spacing from the depot; generous windows,
// batteries and grid so individual families can be stressed in isolation.
inline evgrid::ProblemInstance line_instance(int customers, int vehicles, std::vector<int> station_nodes = {},
                                             double capacity = 100.0, double battery = 200.0,
                                             double consumption = 0.5) {
  using namespace evgrid;
  const int n = customers + 1;
  std::vector<std::string> names{"depot"};
  for (int j = 1; j < n; ++j) names.push_back("c" + std::to_string(j));
  std::vector<std::vector<double>> tt(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) tt[i][j] = std::abs(i - j) * 10.0;
  DemandProfile demand;
  demand.resize(n);
  for (int j = 1; j < n; ++j) {
    demand.mean_pickup[j] = 5.0;
    demand.mean_dropoff[j] = 1.0;
    demand.net_std[j] = 1.0;
    demand.epsilon[j] = 0.05;
    demand.earliest[j] = 0.0;
    demand.latest[j] = 1000.0;
  }
  std::vector<VehicleSpec> fleet;
  for (int v = 0; v < vehicles; ++v)
    fleet.push_back({"v" + std::to_string(v + 1), capacity, 5.0, battery, consumption, 1.0, 5000.0});
  auto g = tiny_grid(3);
  std::vector<ChargingStation> stations;
  for (size_t s = 0; s < station_nodes.size(); ++s)
    stations.push_back({station_nodes[s], 1 + static_cast<int>(s % 2), 0.0, 60.0, false, 0.0, 0.0});
  return build_instance(std::move(names), std::move(tt), std::move(demand), std::move(fleet),
                        std::move(stations), std::move(g), 1.0, 0.2, 2000.0);
}

}  // namespace test_helpers
