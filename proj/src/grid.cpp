#include "evgrid/grid.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

#include "evgrid/energy.hpp"
#include "evgrid/instance.hpp"

namespace evgrid::grid {

int GridNetwork::node_index(const std::string& name) const {
  for (int i = 0; i < num_nodes(); ++i)
    if (nodes[i].name == name) return i;
  return -1;
}

std::vector<int> check_radial(const GridNetwork& g) {
  const int n = g.num_nodes();
  if (n == 0) throw std::invalid_argument("grid has no nodes");
  if (g.slack < 0 || g.slack >= n) throw std::invalid_argument("slack node out of range");
  if (static_cast<int>(g.lines.size()) != n - 1)
    throw std::invalid_argument("grid is not radial: expected " + std::to_string(n - 1) + " lines, have " +
                                std::to_string(g.lines.size()));
  std::vector<std::vector<int>> adjacent(n);
  for (int l = 0; l < static_cast<int>(g.lines.size()); ++l) {
    const auto& line = g.lines[l];
    if (line.from < 0 || line.from >= n || line.to < 0 || line.to >= n)
      throw std::invalid_argument("line " + std::to_string(l) + " references unknown node");
    if (line.r < 0 || line.x < 0) throw std::invalid_argument("line " + std::to_string(l) + " has negative impedance");
    adjacent[line.from].push_back(l);
    adjacent[line.to].push_back(l);
  }
  std::vector<int> parent_line(n, -1);
  std::vector<char> seen(n, 0);
  std::deque<int> queue{g.slack};
  seen[g.slack] = 1;
  int visited = 0;
  while (!queue.empty()) {
    const int node = queue.front();
    queue.pop_front();
    ++visited;
    for (int l : adjacent[node]) {
      const auto& line = g.lines[l];
      const int other = line.from == node ? line.to : line.from;
      if (seen[other]) {
        if (parent_line[node] != l) throw std::invalid_argument("grid contains a cycle through line " + std::to_string(l));
        continue;
      }
      seen[other] = 1;
      parent_line[other] = l;
      queue.push_back(other);
    }
  }
  if (visited != n) throw std::invalid_argument("grid is disconnected from the slack node");
  return parent_line;
}

GridVariables register_grid_variables(milp::Model& m, const GridNetwork& g, bool with_coupling) {
  GridVariables v;
  const int n = g.num_nodes();
  for (int l = 0; l < static_cast<int>(g.lines.size()); ++l) {
    const auto& line = g.lines[l];
    const std::string tag = g.nodes[line.from].name + "_" + g.nodes[line.to].name;
    const double p_lb = g.symmetric_flow_bounds ? -line.p_limit : -milp::kInf;
    const double q_lb = g.symmetric_flow_bounds ? -line.q_limit : -milp::kInf;
    v.p_flow.push_back(m.add_var("pf[" + tag + "]", p_lb, line.p_limit));
    v.q_flow.push_back(m.add_var("qf[" + tag + "]", q_lb, line.q_limit));
  }
  for (int i = 0; i < n; ++i) {
    const auto& node = g.nodes[i];
    v.p_gen.push_back(m.add_var("pg[" + node.name + "]", node.gen_p_min, node.gen_p_max));
    v.q_gen.push_back(m.add_var("qg[" + node.name + "]", node.gen_q_min, node.gen_q_max));
    if (i == g.slack) {
      v.u.push_back(m.add_var("u[" + node.name + "]", 1.0, 1.0));
    } else {
      v.u.push_back(m.add_var("u[" + node.name + "]", node.v_min * node.v_min, node.v_max * node.v_max));
    }
  }
  if (with_coupling) {
    for (int i = 0; i < n; ++i) v.p_d.push_back(m.add_var("pd[" + g.nodes[i].name + "]", 0.0, milp::kInf));
  }
  return v;
}

std::vector<int> build_lindistflow(milp::Model& m, const GridNetwork& g, const GridVariables& vars) {
  check_radial(g);
  std::vector<int> rows;
  const int n = g.num_nodes();
  std::vector<std::vector<int>> lines_out(n);  // lines leaving node toward children
  for (int l = 0; l < static_cast<int>(g.lines.size()); ++l) lines_out[g.lines[l].from].push_back(l);

  const bool coupled = !vars.p_d.empty();
  auto balance_terms = [&](int node, std::vector<milp::LinearTerm>& terms, bool active) {
    terms.push_back({active ? vars.p_gen[node] : vars.q_gen[node], 1.0});
    for (int child_line : lines_out[node]) terms.push_back({active ? vars.p_flow[child_line] : vars.q_flow[child_line], -1.0});
  };

  for (int l = 0; l < static_cast<int>(g.lines.size()); ++l) {
    const auto& line = g.lines[l];
    const auto& name = g.nodes[line.to].name;
    // p_nm - p^g_m + p^d_m + sum of child flows = 0  (delivery-positive form)
    std::vector<milp::LinearTerm> pt{{vars.p_flow[l], 1.0}};
    balance_terms(line.to, pt, true);
    if (coupled) {
      pt.push_back({vars.p_d[line.to], -1.0});
      rows.push_back(m.add_constraint("grid_p[" + name + "]", std::move(pt), milp::Sense::EQ, 0.0));
    } else {
      rows.push_back(m.add_constraint("grid_p[" + name + "]", std::move(pt), milp::Sense::EQ, g.nodes[line.to].base_p));
    }
    std::vector<milp::LinearTerm> qt{{vars.q_flow[l], 1.0}};
    balance_terms(line.to, qt, false);
    rows.push_back(m.add_constraint("grid_q[" + name + "]", std::move(qt), milp::Sense::EQ, g.nodes[line.to].base_q));
    // u_m = u_n - 2(r p + x q)
    rows.push_back(m.add_constraint(
        "grid_v[" + name + "]",
        {{vars.u[line.to], 1.0}, {vars.u[line.from], -1.0}, {vars.p_flow[l], 2.0 * line.r}, {vars.q_flow[l], 2.0 * line.x}},
        milp::Sense::EQ, 0.0));
  }
  // root balance: the slack generation covers its own load plus its subtrees
  {
    const auto& name = g.nodes[g.slack].name;
    std::vector<milp::LinearTerm> pt;
    balance_terms(g.slack, pt, true);
    if (coupled) {
      pt.push_back({vars.p_d[g.slack], -1.0});
      rows.push_back(m.add_constraint("grid_p[" + name + "]", std::move(pt), milp::Sense::EQ, 0.0));
    } else {
      rows.push_back(m.add_constraint("grid_p[" + name + "]", std::move(pt), milp::Sense::EQ, g.nodes[g.slack].base_p));
    }
    std::vector<milp::LinearTerm> qt;
    balance_terms(g.slack, qt, false);
    rows.push_back(m.add_constraint("grid_q[" + name + "]", std::move(qt), milp::Sense::EQ, g.nodes[g.slack].base_q));
  }
  return rows;
}

std::vector<int> couple_charging(milp::Model& m, const ProblemInstance& inst,
                                 const energy::StationSet& stations, const energy::EnergyVariables& evars,
                                 const GridVariables& gvars) {
  const auto& g = inst.grid;
  if (gvars.p_d.empty()) throw std::invalid_argument("coupling requires p_d variables");
  const int n = g.num_nodes();
  std::vector<std::vector<int>> stations_at(n);
  for (int k = 0; k < static_cast<int>(stations.entries.size()); ++k) {
    const auto& st = stations.entries[k];
    if (!st.grid_coupled) continue;
    if (st.grid_node < 0 || st.grid_node >= n)
      throw std::invalid_argument("station " + std::to_string(k) + " has no grid node");
    stations_at[st.grid_node].push_back(k);
  }
  std::vector<int> rows;
  const int nv = static_cast<int>(inst.vehicles.size());
  for (int node = 0; node < n; ++node) {
    std::vector<milp::LinearTerm> terms{{gvars.p_d[node], 1.0}};
    for (int k : stations_at[node]) {
      for (int v = 0; v < nv; ++v) terms.push_back({evars.y[k * nv + v], -inst.vehicles[v].charge_rate});
    }
    rows.push_back(m.add_constraint("couple[" + g.nodes[node].name + "]", std::move(terms), milp::Sense::EQ,
                                    g.nodes[node].base_p));
  }
  return rows;
}

SweepResult radial_sweep(const GridNetwork& g, std::span<const double> p_consumption,
                         std::span<const double> q_consumption, double slack_u) {
  const std::vector<int> parent_line = check_radial(g);
  const int n = g.num_nodes();
  if (static_cast<int>(p_consumption.size()) != n || static_cast<int>(q_consumption.size()) != n)
    throw std::invalid_argument("injection vectors must cover every grid node");

  // order nodes root-to-leaf once, then aggregate leaf-to-root
  std::vector<int> order;
  order.reserve(n);
  {
    std::vector<std::vector<int>> children(n);
    for (int i = 0; i < n; ++i) {
      if (parent_line[i] < 0) continue;
      const auto& line = g.lines[parent_line[i]];
      children[line.from == i ? line.to : line.from].push_back(i);
    }
    std::deque<int> queue{g.slack};
    while (!queue.empty()) {
      const int node = queue.front();
      queue.pop_front();
      order.push_back(node);
      for (int c : children[node]) queue.push_back(c);
    }
  }

  SweepResult out;
  out.p_flow.assign(g.lines.size(), 0.0);
  out.q_flow.assign(g.lines.size(), 0.0);
  out.u.assign(n, 0.0);

  std::vector<double> p_sub(p_consumption.begin(), p_consumption.end());
  std::vector<double> q_sub(q_consumption.begin(), q_consumption.end());
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int node = *it;
    if (parent_line[node] < 0) continue;
    const int l = parent_line[node];
    out.p_flow[l] = p_sub[node];
    out.q_flow[l] = q_sub[node];
    const auto& line = g.lines[l];
    const int parent = line.from == node ? line.to : line.from;
    p_sub[parent] += p_sub[node];
    q_sub[parent] += q_sub[node];
  }
  out.slack_p = p_sub[g.slack];
  out.slack_q = q_sub[g.slack];

  out.u[g.slack] = slack_u;
  for (int node : order) {
    if (parent_line[node] < 0) continue;
    const int l = parent_line[node];
    const auto& line = g.lines[l];
    const int parent = line.from == node ? line.to : line.from;
    out.u[node] = out.u[parent] - 2.0 * (line.r * out.p_flow[l] + line.x * out.q_flow[l]);
  }
  return out;
}

}  // namespace evgrid::grid
