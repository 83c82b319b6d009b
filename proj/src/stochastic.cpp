#include "evgrid/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "evgrid/rng.hpp"

namespace evgrid::stochastic {

double norm_cdf(double z) { return 0.5 * std::erfc(-z * 0.7071067811865475244); }

namespace {

// Acklam's rational initial guess, then Halley refinement against erfc.
double inv_norm_positive(double p) {
  // p in [0.5, 1)
  double z;
  if (p < 0.97575) {
    const double q = p - 0.5;
    const double r = q * q;
    z = q * (((((-39.69683028665376 * r + 220.9460984245205) * r - 275.9285104469687) * r + 138.3577518672690) * r -
              30.66479806614716) * r + 2.506628277459239) /
        (((((-54.47609879822406 * r + 161.5858368580409) * r - 155.6989798598866) * r + 66.80131188771972) * r -
          13.28068155288572) * r + 1.0);
  } else {
    // lower-tail polynomial evaluated at 1-p, mirrored to the upper tail
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    z = -(((((-0.007784894002430293 * q - 0.3223964580411365) * q - 2.400758277161838) * q - 2.549732539343734) * q +
           4.374664141464968) * q + 2.938163982698783) /
        ((((0.007784695709041462 * q + 0.3224671290700398) * q + 2.445134137142996) * q + 3.754408661907416) * q +
         1.0);
  }
  // two Halley steps push the residual to ~1e-15
  for (int it = 0; it < 2; ++it) {
    const double err = norm_cdf(z) - p;
    const double pdf = 0.3989422804014326779 * std::exp(-0.5 * z * z);
    if (pdf <= 0.0) break;
    const double newton = err / pdf;
    z -= newton / (1.0 + 0.5 * newton * z);
  }
  return z;
}

}  // namespace

double inv_norm_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("inv_norm_cdf requires p in (0,1)");
  if (p == 0.5) return 0.0;
  // odd symmetry holds exactly by construction
  return p > 0.5 ? inv_norm_positive(p) : -inv_norm_positive(1.0 - p);
}

RiskSpec make_risk_spec(const ProblemInstance& inst, double eps_override) {
  RiskSpec risk;
  const int n = inst.num_nodes();
  risk.epsilon.resize(n, 0.5);
  risk.quantile.resize(n, 0.0);
  risk.sigma.resize(n, 0.0);
  for (int j = 1; j < n; ++j) {
    const double eps = (eps_override > 0.0 && eps_override < 1.0) ? eps_override : inst.demand.epsilon[j];
    risk.epsilon[j] = eps;
    risk.quantile[j] = inv_norm_cdf(1.0 - eps);
    risk.sigma[j] = inst.demand.net_std[j];
  }
  return risk;
}

double max_quantile(const RiskSpec& risk) {
  double z = 0.0;
  for (double q : risk.quantile) z = std::max(z, q);
  return z;
}

std::vector<int> reformulate_chance_constraints(milp::Model& m, const ProblemInstance& inst,
                                                const vrp::RoutingVariables& vars, const vrp::BigM& bigm,
                                                const RiskSpec& risk) {
  std::vector<int> rows;
  const int n = inst.num_nodes();
  if (static_cast<int>(risk.sigma.size()) != n || static_cast<int>(risk.quantile.size()) != n)
    throw std::invalid_argument("risk spec does not cover every node");
  for (int i = 0; i < n; ++i) {
    for (int j = 1; j < n; ++j) {
      if (i == j) continue;
      for (int v = 0; v < vars.nv; ++v) {
        const int li = i == 0 ? vars.l0[v] : vars.li(i, v);
        // -E[D_j - P_j] + quantile * sigma - M
        const double rhs = -(inst.demand.mean_dropoff[j] - inst.demand.mean_pickup[j]) +
                           risk.quantile[j] * risk.sigma[j] - bigm.m_load;
        rows.push_back(m.add_constraint(
            "load[" + inst.node_names[i] + "," + inst.node_names[j] + "," + std::to_string(v) + "]",
            {{vars.li(j, v), 1.0}, {li, -1.0}, {vars.xi(i, j, v), -bigm.m_load}}, milp::Sense::GE, rhs));
      }
    }
  }
  return rows;
}

std::vector<ViolationRate> empirical_violation_rate(std::span<const vrp::Route> routes,
                                                    std::span<const double> planned_loads,
                                                    std::span<const double> planned_l0,
                                                    const ProblemInstance& inst, const RiskSpec& risk,
                                                    long num_samples, std::uint64_t seed) {
  const int nv = static_cast<int>(inst.vehicles.size());
  std::vector<ViolationRate> rates;
  for (const auto& route : routes) {
    if (!route.deployed()) continue;
    const int v = route.vehicle;
    const double cap = inst.vehicles[v].capacity;
    for (size_t s = 1; s + 1 < route.nodes.size(); ++s) {
      const int j = route.nodes[s];
      if (j == 0) continue;
      const int prev = route.nodes[s - 1];
      const double l_prev = prev == 0 ? planned_l0[v] : planned_loads[(prev - 1) * nv + v];
      const double l_here = planned_loads[(j - 1) * nv + v];
      const double mean_net = inst.demand.mean_dropoff[j] - inst.demand.mean_pickup[j];  // E[D - P]
      const double sigma = risk.sigma[j];
      Rng rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(j + 1)));
      long violations = 0;
      for (long it = 0; it < num_samples; ++it) {
        const double net = rng.normal(mean_net, sigma);  // realized D_j - P_j
        const double required = l_prev - net;            // load the vehicle must retain
        if (required > l_here + 1e-9 || required > cap + 1e-9) ++violations;
      }
      ViolationRate r;
      r.node = j;
      r.epsilon = risk.epsilon[j];
      r.rate = static_cast<double>(violations) / static_cast<double>(num_samples);
      r.samples = num_samples;
      rates.push_back(r);
    }
  }
  return rates;
}

}  // namespace evgrid::stochastic
