#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "evgrid/instance.hpp"
#include "evgrid/model.hpp"
#include "evgrid/vrp.hpp"

namespace evgrid::stochastic {

// Standard normal CDF, accurate to ~1e-15 via erfc.
double norm_cdf(double z);

// Inverse standard normal CDF. |Phi(z) - p| < 1e-10 over (0,1); exactly 0 at
// p = 0.5 and odd by construction: inv(p) == -inv(1-p).
double inv_norm_cdf(double p);

struct RiskSpec {
  std::vector<double> epsilon;   // per node
  std::vector<double> quantile;  // Phi^-1(1 - eps)
  std::vector<double> sigma;
};

// Per-node specs from the demand profile; eps_override, when set in (0,1),
// replaces every node's risk tolerance.
RiskSpec make_risk_spec(const ProblemInstance& inst, double eps_override = -1.0);

// Largest nonnegative quantile in play, the zmax input of compute_big_m.
double max_quantile(const RiskSpec& risk);

// Chance-constrained replacement of the load propagation family, the
// conservative branch:
//   l_jv >= l_iv - E[D_j - P_j] + Phi^-1(1-eps_j) sigma_j - M(1 - x_ijv)
std::vector<int> reformulate_chance_constraints(milp::Model& m, const ProblemInstance& inst,
                                                const vrp::RoutingVariables& vars, const vrp::BigM& bigm,
                                                const RiskSpec& risk);

struct ViolationRate {
  int node = -1;
  double epsilon = 0.0;
  double rate = 0.0;
  long samples = 0;
};

// Monte-Carlo check of the probabilistic guarantee: draws Gaussian net
// demand per node, replays planned loads along the routes, reports the
// fraction of samples where the realized load requirement exceeds the
// planned load (or capacity). Per-node substreams keyed on (seed, node)
// keep the result independent of iteration order.
std::vector<ViolationRate> empirical_violation_rate(std::span<const vrp::Route> routes,
                                                    std::span<const double> planned_loads,  // (j-1)*nv + v layout
                                                    std::span<const double> planned_l0,
                                                    const ProblemInstance& inst, const RiskSpec& risk,
                                                    long num_samples, std::uint64_t seed);

}  // namespace evgrid::stochastic
