#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "evgrid/bnb.hpp"
#include "evgrid/model.hpp"
#include "evgrid/rng.hpp"
#include "evgrid/simplex.hpp"

using namespace evgrid;
using namespace evgrid::milp;

namespace {

// Reference LP solver for tiny problems: enumerates every candidate vertex
// (n active constraints drawn from rows-as-equalities and variable bounds),
// independent of the simplex implementation.
struct VertexEnumerator {
  const Model& model;

  explicit VertexEnumerator(const Model& m) : model(m) {}

  struct Plane {
    std::vector<double> a;
    double b;
  };

  bool solve_square(std::vector<std::vector<double>> A, std::vector<double> b, std::vector<double>& x) const {
    const int n = static_cast<int>(b.size());
    x.assign(n, 0.0);
    for (int k = 0; k < n; ++k) {
      int piv = k;
      for (int i = k + 1; i < n; ++i)
        if (std::abs(A[i][k]) > std::abs(A[piv][k])) piv = i;
      if (std::abs(A[piv][k]) < 1e-10) return false;
      std::swap(A[k], A[piv]);
      std::swap(b[k], b[piv]);
      for (int i = k + 1; i < n; ++i) {
        const double f = A[i][k] / A[k][k];
        if (f == 0.0) continue;
        for (int j = k; j < n; ++j) A[i][j] -= f * A[k][j];
        b[i] -= f * b[k];
      }
    }
    for (int k = n - 1; k >= 0; --k) {
      double acc = b[k];
      for (int j = k + 1; j < n; ++j) acc -= A[k][j] * x[j];
      x[k] = acc / A[k][k];
    }
    return true;
  }

  // returns true if feasible; best objective in *obj
  bool best_vertex(double* obj) const {
    const int n = model.num_vars();
    std::vector<Plane> planes;
    for (int r = 0; r < model.num_constraints(); ++r) {
      Plane p;
      p.a.assign(n, 0.0);
      for (const auto& t : model.row(r).terms) p.a[t.var] = t.coef;
      p.b = model.row(r).rhs;
      planes.push_back(std::move(p));
    }
    for (int v = 0; v < n; ++v) {
      if (model.var(v).lb > -kInf) {
        Plane p;
        p.a.assign(n, 0.0);
        p.a[v] = 1.0;
        p.b = model.var(v).lb;
        planes.push_back(std::move(p));
      }
      if (model.var(v).ub < kInf) {
        Plane p;
        p.a.assign(n, 0.0);
        p.a[v] = 1.0;
        p.b = model.var(v).ub;
        planes.push_back(std::move(p));
      }
    }
    const int cands = static_cast<int>(planes.size());
    std::vector<int> pick(n);
    bool found = false;
    double best = kInf;
    std::vector<double> x;
    auto rec = [&](auto&& self, int depth, int start) -> void {
      if (depth == n) {
        std::vector<std::vector<double>> A(n);
        std::vector<double> b(n);
        for (int i = 0; i < n; ++i) {
          A[i] = planes[pick[i]].a;
          b[i] = planes[pick[i]].b;
        }
        if (!solve_square(std::move(A), std::move(b), x)) return;
        if (!model.is_feasible(x, 1e-7)) return;
        const double o = model.objective_value(x);
        if (!found || o < best) {
          found = true;
          best = o;
        }
        return;
      }
      for (int c = start; c < cands; ++c) {
        pick[depth] = c;
        self(self, depth + 1, c + 1);
      }
    };
    rec(rec, 0, 0);
    if (found) *obj = best;
    return found;
  }
};

Model random_lp(Rng& rng, bool integers) {
  Model m;
  const int n = rng.uniform_int(2, 5);
  const int rows = rng.uniform_int(1, 5);
  for (int v = 0; v < n; ++v) {
    const double lo = rng.uniform_int(-2, 0);
    const double hi = lo + rng.uniform_int(1, 8);
    m.add_var("x" + std::to_string(v), lo, hi, integers && rng.uniform_int(0, 1) == 1,
              rng.uniform_int(-5, 5));
  }
  for (int r = 0; r < rows; ++r) {
    std::vector<LinearTerm> terms;
    for (int v = 0; v < n; ++v) {
      const int c = rng.uniform_int(-3, 3);
      if (c != 0) terms.push_back({v, static_cast<double>(c)});
    }
    if (terms.empty()) terms.push_back({0, 1.0});
    const Sense s = rng.uniform_int(0, 2) == 0 ? Sense::LE : (rng.uniform_int(0, 1) ? Sense::GE : Sense::EQ);
    m.add_constraint("r" + std::to_string(r), std::move(terms), s, rng.uniform_int(-6, 10));
  }
  return m;
}

}  // namespace

TEST_CASE("lp: single bounded variable") {
  Model m;
  const int x = m.add_var("x", -kInf, 10.0, false, 1.0);
  m.add_constraint("lo", {{x, 1.0}}, Sense::GE, 3.0);
  const LpResult r = solve_lp(m);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.objective == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(r.x[0] == doctest::Approx(3.0));
}

TEST_CASE("lp: infeasible bound pair certificate") {
  Model m;
  const int x = m.add_var("x", -kInf, kInf, false, 1.0);
  m.add_constraint("hi", {{x, 1.0}}, Sense::LE, 1.0);
  m.add_constraint("lo", {{x, 1.0}}, Sense::GE, 2.0);
  const LpResult r = solve_lp(m);
  CHECK(r.status == LpStatus::Infeasible);
  CHECK(r.primal_infeasibility > 0.5);
}

TEST_CASE("lp: unbounded detection") {
  Model m;
  m.add_var("x", 0.0, kInf, false, -1.0);
  const LpResult r = solve_lp(m);
  CHECK(r.status == LpStatus::Unbounded);
}

TEST_CASE("lp: transportation 3x2 against vertex enumeration") {
  // supplies {20,30,25}, demands {40,35}, cost rows {{4,6},{2,3},{5,1}}; optimum 175
  Model m;
  const double cost[3][2] = {{4, 6}, {2, 3}, {5, 1}};
  const double supply[3] = {20, 30, 25};
  const double demand[2] = {40, 35};
  int x[3][2];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) x[i][j] = m.add_var("x" + std::to_string(i) + std::to_string(j), 0.0, 40.0, false, cost[i][j]);
  for (int i = 0; i < 3; ++i)
    m.add_constraint("s" + std::to_string(i), {{x[i][0], 1.0}, {x[i][1], 1.0}}, Sense::LE, supply[i]);
  for (int j = 0; j < 2; ++j)
    m.add_constraint("d" + std::to_string(j), {{x[0][j], 1.0}, {x[1][j], 1.0}, {x[2][j], 1.0}}, Sense::GE, demand[j]);

  double oracle_obj = 0.0;
  REQUIRE(VertexEnumerator(m).best_vertex(&oracle_obj));
  CHECK(oracle_obj == doctest::Approx(175.0).epsilon(1e-9));  // frozen from the enumeration oracle

  const LpResult r = solve_lp(m);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.objective == doctest::Approx(oracle_obj).epsilon(1e-9));
  CHECK(r.max_residual < 1e-9);
}

TEST_CASE("lp: random instances match vertex enumeration") {
  Rng rng(20240811);
  int feasible_count = 0;
  for (int trial = 0; trial < 120; ++trial) {
    Model m = random_lp(rng, false);
    double oracle_obj = 0.0;
    const bool oracle_feasible = VertexEnumerator(m).best_vertex(&oracle_obj);
    const LpResult r = solve_lp(m);
    if (oracle_feasible) {
      ++feasible_count;
      REQUIRE_MESSAGE(r.status == LpStatus::Optimal, "trial ", trial);
      REQUIRE_MESSAGE(r.objective == doctest::Approx(oracle_obj).epsilon(1e-7), "trial ", trial);
    } else {
      REQUIRE_MESSAGE(r.status == LpStatus::Infeasible, "trial ", trial);
    }
  }
  CHECK(feasible_count > 20);  // the generator should produce a healthy mix
}

TEST_CASE("lp: primal residuals stay tiny on random instances") {
  Rng rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    Model m = random_lp(rng, false);
    const LpResult r = solve_lp(m);
    if (r.status == LpStatus::Optimal) {
      CHECK(r.max_residual < 1e-9);
      std::string why;
      CHECK_MESSAGE(m.is_feasible(r.x, 1e-7, &why), why);
    }
  }
}

TEST_CASE("bnb: pure LP solves in a single node") {
  Model m;
  const int x = m.add_var("x", 0.0, 10.0, false, 2.0);
  m.add_constraint("lo", {{x, 1.0}}, Sense::GE, 1.5);
  const SolveResult r = branch_and_bound(m);
  CHECK(r.status == SolveStatus::Optimal);
  CHECK(r.node_count == 1);
  CHECK(r.objective == doctest::Approx(3.0));
}

TEST_CASE("bnb: knapsack toy equals exhaustive enumeration") {
  // max 5a + 4b + 3c s.t. 2a + 3b + c <= 4  ->  min negated
  Model m;
  const int a = m.add_var("a", 0, 1, true, -5.0);
  const int b = m.add_var("b", 0, 1, true, -4.0);
  const int c = m.add_var("c", 0, 1, true, -3.0);
  m.add_constraint("cap", {{a, 2.0}, {b, 3.0}, {c, 1.0}}, Sense::LE, 4.0);

  double best = 0.0;
  for (int mask = 0; mask < 8; ++mask) {
    const double av = mask & 1, bv = (mask >> 1) & 1, cv = (mask >> 2) & 1;
    if (2 * av + 3 * bv + cv <= 4.0) best = std::min(best, -5 * av - 4 * bv - 3 * cv);
  }
  REQUIRE(best == -8.0);  // frozen from the 2^3 enumeration: a=1, c=1

  const SolveResult r = branch_and_bound(m);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(best).epsilon(1e-9));
  CHECK(r.gap <= 1e-6);
}

TEST_CASE("bnb: random MIPs match brute force over integer grids") {
  Rng rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    Model m = random_lp(rng, true);
    // brute force: enumerate integer assignments, solve remaining LP by enumeration
    std::vector<int> int_vars;
    for (int v = 0; v < m.num_vars(); ++v)
      if (m.var(v).integer) int_vars.push_back(v);

    double best = kInf;
    bool found = false;
    std::vector<double> fixed_lo(m.num_vars()), fixed_hi(m.num_vars());
    auto enumerate = [&](auto&& self, size_t idx, Model& sub) -> void {
      if (idx == int_vars.size()) {
        double obj = 0.0;
        if (VertexEnumerator(sub).best_vertex(&obj)) {
          found = true;
          best = std::min(best, obj);
        }
        return;
      }
      const int v = int_vars[idx];
      const int lo = static_cast<int>(std::ceil(m.var(v).lb - 1e-9));
      const int hi = static_cast<int>(std::floor(m.var(v).ub + 1e-9));
      for (int val = lo; val <= hi; ++val) {
        Model copy = sub;
        copy.tighten_bounds(v, val, val);
        self(self, idx + 1, copy);
      }
    };
    Model base = m;
    enumerate(enumerate, 0, base);

    const SolveResult r = branch_and_bound(m);
    if (found) {
      REQUIRE_MESSAGE(r.status == SolveStatus::Optimal, "trial ", trial);
      REQUIRE_MESSAGE(r.objective == doctest::Approx(best).epsilon(1e-6), "trial ", trial);
    } else {
      REQUIRE_MESSAGE(r.status == SolveStatus::Infeasible, "trial ", trial);
    }
  }
}

TEST_CASE("bnb: deterministic repeat solves and monotone log") {
  Model m;
  Rng rng(4242);
  for (int trial = 0; trial < 5; ++trial) {
    Model mm = random_lp(rng, true);
    std::ostringstream log1, log2;
    SolveOptions o1;
    o1.log = &log1;
    SolveOptions o2;
    o2.log = &log2;
    const SolveResult r1 = branch_and_bound(mm, o1);
    const SolveResult r2 = branch_and_bound(mm, o2);
    CHECK(r1.status == r2.status);
    if (r1.has_incumbent) {
      REQUIRE(r2.has_incumbent);
      CHECK(r1.objective == r2.objective);
      REQUIRE(r1.values.size() == r2.values.size());
      for (size_t i = 0; i < r1.values.size(); ++i) CHECK(r1.values[i] == r2.values[i]);
    }
    // bound column of the log is nondecreasing, incumbent column nonincreasing
    std::istringstream in(log1.str());
    std::string line;
    double prev_bound = -std::numeric_limits<double>::infinity(), prev_inc = 1e300;
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      std::string tok;
      std::getline(ls, tok, ',');
      std::getline(ls, tok, ',');
      const double bound = std::stod(tok);
      CHECK(bound >= prev_bound - 1e-7);
      prev_bound = bound;
      std::getline(ls, tok, ',');
      if (tok != "-") {
        const double inc = std::stod(tok);
        CHECK(inc <= prev_inc + 1e-7);
        prev_inc = inc;
      }
    }
  }
  (void)m;
}

TEST_CASE("bnb: warm start seeds the incumbent") {
  Model m;
  const int a = m.add_var("a", 0, 1, true, -1.0);
  const int b = m.add_var("b", 0, 1, true, -1.0);
  m.add_constraint("pick", {{a, 1.0}, {b, 1.0}}, Sense::LE, 1.0);
  const std::vector<double> seed = {1.0, 0.0};
  const SolveResult r = branch_and_bound(m, {}, &seed);
  CHECK(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(-1.0));
}

TEST_CASE("model: LP export mentions every section") {
  Model m;
  const int x = m.add_var("x", 0, 4, true, 1.0);
  const int y = m.add_var("y", -kInf, kInf, false, -2.0);
  m.add_constraint("c0", {{x, 1.0}, {y, 3.0}}, Sense::LE, 7.0);
  std::ostringstream os;
  m.write_lp(os);
  const std::string lp = os.str();
  CHECK(lp.find("Minimize") != std::string::npos);
  CHECK(lp.find("Subject To") != std::string::npos);
  CHECK(lp.find("Bounds") != std::string::npos);
  CHECK(lp.find("Generals") != std::string::npos);
  CHECK(lp.find("y free") != std::string::npos);
  CHECK(lp.find("End") != std::string::npos);
}

TEST_CASE("model: duplicate names and dangling references are rejected") {
  Model m;
  m.add_var("x", 0, 1);
  CHECK_THROWS(m.add_var("x", 0, 2));
  CHECK_THROWS(m.add_constraint("bad", {{5, 1.0}}, Sense::LE, 0.0));
}

TEST_CASE("model: coefficient comparison catches single-entry drift") {
  Model a, b;
  a.add_var("x", 0, 1, false, 1.0);
  b.add_var("x", 0, 1, false, 1.0);
  a.add_constraint("r", {{0, 2.0}}, Sense::LE, 1.0);
  b.add_constraint("r", {{0, 2.0}}, Sense::LE, 1.0);
  CHECK(Model::same_coefficients(a, b));
  Model c = b;
  c.add_constraint("extra", {{0, 1.0}}, Sense::LE, 5.0);
  CHECK(!Model::same_coefficients(a, c));
}
