#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evgrid/model.hpp"

namespace evgrid::milp {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterLimit, TimeLimit, Singular };

struct LpOptions {
  double feas_tol = 1e-9;
  double opt_tol = 1e-9;
  double pivot_tol = 1e-9;  // Harris-style ratio tolerance
  int refactor_interval = 100;
  long iter_limit = 500000;
  std::chrono::steady_clock::time_point deadline = std::chrono::steady_clock::time_point::max();
};

struct LpResult {
  LpStatus status = LpStatus::Optimal;
  double objective = 0.0;
  std::vector<double> x;              // structural variable values
  std::vector<double> duals;          // one per row
  std::vector<double> reduced_costs;  // structural variables
  long iterations = 0;
  double primal_infeasibility = 0.0;
  double max_residual = 0.0;
  std::string diagnostics;
};

enum class VarStatus : std::uint8_t { Basic, AtLower, AtUpper, Free };

struct Basis {
  std::vector<int> basic;             // row position -> column (structural or logical)
  std::vector<VarStatus> status;      // per column, structural then logical
  bool valid() const { return !basic.empty(); }
};

// Bounded-variable primal simplex over the computational form
//   A x + s = b,  lb <= (x, s) <= ub
// with a phase-1 infeasibility minimization, product-form basis updates on a
// bordered-identity factorization, and deterministic tie breaking.
class SimplexSolver {
 public:
  explicit SimplexSolver(const Model& model);

  // Bounds are for structural variables only; logical bounds derive from row
  // senses. Pass an empty basis to cold start; on return it holds the final
  // basis for warm starting.
  LpResult solve(std::span<const double> lb, std::span<const double> ub, const LpOptions& opts, Basis* basis);

  int num_rows() const { return m_; }
  int num_structural() const { return n_; }

 private:
  struct ColEntry {
    int row;
    double coef;
  };

  // immutable problem data
  const Model& model_;
  int n_ = 0;  // structural columns
  int m_ = 0;  // rows (logical columns)
  std::vector<std::vector<ColEntry>> cols_;  // structural sparse columns
  std::vector<double> rhs_;
  std::vector<double> log_lb_, log_ub_;  // logical bounds from senses

  // per-solve state
  std::vector<double> lb_, ub_;    // all columns
  std::vector<double> cost_;      // phase-2 objective, all columns
  std::vector<VarStatus> status_;
  std::vector<int> basic_;        // row position -> column
  std::vector<int> pos_of_;       // column -> row position or -1
  std::vector<double> xval_;      // all columns, basic entries authoritative

  // factorization: bordered identity + dense LU bump + eta file.
  // All of it describes the basis as frozen at factorization time; the eta
  // file carries the pivots applied since.
  std::vector<int> frozen_basic_;
  std::vector<int> dense_rows_;       // rows not covered by logical basics
  std::vector<int> dense_row_of_;     // row -> index into dense_rows_ or -1
  std::vector<int> dense_cols_;       // basis positions holding structural columns
  std::vector<int> logical_pos_of_row_;  // row -> basis position of its logical, or -1
  std::vector<double> lu_;            // s x s dense factor, row major
  std::vector<int> lu_perm_;
  int bump_ = 0;
  struct Eta {
    int pos;
    double pivot;
    std::vector<ColEntry> entries;  // excludes pivot position
  };
  std::vector<Eta> etas_;
  long pivots_since_refactor_ = 0;
  double min_pivot_ = 0.0, max_pivot_ = 0.0;  // dense factor extremes, for diagnostics

  void load_bounds(std::span<const double> lb, std::span<const double> ub);
  void column_entries(int col, std::vector<ColEntry>& out) const;
  double col_dot(int col, std::span<const double> y) const;

  bool factorize();                // returns false if basis had to be repaired
  void ftran(std::vector<double>& v) const;  // solves B z = v in place
  void btran(std::vector<double>& v) const;  // solves B^T z = v in place
  void compute_basic_values();
  double infeasibility() const;

  struct RatioHit {
    double step = kInf;
    int pos = -1;       // leaving basis position, -1 = entering bound flip
    double bound = 0.0; // value the leaving variable lands on
    bool to_upper = false;
  };
  RatioHit ratio_test(const std::vector<double>& alpha, int entering, int dir, bool phase1, bool bland) const;

  LpResult run(const LpOptions& opts);
};

// Solves the LP relaxation of the model with its own bounds.
LpResult solve_lp(const Model& model, const LpOptions& opts = {});

}  // namespace evgrid::milp
