#pragma once

#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace evgrid::milp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense : char { LE = '<', EQ = '=', GE = '>' };

struct LinearTerm {
  int var;
  double coef;
};

struct LinearConstraint {
  std::string name;
  std::vector<LinearTerm> terms;  // sorted by variable index, duplicates merged
  Sense sense = Sense::LE;
  double rhs = 0.0;
};

struct VariableDef {
  std::string name;
  double lb = 0.0;
  double ub = kInf;
  bool integer = false;
  double obj = 0.0;
};

// Container for a mixed-integer linear program in minimization form.
// Immutable once assembled; the solvers never mutate it.
class Model {
 public:
  int add_var(std::string name, double lb, double ub, bool integer = false, double obj = 0.0);
  void set_objective(int var, double coef);
  void tighten_bounds(int var, double lb, double ub);
  int add_constraint(std::string name, std::vector<LinearTerm> terms, Sense sense, double rhs);

  int num_vars() const { return static_cast<int>(vars_.size()); }
  int num_constraints() const { return static_cast<int>(rows_.size()); }
  int num_integer_vars() const;
  const VariableDef& var(int v) const { return vars_[v]; }
  const LinearConstraint& row(int r) const { return rows_[r]; }
  const std::vector<VariableDef>& vars() const { return vars_; }
  const std::vector<LinearConstraint>& rows() const { return rows_; }
  std::optional<int> find_var(const std::string& name) const;

  double row_activity(int r, std::span<const double> x) const;
  // positive value = amount by which the row is violated
  double row_violation(int r, std::span<const double> x) const;
  double objective_value(std::span<const double> x) const;
  bool is_feasible(std::span<const double> x, double tol, std::string* why = nullptr) const;

  // CPLEX-style LP text format, for cross-checking against external solvers.
  void write_lp(std::ostream& os) const;

  // Exact coefficient-by-coefficient comparison (bounds, objective, rows).
  static bool same_coefficients(const Model& a, const Model& b, std::string* diff = nullptr);

 private:
  std::vector<VariableDef> vars_;
  std::vector<LinearConstraint> rows_;
  std::unordered_map<std::string, int> var_index_;
};

}  // namespace evgrid::milp
