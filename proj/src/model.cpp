#include "evgrid/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace evgrid::milp {

int Model::add_var(std::string name, double lb, double ub, bool integer, double obj) {
  if (lb > ub) throw std::invalid_argument("variable '" + name + "': lower bound exceeds upper bound");
  if (var_index_.count(name)) throw std::invalid_argument("duplicate variable name '" + name + "'");
  const int id = static_cast<int>(vars_.size());
  var_index_.emplace(name, id);
  vars_.push_back(VariableDef{std::move(name), lb, ub, integer, obj});
  return id;
}

void Model::set_objective(int var, double coef) { vars_.at(var).obj = coef; }

void Model::tighten_bounds(int var, double lb, double ub) {
  auto& v = vars_.at(var);
  v.lb = std::max(v.lb, lb);
  v.ub = std::min(v.ub, ub);
  if (v.lb > v.ub) throw std::invalid_argument("variable '" + v.name + "': bound tightening made domain empty");
}

int Model::add_constraint(std::string name, std::vector<LinearTerm> terms, Sense sense, double rhs) {
  for (const auto& t : terms) {
    if (t.var < 0 || t.var >= num_vars())
      throw std::invalid_argument("constraint '" + name + "' references unknown variable index " +
                                  std::to_string(t.var));
  }
  std::sort(terms.begin(), terms.end(), [](const LinearTerm& a, const LinearTerm& b) { return a.var < b.var; });
  std::vector<LinearTerm> merged;
  merged.reserve(terms.size());
  for (const auto& t : terms) {
    if (!merged.empty() && merged.back().var == t.var) {
      merged.back().coef += t.coef;
    } else {
      merged.push_back(t);
    }
  }
  std::erase_if(merged, [](const LinearTerm& t) { return t.coef == 0.0; });
  const int id = static_cast<int>(rows_.size());
  rows_.push_back(LinearConstraint{std::move(name), std::move(merged), sense, rhs});
  return id;
}

int Model::num_integer_vars() const {
  int n = 0;
  for (const auto& v : vars_) n += v.integer ? 1 : 0;
  return n;
}

std::optional<int> Model::find_var(const std::string& name) const {
  auto it = var_index_.find(name);
  if (it == var_index_.end()) return std::nullopt;
  return it->second;
}

double Model::row_activity(int r, std::span<const double> x) const {
  double a = 0.0;
  for (const auto& t : rows_[r].terms) a += t.coef * x[t.var];
  return a;
}

double Model::row_violation(int r, std::span<const double> x) const {
  const double a = row_activity(r, x);
  const auto& row = rows_[r];
  switch (row.sense) {
    case Sense::LE: return a - row.rhs;
    case Sense::GE: return row.rhs - a;
    case Sense::EQ: return std::abs(a - row.rhs);
  }
  return 0.0;
}

double Model::objective_value(std::span<const double> x) const {
  double obj = 0.0;
  for (int v = 0; v < num_vars(); ++v) obj += vars_[v].obj * x[v];
  return obj;
}

bool Model::is_feasible(std::span<const double> x, double tol, std::string* why) const {
  for (int v = 0; v < num_vars(); ++v) {
    if (x[v] < vars_[v].lb - tol || x[v] > vars_[v].ub + tol) {
      if (why) *why = "bound violated on " + vars_[v].name;
      return false;
    }
    if (vars_[v].integer && std::abs(x[v] - std::round(x[v])) > tol) {
      if (why) *why = "integrality violated on " + vars_[v].name;
      return false;
    }
  }
  for (int r = 0; r < num_constraints(); ++r) {
    if (row_violation(r, x) > tol) {
      if (why) {
        std::ostringstream os;
        os << "row " << rows_[r].name << " violated by " << row_violation(r, x);
        *why = os.str();
      }
      return false;
    }
  }
  return true;
}

namespace {

std::string lp_safe(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.') {
      out.push_back(c);
    } else {
      out.push_back('_');
    }
  }
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out[0]))) out.insert(out.begin(), 'v');
  return out;
}

void write_terms(std::ostream& os, const std::vector<LinearTerm>& terms, const std::vector<VariableDef>& vars) {
  bool first = true;
  for (const auto& t : terms) {
    if (first) {
      if (t.coef < 0) os << "- ";
      first = false;
    } else {
      os << (t.coef < 0 ? " - " : " + ");
    }
    os << std::abs(t.coef) << ' ' << lp_safe(vars[t.var].name);
  }
  if (first) os << "0 " << lp_safe(vars[0].name);
}

}  // namespace

void Model::write_lp(std::ostream& os) const {
  os.precision(17);
  os << "Minimize\n obj: ";
  bool first = true;
  for (const auto& v : vars_) {
    if (v.obj == 0.0) continue;
    if (first) {
      if (v.obj < 0) os << "- ";
      first = false;
    } else {
      os << (v.obj < 0 ? " - " : " + ");
    }
    os << std::abs(v.obj) << ' ' << lp_safe(v.name);
  }
  if (first) os << "0 " << lp_safe(vars_.empty() ? "x" : vars_[0].name);
  os << "\nSubject To\n";
  for (const auto& row : rows_) {
    os << ' ' << lp_safe(row.name) << ": ";
    write_terms(os, row.terms, vars_);
    switch (row.sense) {
      case Sense::LE: os << " <= "; break;
      case Sense::GE: os << " >= "; break;
      case Sense::EQ: os << " = "; break;
    }
    os << row.rhs << '\n';
  }
  os << "Bounds\n";
  for (const auto& v : vars_) {
    const std::string n = lp_safe(v.name);
    if (v.lb == -kInf && v.ub == kInf) {
      os << ' ' << n << " free\n";
    } else if (v.lb == v.ub) {
      os << ' ' << n << " = " << v.lb << '\n';
    } else {
      if (v.lb == -kInf) {
        os << " -inf <= " << n;
      } else {
        os << ' ' << v.lb << " <= " << n;
      }
      if (v.ub != kInf) os << " <= " << v.ub;
      os << '\n';
    }
  }
  bool any_int = false;
  for (const auto& v : vars_) any_int |= v.integer;
  if (any_int) {
    os << "Generals\n";
    for (const auto& v : vars_) {
      if (v.integer) os << ' ' << lp_safe(v.name) << '\n';
    }
  }
  os << "End\n";
}

bool Model::same_coefficients(const Model& a, const Model& b, std::string* diff) {
  auto fail = [&](const std::string& msg) {
    if (diff) *diff = msg;
    return false;
  };
  if (a.num_vars() != b.num_vars()) return fail("variable count differs");
  if (a.num_constraints() != b.num_constraints()) return fail("constraint count differs");
  for (int v = 0; v < a.num_vars(); ++v) {
    const auto& va = a.vars_[v];
    const auto& vb = b.vars_[v];
    if (va.lb != vb.lb || va.ub != vb.ub || va.integer != vb.integer || va.obj != vb.obj)
      return fail("variable " + va.name + " differs");
  }
  for (int r = 0; r < a.num_constraints(); ++r) {
    const auto& ra = a.rows_[r];
    const auto& rb = b.rows_[r];
    if (ra.sense != rb.sense || ra.rhs != rb.rhs || ra.terms.size() != rb.terms.size())
      return fail("row " + ra.name + " differs");
    for (size_t k = 0; k < ra.terms.size(); ++k) {
      if (ra.terms[k].var != rb.terms[k].var || ra.terms[k].coef != rb.terms[k].coef)
        return fail("row " + ra.name + " coefficient " + std::to_string(k) + " differs");
    }
  }
  return true;
}

}  // namespace evgrid::milp
