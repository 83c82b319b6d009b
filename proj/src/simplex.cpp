#include "evgrid/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace evgrid::milp {

namespace {
constexpr double kPivotZero = 1e-11;
constexpr double kEtaPivotMin = 1e-7;
constexpr int kBlandTrigger = 60;  // consecutive degenerate pivots before Bland's rule
}  // namespace

SimplexSolver::SimplexSolver(const Model& model) : model_(model) {
  n_ = model.num_vars();
  m_ = model.num_constraints();
  cols_.assign(n_, {});
  rhs_.resize(m_);
  log_lb_.resize(m_);
  log_ub_.resize(m_);
  for (int r = 0; r < m_; ++r) {
    const auto& row = model.row(r);
    rhs_[r] = row.rhs;
    for (const auto& t : row.terms) cols_[t.var].push_back({r, t.coef});
    switch (row.sense) {
      case Sense::LE: log_lb_[r] = 0.0; log_ub_[r] = kInf; break;
      case Sense::GE: log_lb_[r] = -kInf; log_ub_[r] = 0.0; break;
      case Sense::EQ: log_lb_[r] = 0.0; log_ub_[r] = 0.0; break;
    }
  }
}

void SimplexSolver::load_bounds(std::span<const double> lb, std::span<const double> ub) {
  const int total = n_ + m_;
  lb_.resize(total);
  ub_.resize(total);
  cost_.assign(total, 0.0);
  for (int j = 0; j < n_; ++j) {
    lb_[j] = lb[j];
    ub_[j] = ub[j];
    cost_[j] = model_.var(j).obj;
  }
  for (int r = 0; r < m_; ++r) {
    lb_[n_ + r] = log_lb_[r];
    ub_[n_ + r] = log_ub_[r];
  }
}

void SimplexSolver::column_entries(int col, std::vector<ColEntry>& out) const {
  out.clear();
  if (col < n_) {
    out = cols_[col];
  } else {
    out.push_back({col - n_, 1.0});
  }
}

double SimplexSolver::col_dot(int col, std::span<const double> y) const {
  if (col >= n_) return y[col - n_];
  double d = 0.0;
  for (const auto& e : cols_[col]) d += e.coef * y[e.row];
  return d;
}

bool SimplexSolver::factorize() {
  bool repaired = false;
  for (;;) {
    logical_pos_of_row_.assign(m_, -1);
    dense_rows_.clear();
    dense_cols_.clear();
    dense_row_of_.assign(m_, -1);
    for (int p = 0; p < m_; ++p) {
      const int col = basic_[p];
      if (col >= n_) {
        logical_pos_of_row_[col - n_] = p;
      } else {
        dense_cols_.push_back(p);
      }
    }
    for (int r = 0; r < m_; ++r) {
      if (logical_pos_of_row_[r] < 0) {
        dense_row_of_[r] = static_cast<int>(dense_rows_.size());
        dense_rows_.push_back(r);
      }
    }
    bump_ = static_cast<int>(dense_rows_.size());
    if (bump_ != static_cast<int>(dense_cols_.size()))
      throw std::logic_error("basis bookkeeping out of sync");

    const int s = bump_;
    lu_.assign(static_cast<size_t>(s) * s, 0.0);
    lu_perm_.resize(s);
    std::vector<int> rowidx(s);
    for (int i = 0; i < s; ++i) rowidx[i] = dense_rows_[i];
    for (int dj = 0; dj < s; ++dj) {
      const int col = basic_[dense_cols_[dj]];
      for (const auto& e : cols_[col]) {
        const int di = dense_row_of_[e.row];
        if (di >= 0) lu_[static_cast<size_t>(di) * s + dj] += e.coef;
      }
    }
    int bad_col = -1;
    for (int k = 0; k < s; ++k) {
      int piv = k;
      double best = std::abs(lu_[static_cast<size_t>(k) * s + k]);
      for (int i = k + 1; i < s; ++i) {
        const double v = std::abs(lu_[static_cast<size_t>(i) * s + k]);
        if (v > best) {
          best = v;
          piv = i;
        }
      }
      if (best < kPivotZero) {
        bad_col = k;
        break;
      }
      lu_perm_[k] = piv;
      if (piv != k) {
        for (int j = 0; j < s; ++j) std::swap(lu_[static_cast<size_t>(k) * s + j], lu_[static_cast<size_t>(piv) * s + j]);
        std::swap(rowidx[k], rowidx[piv]);
      }
      const double pivot = lu_[static_cast<size_t>(k) * s + k];
      for (int i = k + 1; i < s; ++i) {
        double& lik = lu_[static_cast<size_t>(i) * s + k];
        if (lik == 0.0) continue;
        lik /= pivot;
        const double f = lik;
        const double* urow = &lu_[static_cast<size_t>(k) * s];
        double* irow = &lu_[static_cast<size_t>(i) * s];
        for (int j = k + 1; j < s; ++j) irow[j] -= f * urow[j];
      }
    }
    if (bad_col < 0) {
      min_pivot_ = kInf;
      max_pivot_ = 0.0;
      for (int k = 0; k < s; ++k) {
        const double piv = std::abs(lu_[static_cast<size_t>(k) * s + k]);
        min_pivot_ = std::min(min_pivot_, piv);
        max_pivot_ = std::max(max_pivot_, piv);
      }
      if (s == 0) min_pivot_ = max_pivot_ = 1.0;
      frozen_basic_ = basic_;
      etas_.clear();
      pivots_since_refactor_ = 0;
      return !repaired;
    }
    // Singular bump: evict the structural variable pivoting on the stuck
    // column and bring in the logical of the stuck row instead.
    const int pos = dense_cols_[bad_col];
    const int out_col = basic_[pos];
    const int row = rowidx[bad_col];
    basic_[pos] = n_ + row;
    pos_of_[out_col] = -1;
    pos_of_[n_ + row] = pos;
    status_[n_ + row] = VarStatus::Basic;
    const double lo = lb_[out_col], hi = ub_[out_col];
    if (lo == -kInf && hi == kInf) {
      status_[out_col] = VarStatus::Free;
      xval_[out_col] = 0.0;
    } else if (std::abs(xval_[out_col] - hi) < std::abs(xval_[out_col] - lo)) {
      status_[out_col] = VarStatus::AtUpper;
      xval_[out_col] = hi;
    } else {
      status_[out_col] = VarStatus::AtLower;
      xval_[out_col] = lo;
    }
    repaired = true;
  }
}

void SimplexSolver::ftran(std::vector<double>& v) const {
  const int s = bump_;
  std::vector<double> zs(s);
  for (int di = 0; di < s; ++di) zs[di] = v[dense_rows_[di]];
  // L is stored fully permuted, so interchanges go first (LAPACK getrs order)
  for (int k = 0; k < s; ++k) {
    if (lu_perm_[k] != k) std::swap(zs[k], zs[lu_perm_[k]]);
  }
  for (int k = 0; k < s; ++k) {
    const double zk = zs[k];
    if (zk != 0.0) {
      for (int i = k + 1; i < s; ++i) zs[i] -= lu_[static_cast<size_t>(i) * s + k] * zk;
    }
  }
  for (int k = s - 1; k >= 0; --k) {
    double acc = zs[k];
    const double* row = &lu_[static_cast<size_t>(k) * s];
    for (int j = k + 1; j < s; ++j) acc -= row[j] * zs[j];
    zs[k] = acc / row[k];
  }
  // logical positions absorb what the structural columns leave behind
  std::vector<double> z(m_);
  for (int r = 0; r < m_; ++r) {
    if (logical_pos_of_row_[r] >= 0) z[logical_pos_of_row_[r]] = v[r];
  }
  for (int dj = 0; dj < s; ++dj) {
    const double val = zs[dj];
    z[dense_cols_[dj]] = val;
    if (val == 0.0) continue;
    const int col = frozen_basic_[dense_cols_[dj]];
    for (const auto& e : cols_[col]) {
      const int p = logical_pos_of_row_[e.row];
      if (p >= 0) z[p] -= e.coef * val;
    }
  }
  for (const auto& eta : etas_) {
    const double zp = z[eta.pos] / eta.pivot;
    z[eta.pos] = zp;
    if (zp == 0.0) continue;
    for (const auto& e : eta.entries) z[e.row] -= e.coef * zp;
  }
  v = std::move(z);
}

void SimplexSolver::btran(std::vector<double>& c) const {
  // c arrives indexed by basis position, leaves indexed by row.
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double acc = c[it->pos];
    for (const auto& e : it->entries) acc -= e.coef * c[e.row];
    c[it->pos] = acc / it->pivot;
  }
  const int s = bump_;
  std::vector<double> g(s);
  std::vector<double> w(m_, 0.0);
  for (int r = 0; r < m_; ++r) {
    const int p = logical_pos_of_row_[r];
    if (p >= 0) w[r] = c[p];
  }
  for (int dj = 0; dj < s; ++dj) {
    const int col = frozen_basic_[dense_cols_[dj]];
    double acc = c[dense_cols_[dj]];
    for (const auto& e : cols_[col]) {
      if (logical_pos_of_row_[e.row] >= 0) acc -= e.coef * w[e.row];
    }
    g[dj] = acc;
  }
  // solve D^T t = g given D = P^-1 L U in-place
  for (int k = 0; k < s; ++k) {
    double acc = g[k];
    for (int i = 0; i < k; ++i) acc -= lu_[static_cast<size_t>(i) * s + k] * g[i];
    g[k] = acc / lu_[static_cast<size_t>(k) * s + k];
  }
  for (int k = s - 1; k >= 0; --k) {
    double acc = g[k];
    for (int i = k + 1; i < s; ++i) acc -= lu_[static_cast<size_t>(i) * s + k] * g[i];
    g[k] = acc;
  }
  for (int k = s - 1; k >= 0; --k) {
    if (lu_perm_[k] != k) std::swap(g[k], g[lu_perm_[k]]);
  }
  for (int di = 0; di < s; ++di) w[dense_rows_[di]] = g[di];
  c = std::move(w);
}

void SimplexSolver::compute_basic_values() {
  std::vector<double> v = rhs_;
  for (int j = 0; j < n_ + m_; ++j) {
    if (status_[j] == VarStatus::Basic) continue;
    const double xj = xval_[j];
    if (xj == 0.0) continue;
    if (j < n_) {
      for (const auto& e : cols_[j]) v[e.row] -= e.coef * xj;
    } else {
      v[j - n_] -= xj;
    }
  }
  ftran(v);
  for (int p = 0; p < m_; ++p) xval_[basic_[p]] = v[p];
}

double SimplexSolver::infeasibility() const {
  double sum = 0.0;
  for (int p = 0; p < m_; ++p) {
    const int col = basic_[p];
    const double x = xval_[col];
    if (x < lb_[col]) sum += lb_[col] - x;
    if (x > ub_[col]) sum += x - ub_[col];
  }
  return sum;
}

SimplexSolver::RatioHit SimplexSolver::ratio_test(const std::vector<double>& alpha, int entering, int dir,
                                                  bool phase1, bool bland) const {
  const double feas_tol = 1e-9;
  RatioHit best;
  // pass 1: relaxed limit
  double limit = kInf;
  if (lb_[entering] > -kInf && ub_[entering] < kInf) limit = ub_[entering] - lb_[entering];
  for (int p = 0; p < m_; ++p) {
    const double a = alpha[p];
    if (std::abs(a) < kPivotZero) continue;
    const int col = basic_[p];
    const double rate = -dir * a;  // basic moves by rate * t
    const double x = xval_[col];
    double room;
    if (phase1 && x < lb_[col] - feas_tol) {
      if (rate <= 0.0) continue;  // moving further below its bound is allowed in phase 1
      room = (lb_[col] - x) / rate;
    } else if (phase1 && x > ub_[col] + feas_tol) {
      if (rate >= 0.0) continue;
      room = (ub_[col] - x) / rate;
    } else if (rate > 0.0) {
      if (ub_[col] == kInf) continue;
      room = (ub_[col] - x + feas_tol) / rate;
    } else {
      if (lb_[col] == -kInf) continue;
      room = (lb_[col] - x - feas_tol) / rate;
    }
    limit = std::min(limit, std::max(room, 0.0));
  }
  if (limit == kInf) return best;  // unbounded direction

  // pass 2: among blockers within the relaxed limit take the most stable pivot
  double best_alpha = 0.0;
  for (int p = 0; p < m_; ++p) {
    const double a = alpha[p];
    if (std::abs(a) < kPivotZero) continue;
    const int col = basic_[p];
    const double rate = -dir * a;
    const double x = xval_[col];
    double ratio;
    double land;
    bool to_upper;
    if (phase1 && x < lb_[col] - feas_tol) {
      if (rate <= 0.0) continue;
      ratio = (lb_[col] - x) / rate;
      land = lb_[col];
      to_upper = false;
    } else if (phase1 && x > ub_[col] + feas_tol) {
      if (rate >= 0.0) continue;
      ratio = (ub_[col] - x) / rate;
      land = ub_[col];
      to_upper = true;
    } else if (rate > 0.0) {
      if (ub_[col] == kInf) continue;
      ratio = (ub_[col] - x) / rate;
      land = ub_[col];
      to_upper = true;
    } else {
      if (lb_[col] == -kInf) continue;
      ratio = (lb_[col] - x) / rate;
      land = lb_[col];
      to_upper = false;
    }
    ratio = std::max(ratio, 0.0);
    if (ratio > limit) continue;
    bool take;
    if (best.pos < 0) {
      take = true;
    } else if (bland) {
      take = ratio < best.step - 1e-15 || (std::abs(ratio - best.step) <= 1e-15 && basic_[p] < basic_[best.pos]);
    } else {
      take = std::abs(a) > best_alpha + 1e-15 ||
             (std::abs(a) >= best_alpha - 1e-15 && basic_[p] < basic_[best.pos]);
    }
    if (take) {
      best.pos = p;
      best.step = ratio;
      best.bound = land;
      best.to_upper = to_upper;
      best_alpha = std::abs(a);
    }
  }
  if (best.pos < 0 || best.step > limit) {
    // entering variable flips between its own bounds
    best.pos = -1;
    best.step = limit;
  }
  return best;
}

LpResult SimplexSolver::run(const LpOptions& opts) {
  LpResult res;
  long iter = 0;
  int degenerate_streak = 0;
  bool bland = false;
  std::vector<double> cb(m_), alpha, colbuf_y;
  std::vector<ColEntry> entries;

  factorize();
  compute_basic_values();

  auto time_up = [&]() { return std::chrono::steady_clock::now() >= opts.deadline; };

  while (true) {
    if (iter >= opts.iter_limit) {
      res.status = LpStatus::IterLimit;
      break;
    }
    if ((iter & 0x3f) == 0 && time_up()) {
      res.status = LpStatus::TimeLimit;
      break;
    }
    if (pivots_since_refactor_ >= opts.refactor_interval) {
      factorize();
      compute_basic_values();
    }

    const double infeas = infeasibility();
    const bool phase1 = infeas > 1e-9;

    // dual vector for the active phase
    for (int p = 0; p < m_; ++p) {
      const int col = basic_[p];
      if (phase1) {
        const double x = xval_[col];
        cb[p] = x < lb_[col] - 1e-9 ? -1.0 : (x > ub_[col] + 1e-9 ? 1.0 : 0.0);
      } else {
        cb[p] = cost_[col];
      }
    }
    std::vector<double> y = cb;
    btran(y);

    // pricing: most negative effective reduced cost, lowest index ties
    int entering = -1;
    int dir = 0;
    double best_score = phase1 ? 1e-9 : opts.opt_tol;
    for (int j = 0; j < n_ + m_; ++j) {
      const auto st = status_[j];
      if (st == VarStatus::Basic) continue;
      if (lb_[j] == ub_[j]) continue;
      const double cj = phase1 ? 0.0 : cost_[j];
      const double d = cj - col_dot(j, y);
      double score = 0.0;
      int cand_dir = 0;
      if (st == VarStatus::AtLower && d < -best_score) {
        score = -d;
        cand_dir = 1;
      } else if (st == VarStatus::AtUpper && d > best_score) {
        score = d;
        cand_dir = -1;
      } else if (st == VarStatus::Free && std::abs(d) > best_score) {
        score = std::abs(d);
        cand_dir = d < 0 ? 1 : -1;
      }
      if (cand_dir != 0) {
        if (bland) {
          entering = j;
          dir = cand_dir;
          break;
        }
        if (entering < 0 || score > best_score) {
          entering = j;
          dir = cand_dir;
          best_score = score;
        }
      }
    }

    if (entering < 0) {
      if (phase1) {
        res.status = LpStatus::Infeasible;
        res.primal_infeasibility = infeas;
        res.duals = y;
      } else {
        res.status = LpStatus::Optimal;
      }
      break;
    }

    column_entries(entering, entries);
    alpha.assign(m_, 0.0);
    for (const auto& e : entries) alpha[e.row] = e.coef;
    ftran(alpha);

    const RatioHit hit = ratio_test(alpha, entering, dir, phase1, bland);
    if (hit.step == kInf) {
      if (phase1) {
        res.status = LpStatus::Singular;
        res.diagnostics = "phase-1 direction unbounded; basis pivot range [" + std::to_string(min_pivot_) +
                          ", " + std::to_string(max_pivot_) + "]";
      } else {
        res.status = LpStatus::Unbounded;
      }
      break;
    }

    if (hit.pos >= 0 && std::abs(alpha[hit.pos]) < kEtaPivotMin && pivots_since_refactor_ > 0) {
      // tiny pivot against a stale factorization: rebuild and retry
      factorize();
      compute_basic_values();
      continue;
    }

    const double t = hit.step;
    if (t < 1e-12) {
      if (++degenerate_streak >= kBlandTrigger) bland = true;
    } else {
      degenerate_streak = 0;
      bland = false;
    }

    // move entering variable and update basics
    if (t != 0.0) {
      for (int p = 0; p < m_; ++p) {
        if (alpha[p] != 0.0) xval_[basic_[p]] -= dir * t * alpha[p];
      }
    }
    if (hit.pos < 0) {
      // bound flip
      status_[entering] = dir > 0 ? VarStatus::AtUpper : VarStatus::AtLower;
      xval_[entering] = dir > 0 ? ub_[entering] : lb_[entering];
    } else {
      const int leaving = basic_[hit.pos];
      xval_[entering] = xval_[entering] + dir * t;
      xval_[leaving] = hit.bound;
      status_[leaving] = hit.to_upper ? VarStatus::AtUpper : VarStatus::AtLower;
      if (lb_[leaving] == -kInf && ub_[leaving] == kInf) status_[leaving] = VarStatus::Free;
      status_[entering] = VarStatus::Basic;
      basic_[hit.pos] = entering;
      pos_of_[leaving] = -1;
      pos_of_[entering] = hit.pos;
      Eta eta;
      eta.pos = hit.pos;
      eta.pivot = alpha[hit.pos];
      for (int p = 0; p < m_; ++p) {
        if (p != hit.pos && std::abs(alpha[p]) > 1e-13) eta.entries.push_back({p, alpha[p]});
      }
      etas_.push_back(std::move(eta));
      ++pivots_since_refactor_;
    }
    ++iter;
  }

  res.iterations = iter;

  // final cleanup: fresh factorization, exact basic values, duals
  factorize();
  compute_basic_values();
  for (int p = 0; p < m_; ++p) cb[p] = cost_[basic_[p]];
  std::vector<double> y = cb;
  btran(y);
  res.x.resize(n_);
  for (int j = 0; j < n_; ++j) res.x[j] = xval_[j];
  res.duals = y;
  res.reduced_costs.resize(n_);
  for (int j = 0; j < n_; ++j) res.reduced_costs[j] = cost_[j] - col_dot(j, y);
  res.objective = 0.0;
  for (int j = 0; j < n_ + m_; ++j) res.objective += cost_[j] * xval_[j];
  res.primal_infeasibility = infeasibility();
  if (res.status == LpStatus::Optimal && res.primal_infeasibility > 1e-7) {
    res.status = LpStatus::Singular;
    res.diagnostics = "residual infeasibility after optimality: " + std::to_string(res.primal_infeasibility) +
                      "; basis pivot range [" + std::to_string(min_pivot_) + ", " + std::to_string(max_pivot_) +
                      "]";
  }
  std::vector<double> act(m_, 0.0);
  for (int j = 0; j < n_; ++j) {
    const double xj = xval_[j];
    if (xj == 0.0) continue;
    for (const auto& e : cols_[j]) act[e.row] += e.coef * xj;
  }
  double max_res = 0.0;
  for (int r = 0; r < m_; ++r) max_res = std::max(max_res, std::abs(act[r] + xval_[n_ + r] - rhs_[r]));
  res.max_residual = max_res;
  return res;
}

LpResult SimplexSolver::solve(std::span<const double> lb, std::span<const double> ub, const LpOptions& opts,
                              Basis* basis) {
  load_bounds(lb, ub);
  const int total = n_ + m_;
  status_.assign(total, VarStatus::AtLower);
  xval_.assign(total, 0.0);
  basic_.resize(m_);
  pos_of_.assign(total, -1);

  bool warm = basis != nullptr && basis->valid() && static_cast<int>(basis->basic.size()) == m_ &&
              static_cast<int>(basis->status.size()) == total;
  if (warm) {
    basic_ = basis->basic;
    std::vector<char> seen(total, 0);
    for (int p = 0; p < m_ && warm; ++p) {
      if (basic_[p] < 0 || basic_[p] >= total || seen[basic_[p]]) warm = false;
      else seen[basic_[p]] = 1;
    }
    if (warm) {
      status_ = basis->status;
      for (int p = 0; p < m_; ++p) {
        status_[basic_[p]] = VarStatus::Basic;
        pos_of_[basic_[p]] = p;
      }
    }
  }
  if (!warm) {
    for (int r = 0; r < m_; ++r) {
      basic_[r] = n_ + r;
      pos_of_[n_ + r] = r;
      status_[n_ + r] = VarStatus::Basic;
    }
  }
  // nonbasic variables sit on a bound consistent with their domain
  for (int j = 0; j < total; ++j) {
    if (status_[j] == VarStatus::Basic) continue;
    if (lb_[j] == -kInf && ub_[j] == kInf) {
      status_[j] = VarStatus::Free;
      xval_[j] = 0.0;
    } else if (status_[j] == VarStatus::AtUpper && ub_[j] < kInf) {
      xval_[j] = ub_[j];
    } else if (lb_[j] > -kInf) {
      status_[j] = VarStatus::AtLower;
      xval_[j] = lb_[j];
    } else {
      status_[j] = VarStatus::AtUpper;
      xval_[j] = ub_[j];
    }
  }

  LpResult res = run(opts);

  if (basis) {
    basis->basic = basic_;
    basis->status = status_;
  }
  return res;
}

LpResult solve_lp(const Model& model, const LpOptions& opts) {
  SimplexSolver solver(model);
  std::vector<double> lb(model.num_vars()), ub(model.num_vars());
  for (int v = 0; v < model.num_vars(); ++v) {
    lb[v] = model.var(v).lb;
    ub[v] = model.var(v).ub;
  }
  Basis basis;
  return solver.solve(lb, ub, opts, &basis);
}

}  // namespace evgrid::milp
