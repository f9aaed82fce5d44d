#include "pdtkit/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pdtkit/errors.hpp"

namespace pdtkit::lp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-9;
constexpr std::size_t kMaxIters = 200000;
constexpr std::size_t kStallLimit = 100;

// Maps one original variable to its non-negative standard-form columns:
// x = shift + sign * x'[col]  (or  x = x'[col] - x'[neg_col] for free vars).
struct VarMap {
  double shift = 0.0;
  double sign = 1.0;
  std::size_t col = 0;
  std::size_t neg_col = std::size_t(-1);
};

struct Tableau {
  std::size_t m = 0;       // rows
  std::size_t n = 0;       // columns excluding rhs
  std::vector<double> a;   // m x (n + 1), last column rhs
  std::vector<std::size_t> basis;

  double& at(std::size_t r, std::size_t c) { return a[r * (n + 1) + c]; }
  double at(std::size_t r, std::size_t c) const { return a[r * (n + 1) + c]; }
  double& rhs(std::size_t r) { return a[r * (n + 1) + n]; }
  double rhs(std::size_t r) const { return a[r * (n + 1) + n]; }

  void pivot(std::size_t pr, std::size_t pc) {
    double p = at(pr, pc);
    for (std::size_t c = 0; c <= n; ++c) at(pr, c) /= p;
    for (std::size_t r = 0; r < m; ++r) {
      if (r == pr) continue;
      double f = at(r, pc);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c <= n; ++c) at(r, c) -= f * at(pr, c);
      at(r, pc) = 0.0;
    }
    at(pr, pc) = 1.0;
    basis[pr] = pc;
    if (rhs(pr) < 0.0 && rhs(pr) > -1e-11) rhs(pr) = 0.0;
    for (std::size_t r = 0; r < m; ++r)
      if (rhs(r) < 0.0 && rhs(r) > -1e-11) rhs(r) = 0.0;
  }
};

// Reduced-cost row for cost vector c (maximization): r_j = c_j - c_B . col_j.
void reduced_costs(const Tableau& t, const Vec& cost, Vec& red, double& obj) {
  red = cost;
  obj = 0.0;
  for (std::size_t r = 0; r < t.m; ++r) {
    double cb = cost[t.basis[r]];
    if (cb == 0.0) continue;
    obj += cb * t.rhs(r);
    for (std::size_t c = 0; c < t.n; ++c) red[c] -= cb * t.at(r, c);
  }
}

enum class LoopResult { Optimal, Unbounded, IterLimit };

// Primal simplex iterations on t for cost vector `cost`. `allowed[j]` masks
// columns that may enter. Maintains rhs >= 0.
LoopResult run_simplex(Tableau& t, const Vec& cost, const std::vector<char>& allowed,
                       std::size_t& iters) {
  Vec red;
  double obj = 0.0;
  reduced_costs(t, cost, red, obj);
  double last_obj = obj;
  std::size_t stalled = 0;
  bool bland = false;

  while (true) {
    if (iters >= kMaxIters) return LoopResult::IterLimit;

    std::size_t enter = t.n;
    if (!bland) {
      double best = kPivotTol;
      for (std::size_t c = 0; c < t.n; ++c)
        if (allowed[c] && red[c] > best) {
          best = red[c];
          enter = c;
        }
    } else {
      for (std::size_t c = 0; c < t.n; ++c)
        if (allowed[c] && red[c] > kPivotTol) {
          enter = c;
          break;
        }
    }
    if (enter == t.n) return LoopResult::Optimal;

    std::size_t leave = t.m;
    double best_ratio = kInf;
    for (std::size_t r = 0; r < t.m; ++r) {
      double arc = t.at(r, enter);
      if (arc <= kPivotTol) continue;
      double ratio = t.rhs(r) / arc;
      if (ratio < best_ratio - 1e-12 ||
          (ratio < best_ratio + 1e-12 && (leave == t.m || t.basis[r] < t.basis[leave]))) {
        best_ratio = ratio;
        leave = r;
      }
    }
    if (leave == t.m) return LoopResult::Unbounded;

    t.pivot(leave, enter);
    ++iters;
    reduced_costs(t, cost, red, obj);
    if (obj > last_obj + 1e-12) {
      last_obj = obj;
      stalled = 0;
    } else if (++stalled > kStallLimit) {
      bland = true;
    }
  }
}

}  // namespace

Solution solve(const Problem& p) {
  if (p.objective.size() != p.num_vars || p.lower.size() != p.num_vars ||
      p.upper.size() != p.num_vars)
    throw ShapeError("lp problem arrays must match num_vars");
  for (const Row& r : p.rows)
    if (r.coeffs.size() != p.num_vars) throw ShapeError("lp row width mismatch");
  for (std::size_t j = 0; j < p.num_vars; ++j) {
    if (std::isnan(p.lower[j]) || std::isnan(p.upper[j]))
      throw ShapeError("lp bounds must not be NaN");
    if (p.lower[j] > p.upper[j]) return {Status::Infeasible, {}, 0.0, 0};
  }

  // Shift/reflect/split every variable to x' >= 0.
  std::vector<VarMap> vmap(p.num_vars);
  std::size_t ncols = 0;
  std::vector<std::pair<std::size_t, double>> upper_rows;  // (column, range)
  for (std::size_t j = 0; j < p.num_vars; ++j) {
    VarMap& v = vmap[j];
    if (p.lower[j] > -kInf) {
      v.shift = p.lower[j];
      v.sign = 1.0;
      v.col = ncols++;
      if (p.upper[j] < kInf) upper_rows.push_back({v.col, p.upper[j] - p.lower[j]});
    } else if (p.upper[j] < kInf) {
      v.shift = p.upper[j];
      v.sign = -1.0;
      v.col = ncols++;
    } else {
      v.col = ncols++;
      v.neg_col = ncols++;
    }
  }

  // Standard-form rows: transformed coefficients, then Ge negated to Le,
  // then rhs made non-negative.
  struct StdRow {
    Vec c;
    double rhs;
    bool eq;
  };
  std::vector<StdRow> rows;
  rows.reserve(p.rows.size() + upper_rows.size());
  for (const Row& r : p.rows) {
    StdRow sr;
    sr.c.assign(ncols, 0.0);
    sr.rhs = r.rhs;
    sr.eq = r.rel == Rel::Eq;
    for (std::size_t j = 0; j < p.num_vars; ++j) {
      double a = r.coeffs[j];
      if (a == 0.0) continue;
      sr.rhs -= a * vmap[j].shift;
      sr.c[vmap[j].col] += a * vmap[j].sign;
      if (vmap[j].neg_col != std::size_t(-1)) sr.c[vmap[j].neg_col] -= a;
    }
    if (r.rel == Rel::Ge) {
      for (double& v : sr.c) v = -v;
      sr.rhs = -sr.rhs;
    }
    rows.push_back(std::move(sr));
  }
  for (auto [col, range] : upper_rows) {
    StdRow sr;
    sr.c.assign(ncols, 0.0);
    sr.c[col] = 1.0;
    sr.rhs = range;
    sr.eq = false;
    rows.push_back(std::move(sr));
  }

  std::size_t m = rows.size();
  // Column layout: structural | slack/surplus per row | artificial per row
  // (artificial columns are created lazily).
  std::size_t slack0 = ncols;
  std::size_t art0 = ncols + m;
  std::vector<bool> has_art(m, false);
  std::size_t nart = 0;
  for (std::size_t i = 0; i < m; ++i) {
    bool neg = rows[i].rhs < 0.0;
    if (rows[i].eq || neg) {
      has_art[i] = true;
      ++nart;
    }
  }

  Tableau t;
  t.m = m;
  t.n = art0 + nart;
  t.a.assign(m * (t.n + 1), 0.0);
  t.basis.assign(m, 0);

  std::size_t art_next = art0;
  for (std::size_t i = 0; i < m; ++i) {
    StdRow& sr = rows[i];
    double flip = sr.rhs < 0.0 ? -1.0 : 1.0;
    for (std::size_t c = 0; c < ncols; ++c) t.at(i, c) = flip * sr.c[c];
    t.rhs(i) = flip * sr.rhs;
    if (!sr.eq) t.at(i, slack0 + i) = flip;  // slack (or surplus when flipped)
    if (has_art[i]) {
      std::size_t ac = art_next++;
      t.at(i, ac) = 1.0;
      t.basis[i] = ac;
    } else {
      t.basis[i] = slack0 + i;
    }
  }

  Solution sol;
  sol.iterations = 0;

  if (nart > 0) {
    Vec cost1(t.n, 0.0);
    for (std::size_t c = art0; c < t.n; ++c) cost1[c] = -1.0;
    std::vector<char> allowed(t.n, 1);
    LoopResult r1 = run_simplex(t, cost1, allowed, sol.iterations);
    if (r1 == LoopResult::IterLimit) {
      sol.status = Status::IterLimit;
      return sol;
    }
    double infeas = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (t.basis[i] >= art0) infeas += t.rhs(i);
    if (infeas > kFeasTol) {
      sol.status = Status::Infeasible;
      return sol;
    }
    // Pivot leftover degenerate artificials out where possible.
    for (std::size_t i = 0; i < m; ++i) {
      if (t.basis[i] < art0) continue;
      std::size_t pc = t.n;
      for (std::size_t c = 0; c < art0; ++c)
        if (std::fabs(t.at(i, c)) > kPivotTol) {
          pc = c;
          break;
        }
      if (pc != t.n) t.pivot(i, pc);
    }
  }

  Vec cost2(t.n, 0.0);
  for (std::size_t j = 0; j < p.num_vars; ++j) {
    double cj = p.objective[j];
    if (cj == 0.0) continue;
    cost2[vmap[j].col] += cj * vmap[j].sign;
    if (vmap[j].neg_col != std::size_t(-1)) cost2[vmap[j].neg_col] -= cj;
  }
  std::vector<char> allowed2(t.n, 1);
  for (std::size_t c = art0; c < t.n; ++c) allowed2[c] = 0;
  LoopResult r2 = run_simplex(t, cost2, allowed2, sol.iterations);
  if (r2 == LoopResult::IterLimit) {
    sol.status = Status::IterLimit;
    return sol;
  }
  if (r2 == LoopResult::Unbounded) {
    sol.status = Status::Unbounded;
    return sol;
  }

  Vec xprime(t.n, 0.0);
  for (std::size_t i = 0; i < m; ++i) xprime[t.basis[i]] = t.rhs(i);
  sol.x.assign(p.num_vars, 0.0);
  for (std::size_t j = 0; j < p.num_vars; ++j) {
    const VarMap& v = vmap[j];
    double val = v.shift + v.sign * xprime[v.col];
    if (v.neg_col != std::size_t(-1)) val -= xprime[v.neg_col];
    // Guard against drift past finite bounds.
    if (val < p.lower[j]) val = p.lower[j];
    if (val > p.upper[j]) val = p.upper[j];
    sol.x[j] = val;
  }
  sol.value = dot(p.objective, sol.x);
  sol.status = Status::Optimal;
  return sol;
}

}  // namespace pdtkit::lp
