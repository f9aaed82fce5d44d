#include "pdtkit/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "pdtkit/bounds.hpp"
#include "pdtkit/errors.hpp"
#include "pdtkit/lp.hpp"

namespace pdtkit {

namespace {

void validate_query(const VerifyQuery& q) {
  q.net.validate();
  q.box.validate();
  if (q.box.dim() != q.net.input_dim)
    throw ShapeError("query box dimension must match network input");
  if (q.constraints.empty()) throw ShapeError("query needs at least one output constraint");
  for (const OutputConstraint& c : q.constraints)
    if (c.coeffs.size() != q.net.output_dim())
      throw ShapeError("output constraint width must match network output");
}

// Affine expressions over the LP variables, one per neuron of a layer.
struct ExprBlock {
  std::vector<Vec> coef;  // each of size nvars
  Vec cst;
};

// Builds the node LP: input variables plus one variable per free unstable
// ReLU, triangle-relaxed; forced phases become halfspace rows.
lp::Problem build_node_lp(const VerifyQuery& q, const PhaseMask& phases,
                          const NetworkBounds& nb) {
  const Network& net = q.net;
  std::size_t n = net.input_dim;

  std::size_t nvars = n;
  for (std::size_t li = 0; li < net.depth(); ++li) {
    const Layer& l = net.layers[li];
    if (l.act != Activation::ReLU) continue;
    const LayerBounds& lb = nb.layers[li];
    for (std::size_t j = 0; j < l.out_dim(); ++j)
      if (phases[li][j] == 0 && lb.pre_lo[j] < 0.0 && lb.pre_hi[j] > 0.0) ++nvars;
  }

  lp::Problem p;
  p.num_vars = nvars;
  p.objective.assign(nvars, 0.0);
  p.lower.assign(nvars, 0.0);
  p.upper.assign(nvars, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    p.lower[i] = q.box.lower[i];
    p.upper[i] = q.box.upper[i];
  }

  ExprBlock cur;
  cur.coef.assign(n, Vec(nvars, 0.0));
  cur.cst.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) cur.coef[i][i] = 1.0;

  std::size_t next_var = n;
  for (std::size_t li = 0; li < net.depth(); ++li) {
    const Layer& l = net.layers[li];
    const LayerBounds& lb = nb.layers[li];

    ExprBlock pre;
    pre.coef.assign(l.out_dim(), Vec(nvars, 0.0));
    pre.cst.assign(l.out_dim(), 0.0);
    for (std::size_t r = 0; r < l.out_dim(); ++r) {
      const double* w = l.weights.row(r);
      Vec& pc = pre.coef[r];
      double c = l.bias[r];
      for (std::size_t k = 0; k < l.in_dim(); ++k) {
        double wk = w[k];
        if (wk == 0.0) continue;
        const Vec& sc = cur.coef[k];
        for (std::size_t v = 0; v < nvars; ++v) pc[v] += wk * sc[v];
        c += wk * cur.cst[k];
      }
      pre.cst[r] = c;
    }

    if (l.act == Activation::Identity) {
      cur = std::move(pre);
      continue;
    }

    ExprBlock post;
    post.coef.assign(l.out_dim(), Vec(nvars, 0.0));
    post.cst.assign(l.out_dim(), 0.0);
    for (std::size_t r = 0; r < l.out_dim(); ++r) {
      int ph = phases[li][r];
      double plo = lb.pre_lo[r], phi = lb.pre_hi[r];
      if (ph > 0) {
        // Forced active: region row pre >= 0, value passes through.
        lp::Row row{pre.coef[r], lp::Rel::Ge, -pre.cst[r]};
        p.rows.push_back(std::move(row));
        post.coef[r] = pre.coef[r];
        post.cst[r] = pre.cst[r];
      } else if (ph < 0) {
        // Forced inactive: region row pre <= 0, value clamps to zero.
        lp::Row row{pre.coef[r], lp::Rel::Le, -pre.cst[r]};
        p.rows.push_back(std::move(row));
      } else if (plo >= 0.0) {
        post.coef[r] = pre.coef[r];
        post.cst[r] = pre.cst[r];
      } else if (phi <= 0.0) {
        // stays zero
      } else {
        // Unstable: fresh variable z in [0, phi] with the triangle rows
        // z >= pre and (phi - plo) z <= phi (pre - plo).
        std::size_t z = next_var++;
        p.upper[z] = phi;
        lp::Row r1;
        r1.coeffs.assign(nvars, 0.0);
        r1.coeffs[z] = 1.0;
        for (std::size_t v = 0; v < nvars; ++v) r1.coeffs[v] -= pre.coef[r][v];
        r1.rel = lp::Rel::Ge;
        r1.rhs = pre.cst[r];
        p.rows.push_back(std::move(r1));

        lp::Row r2;
        r2.coeffs.assign(nvars, 0.0);
        double s = phi - plo;
        for (std::size_t v = 0; v < nvars; ++v) r2.coeffs[v] = phi * pre.coef[r][v];
        r2.coeffs[z] -= s;
        r2.rel = lp::Rel::Ge;
        r2.rhs = phi * plo - phi * pre.cst[r];
        p.rows.push_back(std::move(r2));

        post.coef[r][z] = 1.0;
      }
    }
    cur = std::move(post);
  }

  for (const OutputConstraint& c : q.constraints) {
    lp::Row row;
    row.coeffs.assign(nvars, 0.0);
    double cst = 0.0;
    for (std::size_t i = 0; i < c.coeffs.size(); ++i) {
      if (c.coeffs[i] == 0.0) continue;
      for (std::size_t v = 0; v < nvars; ++v) row.coeffs[v] += c.coeffs[i] * cur.coef[i][v];
      cst += c.coeffs[i] * cur.cst[i];
    }
    row.rel = lp::Rel::Ge;
    row.rhs = c.rhs - cst;
    // Push the LP point toward large constraint margins; better witnesses.
    for (std::size_t v = 0; v < nvars; ++v) p.objective[v] += row.coeffs[v];
    p.rows.push_back(std::move(row));
  }
  return p;
}

// Margins of all constraints at the true network output; minimum decides
// witness acceptance.
double witness_margin(const VerifyQuery& q, const Vec& x) {
  Vec y = evaluate(q.net, x);
  double worst = std::numeric_limits<double>::infinity();
  for (const OutputConstraint& c : q.constraints)
    worst = std::min(worst, dot(c.coeffs, y) - c.rhs);
  return worst;
}

// Interval bound check: can every constraint still be met somewhere in the
// node's output enclosure?
bool constraints_possible(const VerifyQuery& q, const NetworkBounds& nb) {
  const Vec& lo = nb.output_lo();
  const Vec& hi = nb.output_hi();
  for (const OutputConstraint& c : q.constraints) {
    double best = 0.0;
    for (std::size_t i = 0; i < c.coeffs.size(); ++i)
      best += c.coeffs[i] >= 0.0 ? c.coeffs[i] * hi[i] : c.coeffs[i] * lo[i];
    if (best < c.rhs) return false;
  }
  return true;
}

struct BranchPick {
  std::size_t layer = 0;
  std::size_t idx = 0;
  bool found = false;
};

BranchPick pick_branch(const Network& net, const PhaseMask& phases, const NetworkBounds& nb) {
  BranchPick bp;
  double widest = -1.0;
  for (std::size_t li = 0; li < net.depth(); ++li) {
    if (net.layers[li].act != Activation::ReLU) continue;
    const LayerBounds& lb = nb.layers[li];
    for (std::size_t j = 0; j < net.layers[li].out_dim(); ++j) {
      if (phases[li][j] != 0) continue;
      if (!(lb.pre_lo[j] < 0.0 && lb.pre_hi[j] > 0.0)) continue;
      double w = lb.pre_hi[j] - lb.pre_lo[j];
      if (w > widest) {
        widest = w;
        bp = {li, j, true};
      }
    }
  }
  return bp;
}

}  // namespace

VerifyResult decide(const VerifyQuery& q, const DecideOptions& opts) {
  validate_query(q);

  VerifyResult res;
  std::vector<PhaseMask> stack;
  stack.push_back(free_phases(q.net));
  std::size_t unresolved = 0;
  auto t0 = std::chrono::steady_clock::now();
  bool timed = std::isfinite(opts.budget.max_seconds);

  while (!stack.empty()) {
    if (res.nodes >= opts.budget.max_nodes) {
      res.verdict = Verdict::Unknown;
      res.reason = "budget";
      return res;
    }
    if (timed) {
      double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (el > opts.budget.max_seconds) {
        res.verdict = Verdict::Unknown;
        res.reason = "budget";
        return res;
      }
    }

    PhaseMask phases = std::move(stack.back());
    stack.pop_back();
    ++res.nodes;

    auto nb = propagate_with_phases(q.net, q.box, phases, opts.use_linear_relax);
    if (!nb) continue;
    if (!constraints_possible(q, *nb)) continue;

    lp::Problem p = build_node_lp(q, phases, *nb);
    lp::Solution sol = lp::solve(p);
    ++res.lp_calls;

    BranchPick bp = pick_branch(q.net, phases, *nb);

    if (sol.status == lp::Status::Infeasible) continue;

    bool have_point = sol.status == lp::Status::Optimal;
    Vec x0;
    if (have_point) {
      x0 = q.box.clamp(Vec(sol.x.begin(), sol.x.begin() + q.net.input_dim));
      if (witness_margin(q, x0) >= -opts.witness_tol) {
        res.verdict = Verdict::Sat;
        res.witness = std::move(x0);
        return res;
      }
    }

    if (!bp.found) {
      // Leaf: the LP is exact here, so a feasible-but-unverifiable point
      // or a solver failure leaves the leaf unresolved; a split cannot
      // help since no free neuron remains.
      ++unresolved;
      continue;
    }

    PhaseMask active = phases, inactive = std::move(phases);
    active[bp.layer][bp.idx] = 1;
    inactive[bp.layer][bp.idx] = -1;
    bool active_first = true;
    if (have_point) {
      Trace tr = eval_trace(q.net, x0);
      active_first = tr.pre[bp.layer][bp.idx] >= 0.0;
    }
    // Stack order: the branch matching the LP point is explored first.
    if (active_first) {
      stack.push_back(std::move(inactive));
      stack.push_back(std::move(active));
    } else {
      stack.push_back(std::move(active));
      stack.push_back(std::move(inactive));
    }
  }

  if (unresolved > 0) {
    res.verdict = Verdict::Unknown;
    res.reason = "solver";
    return res;
  }
  res.verdict = Verdict::Unsat;
  return res;
}

VerifyResult brute_force_decide(const VerifyQuery& q) {
  validate_query(q);
  std::size_t r = relu_count(q.net);
  if (r > 16)
    throw SizeLimitError("brute force supports at most 16 ReLU neurons, got " +
                         std::to_string(r));

  // Position of every ReLU neuron, for mapping assignment bits.
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t li = 0; li < q.net.depth(); ++li)
    if (q.net.layers[li].act == Activation::ReLU)
      for (std::size_t j = 0; j < q.net.layers[li].out_dim(); ++j) cells.push_back({li, j});

  VerifyResult res;
  std::size_t unresolved = 0;
  DecideOptions opts;
  for (std::size_t bits = 0; bits < (std::size_t(1) << r); ++bits) {
    ++res.nodes;
    PhaseMask phases = free_phases(q.net);
    for (std::size_t k = 0; k < r; ++k)
      phases[cells[k].first][cells[k].second] = (bits >> k) & 1 ? 1 : -1;

    auto nb = propagate_with_phases(q.net, q.box, phases, false);
    if (!nb) continue;

    lp::Problem p = build_node_lp(q, phases, *nb);
    lp::Solution sol = lp::solve(p);
    ++res.lp_calls;
    if (sol.status == lp::Status::Infeasible) continue;
    if (sol.status != lp::Status::Optimal) {
      ++unresolved;
      continue;
    }
    Vec x0 = q.box.clamp(Vec(sol.x.begin(), sol.x.begin() + q.net.input_dim));
    if (witness_margin(q, x0) >= -opts.witness_tol) {
      res.verdict = Verdict::Sat;
      res.witness = std::move(x0);
      return res;
    }
    ++unresolved;
  }

  if (unresolved > 0) {
    res.verdict = Verdict::Unknown;
    res.reason = "solver";
    return res;
  }
  res.verdict = Verdict::Unsat;
  return res;
}

}  // namespace pdtkit
