#include "pdtkit/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "pdtkit/bounds.hpp"
#include "pdtkit/errors.hpp"
#include "pdtkit/lp.hpp"

namespace pdtkit {

namespace {

constexpr double kSignTol = 1e-6;

struct Affine {
  Vec coef;
  double cst = 0.0;
};

struct Candidate {
  double value = 0.0;
  Vec x;
  bool set = false;
};

// Distance |n1(x) - n2(x)| by direct forward evaluation of the original
// networks; the authoritative value for every oracle answer.
double eval_distance(const Network& n1, const Network& n2, const Vec& x) {
  return std::fabs(evaluate(n1, x)[0] - evaluate(n2, x)[0]);
}

bool sign_ok(const Network& n1, const Network& n2, const Vec& x, SignVariant v) {
  double y1 = evaluate(n1, x)[0];
  double y2 = evaluate(n2, x)[0];
  if (v == SignVariant::C) return y1 >= -kSignTol && y2 >= -kSignTol;
  return y1 <= kSignTol && y2 <= kSignTol;
}

// Per-regime pattern sweep over one box. Every ReLU is fixed (stable ones
// by their interval phase, the rest by the pattern bits), which makes the
// whole joint network one affine map; each pattern then needs two LPs over
// the inputs alone.
void sweep_box(const Network& n1, const Network& n2, const Network& joint, const Box& box,
               std::optional<SignVariant> variant, Candidate& best, bool& region_found,
               std::size_t& patterns) {
  std::size_t n = joint.input_dim;
  NetworkBounds nb = interval_propagate(joint, box);

  std::vector<std::pair<std::size_t, std::size_t>> unstable;
  for (std::size_t li = 0; li < joint.depth(); ++li) {
    if (joint.layers[li].act != Activation::ReLU) continue;
    for (std::size_t j = 0; j < joint.layers[li].out_dim(); ++j)
      if (nb.layers[li].pre_lo[j] < 0.0 && nb.layers[li].pre_hi[j] > 0.0)
        unstable.push_back({li, j});
  }

  for (std::size_t bits = 0; bits < (std::size_t(1) << unstable.size()); ++bits) {
    ++patterns;

    lp::Problem p;
    p.num_vars = n;
    p.objective.assign(n, 0.0);
    p.lower = box.lower;
    p.upper = box.upper;

    std::vector<Affine> cur(n);
    for (std::size_t i = 0; i < n; ++i) {
      cur[i].coef.assign(n, 0.0);
      cur[i].coef[i] = 1.0;
    }

    std::size_t ubit = 0;
    for (std::size_t li = 0; li < joint.depth(); ++li) {
      const Layer& l = joint.layers[li];
      std::vector<Affine> pre(l.out_dim());
      for (std::size_t r = 0; r < l.out_dim(); ++r) {
        pre[r].coef.assign(n, 0.0);
        pre[r].cst = l.bias[r];
        const double* w = l.weights.row(r);
        for (std::size_t c = 0; c < l.in_dim(); ++c) {
          if (w[c] == 0.0) continue;
          for (std::size_t v = 0; v < n; ++v) pre[r].coef[v] += w[c] * cur[c].coef[v];
          pre[r].cst += w[c] * cur[c].cst;
        }
      }
      if (l.act == Activation::Identity) {
        cur = std::move(pre);
        continue;
      }
      std::vector<Affine> post(l.out_dim());
      for (std::size_t r = 0; r < l.out_dim(); ++r) {
        bool active;
        if (nb.layers[li].pre_lo[r] >= 0.0) {
          active = true;
        } else if (nb.layers[li].pre_hi[r] <= 0.0) {
          active = false;
        } else {
          active = (bits >> ubit) & 1;
          // Pattern region rows only for genuinely two-sided neurons.
          p.rows.push_back({pre[r].coef, active ? lp::Rel::Ge : lp::Rel::Le, -pre[r].cst});
          ++ubit;
        }
        if (active) {
          post[r] = std::move(pre[r]);
        } else {
          post[r].coef.assign(n, 0.0);
          post[r].cst = 0.0;
        }
      }
      cur = std::move(post);
    }

    if (variant) {
      double dir = *variant == SignVariant::C ? 1.0 : -1.0;
      for (std::size_t o = 0; o < 2; ++o) {
        lp::Row row;
        row.coeffs.assign(n, 0.0);
        for (std::size_t v = 0; v < n; ++v) row.coeffs[v] = dir * cur[o].coef[v];
        row.rel = lp::Rel::Ge;
        row.rhs = -dir * cur[o].cst;
        p.rows.push_back(std::move(row));
      }
    }

    Affine diff;
    diff.coef.assign(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) diff.coef[v] = cur[0].coef[v] - cur[1].coef[v];
    diff.cst = cur[0].cst - cur[1].cst;

    for (double dir : {1.0, -1.0}) {
      for (std::size_t v = 0; v < n; ++v) p.objective[v] = dir * diff.coef[v];
      lp::Solution sol = lp::solve(p);
      if (sol.status != lp::Status::Optimal) continue;
      Vec x = box.clamp(sol.x);
      if (variant && !sign_ok(n1, n2, x, *variant)) continue;
      region_found = true;
      double d = eval_distance(n1, n2, x);
      if (!best.set || d > best.value) {
        best.value = d;
        best.x = std::move(x);
        best.set = true;
      }
    }
  }
}

}  // namespace

OracleResult exact_max_distance(const Network& n1, const Network& n2,
                                const InputDomain& domain, const DistanceSpec& spec) {
  domain.validate();
  Network joint = concatenate(n1, n2);
  std::size_t r = relu_count(joint);
  if (r > 16)
    throw SizeLimitError("exact oracle supports at most 16 ReLU neurons, got " +
                         std::to_string(r));

  OracleResult res;
  if (spec.kind == DistanceKind::L1Scalar) {
    Candidate best;
    bool found = false;
    for (const Box& box : domain.boxes)
      sweep_box(n1, n2, joint, box, {}, best, found, res.patterns);
    res.value = best.set ? best.value : 0.0;
    res.argmax = best.x;
    return res;
  }

  Candidate best_c, best_cp;
  bool found_c = false, found_cp = false;
  for (const Box& box : domain.boxes) {
    sweep_box(n1, n2, joint, box, SignVariant::C, best_c, found_c, res.patterns);
    sweep_box(n1, n2, joint, box, SignVariant::CPrime, best_cp, found_cp, res.patterns);
  }
  res.c_feasible = found_c;
  res.cprime_feasible = found_cp;
  res.max_c = found_c ? best_c.value : 0.0;
  res.max_cprime = found_cp ? best_cp.value : 0.0;
  // Empty regimes read 0, so an infeasible side pins the minimum to 0.
  if (*res.max_c <= *res.max_cprime) {
    res.value = *res.max_c;
    res.argmax = best_c.x;
  } else {
    res.value = *res.max_cprime;
    res.argmax = best_cp.x;
  }
  return res;
}

double grid_max_distance(const Network& n1, const Network& n2, const Box& box,
                         const DistanceSpec& spec, double resolution) {
  box.validate();
  if (box.dim() > 3) throw SizeLimitError("grid oracle supports at most 3 input dimensions");
  if (!(resolution > 0.0)) throw ShapeError("grid resolution must be positive");

  std::vector<Vec> axes(box.dim());
  for (std::size_t i = 0; i < box.dim(); ++i) {
    for (double v = box.lower[i]; v < box.upper[i]; v += resolution) axes[i].push_back(v);
    axes[i].push_back(box.upper[i]);
  }

  double max_l1 = 0.0;
  double max_c = 0.0, max_cp = 0.0;
  bool found_c = false, found_cp = false;

  Vec x(box.dim());
  std::vector<std::size_t> idx(box.dim(), 0);
  while (true) {
    for (std::size_t i = 0; i < box.dim(); ++i) x[i] = axes[i][idx[i]];
    double y1 = evaluate(n1, x)[0];
    double y2 = evaluate(n2, x)[0];
    double d = std::fabs(y1 - y2);
    if (spec.kind == DistanceKind::L1Scalar) {
      max_l1 = std::max(max_l1, d);
    } else {
      if (y1 >= 0.0 && y2 >= 0.0) {
        found_c = true;
        max_c = std::max(max_c, d);
      }
      if (y1 <= 0.0 && y2 <= 0.0) {
        found_cp = true;
        max_cp = std::max(max_cp, d);
      }
    }

    std::size_t i = 0;
    for (; i < box.dim(); ++i) {
      if (++idx[i] < axes[i].size()) break;
      idx[i] = 0;
    }
    if (i == box.dim()) break;
  }

  if (spec.kind == DistanceKind::L1Scalar) return max_l1;
  return std::min(found_c ? max_c : 0.0, found_cp ? max_cp : 0.0);
}

}  // namespace pdtkit
