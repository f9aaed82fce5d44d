#include "pdtkit/attack.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "pdtkit/errors.hpp"
#include "pdtkit/rng.hpp"

namespace pdtkit {

namespace {

void check_pair(const Network& n1, const Network& n2, const Box& box) {
  box.validate();
  if (n1.input_dim != box.dim() || n2.input_dim != box.dim())
    throw ShapeError("attack: network input dim does not match box");
  if (n1.output_dim() != 1 || n2.output_dim() != 1)
    throw ShapeError("attack: networks must have scalar output");
}

Vec step_sizes(const Box& box, double eps_x) {
  Vec eps(box.dim());
  for (std::size_t i = 0; i < box.dim(); ++i)
    eps[i] = eps_x > 0 ? eps_x : 0.01 * (box.upper[i] - box.lower[i]);
  return eps;
}

double signum(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

// Objective |n1 - n2| with the one-sided derivative at a tie: sign(0) = +1,
// so a start point where both nets agree still produces a nonzero step.
struct AbsDiff {
  const Network& n1;
  const Network& n2;

  double value(const Vec& x) const {
    return std::fabs(evaluate(n1, x)[0] - evaluate(n2, x)[0]);
  }

  double value_grad(const Vec& x, Vec& grad) const {
    const double d = evaluate(n1, x)[0] - evaluate(n2, x)[0];
    const double s = d >= 0 ? 1.0 : -1.0;
    const Vec g1 = gradient(n1, x);
    const Vec g2 = gradient(n2, x);
    grad.assign(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) grad[i] = s * (g1[i] - g2[i]);
    return std::fabs(d);
  }
};

void ascend_step(Vec& x, const Vec& grad, const Vec& eps, bool use_sign, double dir,
                 const Box& box) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = use_sign ? signum(grad[i]) : grad[i];
    x[i] += dir * eps[i] * d;
  }
  x = box.clamp(std::move(x));
}

}  // namespace

Vec gradient(const Network& net, const Vec& x) {
  if (net.output_dim() != 1) throw ShapeError("gradient: network output must be scalar");
  const Trace tr = eval_trace(net, x);
  Vec g{1.0};
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const Layer& l = net.layers[li];
    Vec gp = g;  // d out / d pre-activation of layer li
    if (l.act == Activation::ReLU)
      for (std::size_t r = 0; r < gp.size(); ++r)
        if (tr.pre[li][r] <= 0) gp[r] = 0.0;
    Vec prev(l.in_dim(), 0.0);
    for (std::size_t r = 0; r < l.out_dim(); ++r)
      for (std::size_t c = 0; c < l.in_dim(); ++c) prev[c] += l.weights(r, c) * gp[r];
    g = std::move(prev);
  }
  return g;
}

AttackResult fgsm(const Network& n1, const Network& n2, const Box& box,
                  const AttackConfig& cfg) {
  check_pair(n1, n2, box);
  const AbsDiff obj{n1, n2};
  const Vec eps = step_sizes(box, cfg.eps_x);
  Vec x = box.center();
  Vec grad;
  obj.value_grad(x, grad);
  ascend_step(x, grad, eps, /*use_sign=*/true, +1.0, box);
  AttackResult res;
  res.x = x;
  res.objective = obj.value(x);
  res.trace = {res.objective};
  return res;
}

AttackResult pgd(const Network& n1, const Network& n2, const Box& box,
                 const AttackConfig& cfg, Direction dir) {
  check_pair(n1, n2, box);
  const AbsDiff obj{n1, n2};
  const Vec eps = step_sizes(box, cfg.eps_x);
  const double sdir = dir == Direction::Maximize ? +1.0 : -1.0;
  Rng rng(cfg.seed);

  AttackResult res;
  bool have_best = false;
  auto consider = [&](const Vec& x, double v) {
    const bool better = dir == Direction::Maximize ? v > res.objective : v < res.objective;
    if (!have_best || better) {
      res.objective = v;
      res.x = x;
      have_best = true;
    }
  };

  for (std::size_t r = 0; r <= cfg.restarts; ++r) {
    Vec x(box.dim());
    if (r == 0) {
      x = box.center();
    } else {
      for (std::size_t i = 0; i < box.dim(); ++i)
        x[i] = rng.uniform(box.lower[i], box.upper[i]);
    }
    consider(x, obj.value(x));
    Vec grad;
    for (std::size_t t = 0; t < cfg.T; ++t) {
      obj.value_grad(x, grad);
      ascend_step(x, grad, eps, cfg.use_sign, sdir, box);
      const double v = obj.value(x);
      res.trace.push_back(v);
      consider(x, v);
    }
  }
  return res;
}

AttackResult constrained_pgd(const Network& n1, const Network& n2, const Box& box,
                             const std::vector<OutputConstraint>& constraints,
                             const AttackConfig& cfg, double feas_tol) {
  check_pair(n1, n2, box);
  for (const auto& c : constraints)
    if (c.coeffs.size() != 2)
      throw ShapeError("constrained_pgd: constraints act on the two scalar outputs");

  const AbsDiff obj{n1, n2};
  const Vec eps = step_sizes(box, cfg.eps_x);
  const double eps_l = cfg.eps_lambda > 0 ? cfg.eps_lambda : 0.01;
  Rng rng(cfg.seed);

  // Shortfall of each required condition coeffs . (y1, y2) >= rhs; positive
  // means violated.
  auto residuals = [&](const Vec& x, Vec& out) {
    const double y1 = evaluate(n1, x)[0];
    const double y2 = evaluate(n2, x)[0];
    out.assign(constraints.size(), 0.0);
    for (std::size_t i = 0; i < constraints.size(); ++i) {
      const auto& c = constraints[i];
      out[i] = c.rhs - (c.coeffs[0] * y1 + c.coeffs[1] * y2);
    }
  };
  auto worst_violation = [&](const Vec& r) {
    double w = 0.0;
    for (double v : r) w = std::max(w, v);
    return w;
  };

  AttackResult res;
  res.feasible = false;
  bool have_fallback = false;
  double fallback_viol = 0.0;
  Vec resid;

  auto consider = [&](const Vec& x) {
    residuals(x, resid);
    const double viol = worst_violation(resid);
    const double v = obj.value(x);
    if (viol <= feas_tol) {
      if (!res.feasible || v > res.objective) {
        res.objective = v;
        res.x = x;
        res.constraint_violation = viol;
        res.feasible = true;
      }
    } else if (!res.feasible) {
      // Least-violating iterate as an explicit-failure report.
      if (!have_fallback || viol < fallback_viol ||
          (viol == fallback_viol && v > res.objective)) {
        res.objective = v;
        res.x = x;
        res.constraint_violation = viol;
        fallback_viol = viol;
        have_fallback = true;
      }
    }
    return v;
  };

  Vec grad, g1, g2, lambda;
  for (std::size_t r = 0; r <= cfg.restarts; ++r) {
    Vec x(box.dim());
    if (r == 0) {
      x = box.center();
    } else {
      for (std::size_t i = 0; i < box.dim(); ++i)
        x[i] = rng.uniform(box.lower[i], box.upper[i]);
    }
    consider(x);
    for (std::size_t t = 0; t < cfg.T; ++t) {
      // Multiplier ascent on the penalty, restarted from zero: each step
      // grows lambda_i by eps_l while condition i is still violated.
      lambda.assign(constraints.size(), 0.0);
      residuals(x, resid);
      for (std::size_t s = 0; s < cfg.T_lambda; ++s)
        for (std::size_t i = 0; i < constraints.size(); ++i) {
          const double g = resid[i] > 0 ? resid[i] : 0.0;
          const double d = cfg.use_sign ? signum(g) : g;
          lambda[i] = std::max(0.0, lambda[i] + eps_l * d);
        }

      // Input ascent on |n1 - n2| - sum_i lambda_i * relu(resid_i), warm
      // started from the previous outer iterate.
      for (std::size_t s = 0; s < cfg.T_x; ++s) {
        const double d = evaluate(n1, x)[0] - evaluate(n2, x)[0];
        const double sg = d >= 0 ? 1.0 : -1.0;
        g1 = gradient(n1, x);
        g2 = gradient(n2, x);
        residuals(x, resid);
        grad.assign(x.size(), 0.0);
        for (std::size_t i = 0; i < x.size(); ++i) grad[i] = sg * (g1[i] - g2[i]);
        for (std::size_t i = 0; i < constraints.size(); ++i) {
          if (resid[i] <= 0 || lambda[i] == 0.0) continue;
          const auto& c = constraints[i];
          // d resid_i / dx = -(c0 * grad n1 + c1 * grad n2)
          for (std::size_t j = 0; j < x.size(); ++j)
            grad[j] += lambda[i] * (c.coeffs[0] * g1[j] + c.coeffs[1] * g2[j]);
        }
        ascend_step(x, grad, eps, cfg.use_sign, +1.0, box);
        consider(x);
      }
      res.trace.push_back(obj.value(x));
    }
  }
  return res;
}

SampleResult sample_pdt(const Network& n1, const Network& n2, const InputDomain& domain,
                        const DistanceSpec& spec, std::size_t n_samples,
                        std::uint64_t seed) {
  domain.validate();
  if (n1.input_dim != domain.dim() || n2.input_dim != domain.dim())
    throw ShapeError("sample_pdt: network input dim does not match domain");
  if (n1.output_dim() != 1 || n2.output_dim() != 1)
    throw ShapeError("sample_pdt: networks must have scalar output");
  if (n_samples == 0) throw ConfigError("sample_pdt: need at least one sample");

  Rng rng(seed);
  const double total = domain.total_volume();
  std::vector<double> vols(domain.boxes.size());
  for (std::size_t b = 0; b < vols.size(); ++b) vols[b] = domain.boxes[b].volume();

  auto pick_box = [&]() -> const Box& {
    if (total <= 0.0) return domain.boxes[rng.index(domain.boxes.size())];
    const double u = rng.uniform01() * total;
    double cum = 0.0;
    for (std::size_t b = 0; b < vols.size(); ++b) {
      cum += vols[b];
      if (u < cum) return domain.boxes[b];
    }
    return domain.boxes.back();
  };

  SampleResult res;
  Vec best_c, best_cp;
  Vec x(domain.dim());
  for (std::size_t s = 0; s < n_samples; ++s) {
    const Box& box = pick_box();
    for (std::size_t i = 0; i < domain.dim(); ++i)
      x[i] = rng.uniform(box.lower[i], box.upper[i]);
    const double y1 = evaluate(n1, x)[0];
    const double y2 = evaluate(n2, x)[0];
    const double d = std::fabs(y1 - y2);
    if (spec.kind == DistanceKind::L1Scalar) {
      if (res.feasible_c == 0 || d > res.max_c) {
        res.max_c = d;
        best_c = x;
      }
      ++res.feasible_c;
      continue;
    }
    if (y1 >= 0 && y2 >= 0) {
      if (res.feasible_c == 0 || d > res.max_c) {
        res.max_c = d;
        best_c = x;
      }
      ++res.feasible_c;
    }
    if (y1 <= 0 && y2 <= 0) {
      if (res.feasible_cprime == 0 || d > res.max_cprime) {
        res.max_cprime = d;
        best_cp = x;
      }
      ++res.feasible_cprime;
    }
  }

  if (spec.kind == DistanceKind::L1Scalar) {
    res.estimate = res.max_c;
    res.best_x = best_c;
    return res;
  }
  res.all_infeasible = res.feasible_c == 0 && res.feasible_cprime == 0;
  // An unobserved regime contributes zero, matching the convention that an
  // empty regime has no disagreement to report.
  const double mc = res.feasible_c > 0 ? res.max_c : 0.0;
  const double mcp = res.feasible_cprime > 0 ? res.max_cprime : 0.0;
  if (mc <= mcp) {
    res.estimate = mc;
    res.best_x = best_c;
  } else {
    res.estimate = mcp;
    res.best_x = best_cp;
  }
  return res;
}

std::vector<RankedSubset> ensemble_variance_rank(const std::vector<Network>& nets,
                                                 std::size_t k, const InputDomain& domain,
                                                 std::size_t n_samples, std::uint64_t seed) {
  const std::size_t n = nets.size();
  if (k == 0 || k > n) throw ConfigError("ensemble_variance_rank: need 1 <= k <= pool size");
  if (n_samples == 0) throw ConfigError("ensemble_variance_rank: need at least one sample");
  domain.validate();
  for (const auto& net : nets) {
    if (net.input_dim != domain.dim())
      throw ShapeError("ensemble_variance_rank: network input dim does not match domain");
    if (net.output_dim() != nets[0].output_dim())
      throw ShapeError("ensemble_variance_rank: networks disagree on output dim");
  }

  double combos = 1.0;
  for (std::size_t i = 0; i < k; ++i) combos = combos * double(n - i) / double(i + 1);
  if (combos > 1e6)
    throw SizeLimitError("ensemble_variance_rank: too many subsets to enumerate");

  // Shared sample set, each net evaluated once per sample.
  Rng rng(seed);
  const double total = domain.total_volume();
  std::vector<double> vols(domain.boxes.size());
  for (std::size_t b = 0; b < vols.size(); ++b) vols[b] = domain.boxes[b].volume();
  const std::size_t out_dim = nets[0].output_dim();
  std::vector<std::vector<Vec>> outs(n);  // [net][sample] -> output vec
  for (auto& o : outs) o.resize(n_samples);
  Vec x(domain.dim());
  for (std::size_t s = 0; s < n_samples; ++s) {
    const Box* box = nullptr;
    if (total <= 0.0) {
      box = &domain.boxes[rng.index(domain.boxes.size())];
    } else {
      const double u = rng.uniform01() * total;
      double cum = 0.0;
      for (std::size_t b = 0; b < vols.size(); ++b) {
        cum += vols[b];
        if (u < cum) {
          box = &domain.boxes[b];
          break;
        }
      }
      if (!box) box = &domain.boxes.back();
    }
    for (std::size_t i = 0; i < domain.dim(); ++i)
      x[i] = rng.uniform(box->lower[i], box->upper[i]);
    for (std::size_t m = 0; m < n; ++m) outs[m][s] = evaluate(nets[m], x);
  }

  auto subset_score = [&](const std::vector<std::size_t>& members) {
    double acc = 0.0;
    for (std::size_t s = 0; s < n_samples; ++s) {
      double var_sum = 0.0;
      for (std::size_t di = 0; di < out_dim; ++di) {
        double mean = 0.0;
        for (std::size_t m : members) mean += outs[m][s][di];
        mean /= double(members.size());
        double var = 0.0;
        for (std::size_t m : members) {
          const double d = outs[m][s][di] - mean;
          var += d * d;
        }
        var_sum += var / double(members.size());
      }
      acc += var_sum / double(out_dim);
    }
    return acc / double(n_samples);
  };

  std::vector<RankedSubset> ranked;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    ranked.push_back({idx, subset_score(idx)});
    // next combination in lexicographic order
    std::size_t i = k;
    while (i-- > 0) {
      if (idx[i] != i + n - k) {
        ++idx[i];
        for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
        break;
      }
      if (i == 0) {
        i = k + 1;  // done marker
        break;
      }
    }
    if (i == k + 1 || k == 0) break;
  }

  std::sort(ranked.begin(), ranked.end(), [](const RankedSubset& a, const RankedSubset& b) {
    if (a.variance != b.variance) return a.variance < b.variance;
    return a.members < b.members;
  });
  return ranked;
}

}  // namespace pdtkit
