#include "pdtkit/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "pdtkit/errors.hpp"

namespace pdtkit {

namespace {

constexpr double kSlackRel = 1e-9;

void widen(double& lo, double& hi) {
  lo -= kSlackRel * std::max(1.0, std::fabs(lo));
  hi += kSlackRel * std::max(1.0, std::fabs(hi));
}

// Affine image of an interval vector: exact per row.
void affine_interval(const Layer& l, const Vec& in_lo, const Vec& in_hi, Vec& out_lo,
                     Vec& out_hi) {
  out_lo.assign(l.out_dim(), 0.0);
  out_hi.assign(l.out_dim(), 0.0);
  for (std::size_t r = 0; r < l.out_dim(); ++r) {
    double lo = l.bias[r], hi = l.bias[r];
    const double* w = l.weights.row(r);
    for (std::size_t c = 0; c < l.in_dim(); ++c) {
      if (w[c] >= 0.0) {
        lo += w[c] * in_lo[c];
        hi += w[c] * in_hi[c];
      } else {
        lo += w[c] * in_hi[c];
        hi += w[c] * in_lo[c];
      }
    }
    out_lo[r] = lo;
    out_hi[r] = hi;
  }
}

// Bounding lines post = s*pre + t for one neuron under its (possibly
// forced) phase.
struct ReluLines {
  double up_s, up_t;
  double lo_s, lo_t;
};

ReluLines relu_lines(double l, double u, int phase, bool is_relu) {
  if (!is_relu || phase > 0) return {1.0, 0.0, 1.0, 0.0};
  if (phase < 0) return {0.0, 0.0, 0.0, 0.0};
  if (l >= 0.0) return {1.0, 0.0, 1.0, 0.0};
  if (u <= 0.0) return {0.0, 0.0, 0.0, 0.0};
  double s = u / (u - l);
  double lower_slope = (u >= -l) ? 1.0 : 0.0;
  return {s, -s * l, lower_slope, 0.0};
}

// Backward substitution of the bounding lines all the way to the input
// box: layer li's pre-activations as a pair of affine-in-x envelopes.
// Far tighter than composing intervals layer by layer, because signs of
// intermediate coefficients cancel instead of compounding. Bounds for
// earlier layers must already sit in `nb`; under forced phases the result
// is valid on the subregion where those phases hold, like everything else
// here.
void backward_tighten(const Network& net, const Box& box, const PhaseMask& phases,
                      const NetworkBounds& nb, std::size_t li, Vec& pre_lo, Vec& pre_hi) {
  const std::size_t rows = net.layers[li].out_dim();

  // up/lo hold coefficients over the current frontier (post of layer j
  // while walking, finally the input), one row per neuron of layer li.
  std::vector<Vec> up(rows), lo(rows);
  Vec up_c(rows), lo_c(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const Layer& l = net.layers[li];
    up[r].assign(l.weights.row(r), l.weights.row(r) + l.in_dim());
    lo[r] = up[r];
    up_c[r] = lo_c[r] = l.bias[r];
  }

  for (std::size_t jj = li; jj-- > 0;) {
    const Layer& l = net.layers[jj];
    const LayerBounds& lb = nb.layers[jj];
    const bool is_relu = l.act == Activation::ReLU;

    // post(jj) -> pre(jj): run every coefficient through the neuron's
    // bounding lines, picking the side that keeps the direction sound.
    for (std::size_t c = 0; c < l.out_dim(); ++c) {
      const ReluLines ln = relu_lines(lb.pre_lo[c], lb.pre_hi[c],
                                      is_relu ? phases[jj][c] : 0, is_relu);
      for (std::size_t r = 0; r < rows; ++r) {
        double& au = up[r][c];
        if (au >= 0.0) {
          up_c[r] += au * ln.up_t;
          au *= ln.up_s;
        } else {
          up_c[r] += au * ln.lo_t;
          au *= ln.lo_s;
        }
        double& al = lo[r][c];
        if (al >= 0.0) {
          lo_c[r] += al * ln.lo_t;
          al *= ln.lo_s;
        } else {
          lo_c[r] += al * ln.up_t;
          al *= ln.up_s;
        }
      }
    }

    // pre(jj) -> post(jj-1) (or the input when jj == 0).
    for (std::size_t r = 0; r < rows; ++r) {
      Vec nu(l.in_dim(), 0.0), nl(l.in_dim(), 0.0);
      for (std::size_t c = 0; c < l.out_dim(); ++c) {
        const double au = up[r][c], al = lo[r][c];
        up_c[r] += au * l.bias[c];
        lo_c[r] += al * l.bias[c];
        if (au == 0.0 && al == 0.0) continue;
        const double* w = l.weights.row(c);
        for (std::size_t k = 0; k < l.in_dim(); ++k) {
          nu[k] += au * w[k];
          nl[k] += al * w[k];
        }
      }
      up[r] = std::move(nu);
      lo[r] = std::move(nl);
    }
  }

  for (std::size_t r = 0; r < rows; ++r) {
    double hi = up_c[r], low = lo_c[r];
    for (std::size_t k = 0; k < box.dim(); ++k) {
      hi += up[r][k] >= 0.0 ? up[r][k] * box.upper[k] : up[r][k] * box.lower[k];
      low += lo[r][k] >= 0.0 ? lo[r][k] * box.lower[k] : lo[r][k] * box.upper[k];
    }
    pre_hi[r] = std::min(pre_hi[r], hi);
    pre_lo[r] = std::max(pre_lo[r], low);
  }
}

}  // namespace

PhaseMask free_phases(const Network& net) {
  PhaseMask m(net.depth());
  for (std::size_t i = 0; i < net.depth(); ++i) m[i].assign(net.layers[i].out_dim(), 0);
  return m;
}

std::optional<NetworkBounds> propagate_with_phases(const Network& net, const Box& box,
                                                   const PhaseMask& phases, bool relax) {
  net.validate();
  box.validate();
  if (box.dim() != net.input_dim) throw ShapeError("box dimension must match network input");
  if (phases.size() != net.depth()) throw ShapeError("phase mask depth mismatch");

  NetworkBounds nb;
  nb.layers.resize(net.depth());
  Vec in_lo = box.lower, in_hi = box.upper;

  for (std::size_t li = 0; li < net.depth(); ++li) {
    const Layer& l = net.layers[li];
    if (phases[li].size() != l.out_dim()) throw ShapeError("phase mask width mismatch");
    LayerBounds& lb = nb.layers[li];
    affine_interval(l, in_lo, in_hi, lb.pre_lo, lb.pre_hi);

    if (relax && li > 0) backward_tighten(net, box, phases, nb, li, lb.pre_lo, lb.pre_hi);

    for (std::size_t r = 0; r < l.out_dim(); ++r) widen(lb.pre_lo[r], lb.pre_hi[r]);

    lb.post_lo.resize(l.out_dim());
    lb.post_hi.resize(l.out_dim());
    for (std::size_t r = 0; r < l.out_dim(); ++r) {
      double plo = lb.pre_lo[r], phi = lb.pre_hi[r];
      if (l.act == Activation::ReLU) {
        int ph = phases[li][r];
        if (ph > 0) {
          if (phi < 0.0) return std::nullopt;
          lb.post_lo[r] = std::max(plo, 0.0);
          lb.post_hi[r] = phi;
        } else if (ph < 0) {
          if (plo > 0.0) return std::nullopt;
          lb.post_lo[r] = 0.0;
          lb.post_hi[r] = 0.0;
        } else {
          lb.post_lo[r] = std::max(plo, 0.0);
          lb.post_hi[r] = std::max(phi, 0.0);
        }
      } else {
        lb.post_lo[r] = plo;
        lb.post_hi[r] = phi;
      }
    }
    in_lo = lb.post_lo;
    in_hi = lb.post_hi;
  }
  return nb;
}

NetworkBounds interval_propagate(const Network& net, const Box& box) {
  return *propagate_with_phases(net, box, free_phases(net), false);
}

NetworkBounds linear_relax(const Network& net, const Box& box) {
  return *propagate_with_phases(net, box, free_phases(net), true);
}

}  // namespace pdtkit
