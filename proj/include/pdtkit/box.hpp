#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "pdtkit/errors.hpp"
#include "pdtkit/matrix.hpp"

namespace pdtkit {

// Axis-aligned box, the atomic input region. Bounds must be finite and
// ordered; zero-width axes are allowed.
struct Box {
  Vec lower;
  Vec upper;

  std::size_t dim() const { return lower.size(); }

  void validate() const {
    if (lower.empty() || lower.size() != upper.size())
      throw ShapeError("box bounds must be non-empty and of equal length");
    for (std::size_t i = 0; i < lower.size(); ++i) {
      if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]))
        throw ShapeError("box bounds must be finite");
      if (lower[i] > upper[i]) throw ShapeError("box lower bound exceeds upper bound");
    }
  }

  Vec center() const {
    Vec c(dim());
    for (std::size_t i = 0; i < dim(); ++i) c[i] = 0.5 * (lower[i] + upper[i]);
    return c;
  }

  double volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < dim(); ++i) v *= upper[i] - lower[i];
    return v;
  }

  bool contains(const Vec& x, double tol = 0.0) const {
    if (x.size() != dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i)
      if (x[i] < lower[i] - tol || x[i] > upper[i] + tol) return false;
    return true;
  }

  Vec clamp(Vec x) const {
    for (std::size_t i = 0; i < dim(); ++i) {
      if (x[i] < lower[i]) x[i] = lower[i];
      if (x[i] > upper[i]) x[i] = upper[i];
    }
    return x;
  }
};

// Union of same-dimension boxes. Verification and attacks treat the union
// disjunctively; overlap is permitted.
struct InputDomain {
  std::vector<Box> boxes;

  std::size_t dim() const { return boxes.empty() ? 0 : boxes.front().dim(); }

  void validate() const {
    if (boxes.empty()) throw ShapeError("input domain must contain at least one box");
    for (const Box& b : boxes) {
      b.validate();
      if (b.dim() != boxes.front().dim())
        throw ShapeError("all boxes in a domain must share one dimension");
    }
  }

  double total_volume() const {
    double v = 0.0;
    for (const Box& b : boxes) v += b.volume();
    return v;
  }
};

}  // namespace pdtkit
