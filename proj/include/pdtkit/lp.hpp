#pragma once

#include <cstddef>
#include <vector>

#include "pdtkit/matrix.hpp"

namespace pdtkit::lp {

enum class Rel { Le, Ge, Eq };

struct Row {
  Vec coeffs;
  Rel rel = Rel::Le;
  double rhs = 0.0;
};

// maximize objective . x  subject to rows and per-variable bounds.
// Bounds may be +/-infinity.
struct Problem {
  std::size_t num_vars = 0;
  Vec objective;
  std::vector<Row> rows;
  Vec lower;
  Vec upper;
};

enum class Status { Optimal, Infeasible, Unbounded, IterLimit };

struct Solution {
  Status status = Status::IterLimit;
  Vec x;
  double value = 0.0;
  std::size_t iterations = 0;
};

// Constraint satisfaction slack below this counts as feasible, and a
// phase-one residual above it as infeasible.
constexpr double kFeasTol = 1e-7;

// Dense two-phase simplex. Entering variable by largest reduced cost with
// lowest-index ties; after a stall of degenerate pivots the rule switches
// to Bland's, which cannot cycle. Fully deterministic.
Solution solve(const Problem& p);

}  // namespace pdtkit::lp
