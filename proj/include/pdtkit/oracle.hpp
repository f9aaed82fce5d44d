#pragma once

#include <optional>

#include "pdtkit/box.hpp"
#include "pdtkit/distance.hpp"
#include "pdtkit/net.hpp"

namespace pdtkit {

// Ground truth from exhaustive activation-pattern enumeration. `value` is
// the distance re-evaluated on the real networks at `argmax`, so it is
// always achievable.
struct OracleResult {
  double value = 0.0;
  Vec argmax;
  std::size_t patterns = 0;
  // CDistance detail: per-regime maxima; empty region reads 0.
  std::optional<double> max_c;
  std::optional<double> max_cprime;
  bool c_feasible = true;
  bool cprime_feasible = true;
};

// Enumerates every activation pattern of the joint network (stable neurons
// keep their interval-proven phase) and solves two small input-space LPs
// per pattern. Exact up to LP tolerance. Refuses more than 16 ReLUs.
OracleResult exact_max_distance(const Network& n1, const Network& n2,
                                const InputDomain& domain, const DistanceSpec& spec);

// Dense-grid lower bound on the maximal distance; inputs of dimension
// at most 3. The grid always includes the box corners.
double grid_max_distance(const Network& n1, const Network& n2, const Box& box,
                         const DistanceSpec& spec, double resolution);

}  // namespace pdtkit
