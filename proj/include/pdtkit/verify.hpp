#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "pdtkit/box.hpp"
#include "pdtkit/net.hpp"

namespace pdtkit {

// One linear condition on the network outputs: coeffs . y >= rhs.
struct OutputConstraint {
  Vec coeffs;
  double rhs = 0.0;
};

// Does any x in `box` drive net(x) to satisfy every constraint at once?
struct VerifyQuery {
  Network net;
  Box box;
  std::vector<OutputConstraint> constraints;
};

struct Budget {
  std::size_t max_nodes = 10'000'000;
  double max_seconds = std::numeric_limits<double>::infinity();
};

enum class Verdict { Sat, Unsat, Unknown };

struct VerifyResult {
  Verdict verdict = Verdict::Unknown;
  Vec witness;  // only meaningful for Sat; satisfies the query within witness_tol
  std::size_t nodes = 0;
  std::size_t lp_calls = 0;
  std::string reason;  // Unknown only: "budget" or "solver"
};

struct DecideOptions {
  Budget budget;
  // Tighten node bounds with the backward linear relaxation. Sound either
  // way; turning it off only costs nodes.
  bool use_linear_relax = true;
  double witness_tol = 1e-6;
};

// Branch-and-bound over unstable ReLU phases with an LP relaxation at each
// node. Sat answers carry a concrete witness re-checked on the real
// network; Unsat answers mean the search space was exhausted. Complete up
// to the LP feasibility tolerance. Deterministic: same query and budget,
// same verdict and node count.
VerifyResult decide(const VerifyQuery& q, const DecideOptions& opts = {});

// Exhaustive enumeration of all 2^R ReLU phase patterns, one exact LP
// each. Refuses R > 16. Cross-check oracle for decide.
VerifyResult brute_force_decide(const VerifyQuery& q);

}  // namespace pdtkit
