#pragma once

#include <cstdint>
#include <vector>

#include "pdtkit/box.hpp"
#include "pdtkit/distance.hpp"
#include "pdtkit/net.hpp"
#include "pdtkit/verify.hpp"

namespace pdtkit {

enum class AttackVariant { Fgsm, Pgd, ConstrainedPgd };
enum class Direction { Maximize, Minimize };

struct AttackConfig {
  AttackVariant variant = AttackVariant::Pgd;
  std::size_t T = 100;         // outer iterations
  std::size_t T_x = 20;        // x steps per outer iteration (constrained)
  std::size_t T_lambda = 20;   // multiplier steps per outer iteration
  double eps_x = 0.0;          // <= 0: one percent of each coordinate's width
  double eps_lambda = 0.0;     // <= 0: 0.01
  bool use_sign = true;        // sign-of-gradient steps vs raw gradient steps
  std::size_t restarts = 0;    // extra uniform-random starts beyond the center
  std::uint64_t seed = 0;
};

struct AttackResult {
  Vec x;                             // inside the box exactly
  double objective = 0.0;            // |n1(x) - n2(x)| by forward evaluation
  double constraint_violation = 0.0; // largest positive constraint residual at x
  bool feasible = true;              // false: no iterate met the constraints
  Vec trace;                         // objective per iteration (and per restart)
};

// Exact reverse-mode gradient of a scalar-output network; the ReLU
// subgradient at exactly zero is taken as zero.
Vec gradient(const Network& net, const Vec& x);

// One signed gradient step on |n1 - n2| from the box center.
AttackResult fgsm(const Network& n1, const Network& n2, const Box& box,
                  const AttackConfig& cfg = {});

// Iterative projected gradient steps on |n1 - n2|, tracking the best
// iterate seen (including the start point).
AttackResult pgd(const Network& n1, const Network& n2, const Box& box,
                 const AttackConfig& cfg = {}, Direction dir = Direction::Maximize);

// Alternating multiplier/input updates on the penalized objective
// |n1 - n2| - sum_i lambda_i * relu(violation_i). Constraints are required
// output conditions coeffs . y >= rhs; a violation is the shortfall.
// Multipliers restart at zero each outer iteration and stay non-negative.
// Fails explicitly when no iterate satisfies every constraint within
// `feas_tol`.
AttackResult constrained_pgd(const Network& n1, const Network& n2, const Box& box,
                             const std::vector<OutputConstraint>& constraints,
                             const AttackConfig& cfg = {}, double feas_tol = 1e-6);

struct SampleResult {
  double estimate = 0.0;  // max observed distance (per-regime min for CDistance)
  Vec best_x;
  bool all_infeasible = false;  // CDistance: no sample landed in either regime
  std::size_t feasible_c = 0;
  std::size_t feasible_cprime = 0;
  double max_c = 0.0;
  double max_cprime = 0.0;
};

// Uniform samples over the domain, boxes weighted by volume. For
// CDistance a sample only counts toward a regime whose sign conditions it
// satisfies, and the estimate is the smaller regime maximum.
SampleResult sample_pdt(const Network& n1, const Network& n2, const InputDomain& domain,
                        const DistanceSpec& spec, std::size_t n_samples,
                        std::uint64_t seed);

struct RankedSubset {
  std::vector<std::size_t> members;
  double variance = 0.0;  // mean over samples of the members' output variance
};

// Scores every k-subset of the pool by mean output variance over shared
// domain samples and returns them lowest first. Refuses pools with more
// than 1e6 subsets.
std::vector<RankedSubset> ensemble_variance_rank(const std::vector<Network>& nets,
                                                 std::size_t k, const InputDomain& domain,
                                                 std::size_t n_samples, std::uint64_t seed);

}  // namespace pdtkit
