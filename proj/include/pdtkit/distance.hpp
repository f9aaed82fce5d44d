#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "pdtkit/box.hpp"
#include "pdtkit/net.hpp"
#include "pdtkit/verify.hpp"

namespace pdtkit {

enum class DistanceKind { L1Scalar, CDistance };

// The two output-sign regimes of the constrained distance: C restricts to
// inputs where both outputs are non-negative, CPrime to both non-positive.
enum class SignVariant { C, CPrime };

// Which side of |y1 - y2| >= alpha a single query encodes.
enum class DiffSign { Pos, Neg };

// Scalar-output distance between two networks. L1Scalar is the plain
// absolute difference; CDistance takes the smaller of the two sign-regime
// maxima.
struct DistanceSpec {
  DistanceKind kind = DistanceKind::L1Scalar;

  static DistanceSpec l1() { return {DistanceKind::L1Scalar}; }
  static DistanceSpec cdist() { return {DistanceKind::CDistance}; }

  // Sign rows of one regime over the joint output (y1, y2).
  static std::vector<OutputConstraint> sign_rows(SignVariant v);
};

// Single verification query over concatenate(n1, n2): the chosen disjunct
// of |y1 - y2| >= alpha, plus the regime's sign rows for CDistance.
VerifyQuery encode_query(const Network& n1, const Network& n2, const Box& box,
                         const DistanceSpec& spec, double alpha, DiffSign sign,
                         SignVariant variant = SignVariant::C);

struct ExistsResult {
  Verdict verdict = Verdict::Unknown;
  Vec witness;
  std::size_t box_index = 0;          // Sat only: which box
  DiffSign sign = DiffSign::Pos;      // Sat only: which disjunct
  SignVariant variant = SignVariant::C;  // Sat only, CDistance: which regime
  std::size_t queries = 0;
  std::size_t nodes = 0;
  std::string reason;  // Unknown only
};

// Disjunction over boxes, diff signs and (for CDistance) sign regimes:
// is the distance >= alpha anywhere? Short-circuits on the first Sat;
// any Unknown without a Sat makes the whole answer Unknown. `only_variant`
// restricts CDistance to one regime (used by the per-regime searches).
ExistsResult exists_distance_geq(const Network& n1, const Network& n2,
                                 const InputDomain& domain, const DistanceSpec& spec,
                                 double alpha, const DecideOptions& opts = {},
                                 std::optional<SignVariant> only_variant = {});

enum class PdtStatus { Certified, ClampedAtM, InfeasibleConstraint, UnknownBudget };

// One binary search: certified bracket [lower, upper] of the maximal
// distance, capped at M.
struct PdtSearch {
  double lower = 0.0;
  double upper = 0.0;
  PdtStatus status = PdtStatus::Certified;
  Vec witness;  // achieves >= lower when lower > 0
  std::size_t rounds = 0;   // bisection iterations
  std::size_t queries = 0;  // decide calls issued
  std::size_t nodes = 0;    // branch-and-bound nodes across all queries
  std::vector<std::pair<double, Verdict>> probe_trace;  // (alpha, verdict)
  std::optional<SignVariant> variant;  // set for CDistance branches
};

struct PdtResult {
  double lower = 0.0;
  double upper = 0.0;
  PdtStatus status = PdtStatus::Certified;
  Vec witness;
  std::size_t rounds = 0;
  std::size_t queries = 0;
  std::size_t nodes = 0;
  // One entry for L1Scalar, the c and c' searches for CDistance.
  std::vector<PdtSearch> branches;

  // The scalar fed to disagreement scores: the sound over-approximation.
  double scalar() const { return upper; }
};

// Bisection of the maximal distance over the domain (multi-box domains are
// handled inside each existence query). Starts from [0, M], keeps the
// invariant "distance >= lower is proven (or lower = 0)" and "distance >
// upper is refuted (or upper = M)", and stops once upper - lower <= eps.
// For CDistance the two regimes are searched separately and combined by
// taking the elementwise minimum of their brackets.
PdtResult pdt(const Network& n1, const Network& n2, const InputDomain& domain,
              const DistanceSpec& spec, double M, double eps,
              const DecideOptions& opts = {});

// Multi-box entry point; the search already interleaves boxes inside each
// query, so this is the same computation under the name callers expect
// when the domain is a union.
inline PdtResult pdt_multi_region(const Network& n1, const Network& n2,
                                  const InputDomain& domain, const DistanceSpec& spec,
                                  double M, double eps, const DecideOptions& opts = {}) {
  return pdt(n1, n2, domain, spec, M, eps, opts);
}

}  // namespace pdtkit
