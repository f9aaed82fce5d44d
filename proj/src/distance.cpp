#include "pdtkit/distance.hpp"

#include <algorithm>
#include <cmath>

#include "pdtkit/errors.hpp"

namespace pdtkit {

std::vector<OutputConstraint> DistanceSpec::sign_rows(SignVariant v) {
  if (v == SignVariant::C) return {{{1.0, 0.0}, 0.0}, {{0.0, 1.0}, 0.0}};
  return {{{-1.0, 0.0}, 0.0}, {{0.0, -1.0}, 0.0}};
}

VerifyQuery encode_query(const Network& n1, const Network& n2, const Box& box,
                         const DistanceSpec& spec, double alpha, DiffSign sign,
                         SignVariant variant) {
  if (n1.output_dim() != 1 || n2.output_dim() != 1)
    throw ShapeError("distance queries require scalar-output networks");
  if (alpha < 0.0) throw ShapeError("alpha must be non-negative");

  VerifyQuery q;
  q.net = concatenate(n1, n2);
  q.box = box;
  if (sign == DiffSign::Pos)
    q.constraints.push_back({{1.0, -1.0}, alpha});
  else
    q.constraints.push_back({{-1.0, 1.0}, alpha});
  if (spec.kind == DistanceKind::CDistance)
    for (OutputConstraint& row : DistanceSpec::sign_rows(variant))
      q.constraints.push_back(std::move(row));
  return q;
}

ExistsResult exists_distance_geq(const Network& n1, const Network& n2,
                                 const InputDomain& domain, const DistanceSpec& spec,
                                 double alpha, const DecideOptions& opts,
                                 std::optional<SignVariant> only_variant) {
  domain.validate();

  std::vector<SignVariant> variants;
  if (spec.kind == DistanceKind::CDistance) {
    if (only_variant)
      variants = {*only_variant};
    else
      variants = {SignVariant::C, SignVariant::CPrime};
  } else {
    variants = {SignVariant::C};  // ignored by encode_query for L1Scalar
  }

  ExistsResult res;
  bool saw_unknown = false;
  for (std::size_t bi = 0; bi < domain.boxes.size(); ++bi) {
    for (SignVariant v : variants) {
      for (DiffSign sg : {DiffSign::Pos, DiffSign::Neg}) {
        VerifyQuery q = encode_query(n1, n2, domain.boxes[bi], spec, alpha, sg, v);
        VerifyResult r = decide(q, opts);
        ++res.queries;
        res.nodes += r.nodes;
        if (r.verdict == Verdict::Sat) {
          res.verdict = Verdict::Sat;
          res.witness = std::move(r.witness);
          res.box_index = bi;
          res.sign = sg;
          res.variant = v;
          return res;
        }
        if (r.verdict == Verdict::Unknown) {
          saw_unknown = true;
          if (res.reason.empty()) res.reason = r.reason;
        }
      }
    }
  }
  res.verdict = saw_unknown ? Verdict::Unknown : Verdict::Unsat;
  return res;
}

namespace {

PdtSearch search_branch(const Network& n1, const Network& n2, const InputDomain& domain,
                        const DistanceSpec& spec, double M, double eps,
                        const DecideOptions& opts, std::optional<SignVariant> variant) {
  PdtSearch s;
  s.variant = variant;
  s.upper = M;

  auto probe = [&](double a) {
    ExistsResult r = exists_distance_geq(n1, n2, domain, spec, a, opts, variant);
    s.queries += r.queries;
    s.nodes += r.nodes;
    s.probe_trace.push_back({a, r.verdict});
    return r;
  };

  if (variant) {
    // Regime feasibility: at alpha 0 the distance row is vacuous, so the
    // query fails only when the sign region itself is empty.
    ExistsResult r0 = probe(0.0);
    if (r0.verdict == Verdict::Unsat) {
      s.lower = s.upper = 0.0;
      s.status = PdtStatus::InfeasibleConstraint;
      return s;
    }
    if (r0.verdict == Verdict::Unknown) {
      s.lower = 0.0;
      s.upper = M;
      s.status = PdtStatus::UnknownBudget;
      return s;
    }
    s.witness = std::move(r0.witness);
  }

  ExistsResult rM = probe(M);
  bool m_unproven = false;
  if (rM.verdict == Verdict::Sat) {
    s.lower = s.upper = M;
    s.witness = std::move(rM.witness);
    s.status = PdtStatus::ClampedAtM;
    return s;
  }
  if (rM.verdict == Verdict::Unknown) m_unproven = true;

  double low = 0.0, high = M;
  while (high - low > eps) {
    ++s.rounds;
    double mid = 0.5 * (low + high);
    ExistsResult r = probe(mid);
    if (r.verdict == Verdict::Sat) {
      low = mid;
      s.witness = std::move(r.witness);
    } else if (r.verdict == Verdict::Unsat) {
      high = mid;
    } else {
      // Stop on the first unprovable probe; [low, high] stays certified.
      s.lower = low;
      s.upper = high;
      s.status = PdtStatus::UnknownBudget;
      return s;
    }
  }
  s.lower = low;
  s.upper = high;
  // high = M without an UNSAT proof anywhere leaves the cap uncertified.
  s.status = (m_unproven && high == M) ? PdtStatus::UnknownBudget : PdtStatus::Certified;
  return s;
}

}  // namespace

PdtResult pdt(const Network& n1, const Network& n2, const InputDomain& domain,
              const DistanceSpec& spec, double M, double eps, const DecideOptions& opts) {
  if (!(M > 0.0) || !(eps > 0.0) || !(eps < M))
    throw ConfigError("pdt requires 0 < eps < M");

  PdtResult res;
  if (spec.kind == DistanceKind::L1Scalar) {
    res.branches.push_back(search_branch(n1, n2, domain, spec, M, eps, opts, {}));
    const PdtSearch& s = res.branches.front();
    res.lower = s.lower;
    res.upper = s.upper;
    res.status = s.status;
    res.witness = s.witness;
    res.rounds = s.rounds;
    res.queries = s.queries;
    res.nodes = s.nodes;
    return res;
  }

  // Each regime is searched to eps/2: the elementwise minimum of two
  // brackets can be almost twice as wide as either, and the combined
  // bracket must still come in under eps.
  res.branches.push_back(
      search_branch(n1, n2, domain, spec, M, 0.5 * eps, opts, SignVariant::C));
  res.branches.push_back(
      search_branch(n1, n2, domain, spec, M, 0.5 * eps, opts, SignVariant::CPrime));
  const PdtSearch& a = res.branches[0];
  const PdtSearch& b = res.branches[1];

  // The constrained distance is the smaller regime maximum, so both
  // bracket ends combine by elementwise minimum.
  res.lower = std::min(a.lower, b.lower);
  res.upper = std::min(a.upper, b.upper);
  const PdtSearch& src = a.lower <= b.lower ? a : b;
  res.witness = src.witness;
  res.rounds = std::max(a.rounds, b.rounds);
  res.queries = a.queries + b.queries;
  res.nodes = a.nodes + b.nodes;

  auto has = [&](PdtStatus st) { return a.status == st || b.status == st; };
  if (has(PdtStatus::InfeasibleConstraint))
    res.status = PdtStatus::InfeasibleConstraint;
  else if (has(PdtStatus::UnknownBudget))
    res.status = PdtStatus::UnknownBudget;
  else if (a.status == PdtStatus::ClampedAtM && b.status == PdtStatus::ClampedAtM)
    res.status = PdtStatus::ClampedAtM;
  else
    res.status = PdtStatus::Certified;
  return res;
}

}  // namespace pdtkit
