#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "pdtkit/distance.hpp"
#include "pdtkit/errors.hpp"
#include "pdtkit/oracle.hpp"
#include "pdtkit/rng.hpp"
#include "test_util.hpp"

using namespace pdtkit;
using tt::make_doubled;
using tt::make_toy;

namespace {

double dist_at(const Network& n1, const Network& n2, const Vec& x) {
  return std::abs(evaluate(n1, x)[0] - evaluate(n2, x)[0]);
}

// Every SAT probe must sit below every UNSAT probe.
void check_probe_monotonicity(const PdtSearch& s) {
  double max_sat = -1.0, min_unsat = std::numeric_limits<double>::infinity();
  for (const auto& [alpha, verdict] : s.probe_trace) {
    if (verdict == Verdict::Sat) max_sat = std::max(max_sat, alpha);
    if (verdict == Verdict::Unsat) min_unsat = std::min(min_unsat, alpha);
  }
  CHECK(max_sat < min_unsat);
}

}  // namespace

TEST_SUITE("distance") {

TEST_CASE("query encoding: rows for each distance kind") {
  Network toy = make_toy(), dbl = make_doubled();
  Box box = tt::box2(0, 10);

  VerifyQuery pos = encode_query(toy, dbl, box, DistanceSpec::l1(), 7.0, DiffSign::Pos);
  REQUIRE(pos.constraints.size() == 1);
  CHECK(pos.constraints[0].coeffs == Vec{1.0, -1.0});
  CHECK(pos.constraints[0].rhs == 7.0);
  CHECK(pos.net.output_dim() == 2);

  VerifyQuery neg = encode_query(toy, dbl, box, DistanceSpec::l1(), 7.0, DiffSign::Neg);
  REQUIRE(neg.constraints.size() == 1);
  CHECK(neg.constraints[0].coeffs == Vec{-1.0, 1.0});

  VerifyQuery c = encode_query(toy, dbl, box, DistanceSpec::cdist(), 2.0, DiffSign::Pos,
                               SignVariant::C);
  REQUIRE(c.constraints.size() == 3);
  // Sign rows demand y1 >= 0 and y2 >= 0.
  CHECK(c.constraints[1].coeffs == Vec{1.0, 0.0});
  CHECK(c.constraints[2].coeffs == Vec{0.0, 1.0});
  CHECK(c.constraints[1].rhs == 0.0);

  VerifyQuery cp = encode_query(toy, dbl, box, DistanceSpec::cdist(), 2.0, DiffSign::Pos,
                                SignVariant::CPrime);
  CHECK(cp.constraints[1].coeffs == Vec{-1.0, 0.0});
  CHECK(cp.constraints[2].coeffs == Vec{0.0, -1.0});

  CHECK_THROWS_AS(encode_query(toy, dbl, box, DistanceSpec::l1(), -1.0, DiffSign::Pos),
                  ShapeError);
}

TEST_CASE("existence queries on the toy pair") {
  Network toy = make_toy(), dbl = make_doubled();
  InputDomain dom = tt::domain_of(tt::box2(0, 10));

  ExistsResult low = exists_distance_geq(toy, dbl, dom, DistanceSpec::l1(), 90.0);
  REQUIRE(low.verdict == Verdict::Sat);
  CHECK(dist_at(toy, dbl, low.witness) >= 90.0 - 1e-6);
  CHECK(dom.boxes[low.box_index].contains(low.witness, 1e-9));

  CHECK(exists_distance_geq(toy, dbl, dom, DistanceSpec::l1(), 103.0).verdict ==
        Verdict::Unsat);

  // Identical nets never differ.
  CHECK(exists_distance_geq(toy, toy, dom, DistanceSpec::l1(), 0.001).verdict ==
        Verdict::Unsat);
  CHECK(exists_distance_geq(toy, toy, dom, DistanceSpec::l1(), 0.0).verdict ==
        Verdict::Sat);
}

TEST_CASE("existence reports which disjunct fired") {
  // n1 = 0, n2 = 5: the difference is always -5, only the negative disjunct
  // can witness a distance of 3.
  Network z = tt::scalar_net(0.0, 0.0);
  Network five = tt::scalar_net(0.0, 5.0);
  InputDomain dom{{Box{{0}, {1}}}};
  ExistsResult r = exists_distance_geq(z, five, dom, DistanceSpec::l1(), 3.0);
  REQUIRE(r.verdict == Verdict::Sat);
  CHECK(r.sign == DiffSign::Neg);
}

TEST_CASE("existence reports which box fired") {
  Network toy = make_toy(), dbl = make_doubled();
  InputDomain dom{{tt::box2(0, 1), tt::box2(0, 10)}};
  ExistsResult r = exists_distance_geq(toy, dbl, dom, DistanceSpec::l1(), 50.0);
  REQUIRE(r.verdict == Verdict::Sat);
  CHECK(r.box_index == 1);
  CHECK(dom.boxes[1].contains(r.witness, 1e-9));
}

TEST_CASE("pdt brackets the oracle value for the toy pair") {
  Network toy = make_toy(), dbl = make_doubled();
  InputDomain dom = tt::domain_of(tt::box2(0, 10));
  PdtResult r = pdt(toy, dbl, dom, DistanceSpec::l1(), 200.0, 1.0);

  CHECK(r.status == PdtStatus::Certified);
  CHECK(r.lower <= 102.0);
  CHECK(r.upper >= 102.0);
  CHECK(r.upper - r.lower <= 1.0);
  CHECK(r.scalar() == r.upper);
  CHECK(dist_at(toy, dbl, r.witness) >= r.lower - 1e-6);
  CHECK(r.rounds <= 8);  // ceil(log2(200 / 1))
  CHECK(r.queries >= r.rounds);
  REQUIRE(r.branches.size() == 1);
  check_probe_monotonicity(r.branches[0]);
}

TEST_CASE("self distance certifies a near-zero bracket") {
  Network toy = make_toy();
  InputDomain dom = tt::domain_of(tt::box2(0, 10));
  PdtResult r = pdt(toy, toy, dom, DistanceSpec::l1(), 10.0, 0.5);
  CHECK(r.status == PdtStatus::Certified);
  CHECK(r.lower == 0.0);
  CHECK(r.upper <= 0.5);
}

TEST_CASE("a cap below the true distance clamps at M") {
  Network toy = make_toy(), dbl = make_doubled();
  InputDomain dom = tt::domain_of(tt::box2(0, 10));
  PdtResult r = pdt(toy, dbl, dom, DistanceSpec::l1(), 50.0, 1.0);
  CHECK(r.status == PdtStatus::ClampedAtM);
  CHECK(r.lower == 50.0);
  CHECK(r.upper == 50.0);
  CHECK(dist_at(toy, dbl, r.witness) >= 50.0 - 1e-6);
}

TEST_CASE("pdt configuration is validated") {
  Network toy = make_toy(), dbl = make_doubled();
  InputDomain dom = tt::domain_of(tt::box2(0, 10));
  CHECK_THROWS_AS(pdt(toy, dbl, dom, DistanceSpec::l1(), 0.0, 0.5), ConfigError);
  CHECK_THROWS_AS(pdt(toy, dbl, dom, DistanceSpec::l1(), 10.0, 0.0), ConfigError);
  CHECK_THROWS_AS(pdt(toy, dbl, dom, DistanceSpec::l1(), 10.0, 10.0), ConfigError);
  CHECK_THROWS_AS(pdt(toy, dbl, dom, DistanceSpec::l1(), 10.0, 11.0), ConfigError);
}

TEST_CASE("exhausted budget degrades to an unknown bracket, never a lie") {
  Network toy = make_toy(), dbl = make_doubled();
  InputDomain dom = tt::domain_of(tt::box2(0, 10));
  DecideOptions opts;
  opts.budget.max_nodes = 0;
  PdtResult r = pdt(toy, dbl, dom, DistanceSpec::l1(), 200.0, 1.0, opts);
  CHECK(r.status == PdtStatus::UnknownBudget);
  CHECK(r.lower == 0.0);
  CHECK(r.upper == 200.0);
}

TEST_CASE("constrained distance: empty regime pins the result to zero") {
  Network toy = make_toy(), dbl = make_doubled();
  InputDomain dom = tt::domain_of(tt::box2(0, 10));
  PdtResult r = pdt(toy, dbl, dom, DistanceSpec::cdist(), 200.0, 1.0);

  CHECK(r.status == PdtStatus::InfeasibleConstraint);
  CHECK(r.upper == 0.0);
  CHECK(r.scalar() == 0.0);
  REQUIRE(r.branches.size() == 2);
  CHECK(r.branches[0].variant == SignVariant::C);
  CHECK(r.branches[1].variant == SignVariant::CPrime);
  // The both-positive regime really does reach the L1 maximum.
  CHECK(r.branches[0].status == PdtStatus::Certified);
  CHECK(r.branches[0].lower <= 102.0);
  CHECK(r.branches[0].upper >= 102.0);
  // The both-negative regime is empty: on this box v1 >= 1 and
  // v1 - v2 = 4 x1 + 2 x2 + 3 >= 3, so relu(v1) - relu(v2) > 0 and both
  // outputs stay strictly positive.
  CHECK(r.branches[1].status == PdtStatus::InfeasibleConstraint);
  CHECK(r.branches[1].lower == 0.0);
  CHECK(r.branches[1].upper == 0.0);
}

TEST_CASE("constrained distance with two live regimes takes the smaller") {
  // y1 = x and y2 = 2x on [-5,5]: both regimes peak at 5, the combined
  // bracket must cover 5 within eps.
  Network a = tt::scalar_net(1.0, 0.0);
  Network b = tt::scalar_net(2.0, 0.0);
  InputDomain dom{{Box{{-5}, {5}}}};
  PdtResult r = pdt(a, b, dom, DistanceSpec::cdist(), 20.0, 0.5);
  CHECK(r.status == PdtStatus::Certified);
  CHECK(r.lower <= 5.0);
  CHECK(r.upper >= 5.0);
  CHECK(r.upper - r.lower <= 0.5);

  // Witness sits in one regime: both outputs share a sign there.
  double y1 = evaluate(a, r.witness)[0], y2 = evaluate(b, r.witness)[0];
  bool in_c = y1 >= -1e-9 && y2 >= -1e-9;
  bool in_cp = y1 <= 1e-9 && y2 <= 1e-9;
  CHECK((in_c || in_cp));
  for (const PdtSearch& s : r.branches) check_probe_monotonicity(s);

  // Asymmetric pair: y2 = y1 - 3, constant gap 3 visible in both regimes.
  PdtResult r2 = pdt(a, tt::scalar_net(1.0, -3.0), dom, DistanceSpec::cdist(), 20.0, 0.5);
  CHECK(r2.status == PdtStatus::Certified);
  CHECK(r2.lower <= 3.0);
  CHECK(r2.upper >= 3.0);
}

TEST_CASE("multi-box pdt equals the dominating box") {
  Network toy = make_toy(), dbl = make_doubled();
  InputDomain big = tt::domain_of(tt::box2(0, 10));
  InputDomain both{{tt::box2(0, 1), tt::box2(0, 10)}};
  InputDomain twice{{tt::box2(0, 10), tt::box2(0, 10)}};

  PdtResult single = pdt(toy, dbl, big, DistanceSpec::l1(), 200.0, 1.0);
  PdtResult unioned = pdt_multi_region(toy, dbl, both, DistanceSpec::l1(), 200.0, 1.0);
  PdtResult doubled = pdt_multi_region(toy, dbl, twice, DistanceSpec::l1(), 200.0, 1.0);

  CHECK(unioned.lower == single.lower);
  CHECK(unioned.upper == single.upper);
  CHECK(doubled.lower == single.lower);
  CHECK(doubled.upper == single.upper);
  CHECK(unioned.status == PdtStatus::Certified);
}

TEST_CASE("random pairs: the oracle value is always inside the bracket") {
  Rng rng(701);
  for (int t = 0; t < 12; ++t) {
    Network a = tt::random_net(rng, 2, {3}, 1, 1.5);
    Network b = tt::random_net(rng, 2, {2}, 1, 1.5);
    InputDomain dom = tt::domain_of(tt::box2(-2, 2));
    double truth = exact_max_distance(a, b, dom, DistanceSpec::l1()).value;

    double M = std::max(4.0, 2.0 * truth + 1.0);
    PdtResult r = pdt(a, b, dom, DistanceSpec::l1(), M, 0.25);
    REQUIRE(r.status == PdtStatus::Certified);
    CHECK(r.lower <= truth + 1e-7);
    CHECK(r.upper >= truth - 1e-7);
    CHECK(r.upper - r.lower <= 0.25);
    check_probe_monotonicity(r.branches[0]);
  }
}

}  // TEST_SUITE
