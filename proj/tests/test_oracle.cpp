#include <doctest.h>

#include <algorithm>
#include <cmath>

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

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("toy versus doubled toy peaks at 102 on [0,10]^2") {
  InputDomain dom = tt::domain_of(tt::box2(0, 10));
  OracleResult r = exact_max_distance(make_toy(), make_doubled(), dom, DistanceSpec::l1());
  CHECK(r.value == doctest::Approx(102.0).epsilon(1e-7));
  CHECK(dist_at(make_toy(), make_doubled(), r.argmax) ==
        doctest::Approx(r.value).epsilon(1e-9));
  CHECK(r.patterns >= 1);

  // The doubled read-out doubles the whole function, so the gap equals the
  // toy output itself; the peak sits at the output max, corner (10,10).
  CHECK(r.argmax[0] == doctest::Approx(10.0).epsilon(1e-6));
  CHECK(r.argmax[1] == doctest::Approx(10.0).epsilon(1e-6));
}

TEST_CASE("identical networks have zero distance") {
  InputDomain dom = tt::domain_of(tt::box2(0, 10));
  OracleResult r = exact_max_distance(make_toy(), make_toy(), dom, DistanceSpec::l1());
  CHECK(r.value <= 1e-9);
}

TEST_CASE("affine pair maxes at a box corner") {
  Rng rng(607);
  for (int t = 0; t < 10; ++t) {
    Matrix w1(1, 2), w2(1, 2);
    for (int c = 0; c < 2; ++c) {
      w1(0, c) = rng.uniform(-2, 2);
      w2(0, c) = rng.uniform(-2, 2);
    }
    Network a = tt::affine_net(w1, {rng.uniform(-1, 1)});
    Network b = tt::affine_net(w2, {rng.uniform(-1, 1)});
    Box box{{rng.uniform(-3, 0), rng.uniform(-3, 0)}, {0, 0}};
    box.upper[0] = box.lower[0] + rng.uniform(1, 4);
    box.upper[1] = box.lower[1] + rng.uniform(1, 4);

    OracleResult r = exact_max_distance(a, b, InputDomain{{box}}, DistanceSpec::l1());
    CHECK(r.patterns == 1);

    double corner_best = 0.0;
    for (int m = 0; m < 4; ++m) {
      Vec x{m & 1 ? box.upper[0] : box.lower[0], m & 2 ? box.upper[1] : box.lower[1]};
      corner_best = std::max(corner_best, dist_at(a, b, x));
    }
    CHECK(r.value == doctest::Approx(corner_best).epsilon(1e-7));
  }
}

TEST_CASE("grid search: lower bound, refinement, derived toy value") {
  Network toy = make_toy(), dbl = make_doubled();
  Box box = tt::box2(0, 10);
  InputDomain dom = tt::domain_of(box);
  double exact =
      exact_max_distance(toy, dbl, dom, DistanceSpec::l1()).value;

  double coarse = grid_max_distance(toy, dbl, box, DistanceSpec::l1(), 1.0);
  double mid = grid_max_distance(toy, dbl, box, DistanceSpec::l1(), 0.5);
  double fine = grid_max_distance(toy, dbl, box, DistanceSpec::l1(), 0.25);
  CHECK(coarse <= mid + 1e-12);
  CHECK(mid <= fine + 1e-12);
  CHECK(fine <= exact + 1e-9);

  double res001 = grid_max_distance(toy, dbl, box, DistanceSpec::l1(), 0.01);
  CHECK(res001 >= 101.9);
  CHECK(res001 <= exact + 1e-9);
}

TEST_CASE("grid stays below exact on random ReLU pairs") {
  Rng rng(613);
  for (int t = 0; t < 8; ++t) {
    Network a = tt::random_net(rng, 2, {3}, 1, 1.5);
    Network b = tt::random_net(rng, 2, {3}, 1, 1.5);
    Box box = tt::box2(-2, 2);
    double exact =
        exact_max_distance(a, b, tt::domain_of(box), DistanceSpec::l1()).value;
    double grid = grid_max_distance(a, b, box, DistanceSpec::l1(), 0.05);
    CHECK(grid <= exact + 1e-9);
    CHECK(grid >= 0.0);
  }
}

TEST_CASE("constrained distance: one empty regime reads zero") {
  // On [0,10]^2 the toy output is 2 relu(v1) - 2 relu(v2) with
  // v1 = x1 + 4 x2 + 1 >= 1, so both outputs strictly positive somewhere is
  // easy, both non-positive is impossible: the c' regime is empty.
  InputDomain dom = tt::domain_of(tt::box2(0, 10));
  OracleResult r =
      exact_max_distance(make_toy(), make_doubled(), dom, DistanceSpec::cdist());
  CHECK(r.c_feasible);
  CHECK_FALSE(r.cprime_feasible);
  REQUIRE(r.max_c.has_value());
  CHECK(*r.max_c == doctest::Approx(102.0).epsilon(1e-7));
  CHECK(r.value == 0.0);
}

TEST_CASE("constrained distance: two-sided affine example") {
  // y1 = x, y2 = 2x on [-5,5]: both regimes reach |x| = 5 at an endpoint,
  // so the min of the two regime maxima is 5.
  Network a = tt::scalar_net(1.0, 0.0);
  Network b = tt::scalar_net(2.0, 0.0);
  InputDomain dom{{Box{{-5}, {5}}}};
  OracleResult r = exact_max_distance(a, b, dom, DistanceSpec::cdist());
  CHECK(r.c_feasible);
  CHECK(r.cprime_feasible);
  CHECK(*r.max_c == doctest::Approx(5.0).epsilon(1e-7));
  CHECK(*r.max_cprime == doctest::Approx(5.0).epsilon(1e-7));
  CHECK(r.value == doctest::Approx(5.0).epsilon(1e-7));

  // Asymmetric regimes: y1 = x, y2 = x - 3 on [-5,5]. In the c regime the
  // best is x in [3,5]; in c' the best is x <= 0; distance is 3 everywhere.
  Network c = tt::scalar_net(1.0, 0.0);
  Network d = tt::scalar_net(1.0, -3.0);
  OracleResult r2 = exact_max_distance(c, d, dom, DistanceSpec::cdist());
  CHECK(r2.value == doctest::Approx(3.0).epsilon(1e-7));
}

TEST_CASE("multi-box domains take the best box") {
  Network toy = make_toy(), dbl = make_doubled();
  InputDomain dom{{tt::box2(0, 1), tt::box2(0, 10)}};
  OracleResult r = exact_max_distance(toy, dbl, dom, DistanceSpec::l1());
  CHECK(r.value == doctest::Approx(102.0).epsilon(1e-7));
}

TEST_CASE("size guards") {
  Rng rng(617);
  Network big = tt::random_net(rng, 2, {9, 8}, 1, 1.0);
  REQUIRE(relu_count(big) == 17);
  InputDomain dom = tt::domain_of(tt::box2(0, 1));
  Matrix w(1, 2);
  w(0, 0) = 1.0;
  Network flat = tt::affine_net(w, {0.0});
  CHECK_THROWS_AS(exact_max_distance(big, flat, dom, DistanceSpec::l1()),
                  SizeLimitError);

  // Grid refuses inputs beyond three dimensions.
  Network wide = tt::random_net(rng, 4, {2}, 1, 1.0);
  Network wide2 = tt::random_net(rng, 4, {2}, 1, 1.0);
  Box box4{{0, 0, 0, 0}, {1, 1, 1, 1}};
  CHECK_THROWS_AS(grid_max_distance(wide, wide2, box4, DistanceSpec::l1(), 0.5),
                  SizeLimitError);
}

TEST_CASE("argmax always reproduces the reported value") {
  Rng rng(619);
  for (int t = 0; t < 10; ++t) {
    Network a = tt::random_net(rng, 2, {3}, 1, 1.5);
    Network b = tt::random_net(rng, 2, {2}, 1, 1.5);
    OracleResult r =
        exact_max_distance(a, b, tt::domain_of(tt::box2(-2, 2)), DistanceSpec::l1());
    CHECK(dist_at(a, b, r.argmax) == doctest::Approx(r.value).epsilon(1e-9));
  }
}

}  // TEST_SUITE
