#include <doctest.h>

#include <cmath>

#include "pdtkit/bounds.hpp"
#include "pdtkit/errors.hpp"
#include "pdtkit/net.hpp"
#include "pdtkit/rng.hpp"
#include "test_util.hpp"

using namespace pdtkit;
using tt::make_toy;

namespace {

constexpr double kSlack = 1e-6;  // generous room for the outward widening

// Every pre/post activation of n_samples uniform points must sit inside nb.
void check_sound(const Network& net, const Box& box, const NetworkBounds& nb,
                 Rng& rng, int n_samples) {
  for (int s = 0; s < n_samples; ++s) {
    Vec x = tt::random_point(rng, box);
    Trace tr = eval_trace(net, x);
    for (std::size_t li = 0; li < net.depth(); ++li) {
      const LayerBounds& lb = nb.layers[li];
      for (std::size_t j = 0; j < tr.pre[li].size(); ++j) {
        REQUIRE(tr.pre[li][j] >= lb.pre_lo[j]);
        REQUIRE(tr.pre[li][j] <= lb.pre_hi[j]);
        REQUIRE(tr.post[li][j] >= lb.post_lo[j]);
        REQUIRE(tr.post[li][j] <= lb.post_hi[j]);
      }
    }
  }
}

}  // namespace

TEST_SUITE("bounds") {

TEST_CASE("toy net on [0,10]^2: hand-computed enclosures") {
  Network toy = make_toy();
  NetworkBounds nb = interval_propagate(toy, tt::box2(0, 10));

  // v1 = x1 + 4 x2 + 1 in [1, 51]; v2 = -3 x1 + 2 x2 - 2 in [-32, 18].
  CHECK(nb.layers[0].pre_lo[0] == doctest::Approx(1.0).epsilon(kSlack));
  CHECK(nb.layers[0].pre_hi[0] == doctest::Approx(51.0).epsilon(kSlack));
  CHECK(nb.layers[0].pre_lo[1] == doctest::Approx(-32.0).epsilon(kSlack));
  CHECK(nb.layers[0].pre_hi[1] == doctest::Approx(18.0).epsilon(kSlack));

  // Post-ReLU: [1, 51] stays, [-32, 18] clips to [0, 18].
  CHECK(nb.layers[0].post_lo[0] == doctest::Approx(1.0).epsilon(kSlack));
  CHECK(nb.layers[0].post_lo[1] == 0.0);
  CHECK(nb.layers[0].post_hi[1] == doctest::Approx(18.0).epsilon(kSlack));

  // Output 2 a - 2 b over a in [1,51], b in [0,18] -> [-34, 102].
  CHECK(nb.output_lo()[0] == doctest::Approx(-34.0).epsilon(kSlack));
  CHECK(nb.output_hi()[0] == doctest::Approx(102.0).epsilon(kSlack));

  // Intervals must genuinely contain the exact values (outward widening).
  CHECK(nb.layers[0].pre_lo[0] <= 1.0);
  CHECK(nb.layers[0].pre_hi[0] >= 51.0);
  CHECK(nb.output_lo()[0] <= -34.0);
  CHECK(nb.output_hi()[0] >= 102.0);
}

TEST_CASE("point box collapses to the forward trace") {
  Network toy = make_toy();
  Vec x{2, 1};
  NetworkBounds nb = interval_propagate(toy, Box{x, x});
  Trace tr = eval_trace(toy, x);
  for (std::size_t li = 0; li < toy.depth(); ++li)
    for (std::size_t j = 0; j < tr.pre[li].size(); ++j) {
      CHECK(nb.layers[li].pre_lo[j] == doctest::Approx(tr.pre[li][j]).epsilon(1e-7));
      CHECK(nb.layers[li].pre_hi[j] == doctest::Approx(tr.pre[li][j]).epsilon(1e-7));
      CHECK(nb.layers[li].pre_hi[j] >= nb.layers[li].pre_lo[j]);
      CHECK(nb.layers[li].post_lo[j] <= tr.post[li][j]);
      CHECK(nb.layers[li].post_hi[j] >= tr.post[li][j]);
    }
}

TEST_CASE("zero-weight net bounds are the bias, as a point interval") {
  Network n;
  n.input_dim = 2;
  n.layers.push_back(tt::make_layer(1, 2, {0, 0}, {-3.5}, Activation::Identity));
  NetworkBounds nb = interval_propagate(n, tt::box2(-100, 100));
  CHECK(nb.output_lo()[0] == doctest::Approx(-3.5).epsilon(1e-9));
  CHECK(nb.output_hi()[0] == doctest::Approx(-3.5).epsilon(1e-9));
}

TEST_CASE("dimension mismatch is a shape error") {
  CHECK_THROWS_AS(interval_propagate(make_toy(), Box{{0}, {1}}), ShapeError);
}

TEST_CASE("sampled soundness of both propagators") {
  Rng rng(101);
  for (int t = 0; t < 8; ++t) {
    Network n = tt::random_net(rng, 3, {5, 4}, 2, 1.5);
    double lo = rng.uniform(-4, 0), hi = lo + rng.uniform(0.5, 8);
    Box box{{lo, lo, lo}, {hi, hi, hi}};
    check_sound(n, box, interval_propagate(n, box), rng, 1250);
    check_sound(n, box, linear_relax(n, box), rng, 1250);
  }
}

TEST_CASE("shrinking the box never widens any interval") {
  Rng rng(103);
  for (int t = 0; t < 10; ++t) {
    Network n = tt::random_net(rng, 2, {4, 3}, 1, 2.0);
    Box big = tt::box2(-3, 3);
    Box small{{rng.uniform(-3, -1), rng.uniform(-3, -1)},
              {rng.uniform(0, 3), rng.uniform(0, 3)}};
    NetworkBounds nb_big = interval_propagate(n, big);
    NetworkBounds nb_small = interval_propagate(n, small);
    for (std::size_t li = 0; li < n.depth(); ++li)
      for (std::size_t j = 0; j < nb_big.layers[li].pre_lo.size(); ++j) {
        CHECK(nb_small.layers[li].pre_lo[j] >= nb_big.layers[li].pre_lo[j] - 1e-12);
        CHECK(nb_small.layers[li].pre_hi[j] <= nb_big.layers[li].pre_hi[j] + 1e-12);
        CHECK(nb_small.layers[li].post_lo[j] >= nb_big.layers[li].post_lo[j] - 1e-12);
        CHECK(nb_small.layers[li].post_hi[j] <= nb_big.layers[li].post_hi[j] + 1e-12);
      }
  }
}

TEST_CASE("linear relaxation is never looser than plain intervals") {
  Rng rng(107);
  Network toy = make_toy();
  NetworkBounds iv = interval_propagate(toy, tt::box2(0, 10));
  NetworkBounds rl = linear_relax(toy, tt::box2(0, 10));
  CHECK(rl.output_lo()[0] >= iv.output_lo()[0] - 1e-12);
  CHECK(rl.output_hi()[0] <= iv.output_hi()[0] + 1e-12);

  for (int t = 0; t < 15; ++t) {
    Network n = tt::random_net(rng, 3, {5, 4}, 2, 1.5);
    Box box{{-2, -2, -2}, {2, 2, 2}};
    NetworkBounds a = interval_propagate(n, box);
    NetworkBounds b = linear_relax(n, box);
    for (std::size_t li = 0; li < n.depth(); ++li)
      for (std::size_t j = 0; j < a.layers[li].pre_lo.size(); ++j) {
        CHECK(b.layers[li].pre_lo[j] >= a.layers[li].pre_lo[j] - 1e-12);
        CHECK(b.layers[li].pre_hi[j] <= a.layers[li].pre_hi[j] + 1e-12);
      }
  }
}

TEST_CASE("stable neurons keep exact post bounds") {
  // One ReLU forced active: v = x + 5 on [0,1] stays [5,6] after ReLU.
  Network n;
  n.input_dim = 1;
  n.layers.push_back(tt::make_layer(1, 1, {1}, {5}, Activation::ReLU));
  n.layers.push_back(tt::make_layer(1, 1, {1}, {0}, Activation::Identity));
  NetworkBounds nb = interval_propagate(n, Box{{0}, {1}});
  CHECK(nb.layers[0].post_lo[0] == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(nb.layers[0].post_hi[0] == doctest::Approx(6.0).epsilon(1e-9));

  // Forced inactive: v = x - 5 on [0,1] clips to [0,0].
  Network m;
  m.input_dim = 1;
  m.layers.push_back(tt::make_layer(1, 1, {1}, {-5}, Activation::ReLU));
  m.layers.push_back(tt::make_layer(1, 1, {1}, {0}, Activation::Identity));
  NetworkBounds mb = interval_propagate(m, Box{{0}, {1}});
  CHECK(mb.layers[0].post_lo[0] == 0.0);
  CHECK(mb.layers[0].post_hi[0] <= 1e-8);
  CHECK(mb.output_hi()[0] <= 1e-8);
}

TEST_CASE("phase forcing: contradictory phases yield an empty branch") {
  // Pre-activation strictly positive on the box; forcing inactive is absurd.
  Network n;
  n.input_dim = 1;
  n.layers.push_back(tt::make_layer(1, 1, {1}, {5}, Activation::ReLU));
  n.layers.push_back(tt::make_layer(1, 1, {1}, {0}, Activation::Identity));
  PhaseMask phases = free_phases(n);
  REQUIRE(phases.size() == 2);
  REQUIRE(phases[0].size() == 1);

  phases[0][0] = -1;
  CHECK_FALSE(propagate_with_phases(n, Box{{0}, {1}}, phases, true).has_value());

  phases[0][0] = +1;
  auto forced = propagate_with_phases(n, Box{{0}, {1}}, phases, true);
  REQUIRE(forced.has_value());
  CHECK(forced->layers[0].post_lo[0] == doctest::Approx(5.0).epsilon(1e-9));

  phases[0][0] = 0;
  auto free = propagate_with_phases(n, Box{{0}, {1}}, phases, false);
  REQUIRE(free.has_value());
}

TEST_CASE("forcing a phase narrows the branch to that side") {
  Network toy = make_toy();
  Box box = tt::box2(0, 10);
  PhaseMask phases = free_phases(toy);
  phases[0][1] = -1;  // second hidden neuron inactive
  auto nb = propagate_with_phases(toy, box, phases, false);
  REQUIRE(nb.has_value());
  CHECK(nb->layers[0].post_hi[1] <= 1e-12);
  // Output becomes 2 relu(v1): on this branch the enclosure tightens to >= 0.
  CHECK(nb->output_lo()[0] >= -1e-9);
}

}  // TEST_SUITE
