#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "pdtkit/attack.hpp"
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

bool inside_exactly(const Box& box, const Vec& x) {
  for (std::size_t i = 0; i < box.dim(); ++i)
    if (x[i] < box.lower[i] || x[i] > box.upper[i]) return false;
  return true;
}

Network const_net2(double value) {
  Matrix w(1, 2);
  return tt::affine_net(w, {value});  // zero weights, constant output
}

}  // namespace

TEST_SUITE("attack") {

TEST_CASE("gradient of an affine net is its weight row") {
  Matrix w(1, 3);
  w(0, 0) = 2.0;
  w(0, 1) = -1.5;
  w(0, 2) = 0.25;
  Network n = tt::affine_net(w, {7.0});
  CHECK(gradient(n, {0, 0, 0}) == Vec{2.0, -1.5, 0.25});
  CHECK(gradient(n, {3, -2, 9}) == Vec{2.0, -1.5, 0.25});
}

TEST_CASE("gradient of the toy net follows the active pattern") {
  Network toy = make_toy();
  // At (2,1): first hidden unit active, second inactive -> 2 * (1,4).
  CHECK(gradient(toy, {2, 1}) == Vec{2.0, 8.0});
  // At (0,5): both active -> 2 * (1,4) - 2 * (-3,2) = (8,4).
  CHECK(gradient(toy, {0, 5}) == Vec{8.0, 4.0});
  // At (0,1) the second unit sits exactly at the kink; subgradient 0 there.
  CHECK(gradient(toy, {0, 1}) == Vec{2.0, 8.0});

  Network two_out = concatenate(toy, toy);
  CHECK_THROWS_AS(gradient(two_out, {0, 0}), ShapeError);
}

TEST_CASE("gradient matches central finite differences away from kinks") {
  Rng rng(811);
  const double h = 1e-5;
  int checked = 0;
  while (checked < 100) {
    Network n = tt::random_net(rng, 3, {4, 3}, 1, 1.5);
    Vec x{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};

    // Skip points whose activation pattern flips within the stencil.
    auto pat = [&](const Vec& p) {
      Trace tr = eval_trace(n, p);
      std::vector<int> s;
      for (std::size_t li = 0; li + 1 < n.depth(); ++li)
        for (double v : tr.pre[li]) s.push_back(v > 0 ? 1 : 0);
      return s;
    };
    bool stable = true;
    auto base = pat(x);
    for (std::size_t i = 0; i < 3 && stable; ++i) {
      Vec lo = x, hi = x;
      lo[i] -= h;
      hi[i] += h;
      stable = pat(lo) == base && pat(hi) == base;
    }
    if (!stable) continue;

    Vec g = gradient(n, x);
    for (std::size_t i = 0; i < 3; ++i) {
      Vec lo = x, hi = x;
      lo[i] -= h;
      hi[i] += h;
      double fd = (evaluate(n, hi)[0] - evaluate(n, lo)[0]) / (2 * h);
      CHECK(g[i] == doctest::Approx(fd).epsilon(1e-4));
    }
    ++checked;
  }
}

TEST_CASE("fgsm worked example: linear pair steps to the corner") {
  Matrix w(1, 2);
  w(0, 0) = 1.0;
  w(0, 1) = -1.0;
  Network n1 = tt::affine_net(w, {0.0});  // y = x1 - x2
  Network n2 = const_net2(0.0);

  AttackConfig cfg;
  cfg.eps_x = 1.0;
  AttackResult r = fgsm(n1, n2, tt::box2(-1, 1), cfg);
  CHECK(r.x == Vec{1.0, -1.0});
  CHECK(r.objective == 2.0);
  CHECK(r.feasible);
  CHECK(r.constraint_violation == 0.0);
}

TEST_CASE("fgsm on identical nets stays put at zero") {
  Network toy = make_toy();
  AttackResult r = fgsm(toy, toy, tt::box2(0, 10));
  CHECK(r.objective == 0.0);
}

TEST_CASE("fgsm projection keeps oversized steps inside the box") {
  AttackConfig cfg;
  cfg.eps_x = 1e6;
  Box box = tt::box2(0, 10);
  AttackResult r = fgsm(make_toy(), make_doubled(), box, cfg);
  CHECK(inside_exactly(box, r.x));
}

TEST_CASE("pgd dominates fgsm under the same configuration") {
  Rng rng(821);
  for (int t = 0; t < 15; ++t) {
    Network a = tt::random_net(rng, 2, {3}, 1, 1.5);
    Network b = tt::random_net(rng, 2, {3}, 1, 1.5);
    Box box = tt::box2(-2, 2);
    AttackConfig cfg;
    cfg.T = 10;
    double f = fgsm(a, b, box, cfg).objective;
    double p = pgd(a, b, box, cfg).objective;
    CHECK(p >= f - 1e-12);
  }
}

TEST_CASE("pgd walks a linear objective into the maximizing corner") {
  Matrix w(1, 2);
  w(0, 0) = 1.0;
  w(0, 1) = 1.0;
  Network n1 = tt::affine_net(w, {0.0});
  Network n2 = const_net2(0.0);
  AttackConfig cfg;
  cfg.eps_x = 0.25;
  cfg.T = 8;
  Box box = tt::box2(-1, 1);
  AttackResult r = pgd(n1, n2, box, cfg);
  CHECK(r.objective == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(inside_exactly(box, r.x));
  CHECK(r.trace.size() == cfg.T);
}

TEST_CASE("pgd minimize walks downhill, keeping the best-so-far") {
  Matrix w(1, 2);
  w(0, 0) = 1.0;
  w(0, 1) = 1.0;
  Network n1 = tt::affine_net(w, {0.0});
  Network n2 = const_net2(0.0);
  Box box{{0.5, 0.5}, {1, 1}};  // min |x1 + x2| = 1 at (0.5, 0.5)
  AttackConfig cfg;
  cfg.eps_x = 0.05;
  cfg.T = 30;
  AttackResult r = pgd(n1, n2, box, cfg, Direction::Minimize);
  CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-9));

  // Best-so-far includes the start: a zero-distance start stays optimal.
  AttackResult z = pgd(n1, n2, tt::box2(-1, 1), cfg, Direction::Minimize);
  CHECK(z.objective == 0.0);
}

TEST_CASE("pgd never exceeds the true maximum and approaches it on the toy pair") {
  Network toy = make_toy(), dbl = make_doubled();
  Box box = tt::box2(0, 10);
  AttackConfig cfg;
  cfg.T = 200;
  cfg.restarts = 2;
  cfg.seed = 7;
  AttackResult r = pgd(toy, dbl, box, cfg);
  CHECK(r.objective <= 102.0 + 1e-9);  // oracle maximum, forward-evaluated
  CHECK(r.objective >= 95.0);
  CHECK(r.objective == dist_at(toy, dbl, r.x));
  CHECK(inside_exactly(box, r.x));
}

TEST_CASE("pgd is deterministic and improves with restarts") {
  Network toy = make_toy(), dbl = make_doubled();
  Box box = tt::box2(0, 10);
  AttackConfig cfg;
  cfg.T = 20;
  cfg.restarts = 3;
  cfg.seed = 99;
  AttackResult a = pgd(toy, dbl, box, cfg);
  AttackResult b = pgd(toy, dbl, box, cfg);
  CHECK(a.x == b.x);
  CHECK(a.objective == b.objective);
  CHECK(a.trace == b.trace);
  CHECK(a.trace.size() == cfg.T * (cfg.restarts + 1));

  AttackConfig single = cfg;
  single.restarts = 0;
  CHECK(pgd(toy, dbl, box, cfg).objective >=
        pgd(toy, dbl, box, single).objective - 1e-12);
}

TEST_CASE("constrained pgd with no constraints reduces to pgd") {
  Network toy = make_toy(), dbl = make_doubled();
  Box box = tt::box2(0, 10);
  AttackConfig outer;
  outer.T = 5;
  outer.T_x = 4;
  AttackConfig flat;
  flat.T = 20;  // same number of input steps in one run

  AttackResult c = constrained_pgd(toy, dbl, box, {}, outer);
  AttackResult p = pgd(toy, dbl, box, flat);
  CHECK(c.feasible);
  CHECK(c.objective == p.objective);
  CHECK(c.x == p.x);
  CHECK(c.constraint_violation == 0.0);
}

TEST_CASE("vacuously satisfied constraints change nothing") {
  Network toy = make_toy(), dbl = make_doubled();
  Box box = tt::box2(0, 10);
  AttackConfig cfg;
  cfg.T = 6;
  cfg.T_x = 5;
  std::vector<OutputConstraint> never_binding{{{1.0, 0.0}, -1e9}};
  AttackResult with = constrained_pgd(toy, dbl, box, never_binding, cfg);
  AttackResult without = constrained_pgd(toy, dbl, box, {}, cfg);
  CHECK(with.objective == without.objective);
  CHECK(with.x == without.x);
  CHECK(with.feasible);
}

TEST_CASE("constrained pgd on a live sign regime finds a feasible point") {
  Network toy = make_toy(), dbl = make_doubled();
  Box box = tt::box2(0, 10);
  AttackConfig cfg;
  cfg.T = 20;
  cfg.seed = 3;
  AttackResult r =
      constrained_pgd(toy, dbl, box, DistanceSpec::sign_rows(SignVariant::C), cfg);
  REQUIRE(r.feasible);
  CHECK(r.constraint_violation <= 1e-6);
  // Feasible by construction: both outputs are positive on the whole box.
  CHECK(evaluate(toy, r.x)[0] >= -1e-6);
  CHECK(evaluate(dbl, r.x)[0] >= -1e-6);
  CHECK(r.objective <= 102.0 + 1e-9);
  CHECK(r.objective >= 50.0);
}

TEST_CASE("constrained pgd flags an unsatisfiable regime explicitly") {
  // Outputs pinned at 2 and 3: both-non-positive can never hold.
  Network a = const_net2(2.0);
  Network b = const_net2(3.0);
  Box box = tt::box2(0, 1);
  AttackConfig cfg;
  cfg.T = 5;
  AttackResult r =
      constrained_pgd(a, b, box, DistanceSpec::sign_rows(SignVariant::CPrime), cfg);
  CHECK_FALSE(r.feasible);
  CHECK(r.constraint_violation == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(r.objective == 1.0);  // still reports the best distance it saw
  CHECK(inside_exactly(box, r.x));

  // The mirrored regime is satisfied everywhere.
  AttackResult ok =
      constrained_pgd(a, b, box, DistanceSpec::sign_rows(SignVariant::C), cfg);
  CHECK(ok.feasible);
  CHECK(ok.objective == 1.0);
}

TEST_CASE("constrained pgd is deterministic") {
  Network toy = make_toy(), dbl = make_doubled();
  AttackConfig cfg;
  cfg.T = 8;
  cfg.restarts = 2;
  cfg.seed = 17;
  auto rows = DistanceSpec::sign_rows(SignVariant::C);
  AttackResult a = constrained_pgd(toy, dbl, tt::box2(0, 10), rows, cfg);
  AttackResult b = constrained_pgd(toy, dbl, tt::box2(0, 10), rows, cfg);
  CHECK(a.x == b.x);
  CHECK(a.objective == b.objective);
  CHECK(a.trace == b.trace);
}

TEST_CASE("sampling: basic estimates and determinism") {
  Network toy = make_toy(), dbl = make_doubled();
  InputDomain dom = tt::domain_of(tt::box2(0, 10));

  SampleResult self = sample_pdt(toy, toy, dom, DistanceSpec::l1(), 500, 1);
  CHECK(self.estimate == 0.0);

  SampleResult r = sample_pdt(toy, dbl, dom, DistanceSpec::l1(), 5000, 1);
  CHECK(r.estimate <= 102.0 + 1e-9);
  CHECK(r.estimate >= 95.0);
  CHECK(r.estimate == dist_at(toy, dbl, r.best_x));

  SampleResult again = sample_pdt(toy, dbl, dom, DistanceSpec::l1(), 5000, 1);
  CHECK(again.estimate == r.estimate);
  CHECK(again.best_x == r.best_x);

  CHECK_THROWS_AS(sample_pdt(toy, dbl, dom, DistanceSpec::l1(), 0, 1), ConfigError);
}

TEST_CASE("sampling a point box evaluates exactly there") {
  Network toy = make_toy(), dbl = make_doubled();
  Vec x{2, 1};
  InputDomain dom{{Box{x, x}}};
  SampleResult r = sample_pdt(toy, dbl, dom, DistanceSpec::l1(), 50, 9);
  CHECK(r.estimate == dist_at(toy, dbl, x));
  CHECK(r.best_x == x);
}

TEST_CASE("sampling weights boxes by volume") {
  // y = x vs 0 on [0,1] plus a zero-volume spike box at 2: the spike is
  // never drawn, so the estimate approaches 1, not 2.
  Network a = tt::scalar_net(1.0, 0.0);
  Network z = tt::scalar_net(0.0, 0.0);
  InputDomain dom{{Box{{0}, {1}}, Box{{2}, {2}}}};
  SampleResult r = sample_pdt(a, z, dom, DistanceSpec::l1(), 4000, 5);
  CHECK(r.estimate <= 1.0);
  CHECK(r.estimate >= 0.99);

  // All-point-box domains fall back to uniform box choice.
  InputDomain points{{Box{{1}, {1}}, Box{{3}, {3}}}};
  SampleResult p = sample_pdt(a, z, points, DistanceSpec::l1(), 64, 5);
  CHECK(p.estimate == 3.0);
}

TEST_CASE("constrained sampling respects the sign regimes") {
  Network toy = make_toy(), dbl = make_doubled();
  InputDomain dom = tt::domain_of(tt::box2(0, 10));
  SampleResult r = sample_pdt(toy, dbl, dom, DistanceSpec::cdist(), 5000, 11);
  // Both outputs are strictly positive on the box: c sees every sample,
  // c' none, and the min-combined estimate collapses to zero.
  CHECK(r.feasible_c == 5000);
  CHECK(r.feasible_cprime == 0);
  CHECK(r.max_c >= 95.0);
  CHECK(r.estimate == 0.0);
  CHECK_FALSE(r.all_infeasible);

  // Outputs of opposite fixed signs never satisfy either regime.
  Network pos = const_net2(1.0);
  Network negv = const_net2(-1.0);
  InputDomain unit = tt::domain_of(tt::box2(0, 1));
  SampleResult none = sample_pdt(pos, negv, unit, DistanceSpec::cdist(), 200, 2);
  CHECK(none.all_infeasible);
  CHECK(none.estimate == 0.0);
  CHECK(none.feasible_c == 0);
  CHECK(none.feasible_cprime == 0);

  // A pair living in both regimes reports the smaller maximum.
  Network id = tt::scalar_net(1.0, 0.0);
  Network twice = tt::scalar_net(2.0, 0.0);
  InputDomain sym{{Box{{-5}, {5}}}};
  SampleResult both = sample_pdt(id, twice, sym, DistanceSpec::cdist(), 4000, 3);
  CHECK(both.feasible_c > 0);
  CHECK(both.feasible_cprime > 0);
  CHECK(both.estimate == doctest::Approx(5.0).epsilon(0.02));
  CHECK(both.estimate <= 5.0);
}

TEST_CASE("variance ranking: constant nets order by pairwise spread") {
  std::vector<Network> nets{const_net2(0.0), const_net2(1.0), const_net2(2.0)};
  InputDomain dom = tt::domain_of(tt::box2(0, 1));
  auto ranked = ensemble_variance_rank(nets, 2, dom, 100, 4);
  REQUIRE(ranked.size() == 3);

  // Population variance of two constants a,b is ((a-b)/2)^2 per sample.
  CHECK(ranked[0].members == std::vector<std::size_t>{0, 1});
  CHECK(ranked[0].variance == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(ranked[1].members == std::vector<std::size_t>{1, 2});
  CHECK(ranked[1].variance == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(ranked[2].members == std::vector<std::size_t>{0, 2});
  CHECK(ranked[2].variance == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("variance ranking puts identical twins first") {
  std::vector<Network> nets{make_toy(), make_toy(), tt::affine_net(Matrix(1, 2), {500.0})};
  InputDomain dom = tt::domain_of(tt::box2(0, 10));
  auto ranked = ensemble_variance_rank(nets, 2, dom, 200, 8);
  REQUIRE(ranked.size() == 3);
  CHECK(ranked[0].members == std::vector<std::size_t>{0, 1});
  CHECK(ranked[0].variance == 0.0);
  CHECK(ranked[1].variance > 0.0);
}

TEST_CASE("variance ranking enumerates 16 choose 3 = 560 subsets") {
  std::vector<Network> nets;
  for (int i = 0; i < 16; ++i) nets.push_back(const_net2(static_cast<double>(i)));
  InputDomain dom = tt::domain_of(tt::box2(0, 1));
  auto ranked = ensemble_variance_rank(nets, 3, dom, 10, 1);
  CHECK(ranked.size() == 560);
  for (std::size_t i = 1; i < ranked.size(); ++i)
    CHECK(ranked[i - 1].variance <= ranked[i].variance);
}

TEST_CASE("variance ranking guards its domain") {
  std::vector<Network> nets{const_net2(0.0), const_net2(1.0)};
  InputDomain dom = tt::domain_of(tt::box2(0, 1));
  CHECK_THROWS_AS(ensemble_variance_rank(nets, 3, dom, 10, 1), ConfigError);
  CHECK_THROWS_AS(ensemble_variance_rank(nets, 0, dom, 10, 1), ConfigError);
  CHECK_THROWS_AS(ensemble_variance_rank(nets, 1, dom, 0, 1), ConfigError);

  std::vector<Network> big;
  for (int i = 0; i < 30; ++i) big.push_back(const_net2(static_cast<double>(i)));
  CHECK_THROWS_AS(ensemble_variance_rank(big, 15, dom, 1, 1), SizeLimitError);
}

TEST_CASE("attack argument checking") {
  Network toy = make_toy();
  CHECK_THROWS_AS(fgsm(toy, toy, Box{{0}, {1}}), ShapeError);
  Network two_out = concatenate(toy, toy);
  CHECK_THROWS_AS(fgsm(two_out, two_out, tt::box2(0, 1)), ShapeError);
  std::vector<OutputConstraint> bad_row{{{1.0}, 0.0}};
  CHECK_THROWS_AS(constrained_pgd(toy, toy, tt::box2(0, 1), bad_row, {}), ShapeError);
}

}  // TEST_SUITE
