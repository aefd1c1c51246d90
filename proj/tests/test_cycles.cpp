#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "blender/cycles.hpp"
#include "blender/errors.hpp"
#include "blender/random.hpp"

using namespace blender;

namespace {

const CycleScenario& reference() {
  static const CycleScenario sc = build_reference_cycle();
  return sc;
}

// t_in applied in high precision.
PreciseVec3 apply(const AffineMap3& m, const PreciseVec3& p) {
  PreciseVec3 out;
  for (int i = 0; i < 3; ++i) {
    out[i] = Precise(m.offset()[i]);
    for (int j = 0; j < 3; ++j) out[i] += Precise(m.linear()[i][j]) * p[j];
  }
  return out;
}

// Point of Q reached from the saddle-chart point (0, 0, s).
PreciseVec3 unstable_image(const CycleScenario& sc, const Rational& s) {
  const Precise w = to_precise(s) * Precise(sc.saddle.rates[2]);
  return apply(sc.t_out, {Precise(0), Precise(0), w});
}

void check_p_to_blender(const CycleScenario& sc, const UnstableWitness& w) {
  // Lands on the stable plane of p.
  const PreciseVec3 q = apply(sc.t_in, w.point);
  // The fiber nodes are doubles, so the plane is met to double accuracy.
  CHECK(abs(q[2]) < Precise("1e-15"));
  CHECK(sc.exit_gate.contains(static_cast<double>(w.point[1])));
  // Backward orbit stays in Q.
  if (!sc.perturbation) {
    const auto back = backward_orbit(sc.blender, w.point, w.planar.depth);
    CHECK(back.survived());
  }
}

}  // namespace

TEST_CASE("reference cycle is consistent") {
  const auto& sc = reference();
  CHECK_NOTHROW(sc.check());
  CHECK(sc.saddle.rates == Vec3{0.5, 0.5, 2.0});
  // The exit gate goes next to the stable plane.
  for (double x : {0.0, 1.0})
    for (double y : {0.4, 0.6})
      for (double z : {0.0, 1.0}) {
        const Vec3 q = sc.t_in({x, y, z});
        CHECK(std::abs(q[2]) <= 0.1 + 1e-15);
        CHECK(sup_norm(q) <= 1.0);
      }
  SaddleChart bad;
  bad.rates = {0.5, 1.5, 2.0};
  CHECK_THROWS_AS(bad.check(), DomainError);
  CycleScenario gate = sc;
  gate.exit_gate = {0.05, 0.5};
  CHECK_THROWS_AS(gate.check(), ValidationError);
}

TEST_CASE("stable fiber of the reference cycle") {
  const SpaceCurve c = stable_fiber(reference());
  CHECK(c.x.at(0.0) == 0.5);
  CHECK(c.x.at(1.0) == 0.5);
  CHECK(c.y.at(0.3) == 0.5);
}

TEST_CASE("connection_p_to_blender") {
  const auto& sc = reference();
  const auto w = connection_p_to_blender(sc, 1e-6);
  CHECK(std::max(w.planar.enclosure.x.width(), w.planar.enclosure.y.width()) <= 1e-6);
  CHECK(w.planar.depth > 0);
  check_p_to_blender(sc, w);

  const auto coarse = connection_p_to_blender(sc, 1.0);
  CHECK(coarse.planar.depth == 0);

  // Translating t_in along w pushes the fiber out of the admissible strip.
  CycleScenario moved = sc;
  moved.t_in = sc.t_in.translated({0.0, 0.0, 0.12});
  try {
    connection_p_to_blender(moved, 1e-6);
    FAIL("expected ConnectionBrokenError");
  } catch (const ConnectionBrokenError& e) {
    CHECK(e.margin() < 0.0);
  }
  // Within the margin the fiber x = 0.025 still meets the unstable set.
  moved.t_in = sc.t_in.translated({0.0, 0.0, 0.095});
  check_p_to_blender(moved, connection_p_to_blender(moved, 1e-6));
  // A tilted fiber beyond the slope capacity.
  moved.t_in = AffineMap3({{{0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}, {0.2, 0.0, 0.2}}}, {-0.5, -0.5, -0.2});
  try {
    connection_p_to_blender(moved, 1e-6);
    FAIL("expected ConnectionBrokenError");
  } catch (const ConnectionBrokenError& e) {
    CHECK(e.margin() < 0.0);
  }
}

TEST_CASE("connection_blender_to_p nests and survives") {
  const auto& sc = reference();
  const auto rep = connection_blender_to_p(sc, 20);
  REQUIRE(rep.intervals.size() == 21);
  CHECK(rep.itinerary.size() == 20);
  for (std::size_t k = 1; k < rep.intervals.size(); ++k) CHECK(rep.intervals[k - 1].contains(rep.intervals[k]));
  CHECK(rep.width > 0.0);
  CHECK(rep.width >= 1e-21);
  CHECK(rep.exact.first < rep.exact.second);

  // Interior points; the ends sit on slab boundaries after some step.
  const auto [lo, hi] = rep.exact;
  for (const Rational& s : {Rational(lo + (hi - lo) / 4), Rational((lo + hi) / 2), Rational(hi - (hi - lo) / 4)}) {
    const auto orbit = forward_orbit(sc.blender, unstable_image(sc, s), 20);
    CHECK(orbit.survived());
  }

  const auto zero = connection_blender_to_p(sc, 0);
  CHECK(zero.exact.first == Rational(1, 2));
  CHECK(zero.exact.second == Rational(1));
  CHECK_THROWS_AS(connection_blender_to_p(sc, 65), DepthLimitError);

  CycleScenario off = sc;
  off.t_out = sc.t_out.translated({0.6, 0.0, 0.0});
  CHECK_THROWS_AS(connection_blender_to_p(off, 5), ConnectionBrokenError);
}

TEST_CASE("confinement widths shrink by 1/mu") {
  const auto rep = connection_blender_to_p(reference(), 12);
  for (int k = 1; k <= 12; ++k) {
    const double w = rep.intervals[k].width();
    CHECK(w == doctest::Approx(0.5 * std::pow(10.0, -k)).epsilon(1e-6));
  }
}

TEST_CASE("connection margins") {
  const auto m = connection_margins(reference());
  CHECK(m.p_to_blender == doctest::Approx(0.1));
  CHECK(m.blender_to_p == doctest::Approx(0.5));
  CHECK(m.branches > 1e-3);
  CHECK(m.branches < covering_certificate(reference().blender.pb).margin);
}

TEST_CASE("nonrobust cycle gap") {
  const auto r = nonrobust_cycle_demo(1e-3);
  CHECK(r.gap >= 1e-4);
  CHECK(r.gap <= 1e-2);
  CHECK(r.gap == doctest::Approx(1e-3).epsilon(1e-9));
  CHECK(nonrobust_cycle_demo(0.0).gap == 0.0);
  for (double d : {1e-8, 1e-5, 0.01, 0.2}) CHECK(nonrobust_cycle_demo(d).gap == doctest::Approx(d).epsilon(1e-9));
  CHECK_THROWS_AS(nonrobust_cycle_demo(-1.0), DomainError);
}

TEST_CASE("simulate_cycle_orbit") {
  const auto& sc = reference();
  const auto origin = simulate_cycle_orbit(sc, Chart::saddle, {0.0, 0.0, 0.0}, 500, 1e-3);
  CHECK(origin.hits_p == 500);
  CHECK(origin.steps.size() == 500);
  CHECK_FALSE(origin.exited);

  const auto w = connection_p_to_blender(sc, 1e-9);
  const Vec3 start{static_cast<double>(w.point[0]), static_cast<double>(w.point[1]), static_cast<double>(w.point[2])};
  const auto log = simulate_cycle_orbit(sc, Chart::cube, start, 200, 1e-3);
  CHECK(log.hits_p >= 1);
  CHECK(log.hits_blender >= 1);
  REQUIRE(log.steps.size() >= 2);
  CHECK(log.steps[1].chart == Chart::saddle);
  // Contraction towards p once inside the saddle chart.
  for (std::size_t k = 2; k < 20; ++k) {
    const double prev = std::max(std::abs(log.steps[k - 1].point[0]), std::abs(log.steps[k - 1].point[1]));
    const double cur = std::max(std::abs(log.steps[k].point[0]), std::abs(log.steps[k].point[1]));
    CHECK(cur <= 0.5 * prev);
  }

  // Between the slabs and outside the gate: leaves at once.
  const auto lost = simulate_cycle_orbit(sc, Chart::cube, {0.5, 0.3, 0.5}, 50, 1e-3);
  CHECK(lost.exited);
  CHECK(lost.steps.size() == 1);

  // Along W^u(p): saddle, then Q.
  const auto out = simulate_cycle_orbit(sc, Chart::saddle, {0.0, 0.0, 0.7}, 10, 1e-3);
  REQUIRE(out.steps.size() >= 2);
  CHECK(out.steps[1].chart == Chart::cube);

  CHECK_THROWS_AS(simulate_cycle_orbit(sc, Chart::cube, {1.5, 0.0, 0.0}, 10, 1e-3), DomainError);
  CHECK_THROWS_AS(simulate_cycle_orbit(sc, Chart::saddle, {0.0, 0.0, 0.0}, -1, 1e-3), DomainError);
}

TEST_CASE("random orbits exit or stay logged consistently") {
  SplitMix64 rng(11);
  const auto& sc = reference();
  for (int i = 0; i < 200; ++i) {
    const Vec3 p{rng.uniform(), rng.uniform(), rng.uniform()};
    const auto log = simulate_cycle_orbit(sc, Chart::cube, p, 60, 1e-2);
    CHECK(log.steps.size() <= 60);
    CHECK((log.exited || log.steps.size() == 60));
    int hp = 0, hb = 0;
    for (std::size_t k = 0; k < log.steps.size(); ++k) {
      CHECK(log.steps[k].step == static_cast<int>(k));
      hp += log.steps[k].near_p;
      hb += log.steps[k].near_blender;
    }
    CHECK(hp == log.hits_p);
    CHECK(hb == log.hits_blender);
  }
}

TEST_CASE("perturb_scenario keeps both connections") {
  const auto& sc = reference();
  CHECK(perturb_scenario(sc, 0.0, 3).t_in == sc.t_in);
  CHECK_THROWS_AS(perturb_scenario(sc, -1e-3, 3), DomainError);
  CHECK_THROWS_AS(perturb_scenario(sc, 0.2, 3), MarginExceededError);

  const auto a = perturb_scenario(sc, 1e-3, 42), b = perturb_scenario(sc, 1e-3, 42);
  CHECK(a.t_in == b.t_in);
  CHECK(a.t_out == b.t_out);
  CHECK(a.perturbation->seed == b.perturbation->seed);
  CHECK(a.perturbation->c1_size() <= 1e-3);

  int ok = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto p = perturb_scenario(sc, 1e-3, seed);
    const auto w = connection_p_to_blender(p, 1e-6);
    check_p_to_blender(p, w);
    const auto rep = connection_blender_to_p(p, 20);
    ok += rep.width > 0.0;
  }
  CHECK(ok == 100);
}
