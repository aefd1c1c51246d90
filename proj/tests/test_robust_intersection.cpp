#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "blender/errors.hpp"
#include "blender/random.hpp"
#include "blender/robust_intersection.hpp"

using namespace blender;

namespace {

Rational q(long p, long d) { return Rational(p, d); }

bool point_in(const Rect2& r, const PreciseVec2& p) {
  return Precise(r.x.lo) <= p[0] && p[0] <= Precise(r.x.hi) && Precise(r.y.lo) <= p[1] && p[1] <= Precise(r.y.hi);
}

bool on_curve(const VerticalCurve& c, const PreciseVec2& p, const Precise& tol) { return abs(c.at(p[1]) - p[0]) <= tol; }

// Oracle: the depth-n cell with the given word, from the cell enumeration.
Rect2 cell_of(const ProtoBlender& pb, const Word& w) {
  const auto cells = preimage_rectangles(pb, static_cast<int>(w.size())).cells;
  for (const auto& c : cells)
    if (c.word == w) return c.rect;
  throw std::logic_error("no such cell");
}

}  // namespace

TEST_CASE("VerticalCurve construction and ranges") {
  CHECK_THROWS_AS(VerticalCurve({{0.0, 0.5}}), DomainError);
  CHECK_THROWS_AS(VerticalCurve({{0.0, 0.5}, {0.9, 0.5}}), DomainError);
  CHECK_THROWS_AS(VerticalCurve({{0.0, 0.5}, {0.5, 0.5}, {0.5, 0.6}, {1.0, 0.5}}), DomainError);
  CHECK_THROWS_AS(VerticalCurve({{0.0, -0.1}, {1.0, 0.5}}), DomainError);

  const auto line = VerticalCurve::line(0.5);
  CHECK(line.slope_bound() == 0.0);
  CHECK(line.x_range({0.2, 0.3}) == Interval{0.5, 0.5});

  const VerticalCurve zig({{0.0, 0.4}, {0.25, 0.6}, {0.5, 0.45}, {1.0, 0.5}});
  CHECK(zig.slope_bound() == doctest::Approx(0.8));
  SplitMix64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    const double a = rng.uniform(), b = rng.uniform();
    const Interval y{std::min(a, b), std::max(a, b)};
    const Interval r = zig.x_range(y);
    for (int k = 0; k < 20; ++k) REQUIRE(r.contains(zig.at(rng.uniform(y.lo, y.hi))));
  }
  CHECK(zig.x_range().lo == 0.4);
  CHECK(zig.x_range().hi == 0.6);
}

TEST_CASE("find_witness: vertical line through the centre") {
  const auto pb = build_reference();
  // Children of cell "1" have x-intervals [0,4/9] and [2/9,2/3]; 1/2 lies in the second only.
  const auto cells = preimage_rectangles(pb, 2).cells;
  CHECK_FALSE(cells[0].rect.x.contains(0.5));
  CHECK(cells[1].rect.x.contains(0.5));

  const auto c = VerticalCurve::line(0.5);
  const auto w = find_witness(pb, c, 1e-6);
  CHECK(to_string(w.word).substr(0, 2) == "12");
  CHECK(w.enclosure.diameter() <= 1e-6);
  CHECK(w.depth == static_cast<int>(w.word.size()));
  CHECK(w.point[0] == Precise(0.5));
  CHECK(point_in(w.enclosure, w.point));
  const auto m = membership_depth(pb, w.point, w.depth);
  CHECK(m.survived());
  CHECK(m.itinerary == w.word);
}

TEST_CASE("find_witness: the left edge line meets the left fixed point") {
  const auto pb = build_reference();
  const auto w = find_witness(pb, VerticalCurve::line(0.0), 1e-6);
  CHECK(to_string(w.word) == std::string(w.word.size(), '1'));
  CHECK(w.point[0] == 0);
  CHECK(abs(w.point[1] - Precise(1) / 18) < Precise("1e-30"));
  // Through the right end of J as well.
  const auto r = find_witness(pb, VerticalCurve::line(1.0), 1e-6);
  CHECK(to_string(r.word) == std::string(r.word.size(), '2'));
  CHECK(abs(r.point[1] - Precise(17) / 18) < Precise("1e-30"));
}

TEST_CASE("find_witness: tilted line") {
  const auto pb = build_reference();
  const auto c = VerticalCurve::line(0.5, 0.3);
  CHECK(c.slope_bound() < 1.0 / 3.0);
  const auto w = find_witness(pb, c, 1e-6);
  CHECK(w.enclosure.diameter() <= 1e-6);
  CHECK(on_curve(c, w.point, Precise("1e-90")));
  CHECK(point_in(w.enclosure, w.point));
  const auto m = membership_depth(pb, w.point, w.depth);
  CHECK(m.survived());
  CHECK(m.itinerary == w.word);
  // Brute-force oracle at depth 16: the curve crosses the cell of the word prefix.
  const Word prefix(w.word.begin(), w.word.begin() + 16);
  const Rect2 cell = cell_of(pb, prefix);
  CHECK(cell.x.contains(c.x_range(cell.y)));
}

TEST_CASE("find_witness errors") {
  const auto pb = build_reference();
  CHECK_THROWS_AS(find_witness(pb, VerticalCurve::line(0.5, 0.4), 1e-6), AdmissibilityError);
  try {
    find_witness(pb, VerticalCurve::line(0.2, 0.3), 1e-6);
    FAIL("expected an admissibility error");
  } catch (const AdmissibilityError& e) {
    CHECK(std::string(e.what()).find("x-range") != std::string::npos);
  }
  CHECK_THROWS_AS(find_witness(pb, VerticalCurve::line(0.5), 0x1p-61), DepthLimitError);
  CHECK_THROWS_AS(find_witness(pb, VerticalCurve::line(0.5), 0.0), DepthLimitError);
  // (2/3)^64 is about 5e-12.
  CHECK_THROWS_AS(find_witness(pb, VerticalCurve::line(0.5), 1e-17), DepthLimitError);
  CHECK_THROWS_AS(find_witness(build_disjoint_variant(), VerticalCurve::line(0.5), 1e-6), CoveringError);
  CHECK_THROWS_AS(find_witness_at_depth(pb, VerticalCurve::line(0.5), 65), DepthLimitError);
}

TEST_CASE("slope_capacity") {
  CHECK(std::abs(slope_capacity(covering_certificate(build_reference())) - 1.0 / 3.0) <= 1e-12);
  // Overlap 0.55 + 0.55 - 1 = 0.1.
  const auto narrow = from_coefficients({q(11, 20), q(0, 1), q(1, 10), q(1, 20)}, {q(11, 20), q(9, 20), q(1, 10), q(17, 20)});
  CHECK(std::abs(slope_capacity(covering_certificate(narrow)) - 0.1) <= 1e-12);
}

TEST_CASE("monotone refinement of witness enclosures") {
  const auto pb = build_reference();
  const double ratio = std::max(2.0 / 3.0, 0.1) + 1e-9;
  for (const auto& c : {VerticalCurve::line(0.5), VerticalCurve::line(0.41, 0.2), VerticalCurve::line(0.77, 0.05)}) {
    Witness prev = find_witness_at_depth(pb, c, 0);
    for (int d = 1; d <= 40; ++d) {
      const auto w = find_witness_at_depth(pb, c, d);
      REQUIRE(std::equal(prev.word.begin(), prev.word.end(), w.word.begin()));
      REQUIRE(prev.enclosure.contains(w.enclosure));
      REQUIRE(w.enclosure.diameter() <= ratio * prev.enclosure.diameter());
      prev = w;
    }
  }
}

namespace {

// Every admissible line on a grid of positions and slopes in [0, s*] gets a
// witness; a sample of them is checked by forward iteration.
void check_greedy_totality(const ProtoBlender& pb, int grid, double tol) {
  const auto cert = covering_certificate(pb);
  const double s_star = cert.slope_capacity;
  const auto [lo, hi] = exact_core(pb);
  const double j_lo = round_up(lo), j_hi = round_down(hi);
  int admissible = 0, rounding_rejects = 0, checked = 0;
  for (int j = 0; j < grid; ++j) {
    const double s = s_star * j / (grid - 1);
    const double c_lo = j_lo + 1.5 * s, c_hi = j_hi - 1.5 * s;
    for (int i = 0; i < grid; ++i) {
      const double centre = c_lo + (c_hi - c_lo) * i / (grid - 1);
      const auto c = VerticalCurve::line(centre, s);
      try {
        check_admissible(c, {j_lo, j_hi}, s_star);
      } catch (const AdmissibilityError&) {
        // Only node rounding may push a grid line over the boundary.
        REQUIRE(c.slope_bound() <= s_star * (1 + 1e-12) + 1e-15);
        ++rounding_rejects;
        continue;
      }
      ++admissible;
      const auto w = find_witness(pb, c, tol);
      if ((i * grid + j) % 97 == 0) {
        ++checked;
        const auto m = membership_depth(pb, w.point, w.depth);
        REQUIRE(m.survived());
        REQUIRE(m.itinerary == w.word);
        REQUIRE(point_in(w.enclosure, w.point));
      }
    }
  }
  CHECK(rounding_rejects <= grid * grid / 20);
  CHECK(admissible >= grid * grid * 9 / 10);
  CHECK(checked > 0);
}

}  // namespace

TEST_CASE("greedy totality on a 100x100 grid of lines") {
  check_greedy_totality(build_reference(), 100, 1e-6);
  const auto narrow = from_coefficients({q(11, 20), q(0, 1), q(1, 10), q(1, 20)}, {q(11, 20), q(9, 20), q(1, 10), q(17, 20)});
  check_greedy_totality(narrow, 40, 1e-5);
  // Different vertical rates, branch images of J overlapping by 0.2.
  const auto skew = from_coefficients({q(3, 5), q(0, 1), q(1, 8), q(1, 16)}, {q(3, 5), q(2, 5), q(1, 4), q(5, 8)});
  check_greedy_totality(skew, 40, 1e-5);
}

TEST_CASE("degradation: disjoint projections leave lines that meet no cell") {
  const auto bad = build_disjoint_variant();
  CHECK_THROWS_AS(find_witness(bad, VerticalCurve::line(0.68), 1e-6), CoveringError);
  const auto cells = preimage_rectangles(bad, 10).cells;
  int missing = 0;
  for (int i = 1; i < 50; ++i) {
    const double x = 2.0 / 3.0 + (0.7 - 2.0 / 3.0) * i / 50;
    bool hit = false;
    for (const auto& c : cells) hit = hit || c.rect.x.contains(x);
    missing += hit ? 0 : 1;
  }
  CHECK(missing == 49);
}

// ---------------------------------------------------------------------------

TEST_CASE("perturbation size bounds") {
  const auto pb = build_reference();
  const PerturbationSpec ok{0.02, 3, 3, 42};
  CHECK(ok.c1_size() == doctest::Approx(0.02 * (1 + 3 * M_PI)).epsilon(1e-14));
  CHECK(ok.c1_size() < 1.0 / 3.0);
  CHECK_NOTHROW(perturb(pb, ok));
  const PerturbationSpec big{0.05, 7, 7, 42};
  CHECK(big.c1_size() == doctest::Approx(1.1495574).epsilon(1e-6));
  CHECK_THROWS_AS(perturb(pb, big), MarginExceededError);
  CHECK_THROWS_AS(perturb(pb, PerturbationSpec{-0.1, 1, 1, 0}), DomainError);
  CHECK_THROWS_AS(perturb(pb, PerturbationSpec{0.01, 0, 1, 0}), DomainError);
}

TEST_CASE("zero amplitude leaves the system unchanged") {
  const auto pb = build_reference();
  const auto ps = perturb(pb, {0.0, 4, 5, 9});
  SplitMix64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 p{rng.uniform(), rng.uniform()};
    for (Symbol s : {Symbol{1}, Symbol{2}}) REQUIRE(ps.inverse_branch(s, p) == pb.branch(s).inverse(p));
  }
  const auto base = covering_certificate(pb);
  const auto pc = perturbed_certificate(ps);
  REQUIRE(pc.holds());
  CHECK(pc.certificate->margin == base.margin);
  CHECK(pc.certificate->slope_capacity == base.slope_capacity);
  CHECK(pc.certificate->core == base.core);
}

TEST_CASE("perturbed enclosures contain sampled values and derivatives") {
  const auto ps = perturb(build_reference(), {0.03, 2, 3, 17});
  SplitMix64 rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    const double x = rng.uniform(0.0, 0.9), y = rng.uniform(0.0, 0.9);
    const std::array<Interval, 2> box{Interval{x, x + rng.uniform(0.0, 0.1)}, Interval{y, y + rng.uniform(0.0, 0.1)}};
    for (Symbol s : {Symbol{1}, Symbol{2}}) {
      const auto img = ps.inverse_branch(s, box);
      const auto jac = ps.jacobian(s, box);
      for (int k = 0; k < 30; ++k) {
        const Vec2 p{rng.uniform(box[0].lo, box[0].hi), rng.uniform(box[1].lo, box[1].hi)};
        const Vec2 v = ps.inverse_branch(s, p);
        REQUIRE(img[0].contains(v[0]));
        REQUIRE(img[1].contains(v[1]));
        // Central differences agree with the Jacobian enclosure up to truncation.
        const double h = 1e-6;
        for (int c = 0; c < 2; ++c) {
          Vec2 a = p, b = p;
          a[c] -= h;
          b[c] += h;
          const Vec2 fa = ps.inverse_branch(s, a), fb = ps.inverse_branch(s, b);
          for (int r = 0; r < 2; ++r) REQUIRE(inflate(jac[r][c], 1e-6).contains((fb[r] - fa[r]) / (2 * h)));
        }
      }
    }
  }
}

TEST_CASE("perturbed_certificate") {
  const auto pb = build_reference();
  const auto pc = perturbed_certificate(perturb(pb, {0.01, 2, 2, 1}));
  REQUIRE(pc.holds());
  CHECK(pc.certificate->margin >= 1.0 / 3.0 - 2 * 0.01 * (1 + 2 * M_PI));
  CHECK(pc.certificate->margin >= 0.187);

  // Accepted by the C1 bound, but delta b pi > 1/10 folds the vertical direction.
  const auto folded = perturbed_certificate(perturb(pb, {0.02, 3, 3, 42}));
  CHECK_FALSE(folded.holds());
  CHECK(folded.failure.find("injective") != std::string::npos);
  CHECK_THROWS_AS(perturbed_witness(perturb(pb, {0.02, 3, 3, 42}), VerticalCurve::line(0.5), 5), ValidationError);

  const PerturbedSystem bad(build_disjoint_variant(), {0.01, 2, 2, 1});
  const auto failed = perturbed_certificate(bad);
  CHECK_FALSE(failed.holds());
  REQUIRE(failed.gap.has_value());
  CHECK(failed.gap->lo <= 2.0 / 3.0);
  CHECK(failed.gap->hi >= 0.7);
}

TEST_CASE("perturbation consistency: m' >= m - 2 C1 on random specs") {
  SplitMix64 rng(77);
  const std::array<ProtoBlender, 2> systems{
      build_reference(),
      from_coefficients({q(3, 5), q(1, 50), q(1, 8), q(1, 16)}, {q(3, 5), q(19, 50), q(1, 4), q(5, 8)})};
  int tested = 0;
  for (const auto& pb : systems) {
    const double m = covering_certificate(pb).margin;
    for (int i = 0; i < 200; ++i) {
      const PerturbationSpec spec{rng.uniform(0.0, 0.05), 1 + static_cast<int>(rng.next() % 4),
                                  1 + static_cast<int>(rng.next() % 4), rng.next()};
      if (!(spec.c1_size() < m)) {
        CHECK_THROWS_AS(perturb(pb, spec), MarginExceededError);
        continue;
      }
      const auto pc = perturbed_certificate(perturb(pb, spec));
      if (!pc.holds()) {
        // Only the injectivity test may break it, and only when the Jacobian
        // bound (c_x - d a pi)(c_y - d b pi) - (d pi)^2 a b is not positive.
        REQUIRE(pc.failure.find("injective") != std::string::npos);
        const double dpi = spec.amplitude * M_PI;
        const double cy = std::min(pb.branches[0].contraction_y(), pb.branches[1].contraction_y());
        const double cx = std::min(pb.branches[0].contraction_x(), pb.branches[1].contraction_x());
        const double det = (cx - dpi * spec.freq_x) * (cy - dpi * spec.freq_y) - dpi * dpi * spec.freq_x * spec.freq_y;
        REQUIRE((cy - dpi * spec.freq_y <= 1e-12 || det <= 1e-12));
        continue;
      }
      REQUIRE(pc.certificate->margin >= m - 2 * spec.c1_size());
      ++tested;
    }
  }
  CHECK(tested > 100);
}

TEST_CASE("perturbed_witness at zero amplitude follows find_witness") {
  const auto pb = build_reference();
  const auto ps = perturb(pb, {0.0, 2, 2, 7});
  for (const auto& c : {VerticalCurve::line(0.5), VerticalCurve::line(0.5, 0.3), VerticalCurve::line(0.31, 0.01)}) {
    const auto a = perturbed_witness(ps, c, 20);
    const auto b = find_witness_at_depth(pb, c, 20);
    CHECK(a.word == b.word);
  }
}

TEST_CASE("perturbed_witness: centre line, seed 7") {
  const auto ps = perturb(build_reference(), {0.01, 2, 2, 7});
  const auto c = VerticalCurve::line(0.5);
  const auto w = perturbed_witness(ps, c, 20);
  CHECK(w.depth == 20);
  CHECK(w.word.size() == 20);
  CHECK(w.enclosure.x.width() <= std::pow(2.0 / 3.0 + 0.1, 20));
  CHECK(on_curve(c, w.point, Precise("1e-60")));
  CHECK(point_in(w.enclosure, w.point));
  const auto m = perturbed_membership_depth(ps, w.point, 20);
  CHECK(m.survived());
  CHECK(m.itinerary == w.word);
}

TEST_CASE("perturbed_witness on 100 seeds") {
  const auto pb = build_reference();
  int found = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto ps = perturb(pb, {0.01, 2, 2, seed});
    const auto c = VerticalCurve::line(0.5, 0.2);
    const auto w = perturbed_witness(ps, c, 20);
    const auto m = perturbed_membership_depth(ps, w.point, 20);
    if (m.survived() && m.itinerary == w.word && on_curve(c, w.point, Precise("1e-60"))) ++found;
  }
  CHECK(found == 100);
}

TEST_CASE("perturbed_forward inverts the perturbed branches") {
  const auto ps = perturb(build_reference(), {0.02, 3, 1, 11});
  SplitMix64 rng(12);
  for (int i = 0; i < 50; ++i) {
    const PreciseVec2 p{Precise(rng.uniform()), Precise(rng.uniform())};
    for (Symbol s : {Symbol{1}, Symbol{2}}) {
      const auto image = ps.inverse_branch(s, p);
      const auto back = perturbed_forward(ps, image);
      REQUIRE(back.has_value());
      CHECK(back->first == s);
      CHECK(abs(back->second[0] - p[0]) < Precise("1e-90"));
      CHECK(abs(back->second[1] - p[1]) < Precise("1e-90"));
    }
  }
  CHECK_FALSE(perturbed_forward(ps, PreciseVec2{Precise(0.5), Precise(0.5)}).has_value());
}
