#include "blender/cycles.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "blender/errors.hpp"
#include "blender/random.hpp"

namespace blender {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

bool in_saddle_box(const Vec3& p) { return std::abs(p[0]) <= 1.0 && std::abs(p[1]) <= 1.0 && std::abs(p[2]) <= 1.0; }

bool in_cube(const Vec3& p) {
  for (double c : p)
    if (!(c >= 0.0 && c <= 1.0)) return false;
  return true;
}

// Largest d with [-d, d] inside the union of two closed intervals; negative
// when 0 is outside both (minus the distance to the nearer one).
double symmetric_room(const std::array<std::pair<double, double>, 2>& ts) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [lo, hi] : ts) {
    if (lo > hi) continue;
    best = std::max(best, std::min(-lo, hi));
  }
  const auto& [a0, b0] = ts[0];
  const auto& [a1, b1] = ts[1];
  if (a0 <= b0 && a1 <= b1 && std::max(a0, a1) <= std::min(b0, b1)) {
    const double lo = std::min(a0, a1), hi = std::max(b0, b1);
    best = std::max(best, std::min(-lo, hi));
  }
  return best;
}

// Admissibility slack of the stable fiber in x, as find_witness measures it.
struct FiberSlack {
  double x = 0.0;      // room between the shrunk core and the x-range
  double slope = 0.0;  // capacity minus slope bound
};

FiberSlack fiber_slack(const CycleScenario& sc, const VerticalCurve& c) {
  const auto cert = covering_certificate(sc.blender.pb);
  const auto [lo, hi] = exact_core(sc.blender.pb);
  const double s = c.slope_bound();
  const Interval r = c.x_range();
  return {std::min(r.lo - (round_up(lo) + s), (round_down(hi) - s) - r.hi), cert.slope_capacity - s};
}

// Unstable segment image: coordinate i is off[i] + k[i] * s for s in [1/l3, 1].
struct SegmentImage {
  std::array<Rational, 3> off, k;
  Rational s_lo, s_hi;
};

SegmentImage segment_image(const CycleScenario& sc) {
  const Rational l3(sc.saddle.rates[2]);
  SegmentImage im;
  for (int i = 0; i < 3; ++i) {
    im.off[i] = Rational(sc.t_out.offset()[i]);
    im.k[i] = Rational(sc.t_out.linear()[i][2]) * l3;
  }
  im.s_lo = 1 / l3;
  im.s_hi = 1;
  return im;
}

// {s in [lo, hi] : a <= off + k s <= b}, possibly empty (lo > hi).
void restrict_to(Rational& lo, Rational& hi, const Rational& off, const Rational& k, const Rational& a,
                 const Rational& b) {
  if (k == 0) {
    if (off < a || off > b) hi = lo - 1;
    return;
  }
  Rational u = (a - off) / k, v = (b - off) / k;
  if (k < 0) std::swap(u, v);
  lo = std::max(lo, u);
  hi = std::min(hi, v);
}

double blender_to_p_room(const CycleScenario& sc) {
  const SegmentImage im = segment_image(sc);
  auto range = [&](int i) {
    const double a = to_nearest(im.off[i] + im.k[i] * im.s_lo), b = to_nearest(im.off[i] + im.k[i] * im.s_hi);
    return std::pair{std::min(a, b), std::max(a, b)};
  };
  double room = std::numeric_limits<double>::infinity();
  for (int i : {0, 2}) {
    const auto [a, b] = range(i);
    room = std::min({room, a, 1.0 - b});
  }
  // Shifts t keeping a whole slab inside the y-range clipped to [0, 1].
  const auto [ylo, yhi] = range(1);
  const double inv = 1.0 / sc.blender.mu;
  room = std::min(room, symmetric_room({std::pair{inv - yhi, -ylo}, std::pair{1.0 - yhi, (1.0 - inv) - ylo}}));
  return room;
}

double p_to_blender_room(const CycleScenario& sc) {
  const Mat3& m = sc.t_in.linear();
  double room;
  try {
    const FiberSlack fs = fiber_slack(sc, stable_fiber(sc).x);
    room = fs.slope < 0.0 ? fs.slope : fs.x * std::abs(m[2][0]);
  } catch (const ConnectionBrokenError& e) {
    return e.margin();
  }
  // The gate's image must stay in the saddle box.
  const Interval g = sc.exit_gate;
  for (int i = 0; i < 8; ++i) {
    const Vec3 corner{double(i & 1), (i & 2) ? g.hi : g.lo, double((i >> 2) & 1)};
    room = std::min(room, 1.0 - sup_norm(sc.t_in(corner)));
  }
  return room;
}

PerturbationSpec branch_spec(double delta, std::uint64_t seed) {
  PerturbationSpec spec{0.0, 2, 2, seed};
  spec.amplitude = delta / (1.0 + 2.0 * std::numbers::pi);
  while (spec.amplitude > 0.0 && spec.c1_size() > delta) spec.amplitude = std::nextafter(spec.amplitude, 0.0);
  return spec;
}

bool branches_certified(const ProtoBlender& pb, double delta) {
  for (std::uint64_t seed = 0; seed < 8; ++seed)
    if (!perturbed_certificate(PerturbedSystem(pb, branch_spec(delta, seed))).holds()) return false;
  return true;
}

}  // namespace

void SaddleChart::check() const {
  const auto [l1, l2, l3] = rates;
  if (!(l1 > 0.0 && l1 < 1.0 && l2 > 0.0 && l2 < 1.0 && l3 > 1.0 && std::isfinite(l3)))
    throw DomainError("saddle rates need 0 < l1, l2 < 1 < l3, got (" + fmt(l1) + ", " + fmt(l2) + ", " + fmt(l3) + ")");
}

void CycleScenario::check() const {
  saddle.check();
  if (!(blender.mu > 2.0)) throw DomainError("mu must exceed 2");
  if (!(exit_gate.lo > blender.slab(1).hi && exit_gate.hi < blender.slab(2).lo))
    throw ValidationError("exit gate [" + fmt(exit_gate.lo) + ", " + fmt(exit_gate.hi) +
                          "] must lie strictly between the slabs");
  if (perturbation) perturbation->check();
}

PerturbedSystem CycleScenario::branches() const {
  return PerturbedSystem(blender.pb, perturbation.value_or(PerturbationSpec{}));
}

CycleScenario build_reference_cycle() {
  CycleScenario sc{
      SaddleChart{},
      build_blender3d(build_reference(), 10.0, true),
      std::nullopt,
      AffineMap3({{{0.1, 0.0, 0.0}, {0.0, 0.0, 1.0}, {0.0, 0.5, 0.0}}}, {0.5, -1.0, 0.5}),
      AffineMap3({{{0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}, {0.2, 0.0, 0.0}}}, {-0.5, -0.5, -0.1}),
      Interval{0.4, 0.6},
  };
  sc.check();
  return sc;
}

SpaceCurve stable_fiber(const CycleScenario& sc) {
  const Mat3& m = sc.t_in.linear();
  const double a = m[2][0], b = m[2][1], c = m[2][2], d = sc.t_in.offset()[2];
  if (a == 0.0) throw ConnectionBrokenError("t_in does not move w along x; the stable fiber is not a graph", 0.0);
  const double yc = sc.exit_gate.mid();
  auto x_at = [&](double z) { return -(b * yc + c * z + d) / a; };
  const double x0 = x_at(0.0), x1 = x_at(1.0);
  const double out = std::max({-x0, -x1, x0 - 1.0, x1 - 1.0});
  if (out > 0.0)
    throw ConnectionBrokenError("stable fiber leaves Q: x runs from " + fmt(x0) + " to " + fmt(x1), -out);
  return {VerticalCurve({{0.0, x0}, {1.0, x1}}), VerticalCurve::line(yc)};
}

UnstableWitness connection_p_to_blender(const CycleScenario& sc, double tol) {
  const SpaceCurve fiber = stable_fiber(sc);
  const FiberSlack fs = fiber_slack(sc, fiber.x);
  try {
    if (!sc.perturbation) return curve_meets_unstable(sc.blender, fiber, tol);
    UnstableWitness out;
    out.planar = perturbed_witness_tol(sc.branches(), fiber.x, tol);
    const Precise& z = out.planar.point[1];
    out.point = {out.planar.point[0], fiber.y.at(z), z};
    return out;
  } catch (const AdmissibilityError& e) {
    throw ConnectionBrokenError(std::string("stable fiber is not admissible: ") + e.what(),
                                std::min({fs.x, fs.slope, 0.0}));
  }
}

ConfinementReport connection_blender_to_p(const CycleScenario& sc, int depth) {
  if (depth < 0 || depth > kMaxDepth) throw DepthLimitError("depth must lie in [0, 64]");
  if (sc.perturbation) {
    // The skew product stays in Q only if the branches keep S inside S.
    const PerturbedSystem ps = sc.branches();
    const Rect2& sq = ps.base.square;
    // phi_1 vanishes on the vertical edges, so x stays put there; with a
    // positive Jacobian diagonal the extremes sit on the edges.
    for (Symbol s : {Symbol{1}, Symbol{2}}) {
      const auto jac = ps.jacobian(s, {sq.x, sq.y});
      const auto bottom = ps.inverse_branch(s, std::array<Interval, 2>{sq.x, Interval::point(sq.y.lo)});
      const auto top = ps.inverse_branch(s, std::array<Interval, 2>{sq.x, Interval::point(sq.y.hi)});
      if (!(jac[0][0].lo > 0.0 && jac[1][1].lo > 0.0) || bottom[1].lo < sq.y.lo || top[1].hi > sq.y.hi)
        throw ConnectionBrokenError("perturbed branch " + std::to_string(s) + " may leave the square", 0.0);
    }
  }
  const SegmentImage im = segment_image(sc);
  Rational lo = im.s_lo, hi = im.s_hi;
  for (int i = 0; i < 3; ++i) restrict_to(lo, hi, im.off[i], im.k[i], 0, 1);
  if (lo > hi) throw ConnectionBrokenError("unstable segment misses Q", std::min(blender_to_p_room(sc), 0.0));

  const Rational mu(sc.blender.mu);
  const std::array<std::pair<Rational, Rational>, 2> slabs{std::pair<Rational, Rational>{0, 1 / mu},
                                                           std::pair<Rational, Rational>{1 - 1 / mu, 1}};
  ConfinementReport rep;
  rep.depth = depth;
  rep.intervals.push_back({round_down(lo), round_up(hi)});
  // y after k steps is alpha * s + beta.
  Rational alpha = im.k[1], beta = im.off[1];
  for (int k = 1; k <= depth; ++k) {
    const Rational ya = alpha * lo + beta, yb = alpha * hi + beta;
    const Rational rlo = std::min(ya, yb), rhi = std::max(ya, yb);
    int pick = -1;
    for (int pass = 0; pass < 2 && pick < 0; ++pass)
      for (int s = 0; s < 2 && pick < 0; ++s) {
        const auto& [a, b] = slabs[s];
        const bool full = rlo <= a && b <= rhi;
        const bool meets = std::max(rlo, a) <= std::min(rhi, b);
        if (pass == 0 ? full : meets) pick = s;
      }
    if (pick < 0)
      throw ConnectionBrokenError("no parameter stays in the slabs for " + std::to_string(k) + " steps",
                                  std::min(blender_to_p_room(sc), 0.0));
    restrict_to(lo, hi, beta, alpha, slabs[pick].first, slabs[pick].second);
    if (pick == 0) {
      alpha *= mu;
      beta *= mu;
    } else if (sc.blender.fold) {
      alpha = -mu * alpha;
      beta = mu * (1 - beta);
    } else {
      alpha *= mu;
      beta = mu * beta - (mu - 1);
    }
    rep.itinerary.push_back(static_cast<Symbol>(pick + 1));
    rep.intervals.push_back({round_down(lo), round_up(hi)});
  }
  rep.exact = {lo, hi};
  rep.width = round_down(Rational(hi - lo));
  return rep;
}

ConnectionMargins connection_margins(const CycleScenario& sc) {
  ConnectionMargins m;
  m.p_to_blender = p_to_blender_room(sc);
  m.blender_to_p = blender_to_p_room(sc);
  // Bisection on the C1 size of the (2, 2) branch perturbation.
  double lo = 0.0, hi = covering_certificate(sc.blender.pb).margin;
  if (branches_certified(sc.blender.pb, hi)) {
    lo = hi;
  } else {
    for (int i = 0; i < 40; ++i) {
      const double mid = 0.5 * (lo + hi);
      (branches_certified(sc.blender.pb, mid) ? lo : hi) = mid;
    }
  }
  m.branches = lo;
  return m;
}

CycleScenario perturb_scenario(const CycleScenario& sc, double delta, std::uint64_t seed) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw DomainError("delta must be finite and >= 0, got " + fmt(delta));
  if (delta == 0.0) return sc;
  if (sc.perturbation) throw DomainError("scenario already carries a branch perturbation");
  const ConnectionMargins m = connection_margins(sc);
  if (!(delta < m.min()))
    throw MarginExceededError("delta " + fmt(delta) + " is not below the connection margins (t_in " +
                              fmt(m.p_to_blender) + ", t_out " + fmt(m.blender_to_p) + ", branches " +
                              fmt(m.branches) + ")");
  SplitMix64 rng(seed);
  Vec3 t_out, t_in;
  for (double& t : t_out) t = rng.uniform(-delta, delta);
  for (double& t : t_in) t = rng.uniform(-delta, delta);
  CycleScenario out = sc;
  out.t_out = sc.t_out.translated(t_out);
  out.t_in = sc.t_in.translated(t_in);
  out.perturbation = branch_spec(delta, rng.next());
  if (!perturbed_certificate(out.branches()).holds())
    throw MarginExceededError("branch perturbation of size " + fmt(delta) + " breaks the covering certificate");
  return out;
}

namespace {

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Vec3 along(const Vec3& p, const Vec3& d, double t) { return {p[0] + t * d[0], p[1] + t * d[1], p[2] + t * d[2]}; }

// Closest points of segments [p0, p1] and [q0, q1].
std::pair<Vec3, Vec3> closest_points(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1) {
  const Vec3 d1 = sub(p1, p0), d2 = sub(q1, q0), r = sub(p0, q0);
  const double a = dot(d1, d1), e = dot(d2, d2), f = dot(d2, r), c = dot(d1, r), b = dot(d1, d2);
  const double denom = a * e - b * b;
  double s = denom > 1e-300 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
  double t = (b * s + f) / e;
  if (t < 0.0) {
    t = 0.0;
    s = std::clamp(-c / a, 0.0, 1.0);
  } else if (t > 1.0) {
    t = 1.0;
    s = std::clamp((b - c) / a, 0.0, 1.0);
  }
  return {along(p0, d1, s), along(q0, d2, t)};
}

}  // namespace

GapReport nonrobust_cycle_demo(double delta) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw DomainError("delta must be finite and >= 0, got " + fmt(delta));
  // W^u(p) leaves the first saddle along its w-axis; the connecting map lays
  // that arc on the stable u-axis of the second saddle, then shifts it off.
  const AffineMap3 link({{{0.0, 0.0, 1.0}, {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}}}, {-1.5, 0.0, 0.0});
  const AffineMap3 moved = link.translated({0.0, 0.6 * delta, 0.8 * delta});
  const auto [u, s] = closest_points(moved({0.0, 0.0, 1.0}), moved({0.0, 0.0, 2.0}), {-1.0, 0.0, 0.0}, {1.0, 0.0, 0.0});
  const Vec3 d = sub(u, s);
  return {delta, std::sqrt(dot(d, d)), u, s};
}

OrbitLog simulate_cycle_orbit(const CycleScenario& sc, Chart chart, const Vec3& start, int budget, double eps) {
  if (budget < 0) throw DomainError("budget must be >= 0");
  if (!(eps >= 0.0)) throw DomainError("eps must be >= 0");
  if (chart == Chart::saddle ? !in_saddle_box(start) : !in_cube(start))
    throw DomainError("start point is outside its chart");
  const PerturbedSystem ps = sc.branches();
  const UnstableBoxSet boxes = unstable_set_approx(sc.blender, 8);
  auto dist = [](const Interval& iv, double x) { return std::max({0.0, iv.lo - x, x - iv.hi}); };
  auto near_boxes = [&](const Vec3& p) {
    for (const Cell& c : boxes.boxes)
      if (std::max(dist(c.rect.x, p[0]), dist(c.rect.y, p[2])) <= eps) return true;
    return false;
  };

  OrbitLog log;
  Vec3 p = start;
  for (int step = 0; step < budget; ++step) {
    OrbitEntry e{step, chart, p, false, false};
    e.near_p = chart == Chart::saddle && sup_norm(p) <= eps;
    e.near_blender = chart == Chart::cube && near_boxes(p);
    log.hits_p += e.near_p;
    log.hits_blender += e.near_blender;
    log.steps.push_back(e);
    if (step + 1 == budget) break;

    if (chart == Chart::saddle) {
      const Vec3 q = sc.saddle.step(p);
      if (in_saddle_box(q)) {
        p = q;
        continue;
      }
      if (q[2] > 1.0 && q[2] <= sc.saddle.rates[2] && std::abs(q[0]) <= 1.0 && std::abs(q[1]) <= 1.0) {
        const Vec3 r = sc.t_out(q);
        if (in_cube(r)) {
          p = r;
          chart = Chart::cube;
          continue;
        }
      }
    } else {
      if (const auto s = sc.blender.slab_of(Precise(p[1]))) {
        const Vec2 xz = ps.inverse_branch(*s, Vec2{p[0], p[2]});
        p = {xz[0], static_cast<double>(sc.blender.stretch(*s, Precise(p[1]))), xz[1]};
        if (in_cube(p)) continue;
      } else if (sc.exit_gate.contains(p[1])) {
        const Vec3 r = sc.t_in(p);
        if (in_saddle_box(r)) {
          p = r;
          chart = Chart::saddle;
          continue;
        }
      }
    }
    log.exited = true;
    break;
  }
  return log;
}

}  // namespace blender
