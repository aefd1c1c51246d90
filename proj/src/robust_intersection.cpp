#include "blender/robust_intersection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/constants/constants.hpp>

#include "blender/errors.hpp"
#include "blender/random.hpp"

namespace blender {

namespace {

// pi lies between the double nearest to it and the next double up.
const Interval kPi{std::numbers::pi, std::nextafter(std::numbers::pi, 4.0)};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// VerticalCurve

VerticalCurve::VerticalCurve(std::vector<CurveNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 2) throw DomainError("a curve needs at least two nodes");
  if (nodes_.front().y != 0.0 || nodes_.back().y != 1.0) throw DomainError("curve nodes must span y in [0, 1]");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (!std::isfinite(n.x) || n.x < 0.0 || n.x > 1.0) throw DomainError("curve node x outside [0, 1]: " + fmt(n.x));
    if (i > 0 && !(nodes_[i - 1].y < n.y)) throw DomainError("curve node y values must be strictly increasing");
  }
  slopes_.reserve(nodes_.size() - 1);
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
    const auto& a = nodes_[i];
    const auto& b = nodes_[i + 1];
    slopes_.push_back((Interval::point(b.x) - Interval::point(a.x)) / (Interval::point(b.y) - Interval::point(a.y)));
    slope_bound_ = std::max(slope_bound_, slopes_.back().mag());
  }
}

VerticalCurve VerticalCurve::line(double centre, double slope) {
  const double half = 0.5 * slope;
  return VerticalCurve({{0.0, centre - half}, {1.0, centre + half}});
}

Interval VerticalCurve::x_range(const Interval& y) const {
  const double lo = std::max(y.lo, 0.0);
  const double hi = std::min(y.hi, 1.0);
  if (lo > hi) throw DomainError("curve evaluated outside y in [0, 1]");
  std::optional<Interval> out;
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
    const auto& a = nodes_[i];
    const auto& b = nodes_[i + 1];
    if (b.y < lo || a.y > hi) continue;
    const Interval sub{std::max(lo, a.y), std::min(hi, b.y)};
    Interval img = Interval::point(a.x) + slopes_[i] * (sub - Interval::point(a.y));
    // The segment never leaves the hull of its end nodes.
    img.lo = std::max(img.lo, std::min(a.x, b.x));
    img.hi = std::min(img.hi, std::max(a.x, b.x));
    out = out ? hull(*out, img) : img;
  }
  return *out;
}

namespace {

template <class Real>
std::size_t segment_of(const std::vector<CurveNode>& nodes, const Real& y) {
  std::size_t i = 0;
  while (i + 2 < nodes.size() && y > Real(nodes[i + 1].y)) ++i;
  return i;
}

}  // namespace

double VerticalCurve::at(double y) const {
  const auto i = segment_of(nodes_, y);
  const auto& a = nodes_[i];
  const auto& b = nodes_[i + 1];
  return a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
}

Precise VerticalCurve::at(const Precise& y) const {
  const auto i = segment_of(nodes_, y);
  const auto& a = nodes_[i];
  const auto& b = nodes_[i + 1];
  return Precise(a.x) + (y - Precise(a.y)) * (Precise(b.x) - Precise(a.x)) / (Precise(b.y) - Precise(a.y));
}

// ---------------------------------------------------------------------------
// Unperturbed witnesses

double slope_capacity(const CoveringCertificate& cert) { return cert.slope_capacity; }

void check_admissible(const VerticalCurve& c, const Interval& core, double capacity) {
  const double s = c.slope_bound();
  if (s > capacity)
    throw AdmissibilityError("slope bound " + fmt(s) + " exceeds the slope capacity " + fmt(capacity));
  const Interval range = c.x_range();
  const double lo = (Interval::point(core.lo) + s).hi;
  const double hi = (Interval::point(core.hi) - Interval::point(s)).lo;
  if (range.lo < lo || range.hi > hi)
    throw AdmissibilityError("curve x-range [" + fmt(range.lo) + ", " + fmt(range.hi) +
                             "] leaves the core shrunk by the slope bound, [" + fmt(lo) + ", " + fmt(hi) + "]");
}

namespace {

constexpr double kMinTolerance = 0x1p-60;

AxisCoefficients compose(const AxisCoefficients& outer, const AxisCoefficients& inner) {
  return {outer.scale_x * inner.scale_x, outer.scale_x * inner.offset_x + outer.offset_x,
          outer.scale_y * inner.scale_y, outer.scale_y * inner.offset_y + outer.offset_y};
}

Rect2 clip(const Rect2& r, const Rect2& parent) {
  return {{std::max(r.x.lo, parent.x.lo), std::min(r.x.hi, parent.x.hi)},
          {std::max(r.y.lo, parent.y.lo), std::min(r.y.hi, parent.y.hi)}};
}

// Path through the cells, followed greedily along a curve.
class Descent {
 public:
  Descent(const ProtoBlender& pb, const VerticalCurve& c) : pb_(pb), curve_(c), rect_(pb.square) {
    std::tie(core_lo_, core_hi_) = exact_core(pb);
    core_inner_ = {round_up(core_lo_), round_down(core_hi_)};
    core_outer_ = {round_down(core_lo_), round_up(core_hi_)};
    maps_ = {pb.branches[0].exact.enclosure(), pb.branches[1].exact.enclosure()};
  }

  int depth() const { return static_cast<int>(word_.size()); }
  double diameter() const { return rect_.diameter(); }

  void step() {
    for (Symbol s : {Symbol{1}, Symbol{2}}) {
      if (try_child(s)) return;
    }
    throw WitnessError("greedy descent found no accepting child at depth " + std::to_string(depth() + 1));
  }

  Witness finish() const {
    const auto exact_ = exact_path(word_);
    Witness w;
    w.word = word_;
    w.depth = depth();
    const auto x = exact_.image_x(Rational(pb_.square.x.lo), Rational(pb_.square.x.hi));
    const auto y = exact_.image_y(Rational(pb_.square.y.lo), Rational(pb_.square.y.hi));
    w.enclosure = {{round_down(x.first), round_up(x.second)}, {round_down(y.first), round_up(y.second)}};
    const Precise ym = to_precise(Rational((y.first + y.second) / 2));
    w.point = {curve_.at(ym), ym};
    return w;
  }

 private:
  bool try_child(Symbol s) {
    const auto child = map_.compose(maps_[s - 1]);
    const Rect2 outer = clip(child.outer(pb_.square), rect_);
    const auto inner = child.x.inner(core_inner_);
    const Interval range = curve_.x_range(outer.y);
    bool accepted = inner && inner->contains(range);
    // Inconclusive only when the range fits the outer enclosure.
    if (!accepted && child.x.outer(core_outer_).contains(range)) {
      Word w = word_;
      w.push_back(s);
      const auto exact_child = exact_path(w);
      // Rounding can hide a containment that holds exactly (curves through
      // the ends of J); decide with the exact cell.
      const auto x = exact_child.image_x(core_lo_, core_hi_);
      const auto y = exact_child.image_y(Rational(pb_.square.y.lo), Rational(pb_.square.y.hi));
      const Interval x_in{round_up(x.first), round_down(x.second)};
      const Interval y_out{round_down(y.first), round_up(y.second)};
      accepted = x_in.lo <= x_in.hi && x_in.contains(curve_.x_range(y_out));
    }
    if (!accepted) return false;
    word_.push_back(s);
    map_ = child;
    rect_ = outer;
    return true;
  }

  AxisCoefficients exact_path(const Word& w) const {
    AxisCoefficients m{Rational(1), Rational(0), Rational(1), Rational(0)};
    for (Symbol s : w) m = compose(m, pb_.branch(s).exact);
    return m;
  }

  const ProtoBlender& pb_;
  const VerticalCurve& curve_;
  Rational core_lo_, core_hi_;
  Interval core_inner_, core_outer_;
  std::array<IntervalAxisAffine2, 2> maps_;
  IntervalAxisAffine2 map_ = IntervalAxisAffine2::identity();
  Rect2 rect_;
  Word word_;
};

Descent start_descent(const ProtoBlender& pb, const VerticalCurve& c) {
  const auto cert = covering_certificate(pb);
  const auto [lo, hi] = exact_core(pb);
  check_admissible(c, {round_up(lo), round_down(hi)}, cert.slope_capacity);
  return Descent(pb, c);
}

}  // namespace

Witness find_witness(const ProtoBlender& pb, const VerticalCurve& c, double tol) {
  if (!(tol >= kMinTolerance)) throw DepthLimitError("tolerance below 2^-60");
  auto d = start_descent(pb, c);
  while (d.diameter() > tol) {
    if (d.depth() == kMaxDepth) throw DepthLimitError("tolerance " + fmt(tol) + " not reached by depth 64");
    d.step();
  }
  return d.finish();
}

Witness find_witness_at_depth(const ProtoBlender& pb, const VerticalCurve& c, int depth) {
  if (depth < 0 || depth > kMaxDepth) throw DepthLimitError("depth must lie in [0, 64]");
  auto d = start_descent(pb, c);
  while (d.depth() < depth) d.step();
  return d.finish();
}


// ---------------------------------------------------------------------------
// Perturbations

double PerturbationSpec::c1_size() const {
  const Interval size = Interval::point(amplitude) * (Interval::point(1.0) + double(std::max(freq_x, freq_y)) * kPi);
  return size.hi;
}

void PerturbationSpec::check() const {
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) throw DomainError("perturbation amplitude must be >= 0");
  if (freq_x < 1 || freq_y < 1) throw DomainError("perturbation frequencies must be >= 1");
}

PerturbedSystem::PerturbedSystem(ProtoBlender b, const PerturbationSpec& s) : base(std::move(b)), spec(s) {
  spec.check();
  SplitMix64 rng(spec.seed);
  const double two_pi = 2.0 * std::numbers::pi;
  for (auto& ph : phases) {
    ph.y1 = rng.uniform(0.0, two_pi);
    ph.x2 = rng.uniform(0.0, two_pi);
    ph.y2 = rng.uniform(0.0, two_pi);
  }
  for (int i = 0; i < 2; ++i) {
    const auto& h = base.branch(static_cast<Symbol>(i + 1)).exact;
    enclosures_[i] = h.enclosure();
    precise_[i] = {to_precise(h.scale_x), to_precise(h.offset_x), to_precise(h.scale_y), to_precise(h.offset_y)};
  }
}

Vec2 PerturbedSystem::inverse_branch(Symbol s, const Vec2& p) const {
  const Vec2 q = base.branch(s).inverse(p);
  const auto& ph = phases.at(s - 1);
  const double ax = spec.freq_x * std::numbers::pi * p[0];
  const double by = spec.freq_y * std::numbers::pi * p[1];
  const double d = spec.amplitude;
  return {q[0] + d * std::sin(ax) * std::sin(by + ph.y1), q[1] + d * std::sin(ax + ph.x2) * std::sin(by + ph.y2)};
}

PreciseVec2 PerturbedSystem::inverse_branch(Symbol s, const PreciseVec2& p) const {
  using boost::multiprecision::sin;
  const auto& h = precise_.at(s - 1);
  const auto& ph = phases.at(s - 1);
  const Precise pi = boost::math::constants::pi<Precise>();
  const Precise ax = spec.freq_x * pi * p[0];
  const Precise by = spec.freq_y * pi * p[1];
  const Precise d(spec.amplitude);
  return {h[0] * p[0] + h[1] + d * sin(ax) * sin(by + Precise(ph.y1)),
          h[2] * p[1] + h[3] + d * sin(ax + Precise(ph.x2)) * sin(by + Precise(ph.y2))};
}

std::array<Interval, 2> PerturbedSystem::inverse_branch(Symbol s, const std::array<Interval, 2>& box) const {
  const auto& h = enclosures_.at(s - 1);
  const auto& ph = phases.at(s - 1);
  const Interval ax = (double(spec.freq_x) * kPi) * box[0];
  const Interval by = (double(spec.freq_y) * kPi) * box[1];
  const Interval d = Interval::point(spec.amplitude);
  return {h.x.scale * box[0] + h.x.offset + d * (sin(ax) * sin(by + ph.y1)),
          h.y.scale * box[1] + h.y.offset + d * (sin(ax + ph.x2) * sin(by + ph.y2))};
}

std::array<std::array<Interval, 2>, 2> PerturbedSystem::jacobian(Symbol s, const std::array<Interval, 2>& box) const {
  const auto& h = enclosures_.at(s - 1);
  const auto& ph = phases.at(s - 1);
  const Interval api = double(spec.freq_x) * kPi;
  const Interval bpi = double(spec.freq_y) * kPi;
  const Interval ax = api * box[0];
  const Interval by = bpi * box[1];
  const Interval d = Interval::point(spec.amplitude);
  return {{{h.x.scale + d * api * cos(ax) * sin(by + ph.y1), d * bpi * sin(ax) * cos(by + ph.y1)},
           {d * api * cos(ax + ph.x2) * sin(by + ph.y2), h.y.scale + d * bpi * sin(ax + ph.x2) * cos(by + ph.y2)}}};
}

PerturbedSystem perturb(const ProtoBlender& pb, const PerturbationSpec& spec) {
  spec.check();
  const auto cert = covering_certificate(pb);
  const double size = spec.c1_size();
  if (!(size < cert.margin))
    throw MarginExceededError("perturbation C1 size " + fmt(size) + " is not below the covering margin " +
                              fmt(cert.margin));
  return PerturbedSystem(pb, spec);
}

PerturbedCertificate perturbed_certificate(const PerturbedSystem& ps) {
  PerturbedCertificate out;
  out.c1_size = ps.spec.c1_size();
  const auto [core_lo, core_hi] = exact_core(ps.base);
  const Interval core_outer{round_down(core_lo), round_up(core_hi)};
  const Interval d = Interval::point(ps.spec.amplitude);
  const Interval api = double(ps.spec.freq_x) * kPi;
  // Pointwise bound of |delta phi_1| at x.
  auto bound_at = [&](const Rational& x) { return (d * Interval::point(sin(api * enclose(x)).mag())).hi; };

  using Span = std::pair<Rational, Rational>;
  std::array<Span, 2> inner, outer;
  double cx = 1.0, cy = 0.0;
  for (int i = 0; i < 2; ++i) {
    const Symbol s = static_cast<Symbol>(i + 1);
    const auto jac = ps.jacobian(s, {ps.base.square.x, ps.base.square.y});
    const Interval det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    if (!(jac[0][0].lo > 0.0 && jac[1][1].lo > 0.0 && det.lo > 0.0)) {
      out.failure = "perturbed branch " + std::to_string(i + 1) + " is not certified injective on the square";
      return out;
    }
    cx = std::min(cx, jac[0][0].lo);
    cy = std::max(cy, jac[1][1].mag());
    const auto& h = ps.base.branches[i].exact;
    Rational a = h.scale_x * core_lo + h.offset_x, b = h.scale_x * core_hi + h.offset_x;
    Rational ba(bound_at(core_lo)), bb(bound_at(core_hi));
    if (b < a) {
      std::swap(a, b);
      std::swap(ba, bb);
    }
    inner[i] = {a + ba, b - bb};
    outer[i] = {a - ba, b + bb};
  }
  if (inner[1].first < inner[0].first) {
    std::swap(inner[0], inner[1]);
    std::swap(outer[0], outer[1]);
  }
  auto gap = [&out](const Rational& lo, const Rational& hi) {
    out.failure = "perturbed branch images do not cover the core";
    return Interval{round_down(lo), round_up(hi)};
  };
  if (outer[0].first > core_lo) {
    out.gap = gap(core_lo, outer[0].first);
    return out;
  }
  const Rational right = std::max(outer[0].second, outer[1].second);
  if (right < core_hi) {
    out.gap = gap(right, core_hi);
    return out;
  }
  const Rational overlap_hi = std::min(inner[0].second, inner[1].second);
  if (overlap_hi <= inner[1].first) {
    out.gap = gap(overlap_hi, inner[1].first);
    return out;
  }
  CoveringCertificate cert;
  cert.core = core_outer;
  cert.margin = round_down(Rational(overlap_hi - inner[1].first));
  cert.contraction_x = cx;
  cert.contraction_y = cy;
  cert.slope_capacity = slope_capacity_rule(cert.margin, cx, cy);
  out.certificate = cert;
  return out;
}

namespace {

using Box = std::array<Interval, 2>;

// Enclosure of h^_s(b): natural extension intersected with the mean-value form.
Box branch_image(const PerturbedSystem& ps, Symbol s, const Box& b) {
  const Box natural = ps.inverse_branch(s, b);
  const Box centre{Interval::point(b[0].mid()), Interval::point(b[1].mid())};
  const Box at_centre = ps.inverse_branch(s, centre);
  const auto jac = ps.jacobian(s, b);
  Box out;
  for (int r = 0; r < 2; ++r) {
    const Interval mv = at_centre[r] + jac[r][0] * (b[0] - centre[0]) + jac[r][1] * (b[1] - centre[1]);
    out[r] = intersect(natural[r], mv).value_or(natural[r]);
  }
  return out;
}

// Enclosure of h^_w(b) = h^_{w_1}(...h^_{w_n}(b)).
Box cell_image(const PerturbedSystem& ps, const Word& w, Box b) {
  for (auto it = w.rbegin(); it != w.rend(); ++it) b = branch_image(ps, *it, b);
  return b;
}

template <class Point>
Point composite(const PerturbedSystem& ps, const Word& w, Point p) {
  for (auto it = w.rbegin(); it != w.rend(); ++it) p = ps.inverse_branch(*it, p);
  return p;
}

// A point of the curve inside the cell h^_w(S): the root of
// g(t) = x(t) - gamma(y(t)) along t -> h^_w(t, 1/2), bracketed by the edges.
PreciseVec2 crossing_point(const PerturbedSystem& ps, const Word& w, const VerticalCurve& c) {
  auto g = [&](double t) {
    const Vec2 p = composite(ps, w, Vec2{t, 0.5});
    return p[0] - c.at(std::clamp(p[1], 0.0, 1.0));
  };
  double lo = ps.base.square.x.lo, hi = ps.base.square.x.hi;
  for (int i = 0; i < 64 && lo < hi; ++i) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    (g(mid) <= 0.0 ? lo : hi) = mid;
  }
  // Secant refinement in high precision.
  auto gp = [&](const Precise& t) {
    const PreciseVec2 p = composite(ps, w, PreciseVec2{t, Precise(0.5)});
    return p[0] - c.at(p[1]);
  };
  Precise t0(lo), t1(hi);
  Precise g0 = gp(t0), g1 = gp(t1);
  const Precise eps("1e-95");
  for (int i = 0; i < 12 && abs(g1) > eps && g1 != g0; ++i) {
    const Precise t2 = t1 - g1 * (t1 - t0) / (g1 - g0);
    if (t2 < Precise(ps.base.square.x.lo) || t2 > Precise(ps.base.square.x.hi)) break;
    t0 = t1;
    g0 = g1;
    t1 = t2;
    g1 = gp(t1);
  }
  if (abs(g0) < abs(g1)) t1 = t0;
  return composite(ps, w, PreciseVec2{t1, Precise(0.5)});
}

}  // namespace

namespace {

// Descends until `depth` symbols, or until the cell's diameter is <= tol.
Witness perturbed_descent(const PerturbedSystem& ps, const VerticalCurve& c, int depth, double tol) {
  const auto pc = perturbed_certificate(ps);
  if (!pc.holds()) {
    if (!pc.gap) throw ValidationError(pc.failure);
    throw CoveringError(pc.failure + ": (" + fmt(pc.gap->lo) + ", " + fmt(pc.gap->hi) + ") is not covered",
                        pc.gap->lo, pc.gap->hi);
  }
  const auto [lo, hi] = exact_core(ps.base);
  check_admissible(c, {round_up(lo), round_down(hi)}, pc.certificate->slope_capacity);

  const Rect2& sq = ps.base.square;
  const Box square{sq.x, sq.y};
  const Box left_edge{Interval::point(sq.x.lo), sq.y};
  const Box right_edge{Interval::point(sq.x.hi), sq.y};
  Word word;
  Box cell = square;
  auto diameter = [](const Box& b) { return std::max(b[0].width(), b[1].width()); };
  while (static_cast<int>(word.size()) < depth && !(diameter(cell) <= tol)) {
    bool accepted = false;
    for (Symbol s : {Symbol{1}, Symbol{2}}) {
      word.push_back(s);
      const Box child = cell_image(ps, word, square);
      const Interval range = c.x_range(child[1]);
      const Box left = cell_image(ps, word, left_edge);
      const Box right = cell_image(ps, word, right_edge);
      if (left[0].hi <= range.lo && range.hi <= right[0].lo) {
        cell = {intersect(child[0], cell[0]).value_or(child[0]), intersect(child[1], cell[1]).value_or(child[1])};
        accepted = true;
        break;
      }
      word.pop_back();
    }
    if (!accepted)
      throw WitnessError("greedy descent found no accepting perturbed child at depth " +
                         std::to_string(word.size() + 1));
  }
  Witness w;
  w.word = word;
  w.depth = static_cast<int>(word.size());
  w.enclosure = {cell[0], cell[1]};
  w.point = word.empty() ? PreciseVec2{c.at(Precise(0.5)), Precise(0.5)} : crossing_point(ps, word, c);
  return w;
}

}  // namespace

Witness perturbed_witness(const PerturbedSystem& ps, const VerticalCurve& c, int depth) {
  if (depth < 0 || depth > kMaxDepth) throw DepthLimitError("depth must lie in [0, 64]");
  return perturbed_descent(ps, c, depth, -1.0);
}

Witness perturbed_witness_tol(const PerturbedSystem& ps, const VerticalCurve& c, double tol) {
  if (!(tol >= std::ldexp(1.0, -60))) throw DepthLimitError("tolerance below 2^-60");
  Witness w = perturbed_descent(ps, c, kMaxDepth, tol);
  if (!(std::max(w.enclosure.x.width(), w.enclosure.y.width()) <= tol))
    throw DepthLimitError("tolerance not reached by depth 64");
  return w;
}

namespace {

// Damped Newton for h^_s(q) = p in doubles; nullopt without convergence.
std::optional<Vec2> newton_double(const PerturbedSystem& ps, Symbol s, const Vec2& p, Vec2 q) {
  auto residual = [&](const Vec2& v) {
    const Vec2 r = ps.inverse_branch(s, v);
    return Vec2{r[0] - p[0], r[1] - p[1]};
  };
  Vec2 r = residual(q);
  for (int it = 0; it < 50; ++it) {
    const double norm = std::max(std::abs(r[0]), std::abs(r[1]));
    if (norm < 1e-14) return q;
    const auto jac = ps.jacobian(s, {Interval::point(q[0]), Interval::point(q[1])});
    const double a00 = jac[0][0].mid(), a01 = jac[0][1].mid(), a10 = jac[1][0].mid(), a11 = jac[1][1].mid();
    const double det = a00 * a11 - a01 * a10;
    if (det == 0.0) return std::nullopt;
    const Vec2 step{(a11 * r[0] - a01 * r[1]) / det, (a00 * r[1] - a10 * r[0]) / det};
    double t = 1.0;
    for (; t > 1e-4; t *= 0.5) {
      const Vec2 trial{q[0] - t * step[0], q[1] - t * step[1]};
      const Vec2 rt = residual(trial);
      if (std::max(std::abs(rt[0]), std::abs(rt[1])) < norm) {
        q = trial;
        r = rt;
        break;
      }
    }
    if (t <= 1e-4) return std::nullopt;
  }
  return std::nullopt;
}

// Solves h^_s(q) = p for q: damped Newton in doubles from a few starts, then
// Newton in high precision. nullopt when no verified root near S is found.
std::optional<PreciseVec2> solve_inverse_branch(const PerturbedSystem& ps, Symbol s, const PreciseVec2& p) {
  using boost::multiprecision::cos;
  using boost::multiprecision::sin;
  const PreciseVec2 affine = apply_forward(ps.base, s, p);
  if (ps.spec.amplitude == 0.0) return affine;
  const Vec2 pd = to_double(p);
  std::optional<Vec2> start;
  std::vector<Vec2> guesses{to_double(affine)};
  for (double gx : {0.1, 0.5, 0.9})
    for (double gy : {0.1, 0.5, 0.9}) guesses.push_back({gx, gy});
  for (const auto& g : guesses) {
    start = newton_double(ps, s, pd, g);
    if (start && start->at(0) > -0.01 && start->at(0) < 1.01 && start->at(1) > -0.01 && start->at(1) < 1.01) break;
    start.reset();
  }
  if (!start) return std::nullopt;

  const auto& h = ps.base.branch(s).exact;
  const auto& ph = ps.phases.at(s - 1);
  const Precise pi = boost::math::constants::pi<Precise>();
  const Precise api = ps.spec.freq_x * pi, bpi = ps.spec.freq_y * pi;
  const Precise d(ps.spec.amplitude);
  const Precise sx = to_precise(h.scale_x), sy = to_precise(h.scale_y);
  const Precise eps("1e-95");
  PreciseVec2 q = to_precise(*start);
  for (int it = 0; it < 12; ++it) {
    const PreciseVec2 r = ps.inverse_branch(s, q);
    const Precise rx = r[0] - p[0], ry = r[1] - p[1];
    if (abs(rx) < eps && abs(ry) < eps) return q;
    const Precise ax = api * q[0], by = bpi * q[1];
    const Precise a00 = sx + d * api * cos(ax) * sin(by + Precise(ph.y1));
    const Precise a01 = d * bpi * sin(ax) * cos(by + Precise(ph.y1));
    const Precise a10 = d * api * cos(ax + Precise(ph.x2)) * sin(by + Precise(ph.y2));
    const Precise a11 = sy + d * bpi * sin(ax + Precise(ph.x2)) * cos(by + Precise(ph.y2));
    const Precise det = a00 * a11 - a01 * a10;
    q[0] -= (a11 * rx - a01 * ry) / det;
    q[1] -= (a00 * ry - a10 * rx) / det;
  }
  return std::nullopt;
}

bool in_square(const Rect2& sq, const PreciseVec2& p) {
  static const Precise slack("1e-80");
  return p[0] >= Precise(sq.x.lo) - slack && p[0] <= Precise(sq.x.hi) + slack && p[1] >= Precise(sq.y.lo) - slack &&
         p[1] <= Precise(sq.y.hi) + slack;
}

}  // namespace

std::optional<std::pair<Symbol, PreciseVec2>> perturbed_forward(const PerturbedSystem& ps, const PreciseVec2& p) {
  for (Symbol s : {Symbol{1}, Symbol{2}}) {
    const auto q = solve_inverse_branch(ps, s, p);
    if (q && in_square(ps.base.square, *q)) return std::make_pair(s, *q);
  }
  return std::nullopt;
}

Membership perturbed_membership_depth(const PerturbedSystem& ps, const PreciseVec2& p0, int n) {
  if (!in_square(ps.base.square, p0)) throw DomainError("perturbed_membership_depth: point outside the square");
  Membership m;
  PreciseVec2 p = p0;
  for (int k = 0; k < n; ++k) {
    const auto step = perturbed_forward(ps, p);
    if (!step) {
      m.exit_depth = k;
      return m;
    }
    m.itinerary.push_back(step->first);
    p = step->second;
  }
  return m;
}

}  // namespace blender
