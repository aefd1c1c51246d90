#include "blender/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "blender/errors.hpp"

namespace blender {

double round_down(double x) { return std::nextafter(x, -std::numeric_limits<double>::infinity()); }
double round_up(double x) { return std::nextafter(x, std::numeric_limits<double>::infinity()); }

Interval Interval::make(double lo, double hi) {
  if (!(lo <= hi)) throw DegenerateError("interval with lo > hi");
  return {lo, hi};
}

double Interval::mag() const { return std::max(std::abs(lo), std::abs(hi)); }

namespace {

// Directed rounding through error-free transformations: the rounding error of
// a sum (TwoSum) or product (FMA) tells which side of the exact result the
// rounded value lies on, so results are only widened when actually inexact.
double add_down(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  const double err = (a - (s - bb)) + (b - bb);
  return err < 0.0 ? round_down(s) : s;
}

double add_up(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  const double err = (a - (s - bb)) + (b - bb);
  return err > 0.0 ? round_up(s) : s;
}

double mul_down(double a, double b) {
  const double p = a * b;
  return std::fma(a, b, -p) < 0.0 ? round_down(p) : p;
}

double mul_up(double a, double b) {
  const double p = a * b;
  return std::fma(a, b, -p) > 0.0 ? round_up(p) : p;
}

// a / b = q + r / b with r = a - q b exact.
double div_down(double a, double b) {
  const double q = a / b;
  const double r = std::fma(-q, b, a);
  return (r != 0.0 && ((r < 0.0) != (b < 0.0))) ? round_down(q) : q;
}

double div_up(double a, double b) {
  const double q = a / b;
  const double r = std::fma(-q, b, a);
  return (r != 0.0 && ((r < 0.0) == (b < 0.0))) ? round_up(q) : q;
}

}  // namespace

Interval operator/(const Interval& a, const Interval& b) {
  if (b.lo <= 0.0 && b.hi >= 0.0) throw DegenerateError("interval division by an interval containing zero");
  const double lo = std::min({div_down(a.lo, b.lo), div_down(a.lo, b.hi), div_down(a.hi, b.lo), div_down(a.hi, b.hi)});
  const double hi = std::max({div_up(a.lo, b.lo), div_up(a.lo, b.hi), div_up(a.hi, b.lo), div_up(a.hi, b.hi)});
  return {lo, hi};
}

Interval operator+(const Interval& a, const Interval& b) { return {add_down(a.lo, b.lo), add_up(a.hi, b.hi)}; }

Interval operator-(const Interval& a, const Interval& b) { return {add_down(a.lo, -b.hi), add_up(a.hi, -b.lo)}; }

Interval operator*(const Interval& a, const Interval& b) {
  const double lo = std::min({mul_down(a.lo, b.lo), mul_down(a.lo, b.hi), mul_down(a.hi, b.lo), mul_down(a.hi, b.hi)});
  const double hi = std::max({mul_up(a.lo, b.lo), mul_up(a.lo, b.hi), mul_up(a.hi, b.lo), mul_up(a.hi, b.hi)});
  return {lo, hi};
}

double Interval::width() const { return add_up(hi, -lo); }

Interval operator*(double s, const Interval& a) { return Interval::point(s) * a; }

Interval operator+(const Interval& a, double s) { return a + Interval::point(s); }

Interval hull(const Interval& a, const Interval& b) {
  return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

std::optional<Interval> intersect(const Interval& a, const Interval& b) {
  const double lo = std::max(a.lo, b.lo);
  const double hi = std::min(a.hi, b.hi);
  if (lo > hi) return std::nullopt;
  return Interval{lo, hi};
}

Interval inflate(const Interval& a, double r) { return {add_down(a.lo, -r), add_up(a.hi, r)}; }

namespace {

// Does the set {base + 2*pi*k} meet [lo, hi] (with a small slack that errs on
// the side of reporting an extremum)?
bool hits_phase(double lo, double hi, double base) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  constexpr double slack = 1e-12;
  const double k = std::ceil((lo - slack - base) / two_pi);
  return base + k * two_pi <= hi + slack;
}

Interval trig_enclosure(const Interval& a, double (*fn)(double), double max_phase, double min_phase) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (a.hi - a.lo >= two_pi) return {-1.0, 1.0};
  const double fa = fn(a.lo);
  const double fb = fn(a.hi);
  double lo = std::min(fa, fb);
  double hi = std::max(fa, fb);
  lo = round_down(round_down(lo));
  hi = round_up(round_up(hi));
  if (hits_phase(a.lo, a.hi, max_phase)) hi = 1.0;
  if (hits_phase(a.lo, a.hi, min_phase)) lo = -1.0;
  return {std::max(lo, -1.0), std::min(hi, 1.0)};
}

double sin_fn(double x) { return std::sin(x); }
double cos_fn(double x) { return std::cos(x); }

}  // namespace

Interval sin(const Interval& a) {
  return trig_enclosure(a, &sin_fn, std::numbers::pi / 2, -std::numbers::pi / 2);
}

Interval cos(const Interval& a) { return trig_enclosure(a, &cos_fn, 0.0, std::numbers::pi); }

IntervalUnion::IntervalUnion(std::span<const Interval> items) {
  std::vector<Interval> sorted(items.begin(), items.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi); });
  for (const auto& iv : sorted) {
    if (!parts_.empty() && iv.lo <= parts_.back().hi) {
      parts_.back().hi = std::max(parts_.back().hi, iv.hi);
    } else {
      parts_.push_back(iv);
    }
  }
}

void IntervalUnion::insert_in_place(const Interval& iv) {
  // First part whose hi reaches iv.lo; everything from there that starts at or
  // before iv.hi merges with iv.
  auto first = std::lower_bound(parts_.begin(), parts_.end(), iv.lo,
                                [](const Interval& p, double v) { return p.hi < v; });
  auto last = first;
  Interval merged = iv;
  while (last != parts_.end() && last->lo <= iv.hi) {
    merged = hull(merged, *last);
    ++last;
  }
  first = parts_.erase(first, last);
  parts_.insert(first, merged);
}

IntervalUnion IntervalUnion::insert(const Interval& iv) const {
  IntervalUnion out = *this;
  out.insert_in_place(iv);
  return out;
}

ConnectivityReport is_connected(const IntervalUnion& u) {
  if (u.empty()) throw DegenerateError("connectivity of an empty union: projection is vacuous");
  ConnectivityReport r;
  r.connected = u.parts().size() == 1;
  const auto& p = u.parts();
  for (std::size_t i = 1; i < p.size(); ++i) {
    const double g = p[i].lo - p[i - 1].hi;
    if (g > r.largest_gap) {
      r.largest_gap = g;
      r.gap = {p[i - 1].hi, p[i].lo};
    }
  }
  return r;
}

double Rect2::diameter() const { return std::max(x.width(), y.width()); }

bool intersects(const Rect2& a, const Rect2& b) {
  return intersect(a.x, b.x).has_value() && intersect(a.y, b.y).has_value();
}

double hausdorff(const Rect2& a, const Rect2& b) {
  auto d1 = [](const Interval& u, const Interval& v) {
    return std::max(std::abs(u.lo - v.lo), std::abs(u.hi - v.hi));
  };
  return std::max(d1(a.x, b.x), d1(a.y, b.y));
}

AffineMap2::AffineMap2(const Mat2& linear, const Vec2& offset, bool axis_aligned)
    : linear_(linear), offset_(offset), axis_aligned_(axis_aligned) {
  if (!(std::abs(det()) > 1e-12)) throw DegenerateError("affine map is not invertible");
  if (axis_aligned_ && (linear_[0][1] != 0.0 || linear_[1][0] != 0.0))
    throw DegenerateError("axis-aligned affine map with nonzero off-diagonal entries");
}

AffineMap2 AffineMap2::axis(double sx, double ox, double sy, double oy) {
  return AffineMap2({{{sx, 0.0}, {0.0, sy}}}, {ox, oy}, true);
}

double AffineMap2::det() const { return linear_[0][0] * linear_[1][1] - linear_[0][1] * linear_[1][0]; }

Vec2 AffineMap2::operator()(const Vec2& p) const {
  return {linear_[0][0] * p[0] + linear_[0][1] * p[1] + offset_[0],
          linear_[1][0] * p[0] + linear_[1][1] * p[1] + offset_[1]};
}

Rect2 AffineMap2::operator()(const Rect2& r) const {
  auto row = [&](int i) {
    return Interval::point(linear_[i][0]) * r.x + Interval::point(linear_[i][1]) * r.y + offset_[i];
  };
  return {row(0), row(1)};
}

AffineMap2 AffineMap2::inverse() const {
  const double d = det();
  const Mat2 inv{{{linear_[1][1] / d, -linear_[0][1] / d}, {-linear_[1][0] / d, linear_[0][0] / d}}};
  const Vec2 off{-(inv[0][0] * offset_[0] + inv[0][1] * offset_[1]),
                 -(inv[1][0] * offset_[0] + inv[1][1] * offset_[1])};
  return AffineMap2(inv, off, axis_aligned_);
}

Vec2 affine_fixed_point(const AffineMap2& m) {
  const auto& a = m.linear();
  // Solve (I - A) p = b.
  const double m00 = 1.0 - a[0][0], m01 = -a[0][1];
  const double m10 = -a[1][0], m11 = 1.0 - a[1][1];
  const double d = m00 * m11 - m01 * m10;
  if (std::abs(d) <= 1e-12) throw DegenerateError("I - linear is singular: eigenvalue 1");
  const auto& b = m.offset();
  return {(m11 * b[0] - m01 * b[1]) / d, (-m10 * b[0] + m00 * b[1]) / d};
}

Interval IntervalAffine1::outer(const Interval& x) const {
  return hull(scale * Interval::point(x.lo) + offset, scale * Interval::point(x.hi) + offset);
}

std::optional<Interval> IntervalAffine1::inner(const Interval& x) const {
  const Interval a = scale * Interval::point(x.lo) + offset;
  const Interval b = scale * Interval::point(x.hi) + offset;
  Interval lower = a, upper = b;
  if (scale.hi < 0.0) std::swap(lower, upper);
  else if (!(scale.lo > 0.0)) return std::nullopt;
  if (lower.hi > upper.lo) return std::nullopt;
  return Interval{lower.hi, upper.lo};
}

IntervalAffine1 IntervalAffine1::compose(const IntervalAffine1& other) const {
  return {scale * other.scale, scale * other.offset + offset};
}

IntervalAxisAffine2 IntervalAxisAffine2::from(const AffineMap2& m) {
  if (!m.axis_aligned()) throw DegenerateError("interval axis map from a non-axis-aligned map");
  return {{Interval::point(m.linear()[0][0]), Interval::point(m.offset()[0])},
          {Interval::point(m.linear()[1][1]), Interval::point(m.offset()[1])}};
}

namespace {

double det3(const Mat3& a) {
  return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
         a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
}

}  // namespace

AffineMap3::AffineMap3(const Mat3& linear, const Vec3& offset) : linear_(linear), offset_(offset) {
  if (!(std::abs(det()) > 1e-12)) throw DegenerateError("affine 3D map is not invertible");
}

double AffineMap3::det() const { return det3(linear_); }

Vec3 AffineMap3::operator()(const Vec3& p) const {
  Vec3 r{};
  for (int i = 0; i < 3; ++i)
    r[i] = linear_[i][0] * p[0] + linear_[i][1] * p[1] + linear_[i][2] * p[2] + offset_[i];
  return r;
}

AffineMap3 AffineMap3::inverse() const {
  const auto& a = linear_;
  const double d = det();
  Mat3 inv{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      // cofactor of a[j][i]
      const int r0 = (j + 1) % 3, r1 = (j + 2) % 3, c0 = (i + 1) % 3, c1 = (i + 2) % 3;
      inv[i][j] = (a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0]) / d;
    }
  }
  Vec3 off{};
  for (int i = 0; i < 3; ++i)
    off[i] = -(inv[i][0] * offset_[0] + inv[i][1] * offset_[1] + inv[i][2] * offset_[2]);
  return AffineMap3(inv, off);
}

AffineMap3 AffineMap3::translated(const Vec3& t) const {
  return AffineMap3(linear_, {offset_[0] + t[0], offset_[1] + t[1], offset_[2] + t[2]});
}

double sup_distance(const Vec2& a, const Vec2& b) {
  return std::max(std::abs(a[0] - b[0]), std::abs(a[1] - b[1]));
}

double sup_norm(const Vec3& a) { return std::max({std::abs(a[0]), std::abs(a[1]), std::abs(a[2])}); }

}  // namespace blender
