#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace blender {

using Vec2 = std::array<double, 2>;
using Vec3 = std::array<double, 3>;
using Mat2 = std::array<std::array<double, 2>, 2>;
using Mat3 = std::array<std::array<double, 3>, 3>;

// Next representable double towards -inf / +inf.
double round_down(double x);
double round_up(double x);

// Closed interval [lo, hi] with outward-rounded arithmetic: each endpoint is
// rounded away from the interior (at most one ulp), so the result always
// contains the exact-arithmetic result.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  static Interval make(double lo, double hi);  // throws DegenerateError if lo > hi
  static Interval point(double x) { return {x, x}; }

  double width() const;  // rounded up
  double mid() const { return lo + 0.5 * (hi - lo); }
  double mag() const;  // max |x| over the interval
  bool contains(double x) const { return lo <= x && x <= hi; }
  bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
  // Strict interior containment.
  bool contains_interior(const Interval& o) const { return lo < o.lo && o.hi < hi; }

  bool operator==(const Interval&) const = default;
};

Interval operator+(const Interval& a, const Interval& b);
Interval operator-(const Interval& a, const Interval& b);
Interval operator*(const Interval& a, const Interval& b);
Interval operator*(double s, const Interval& a);
// Throws DegenerateError when b contains zero.
Interval operator/(const Interval& a, const Interval& b);
Interval operator+(const Interval& a, double s);
Interval hull(const Interval& a, const Interval& b);
std::optional<Interval> intersect(const Interval& a, const Interval& b);
// Widens both ends by r (r >= 0), outward rounded.
Interval inflate(const Interval& a, double r);

// Enclosures of sin/cos over an interval. std::sin/std::cos are treated as
// accurate to two ulps; extrema inside the argument range are detected exactly.
Interval sin(const Interval& a);
Interval cos(const Interval& a);

// Sorted union of closed intervals with strictly positive gaps between parts.
class IntervalUnion {
 public:
  IntervalUnion() = default;
  explicit IntervalUnion(std::span<const Interval> items);

  // Functional insertion; touching or overlapping parts merge.
  IntervalUnion insert(const Interval& iv) const;
  void insert_in_place(const Interval& iv);

  const std::vector<Interval>& parts() const { return parts_; }
  bool empty() const { return parts_.empty(); }

 private:
  std::vector<Interval> parts_;
};

struct ConnectivityReport {
  bool connected = false;
  double largest_gap = 0.0;
  // Open gap (lo, hi) achieving largest_gap; only meaningful when !connected.
  Interval gap{};
};

// Throws DegenerateError on an empty union (vacuous projection).
ConnectivityReport is_connected(const IntervalUnion& u);

struct Rect2 {
  Interval x;
  Interval y;

  static Rect2 make(Interval x, Interval y) { return {x, y}; }
  bool contains(const Vec2& p) const { return x.contains(p[0]) && y.contains(p[1]); }
  bool contains(const Rect2& r) const { return x.contains(r.x) && y.contains(r.y); }
  // Sup-norm diameter.
  double diameter() const;

  bool operator==(const Rect2&) const = default;
};

bool intersects(const Rect2& a, const Rect2& b);
// Hausdorff distance between two axis-aligned rectangles (sup norm on R^2).
double hausdorff(const Rect2& a, const Rect2& b);

class AffineMap2 {
 public:
  // Throws DegenerateError if |det| <= 1e-12, or if axis_aligned is set and an
  // off-diagonal entry is nonzero.
  AffineMap2(const Mat2& linear, const Vec2& offset, bool axis_aligned = false);
  static AffineMap2 axis(double sx, double ox, double sy, double oy);

  const Mat2& linear() const { return linear_; }
  const Vec2& offset() const { return offset_; }
  bool axis_aligned() const { return axis_aligned_; }
  double det() const;

  Vec2 operator()(const Vec2& p) const;
  // Outward-rounded enclosure of the image of a rectangle.
  Rect2 operator()(const Rect2& r) const;
  AffineMap2 inverse() const;

 private:
  Mat2 linear_;
  Vec2 offset_;
  bool axis_aligned_;
};

// Unique solution of m(p) = p. Throws DegenerateError when I - linear is singular.
Vec2 affine_fixed_point(const AffineMap2& m);

// One-dimensional affine map t -> scale*t + offset whose coefficients are
// themselves intervals, so compositions stay rigorous.
struct IntervalAffine1 {
  Interval scale{1.0, 1.0};
  Interval offset{0.0, 0.0};

  // Enclosure of the image of x.
  Interval outer(const Interval& x) const;
  // Interval guaranteed to lie inside the exact image of x; empty if the
  // endpoint enclosures cross.
  std::optional<Interval> inner(const Interval& x) const;
  // (*this) o other
  IntervalAffine1 compose(const IntervalAffine1& other) const;
};

// Axis-aligned 2D affine map with interval coefficients.
struct IntervalAxisAffine2 {
  IntervalAffine1 x;
  IntervalAffine1 y;

  static IntervalAxisAffine2 identity() { return {}; }
  static IntervalAxisAffine2 from(const AffineMap2& m);  // requires axis-aligned m
  Rect2 outer(const Rect2& r) const { return {x.outer(r.x), y.outer(r.y)}; }
  IntervalAxisAffine2 compose(const IntervalAxisAffine2& other) const {
    return {x.compose(other.x), y.compose(other.y)};
  }
};

class AffineMap3 {
 public:
  AffineMap3(const Mat3& linear, const Vec3& offset);  // throws if |det| <= 1e-12

  const Mat3& linear() const { return linear_; }
  const Vec3& offset() const { return offset_; }
  double det() const;
  Vec3 operator()(const Vec3& p) const;
  AffineMap3 inverse() const;
  AffineMap3 translated(const Vec3& t) const;

  bool operator==(const AffineMap3&) const = default;

 private:
  Mat3 linear_;
  Vec3 offset_;
};

double sup_distance(const Vec2& a, const Vec2& b);
double sup_norm(const Vec3& a);

}  // namespace blender
