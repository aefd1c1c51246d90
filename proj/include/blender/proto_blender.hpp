#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "blender/geometry.hpp"
#include "blender/precise.hpp"

namespace blender {

// Branch symbols are 1 and 2.
using Symbol = std::uint8_t;
using Word = std::vector<Symbol>;

std::string to_string(const Word& w);
Word parse_word(std::string_view s);  // throws FormatError on symbols other than '1'/'2'

inline constexpr int kMaxDepth = 64;

// h(x, y) = (scale_x * x + offset_x, scale_y * y + offset_y), held exactly.
struct AxisCoefficients {
  Rational scale_x, offset_x, scale_y, offset_y;

  // Exact conversion of an axis-aligned double map; throws ValidationError
  // when the map has off-diagonal terms.
  static AxisCoefficients from(const AffineMap2& h);

  // Coefficients rounded to nearest.
  AffineMap2 nearest() const;
  // Coefficients as outward-rounded intervals.
  IntervalAxisAffine2 enclosure() const;
  // Exact image of [lo, hi] under the horizontal part, as (min, max).
  std::pair<Rational, Rational> image_x(const Rational& lo, const Rational& hi) const;
  std::pair<Rational, Rational> image_y(const Rational& lo, const Rational& hi) const;
};

// One inverse branch h_i = f_i^{-1} : S -> R_i of the proto-blender.
struct InverseBranch {
  AxisCoefficients exact;  // h_i
  Rect2 domain;            // R_i
  AffineMap2 inverse;      // h_i rounded to doubles

  // Domain defaults to the outward-rounded image of the unit square.
  explicit InverseBranch(AxisCoefficients h, std::optional<Rect2> domain = std::nullopt);

  double contraction_x() const;
  double contraction_y() const;
  // f restricted to R_i.
  Vec2 forward(const Vec2& p) const;
};

// Planar two-branch expanding map f : R_1 u R_2 -> S given by its inverse
// branches. R_1 and R_2 are disjoint and their horizontal projections overlap.
struct ProtoBlender {
  Rect2 square;
  std::array<InverseBranch, 2> branches;

  const InverseBranch& branch(Symbol s) const { return branches.at(s - 1); }
};

// The unit-square reference system: h_1(x,y) = (2x/3, 1/20 + y/10),
// h_2(x,y) = (2x/3 + 1/3, 17/20 + y/10).
ProtoBlender build_reference();

// Builds a system on the unit square from two axis-aligned inverse branches;
// domains are the images of the square.
ProtoBlender from_inverse_maps(const AffineMap2& h1, const AffineMap2& h2);
ProtoBlender from_coefficients(const AxisCoefficients& h1, const AxisCoefficients& h2);

// Reference system with R_2 moved to [7/10,1] x [0.85,0.95] (horizontal
// contraction 3/10): the projections of R_1 and R_2 no longer overlap.
ProtoBlender build_disjoint_variant();

struct Check {
  std::string name;
  bool passed = false;
  double measured = 0.0;
};

struct ValidationReport {
  std::vector<Check> checks;

  bool ok() const;
  const Check& at(std::string_view name) const;  // throws std::out_of_range
};

ValidationReport validate(const ProtoBlender& pb);

struct Cell {
  Word word;
  Rect2 rect;
};

// Depth-n approximant of the Cantor set: the 2^n rectangles of f^{-n}(S).
struct CantorApprox {
  int depth = 0;
  std::vector<Cell> cells;
};

// Composite inverse branch h_{w_1} o ... o h_{w_n} with interval coefficients.
IntervalAxisAffine2 composite_inverse(const ProtoBlender& pb, const Word& w);

// Visits every depth-n cell in lexicographic word order without storing them.
void for_each_cell(const ProtoBlender& pb, int n,
                   const std::function<void(const Word&, const Rect2&)>& visit);

// Throws DepthLimitError for n outside [0, 64], and when the 2^n cells would
// not fit the materialization cap (n > 24); use for_each_cell for those.
CantorApprox preimage_rectangles(const ProtoBlender& pb, int n);

IntervalUnion horizontal_projection(const ProtoBlender& pb, int n);

struct CoveringCertificate {
  Interval core;               // J
  double margin = 0.0;         // m: width of h_1^x(J) n h_2^x(J)
  double slope_capacity = 0.0; // s*
  double contraction_x = 0.0;  // weakest horizontal contraction over branches
  double contraction_y = 0.0;  // strongest vertical contraction over branches
};

// J: the interval between the x-coordinates of the two branch fixed points,
// exactly. Throws DegenerateError when a horizontal part is not contracting.
std::pair<Rational, Rational> exact_core(const ProtoBlender& pb);

// s* = m * min_{0<=k<=64} (c_x/c_y)^k.
double slope_capacity_rule(double margin, double contraction_x, double contraction_y);

// Throws CoveringError carrying the uncovered sub-interval of J when the two
// horizontal images fail to cover J, and ValidationError when the covering
// holds but the system violates its structural constraints.
CoveringCertificate covering_certificate(const ProtoBlender& pb);

struct PeriodicPoint {
  PreciseVec2 point;
  int period = 0;  // minimal period under f

  Vec2 approx() const { return to_double(point); }
};

// Unique fixed point of h_{w_1} o ... o h_{w_n}.
PeriodicPoint periodic_point(const ProtoBlender& pb, const Word& w);

// Concatenated de Bruijn word over {1,2}: every word of length n occurs as a
// contiguous subword. Length 2^n + n - 1.
Word dense_itinerary(int n);

struct Membership {
  Word itinerary;
  std::optional<int> exit_depth;  // first iterate that is outside R_1 u R_2

  bool survived() const { return !exit_depth.has_value(); }
};

// f restricted to R_s, in high precision.
PreciseVec2 apply_forward(const ProtoBlender& pb, Symbol s, const PreciseVec2& p);
// The branch whose domain contains p (within a 1e-80 boundary slack), if any.
std::optional<Symbol> branch_of(const ProtoBlender& pb, const PreciseVec2& p);

// Brute-force forward iteration of f in high precision. A point is in R_i when
// its preimage under h_i lies in the square. Throws DomainError if p is not in S.
Membership membership_depth(const ProtoBlender& pb, const PreciseVec2& p, int n);
Membership membership_depth(const ProtoBlender& pb, const Vec2& p, int n);

}  // namespace blender
