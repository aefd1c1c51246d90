#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "blender/geometry.hpp"
#include "blender/precise.hpp"
#include "blender/proto_blender.hpp"

namespace blender {

// Node of a piecewise-linear graph x = gamma(y).
struct CurveNode {
  double y = 0.0;
  double x = 0.0;

  bool operator==(const CurveNode&) const = default;
};

// Piecewise-linear curve x = gamma(y) over y in [0, 1].
class VerticalCurve {
 public:
  // Needs >= 2 nodes, y strictly increasing from exactly 0 to exactly 1, and
  // every x in [0, 1]; throws DomainError otherwise.
  explicit VerticalCurve(std::vector<CurveNode> nodes);

  // x = centre + slope * (y - 1/2), sampled at y = 0 and y = 1.
  static VerticalCurve line(double centre, double slope = 0.0);

  const std::vector<CurveNode>& nodes() const { return nodes_; }
  // max |dx/dy| over the segments, rounded up.
  double slope_bound() const { return slope_bound_; }

  // Enclosure of gamma over y (clipped to [0, 1]).
  Interval x_range(const Interval& y) const;
  Interval x_range() const { return x_range({0.0, 1.0}); }

  double at(double y) const;
  Precise at(const Precise& y) const;

 private:
  std::vector<CurveNode> nodes_;
  std::vector<Interval> slopes_;
  double slope_bound_ = 0.0;
};

struct Witness {
  Word word;
  Rect2 enclosure;    // deepest cell
  PreciseVec2 point;  // on the curve, inside the enclosure
  int depth = 0;
};

// s* of a certificate.
double slope_capacity(const CoveringCertificate& cert);

// Throws AdmissibilityError naming the violated bound when the slope exceeds
// `capacity` or the curve's x-range leaves `core` shrunk by its slope bound.
void check_admissible(const VerticalCurve& c, const Interval& core, double capacity);

// Greedy descent through the Cantor cells along the curve, lower symbol first,
// until the enclosure's sup-norm diameter is <= tol. Every accepted child
// satisfies: the curve's x-range over the child's y-interval lies inside the
// child's image of J. Throws CoveringError / ValidationError when the system
// has no certificate, AdmissibilityError for inadmissible curves, and
// DepthLimitError when tol < 2^-60 or tol is not reached by depth 64.
Witness find_witness(const ProtoBlender& pb, const VerticalCurve& c, double tol);
// Same descent stopped at a fixed depth in [0, 64].
Witness find_witness_at_depth(const ProtoBlender& pb, const VerticalCurve& c, int depth);

struct PerturbationSpec {
  double amplitude = 0.0;  // delta
  int freq_x = 1;          // a
  int freq_y = 1;          // b
  std::uint64_t seed = 0;

  // delta * (1 + pi * max(a, b)), rounded up.
  double c1_size() const;
  // Throws DomainError on negative amplitude or frequencies below 1.
  void check() const;
};

// Phases drawn from the seed, one set per branch.
struct BranchPhases {
  double y1 = 0.0;  // phi_1 = sin(a pi x) sin(b pi y + y1)
  double x2 = 0.0;  // phi_2 = sin(a pi x + x2) sin(b pi y + y2)
  double y2 = 0.0;
};

// Inverse branches h^_i = h_i + delta (phi_1, phi_2). phi_1 carries no
// x-phase, so it vanishes on the vertical edges of the square.
struct PerturbedSystem {
  ProtoBlender base;
  PerturbationSpec spec;
  std::array<BranchPhases, 2> phases;

  // No margin check; see perturb().
  PerturbedSystem(ProtoBlender base, const PerturbationSpec& spec);

  Vec2 inverse_branch(Symbol s, const Vec2& p) const;
  PreciseVec2 inverse_branch(Symbol s, const PreciseVec2& p) const;
  // Enclosures of h^_s and its Jacobian over a box.
  std::array<Interval, 2> inverse_branch(Symbol s, const std::array<Interval, 2>& box) const;
  std::array<std::array<Interval, 2>, 2> jacobian(Symbol s, const std::array<Interval, 2>& box) const;

 private:
  // Derived from base at construction.
  std::array<IntervalAxisAffine2, 2> enclosures_;
  std::array<std::array<Precise, 4>, 2> precise_;  // scale_x, offset_x, scale_y, offset_y
};

// Throws MarginExceededError unless spec.c1_size() < m of the base certificate.
PerturbedSystem perturb(const ProtoBlender& pb, const PerturbationSpec& spec);

struct PerturbedCertificate {
  std::optional<CoveringCertificate> certificate;  // set when the covering holds
  std::optional<Interval> gap;                     // uncovered piece, when that is the failure
  std::string failure;                             // reason, empty when the covering holds
  double c1_size = 0.0;

  bool holds() const { return certificate.has_value(); }
};

// Covering check for the perturbed branches over the base core J. Each end of
// the affine image of J is moved inwards by the perturbation bound at that
// point, delta * |sin(a pi x)|. Each perturbed branch must also have a
// Jacobian enclosure over S with positive diagonal and determinant (a
// P-matrix), which makes it injective on S.
PerturbedCertificate perturbed_certificate(const PerturbedSystem& ps);

// Greedy descent through the perturbed cells to the given depth. A child is
// accepted when the enclosures of its left and right edges lie on either side
// of the curve's x-range over the child's y-enclosure; by the intermediate
// value theorem the curve then meets the cell. Throws as find_witness, with
// CoveringError when the perturbed certificate fails.
Witness perturbed_witness(const PerturbedSystem& ps, const VerticalCurve& c, int depth);
// Same descent stopped once the enclosure's diameter is <= tol; throws
// DepthLimitError as find_witness.
Witness perturbed_witness_tol(const PerturbedSystem& ps, const VerticalCurve& c, double tol);

// Forward map of the perturbed system on the branch holding p (Newton on the
// inverse branch in high precision); nullopt when p lies in neither branch.
std::optional<std::pair<Symbol, PreciseVec2>> perturbed_forward(const PerturbedSystem& ps, const PreciseVec2& p);
Membership perturbed_membership_depth(const PerturbedSystem& ps, const PreciseVec2& p, int n);

}  // namespace blender
