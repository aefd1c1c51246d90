#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "blender/blender3d.hpp"
#include "blender/geometry.hpp"
#include "blender/robust_intersection.hpp"

namespace blender {

// Linear saddle on the box [-1, 1]^3 with fixed point p at the origin:
// (u, v, w) -> (l1 u, l2 v, l3 w), stable plane {w = 0}, unstable w-axis.
struct SaddleChart {
  Vec3 rates{0.5, 0.5, 2.0};

  // Throws DomainError unless 0 < l1, l2 < 1 < l3.
  void check() const;
  Vec3 step(const Vec3& p) const { return {rates[0] * p[0], rates[1] * p[1], rates[2] * p[2]}; }
};

enum class Chart : int { saddle = 0, cube = 1 };

// Saddle chart and blender cube Q joined by affine transitions:
//  - a saddle point stepping past w = 1 (with w <= l3) enters Q through t_out;
//  - a cube point whose y lies in exit_gate enters the saddle chart through t_in.
// Any other escape leaves the model.
struct CycleScenario {
  SaddleChart saddle;
  Blender3D blender;
  std::optional<PerturbationSpec> perturbation;  // nonlinear perturbation of the blender branches
  AffineMap3 t_out;
  AffineMap3 t_in;
  Interval exit_gate{0.4, 0.6};

  // Throws DomainError / ValidationError when charts or gates are inconsistent:
  // the exit gate must lie strictly between the blender slabs.
  void check() const;
  // The blender branches, perturbed when a perturbation is present.
  PerturbedSystem branches() const;
};

CycleScenario build_reference_cycle();

// Central fiber of t_in^{-1}({w = 0}): the curve of Q points at the gate's
// middle height that t_in sends onto the stable plane of p.
SpaceCurve stable_fiber(const CycleScenario& sc);

// W^s(p) meets W^u(Lambda): a witness that the stable fiber meets the
// unstable set of the blender, with enclosure diameter <= tol. Its point is
// carried onto the stable plane of p by t_in, and its backward orbit stays in
// Q. Throws ConnectionBrokenError carrying the violated margin (negative)
// when the fiber leaves Q or is not admissible for the blender.
UnstableWitness connection_p_to_blender(const CycleScenario& sc, double tol);

struct ConfinementReport {
  int depth = 0;
  Word itinerary;                     // slab choices, lower slab first
  std::vector<Interval> intervals;    // surviving parameters at depths 0..depth, nested
  std::pair<Rational, Rational> exact;  // surviving parameters at `depth`, exactly
  double width = 0.0;                 // of the deepest interval, rounded down
};

// W^u(p) meets W^s(Lambda): the local unstable segment {(0, 0, s) : s in
// [1/l3, 1]} is carried by the saddle step and t_out into Q; returns nested
// parameter intervals whose points stay in the slabs for `depth` forward
// steps of g. Throws ConnectionBrokenError when the image misses Q or no
// parameter survives.
ConfinementReport connection_blender_to_p(const CycleScenario& sc, int depth);

struct ConnectionMargins {
  double p_to_blender = 0.0;  // largest t_in translation keeping the fiber admissible
  double blender_to_p = 0.0;  // largest t_out translation keeping a whole slab in the image
  double branches = 0.0;      // largest branch perturbation size with a valid certificate

  double min() const { return std::min({p_to_blender, blender_to_p, branches}); }
};

ConnectionMargins connection_margins(const CycleScenario& sc);

// Seeded translations of sup-norm <= delta added to t_out and t_in, and a
// branch perturbation with C1 size <= delta (frequencies (2, 2)). delta = 0
// returns the scenario unchanged. Throws MarginExceededError unless delta is
// below every connection margin, DomainError for negative delta.
CycleScenario perturb_scenario(const CycleScenario& sc, double delta, std::uint64_t seed);

struct GapReport {
  double delta = 0.0;
  double gap = 0.0;                  // distance between the two one-dimensional arcs
  Vec3 unstable_point{}, stable_point{};  // closest pair
};

// Two saddles whose one-dimensional manifolds meet along an arc; the
// connecting map is translated by delta transversally to the arc. Throws
// DomainError for negative delta.
GapReport nonrobust_cycle_demo(double delta);

struct OrbitEntry {
  int step = 0;
  Chart chart = Chart::saddle;
  Vec3 point{};
  bool near_p = false;
  bool near_blender = false;
};

struct OrbitLog {
  std::vector<OrbitEntry> steps;
  int hits_p = 0;        // entries within eps of p (sup norm)
  int hits_blender = 0;  // entries within eps of the depth-8 unstable boxes
  bool exited = false;   // the orbit left every chart before the budget ran out
};

// Logs up to `budget` entries, the start included. Throws DomainError when
// the start is outside its chart.
OrbitLog simulate_cycle_orbit(const CycleScenario& sc, Chart chart, const Vec3& start, int budget, double eps);

}  // namespace blender
