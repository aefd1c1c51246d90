#pragma once

#include <array>
#include <optional>
#include <vector>

#include "blender/geometry.hpp"
#include "blender/precise.hpp"
#include "blender/proto_blender.hpp"
#include "blender/robust_intersection.hpp"

namespace blender {

using PreciseVec3 = std::array<Precise, 3>;

// Skew product on the cube Q = [0,1]^3. On the slab Y_i the map is
// g(x, y, z) = (h_i^x(x), e_i(y), h_i^z(z)), where the proto-blender acts on
// (x, z) and e_i stretches Y_i onto [0, 1] by the factor mu. With `fold` set
// the second stretch reverses orientation.
struct Blender3D {
  ProtoBlender pb;
  double mu = 10.0;
  bool fold = true;

  Interval slab(Symbol s) const;  // Y_1 = [0, 1/mu], Y_2 = [1 - 1/mu, 1]
  // e_s and its inverse, in high precision.
  Precise stretch(Symbol s, const Precise& y) const;
  Precise unstretch(Symbol s, const Precise& y) const;
  // The slab holding y, if any.
  std::optional<Symbol> slab_of(const Precise& y) const;
};

// Throws CoveringError / ValidationError when pb has no certificate and
// DomainError unless mu > 2 (touching or overlapping slabs).
Blender3D build_blender3d(const ProtoBlender& pb, double mu = 10.0, bool fold = true);

// Q n g(Q) cut at height y: R_1 and R_2, whatever y is. Throws DomainError
// for y outside [0, 1].
std::array<Rect2, 2> body_intersection_slice(const Blender3D& b3, double y);

// g^{-1} restricted to R_s x {y}, on the (x, z) coordinates: the proto-blender
// forward map. Throws DomainError if p is not in R_s.
Vec2 g_inverse_on_slice(const Blender3D& b3, Symbol s, const Vec2& p);

// Boxes (x, z) cell x [0, 1] in y approximating W^u of the invariant set.
struct UnstableBoxSet {
  int depth = 0;
  std::vector<Cell> boxes;
};

UnstableBoxSet unstable_set_approx(const Blender3D& b3, int n);

// A finite orbit, stored in doubles; exit_step is the first index whose point
// leaves the region the map is defined on.
struct Orbit3 {
  std::vector<Vec3> points;
  std::optional<int> exit_step;

  bool survived() const { return !exit_step.has_value(); }
};

// Iterates g from p while the point lies in Y_1 u Y_2 slabs. Throws
// DomainError if p is not in Q.
Orbit3 forward_orbit(const Blender3D& b3, const PreciseVec3& p, int n);
Orbit3 forward_orbit(const Blender3D& b3, const Vec3& p, int n);

// Iterates g^{-1} from p while (x, z) lies in R_1 u R_2; the branch is the
// rectangle holding (x, z). Throws DomainError if p is not in Q.
Orbit3 backward_orbit(const Blender3D& b3, const PreciseVec3& p, int n);

// Curve x = gamma_x(z), y = gamma_y(z) through the cube.
struct SpaceCurve {
  VerticalCurve x;
  VerticalCurve y;
};

struct UnstableWitness {
  Witness planar;     // for the curve (gamma_x(z), z) in the (x, z) square
  PreciseVec3 point;  // (x, gamma_y(z), z) at the planar witness point
};

// Reduces to find_witness on the projected curve; throws as find_witness.
UnstableWitness curve_meets_unstable(const Blender3D& b3, const SpaceCurve& c, double tol);

}  // namespace blender
