#include "blender/blender3d.hpp"

#include <sstream>

#include "blender/errors.hpp"

namespace blender {

Interval Blender3D::slab(Symbol s) const {
  const Interval inv = Interval::point(1.0) / Interval::point(mu);
  if (s == 1) return {0.0, inv.hi};
  return {(Interval::point(1.0) - inv).lo, 1.0};
}

Precise Blender3D::stretch(Symbol s, const Precise& y) const {
  const Precise m(mu);
  if (s == 1) return m * y;
  if (fold) return m * (1 - y);
  return m * y - (m - 1);
}

Precise Blender3D::unstretch(Symbol s, const Precise& y) const {
  const Precise m(mu);
  if (s == 1) return y / m;
  if (fold) return 1 - y / m;
  return (y + (m - 1)) / m;
}

std::optional<Symbol> Blender3D::slab_of(const Precise& y) const {
  const Precise m(mu);
  if (y >= 0 && y <= 1 / m) return Symbol{1};
  if (y >= 1 - 1 / m && y <= 1) return Symbol{2};
  return std::nullopt;
}

Blender3D build_blender3d(const ProtoBlender& pb, double mu, bool fold) {
  covering_certificate(pb);
  if (!(mu > 2.0) || !std::isfinite(mu)) {
    std::ostringstream os;
    os << "mu must exceed 2 so the slabs [0, 1/mu] and [1 - 1/mu, 1] are disjoint, got " << mu;
    throw DomainError(os.str());
  }
  return {pb, mu, fold};
}

std::array<Rect2, 2> body_intersection_slice(const Blender3D& b3, double y) {
  if (!(y >= 0.0 && y <= 1.0)) throw DomainError("slice height outside [0, 1]");
  return {b3.pb.branches[0].domain, b3.pb.branches[1].domain};
}

Vec2 g_inverse_on_slice(const Blender3D& b3, Symbol s, const Vec2& p) {
  const auto& br = b3.pb.branch(s);
  if (!br.domain.contains(p)) throw DomainError("point is not in the rectangle of branch " + std::to_string(s));
  return br.forward(p);
}

UnstableBoxSet unstable_set_approx(const Blender3D& b3, int n) {
  auto approx = preimage_rectangles(b3.pb, n);
  return {approx.depth, std::move(approx.cells)};
}

namespace {

bool in_cube(const PreciseVec3& p) {
  for (const auto& c : p)
    if (c < 0 || c > 1) return false;
  return true;
}

Vec3 to_double(const PreciseVec3& p) {
  return {static_cast<double>(p[0]), static_cast<double>(p[1]), static_cast<double>(p[2])};
}

PreciseVec2 xz(const PreciseVec3& p) { return {p[0], p[2]}; }

}  // namespace

Orbit3 forward_orbit(const Blender3D& b3, const PreciseVec3& p0, int n) {
  if (!in_cube(p0)) throw DomainError("forward_orbit: point outside the cube");
  Orbit3 orbit;
  PreciseVec3 p = p0;
  orbit.points.push_back(to_double(p));
  for (int k = 0; k < n; ++k) {
    const auto s = b3.slab_of(p[1]);
    if (!s) {
      orbit.exit_step = k;
      return orbit;
    }
    const auto& h = b3.pb.branch(*s).exact;
    p = {to_precise(h.scale_x) * p[0] + to_precise(h.offset_x), b3.stretch(*s, p[1]),
         to_precise(h.scale_y) * p[2] + to_precise(h.offset_y)};
    orbit.points.push_back(to_double(p));
  }
  return orbit;
}

Orbit3 forward_orbit(const Blender3D& b3, const Vec3& p, int n) {
  return forward_orbit(b3, PreciseVec3{Precise(p[0]), Precise(p[1]), Precise(p[2])}, n);
}

Orbit3 backward_orbit(const Blender3D& b3, const PreciseVec3& p0, int n) {
  if (!in_cube(p0)) throw DomainError("backward_orbit: point outside the cube");
  Orbit3 orbit;
  PreciseVec3 p = p0;
  orbit.points.push_back(to_double(p));
  for (int k = 0; k < n; ++k) {
    const auto s = branch_of(b3.pb, xz(p));
    if (!s) {
      orbit.exit_step = k;
      return orbit;
    }
    const auto q = apply_forward(b3.pb, *s, xz(p));
    p = {q[0], b3.unstretch(*s, p[1]), q[1]};
    orbit.points.push_back(to_double(p));
  }
  return orbit;
}

UnstableWitness curve_meets_unstable(const Blender3D& b3, const SpaceCurve& c, double tol) {
  UnstableWitness out;
  out.planar = find_witness(b3.pb, c.x, tol);
  const Precise& z = out.planar.point[1];
  out.point = {out.planar.point[0], c.y.at(z), z};
  return out;
}

}  // namespace blender
