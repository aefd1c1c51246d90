#pragma once

#include <optional>
#include <string>
#include <vector>

#include "blender/blender3d.hpp"
#include "blender/cycles.hpp"
#include "blender/proto_blender.hpp"
#include "blender/robust_intersection.hpp"

namespace blender::render {

// Depth-n cells as the only <rect> elements (the square outline is a path),
// with the curve drawn as a polyline when given. Throws DepthLimitError above
// depth 16.
std::string cantor_svg(const ProtoBlender& pb, int depth, const std::optional<VerticalCurve>& curve);

// One panel per y value holding the two (x, z) rectangles of Q n g(Q).
std::string slices_svg(const Blender3D& b3, const std::vector<double>& ys);

// Two panels: the saddle chart projected to (u, w) and the cube to (x, y).
std::string orbit_svg(const OrbitLog& log);

}  // namespace blender::render
