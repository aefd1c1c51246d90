#include "blender/render.hpp"

#include <cstdio>
#include <sstream>

#include "blender/errors.hpp"

namespace blender::render {

namespace {

constexpr double kSide = 400.0;  // panel size in px
constexpr double kPad = 20.0;

// Fixed six decimals keeps the files byte-stable.
std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Unit square [lo, hi]^2 into a panel whose top-left is (ox, oy), y up.
struct Panel {
  double ox, oy;
  Interval u{0.0, 1.0}, v{0.0, 1.0};

  double px(double x) const { return ox + (x - u.lo) / (u.hi - u.lo) * kSide; }
  double py(double y) const { return oy + kSide - (y - v.lo) / (v.hi - v.lo) * kSide; }
};

void header(std::ostringstream& os, double width, double height) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
     << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\">\n";
}

void outline(std::ostringstream& os, const Panel& p) {
  os << "<path class=\"frame\" fill=\"none\" stroke=\"black\" d=\"M " << num(p.px(p.u.lo)) << ' ' << num(p.py(p.v.lo))
     << " L " << num(p.px(p.u.hi)) << ' ' << num(p.py(p.v.lo)) << " L " << num(p.px(p.u.hi)) << ' '
     << num(p.py(p.v.hi)) << " L " << num(p.px(p.u.lo)) << ' ' << num(p.py(p.v.hi)) << " Z\"/>\n";
}

void box(std::ostringstream& os, const Panel& p, const Rect2& r, const char* cls, const char* fill) {
  os << "<rect class=\"" << cls << "\" x=\"" << num(p.px(r.x.lo)) << "\" y=\"" << num(p.py(r.y.hi)) << "\" width=\""
     << num(p.px(r.x.hi) - p.px(r.x.lo)) << "\" height=\"" << num(p.py(r.y.lo) - p.py(r.y.hi)) << "\" fill=\""
     << fill << "\" stroke=\"none\"/>\n";
}

}  // namespace

std::string cantor_svg(const ProtoBlender& pb, int depth, const std::optional<VerticalCurve>& curve) {
  if (depth < 0 || depth > 16) throw DepthLimitError("render depth must lie in [0, 16]");
  std::ostringstream os;
  header(os, kSide + 2 * kPad, kSide + 2 * kPad);
  const Panel p{kPad, kPad, pb.square.x, pb.square.y};
  for_each_cell(pb, depth, [&](const Word&, const Rect2& r) { box(os, p, r, "cell", "#3b6ea5"); });
  outline(os, p);
  if (curve) {
    os << "<polyline class=\"curve\" fill=\"none\" stroke=\"#c0392b\" points=\"";
    bool first = true;
    for (const auto& n : curve->nodes()) {
      os << (first ? "" : " ") << num(p.px(n.x)) << ',' << num(p.py(n.y));
      first = false;
    }
    os << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string slices_svg(const Blender3D& b3, const std::vector<double>& ys) {
  std::ostringstream os;
  const double n = static_cast<double>(ys.size());
  header(os, n * (kSide + kPad) + kPad, kSide + 2 * kPad + 20.0);
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const auto rs = body_intersection_slice(b3, ys[i]);
    const Panel p{kPad + static_cast<double>(i) * (kSide + kPad), kPad, b3.pb.square.x, b3.pb.square.y};
    os << "<g class=\"slice\" data-y=\"" << num(ys[i]) << "\">\n";
    box(os, p, rs[0], "r1", "#3b6ea5");
    box(os, p, rs[1], "r2", "#e67e22");
    outline(os, p);
    os << "<text x=\"" << num(p.ox) << "\" y=\"" << num(kSide + 2 * kPad + 10.0) << "\" font-size=\"12\">y = "
       << num(ys[i]) << "</text>\n</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string orbit_svg(const OrbitLog& log) {
  std::ostringstream os;
  header(os, 2 * kSide + 3 * kPad, kSide + 2 * kPad);
  const Panel saddle{kPad, kPad, {-1.0, 1.0}, {-1.0, 1.0}};
  const Panel cube{2 * kPad + kSide, kPad};
  outline(os, saddle);
  outline(os, cube);
  for (const auto& e : log.steps) {
    const bool s = e.chart == Chart::saddle;
    const Panel& p = s ? saddle : cube;
    const double x = p.px(e.point[0]), y = p.py(s ? e.point[2] : e.point[1]);
    const char* fill = e.near_p ? "#c0392b" : e.near_blender ? "#27ae60" : "#34495e";
    os << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"1.5\" fill=\"" << fill << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace blender::render
