#include "blender/io.hpp"

#include <sstream>

#include "blender/errors.hpp"

namespace blender::io {

namespace {

const Json& field(const Json& j, const char* key) {
  if (!j.is_object()) throw FormatError(std::string("expected an object holding \"") + key + "\"");
  const auto it = j.find(key);
  if (it == j.end()) throw FormatError(std::string("missing field \"") + key + "\"");
  return *it;
}

double real(const Json& j, const char* what) {
  if (!j.is_number()) throw FormatError(std::string(what) + " must be a number");
  return j.get<double>();
}

int integer(const Json& j, const char* what) {
  if (!j.is_number_integer()) throw FormatError(std::string(what) + " must be an integer");
  return j.get<int>();
}

void expect_schema(const Json& j, const char* schema) {
  const Json& s = field(j, "schema");
  if (!s.is_string() || s.get<std::string>() != schema)
    throw FormatError(std::string("expected schema \"") + schema + "\"");
}

// Number when the double is exact, "p/q" otherwise.
Json coefficient(const Rational& q) {
  const double d = to_nearest(q);
  if (Rational(d) == q) return d;
  return to_string(q);
}

Rational coefficient_from(const Json& j) {
  if (j.is_number()) return Rational(j.get<double>());
  if (j.is_string()) return rational_from_string(j.get<std::string>());
  throw FormatError("coefficient must be a number or a \"p/q\" string");
}

Json interval(const Interval& i) { return Json::array({i.lo, i.hi}); }

Interval interval_from(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 2) throw FormatError(std::string(what) + " must be [lo, hi]");
  const double lo = real(j[0], what), hi = real(j[1], what);
  if (!(lo <= hi)) throw FormatError(std::string(what) + " has lo > hi");
  return {lo, hi};
}

Json rect(const Rect2& r) { return {{"x", interval(r.x)}, {"y", interval(r.y)}}; }

Rect2 rect_from(const Json& j) { return {interval_from(field(j, "x"), "x"), interval_from(field(j, "y"), "y")}; }

Json affine3(const AffineMap3& m) {
  Json rows = Json::array();
  for (const auto& r : m.linear()) rows.push_back(Json::array({r[0], r[1], r[2]}));
  const auto& o = m.offset();
  return {{"matrix", rows}, {"offset", Json::array({o[0], o[1], o[2]})}};
}

Vec3 vec3_from(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw FormatError(std::string(what) + " must hold 3 numbers");
  return {real(j[0], what), real(j[1], what), real(j[2], what)};
}

AffineMap3 affine3_from(const Json& j) {
  const Json& rows = field(j, "matrix");
  if (!rows.is_array() || rows.size() != 3) throw FormatError("matrix must have 3 rows");
  Mat3 m;
  for (int i = 0; i < 3; ++i) m[i] = vec3_from(rows[i], "matrix row");
  try {
    return AffineMap3(m, vec3_from(field(j, "offset"), "offset"));
  } catch (const DegenerateError& e) {
    throw FormatError(std::string("transition map: ") + e.what());
  }
}

}  // namespace

std::string number(double v) { return Json(v).dump(); }

Json parse(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw FormatError(std::string("malformed JSON: ") + e.what());
  }
}

Json to_json(const ProtoBlender& pb) {
  Json branches = Json::array();
  for (const auto& b : pb.branches) {
    const auto& h = b.exact;
    branches.push_back({{"domain", rect(b.domain)},
                        {"inverse",
                         {{"matrix", Json::array({Json::array({coefficient(h.scale_x), 0.0}),
                                                  Json::array({0.0, coefficient(h.scale_y)})})},
                          {"offset", Json::array({coefficient(h.offset_x), coefficient(h.offset_y)})}}}});
  }
  return {{"schema", "pb-1"}, {"square", rect(pb.square)}, {"branches", branches}};
}

ProtoBlender proto_blender_from_json(const Json& j) {
  expect_schema(j, "pb-1");
  const Rect2 square = rect_from(field(j, "square"));
  const Json& bs = field(j, "branches");
  if (!bs.is_array() || bs.size() != 2) throw FormatError("branches must hold exactly 2 entries");
  std::array<std::optional<InverseBranch>, 2> out;
  for (int i = 0; i < 2; ++i) {
    const Json& inv = field(bs[i], "inverse");
    const Json& m = field(inv, "matrix");
    const Json& o = field(inv, "offset");
    if (!m.is_array() || m.size() != 2 || !m[0].is_array() || m[0].size() != 2 || !m[1].is_array() ||
        m[1].size() != 2)
      throw FormatError("inverse.matrix must be 2x2");
    if (!o.is_array() || o.size() != 2) throw FormatError("inverse.offset must hold 2 entries");
    if (coefficient_from(m[0][1]) != 0 || coefficient_from(m[1][0]) != 0)
      throw FormatError("inverse branches must be axis-aligned (zero off-diagonal entries)");
    const AxisCoefficients h{coefficient_from(m[0][0]), coefficient_from(o[0]), coefficient_from(m[1][1]),
                             coefficient_from(o[1])};
    if (h.scale_x == 0 || h.scale_y == 0) throw FormatError("inverse branch is singular");
    std::optional<Rect2> domain;
    if (bs[i].contains("domain")) domain = rect_from(bs[i]["domain"]);
    out[i].emplace(h, domain);
  }
  return ProtoBlender{square, {*out[0], *out[1]}};
}

Json to_json(const CoveringCertificate& cert, const ProtoBlender& pb) {
  const auto [lo, hi] = exact_core(pb);
  return {{"schema", "pb-1"},
          {"kind", "certificate"},
          {"core", interval(cert.core)},
          {"core_exact", Json::array({to_string(lo), to_string(hi)})},
          {"margin", cert.margin},
          {"slope_capacity", cert.slope_capacity},
          {"contraction_x", cert.contraction_x},
          {"contraction_y", cert.contraction_y}};
}

Json to_json(const ValidationReport& rep) {
  Json checks = Json::array();
  for (const auto& c : rep.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"measured", c.measured}});
  return {{"schema", "pb-1"}, {"kind", "validation"}, {"ok", rep.ok()}, {"checks", checks}};
}

Json to_json(const PerturbationSpec& spec) {
  return {{"schema", "rc-1"},    {"kind", "perturbation"},   {"amplitude", spec.amplitude},
          {"freq_x", spec.freq_x}, {"freq_y", spec.freq_y}, {"seed", spec.seed}};
}

PerturbationSpec perturbation_from_json(const Json& j) {
  PerturbationSpec spec;
  spec.amplitude = real(field(j, "amplitude"), "amplitude");
  spec.freq_x = integer(field(j, "freq_x"), "freq_x");
  spec.freq_y = integer(field(j, "freq_y"), "freq_y");
  const Json& seed = field(j, "seed");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0))
    throw FormatError("seed must be a non-negative integer");
  spec.seed = seed.get<std::uint64_t>();
  try {
    spec.check();
  } catch (const DomainError& e) {
    throw FormatError(e.what());
  }
  return spec;
}

Json to_json(const VerticalCurve& c) {
  Json nodes = Json::array();
  for (const auto& n : c.nodes()) nodes.push_back({{"y", n.y}, {"x", n.x}});
  return {{"schema", "rc-1"}, {"kind", "curve"}, {"nodes", nodes}};
}

VerticalCurve curve_from_json(const Json& j) {
  try {
    if (j.is_object() && j.contains("line")) {
      const Json& l = j["line"];
      const double slope = l.contains("slope") ? real(l["slope"], "slope") : 0.0;
      return VerticalCurve::line(real(field(l, "centre"), "centre"), slope);
    }
    const Json& ns = field(j, "nodes");
    if (!ns.is_array()) throw FormatError("nodes must be an array");
    std::vector<CurveNode> nodes;
    for (const Json& n : ns) nodes.push_back({real(field(n, "y"), "y"), real(field(n, "x"), "x")});
    return VerticalCurve(std::move(nodes));
  } catch (const DomainError& e) {
    throw FormatError(std::string("curve: ") + e.what());
  }
}

Json to_json(const Witness& w) {
  return {{"schema", "rc-1"},
          {"kind", "witness"},
          {"word", to_string(w.word)},
          {"depth", w.depth},
          {"enclosure", rect(w.enclosure)},
          {"point",
           {{"x", static_cast<double>(w.point[0])},
            {"y", static_cast<double>(w.point[1])},
            {"x_precise", to_string(w.point[0], 60)},
            {"y_precise", to_string(w.point[1], 60)}}}};
}

Json to_json(const Blender3D& b3) {
  return {{"schema", "b3-1"}, {"pb", to_json(b3.pb)}, {"mu", b3.mu}, {"fold", b3.fold}};
}

Blender3D blender3d_from_json(const Json& j) {
  expect_schema(j, "b3-1");
  const Json& fold = field(j, "fold");
  if (!fold.is_boolean()) throw FormatError("fold must be a boolean");
  return build_blender3d(proto_blender_from_json(field(j, "pb")), real(field(j, "mu"), "mu"), fold.get<bool>());
}

Json to_json(const CycleScenario& sc) {
  const auto& r = sc.saddle.rates;
  return {{"schema", "cy-1"},
          {"blender", to_json(sc.blender)},
          {"saddle", {{"rates", Json::array({r[0], r[1], r[2]})}}},
          {"t_out", affine3(sc.t_out)},
          {"t_in", affine3(sc.t_in)},
          {"exit_gate", interval(sc.exit_gate)},
          {"perturbation", sc.perturbation ? to_json(*sc.perturbation) : Json(nullptr)}};
}

CycleScenario cycle_from_json(const Json& j) {
  expect_schema(j, "cy-1");
  CycleScenario sc{SaddleChart{vec3_from(field(field(j, "saddle"), "rates"), "rates")},
                   blender3d_from_json(field(j, "blender")),
                   std::nullopt,
                   affine3_from(field(j, "t_out")),
                   affine3_from(field(j, "t_in")),
                   interval_from(field(j, "exit_gate"), "exit_gate")};
  if (j.contains("perturbation") && !j["perturbation"].is_null())
    sc.perturbation = perturbation_from_json(j["perturbation"]);
  sc.check();
  return sc;
}

Json to_json(const ConfinementReport& rep) {
  Json ivs = Json::array();
  for (const auto& i : rep.intervals) ivs.push_back(interval(i));
  return {{"schema", "cy-1"},
          {"kind", "confinement"},
          {"depth", rep.depth},
          {"itinerary", to_string(rep.itinerary)},
          {"width", rep.width},
          {"interval_exact", Json::array({to_string(rep.exact.first), to_string(rep.exact.second)})},
          {"intervals", ivs}};
}

Json to_json(const GapReport& rep) {
  const auto v = [](const Vec3& p) { return Json::array({p[0], p[1], p[2]}); };
  return {{"schema", "cy-1"},
          {"kind", "gap"},
          {"delta", rep.delta},
          {"gap", rep.gap},
          {"unstable_point", v(rep.unstable_point)},
          {"stable_point", v(rep.stable_point)}};
}

std::string orbit_csv(const OrbitLog& log) {
  std::ostringstream os;
  os << "step,chart,x,y,z,near_p,near_blender\n";
  for (const auto& e : log.steps)
    os << e.step << ',' << (e.chart == Chart::saddle ? "saddle" : "cube") << ',' << number(e.point[0]) << ','
       << number(e.point[1]) << ',' << number(e.point[2]) << ',' << int(e.near_p) << ',' << int(e.near_blender)
       << '\n';
  return os.str();
}

}  // namespace blender::io
