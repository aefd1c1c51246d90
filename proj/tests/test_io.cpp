#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <set>

#include "blender/errors.hpp"
#include "blender/io.hpp"
#include "blender/random.hpp"
#include "blender/render.hpp"

using namespace blender;
using io::Json;

namespace {

Rational q(long p, long d) { return Rational(p) / d; }

bool same_system(const ProtoBlender& a, const ProtoBlender& b) {
  if (!(a.square == b.square)) return false;
  for (int i = 0; i < 2; ++i) {
    const auto &x = a.branches[i], &y = b.branches[i];
    if (x.exact.scale_x != y.exact.scale_x || x.exact.offset_x != y.exact.offset_x ||
        x.exact.scale_y != y.exact.scale_y || x.exact.offset_y != y.exact.offset_y || !(x.domain == y.domain))
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("pb-1 round trip keeps coefficients exact") {
  for (const auto& pb : {build_reference(), build_disjoint_variant()}) {
    const Json j = io::to_json(pb);
    CHECK(j["schema"] == "pb-1");
    const auto back = io::proto_blender_from_json(io::parse(j.dump()));
    CHECK(same_system(pb, back));
    CHECK(io::to_json(back).dump() == j.dump());
  }
  const Json j = io::to_json(build_reference());
  CHECK(j["branches"][0]["inverse"]["matrix"][0][0] == "2/3");
  CHECK(j["branches"][0]["inverse"]["offset"][1] == "1/20");
  CHECK(j["branches"][1]["inverse"]["offset"][0] == "1/3");
  CHECK(j["branches"][0]["inverse"]["offset"][0] == 0.0);
}

TEST_CASE("pb-1 round trip over random systems") {
  SplitMix64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const auto sx = Rational(static_cast<long>(rng.next() % 90 + 5)) / 100;
    const auto sy = Rational(static_cast<long>(rng.next() % 30 + 1)) / 100;
    const AxisCoefficients h1{sx, 0, sy, q(1, 20)};
    const AxisCoefficients h2{sx, 1 - sx, sy, 1 - sy - q(1, 20)};
    const auto pb = from_coefficients(h1, h2);
    const auto back = io::proto_blender_from_json(io::parse(io::to_json(pb).dump()));
    CHECK(same_system(pb, back));
  }
}

TEST_CASE("pb-1 reader rejects bad documents") {
  Json j = io::to_json(build_reference());
  CHECK_THROWS_AS(io::parse("{\"schema\": \"pb-1\", "), FormatError);
  Json bad = j;
  bad["schema"] = "pb-2";
  CHECK_THROWS_AS(io::proto_blender_from_json(bad), FormatError);
  bad = j;
  bad.erase("square");
  CHECK_THROWS_AS(io::proto_blender_from_json(bad), FormatError);
  bad = j;
  bad["branches"][0]["inverse"]["matrix"][0][1] = 0.1;
  CHECK_THROWS_AS(io::proto_blender_from_json(bad), FormatError);
  bad = j;
  bad["branches"][1]["inverse"]["offset"][0] = "one third";
  CHECK_THROWS_AS(io::proto_blender_from_json(bad), FormatError);
  bad = j;
  bad["branches"].erase(1);
  CHECK_THROWS_AS(io::proto_blender_from_json(bad), FormatError);
  bad = j;
  bad["square"]["x"] = Json::array({1.0, 0.0});
  CHECK_THROWS_AS(io::proto_blender_from_json(bad), FormatError);
}

TEST_CASE("rc-1 documents") {
  const PerturbationSpec spec{0.01, 2, 3, 0xFFFFFFFFFFFFFFFFULL};
  const auto back = io::perturbation_from_json(io::parse(io::to_json(spec).dump()));
  CHECK(back.amplitude == spec.amplitude);
  CHECK(back.freq_x == 2);
  CHECK(back.freq_y == 3);
  CHECK(back.seed == spec.seed);
  Json bad = io::to_json(spec);
  bad["freq_x"] = 0;
  CHECK_THROWS_AS(io::perturbation_from_json(bad), FormatError);

  const VerticalCurve c({{0.0, 0.4}, {0.3, 0.5}, {1.0, 0.45}});
  const auto cb = io::curve_from_json(io::parse(io::to_json(c).dump()));
  CHECK(cb.nodes() == c.nodes());
  const auto line = io::curve_from_json(io::parse(R"({"line": {"centre": 0.5, "slope": 0.2}})"));
  CHECK(line.nodes() == VerticalCurve::line(0.5, 0.2).nodes());
  CHECK_THROWS_AS(io::curve_from_json(io::parse(R"({"nodes": [{"y": 0, "x": 0.5}]})")), FormatError);

  const auto w = find_witness(build_reference(), VerticalCurve::line(0.5), 1e-6);
  const Json wj = io::to_json(w);
  CHECK(wj["word"] == to_string(w.word));
  CHECK(wj["depth"] == w.depth);
  CHECK(wj["point"]["x"] == 0.5);
  CHECK(wj["point"]["y_precise"].get<std::string>().size() > 20);
}

TEST_CASE("b3-1 and cy-1 round trips") {
  const auto b3 = build_blender3d(build_reference(), 7.5, false);
  const auto b3b = io::blender3d_from_json(io::parse(io::to_json(b3).dump()));
  CHECK(b3b.mu == 7.5);
  CHECK_FALSE(b3b.fold);
  CHECK(same_system(b3.pb, b3b.pb));
  Json bad = io::to_json(b3);
  bad["mu"] = 2.0;
  CHECK_THROWS_AS(io::blender3d_from_json(bad), DomainError);

  const auto sc = build_reference_cycle();
  const Json j = io::to_json(sc);
  CHECK(j["schema"] == "cy-1");
  CHECK(j["blender"]["schema"] == "b3-1");
  CHECK(j["blender"]["pb"]["schema"] == "pb-1");
  const auto back = io::cycle_from_json(io::parse(j.dump()));
  CHECK(io::to_json(back).dump() == j.dump());
  CHECK(back.t_in == sc.t_in);

  const auto p = perturb_scenario(sc, 1e-3, 9);
  const auto pb = io::cycle_from_json(io::parse(io::to_json(p).dump()));
  REQUIRE(pb.perturbation);
  CHECK(pb.perturbation->seed == p.perturbation->seed);
  CHECK(pb.t_out == p.t_out);

  Json gate = j;
  gate["exit_gate"] = Json::array({0.0, 0.5});
  CHECK_THROWS_AS(io::cycle_from_json(gate), ValidationError);
  Json sing = j;
  sing["t_in"]["matrix"][0] = Json::array({0.0, 0.0, 0.0});
  CHECK_THROWS_AS(io::cycle_from_json(sing), FormatError);
}

TEST_CASE("orbit csv") {
  const auto sc = build_reference_cycle();
  const auto log = simulate_cycle_orbit(sc, Chart::saddle, {0.0, 0.0, 0.7}, 4, 1e-3);
  const std::string csv = io::orbit_csv(log);
  CHECK(csv.rfind("step,chart,x,y,z,near_p,near_blender\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(log.steps.size()) + 1);
  CHECK(csv.find("\n1,cube,0.5,0.3999") != std::string::npos);
}

TEST_CASE("svg figures") {
  const auto pb = build_reference();
  auto count = [](const std::string& s, const std::string& tag) {
    std::size_t n = 0;
    for (auto p = s.find(tag); p != std::string::npos; p = s.find(tag, p + 1)) ++n;
    return n;
  };
  CHECK(count(render::cantor_svg(pb, 5, VerticalCurve::line(0.5)), "<rect") == 32);
  CHECK(count(render::cantor_svg(pb, 0, std::nullopt), "<rect") == 1);
  CHECK(render::cantor_svg(pb, 4, std::nullopt) == render::cantor_svg(pb, 4, std::nullopt));
  CHECK_THROWS_AS(render::cantor_svg(pb, 17, std::nullopt), DepthLimitError);

  const auto b3 = build_blender3d(pb);
  const std::string s = render::slices_svg(b3, {0.1, 0.5, 0.9});
  CHECK(count(s, "<rect") == 6);
  // The three panels differ only by their offset and label.
  CHECK(count(s, "class=\"r1\"") == 3);
  std::set<std::string> sizes;
  for (auto p = s.find(" width=\"", s.find("<rect")); p != std::string::npos; p = s.find(" width=\"", p + 1))
    sizes.insert(s.substr(p, s.find(" fill", p) - p));
  // R_1 and R_2 are both 2/3 by 1/10 in the reference system.
  CHECK(sizes.size() == 1);
  const auto log = simulate_cycle_orbit(build_reference_cycle(), Chart::saddle, {0.0, 0.0, 0.7}, 30, 1e-3);
  CHECK(count(render::orbit_svg(log), "<circle") == log.steps.size());
}
