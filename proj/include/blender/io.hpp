#pragma once

#include <string>

#include "json.hpp"

#include "blender/blender3d.hpp"
#include "blender/cycles.hpp"
#include "blender/proto_blender.hpp"
#include "blender/robust_intersection.hpp"

namespace blender::io {

using Json = nlohmann::ordered_json;

// Every reader throws FormatError on a missing field, a wrong type or a
// wrong schema tag. Readers run the same checks as the builders.

// pb-1. Coefficients are numbers when the double is exact, "p/q" otherwise.
Json to_json(const ProtoBlender& pb);
ProtoBlender proto_blender_from_json(const Json& j);

Json to_json(const CoveringCertificate& cert, const ProtoBlender& pb);
Json to_json(const ValidationReport& rep);

// rc-1 pieces.
Json to_json(const PerturbationSpec& spec);
PerturbationSpec perturbation_from_json(const Json& j);
Json to_json(const VerticalCurve& c);
// Accepts {"nodes": [{"y", "x"}, ...]} or {"line": {"centre", "slope"}}.
VerticalCurve curve_from_json(const Json& j);
Json to_json(const Witness& w);

// b3-1, embedding pb-1.
Json to_json(const Blender3D& b3);
Blender3D blender3d_from_json(const Json& j);

// cy-1, embedding b3-1.
Json to_json(const CycleScenario& sc);
CycleScenario cycle_from_json(const Json& j);

Json to_json(const ConfinementReport& rep);
Json to_json(const GapReport& rep);

// step,chart,x,y,z,near_p,near_blender
std::string orbit_csv(const OrbitLog& log);

// Parses text, throwing FormatError on malformed JSON.
Json parse(const std::string& text);
// Shortest round-trip form, as JSON writes doubles.
std::string number(double v);

}  // namespace blender::io
