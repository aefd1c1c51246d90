#include "blender/cli.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "blender/errors.hpp"
#include "blender/io.hpp"
#include "blender/random.hpp"
#include "blender/render.hpp"

namespace blender::cli {

namespace {

using io::Json;

struct Options {
  std::string input, output;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::optional<int> depth;
  std::optional<double> tol, delta;
  int trials = 100;
  // Per-command extras.
  std::string action;
  double centre = 0.5, slope = 0.0;
  double mu = 10.0;
  double y = 0.5;
  std::vector<double> ys{0.25, 0.5, 0.75};
  int budget = 10000;
  double eps = 1e-3;
  std::vector<double> start;
  std::string chart = "cube";
};

// Thrown for a failed certificate whose document has already been written.
struct Reported {
  int code;
};

class Logger {
 public:
  explicit Logger(std::ostream& err) : err_(err), color_(std::getenv("BLENDERLAB_NO_COLOR") == nullptr) {}

  void info(const std::string& msg) { line("32", "ok", msg); }
  void error(const std::string& msg) { line("31", "error", msg); }

 private:
  void line(const char* ansi, const char* tag, const std::string& msg) {
    if (color_)
      err_ << "\x1b[" << ansi << 'm' << tag << "\x1b[0m: " << msg << '\n';
    else
      err_ << tag << ": " << msg << '\n';
  }

  std::ostream& err_;
  bool color_;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot write " + path);
  f << text;
  if (!f) throw FormatError("cannot write " + path);
}

void emit(const Options& o, std::ostream& out, const std::string& text) {
  if (o.output.empty())
    out << text;
  else
    write_file(o.output, text);
}

void emit(const Options& o, std::ostream& out, const Json& j) { emit(o, out, j.dump(2) + "\n"); }

std::optional<Json> input_doc(const Options& o) {
  if (o.input.empty()) return std::nullopt;
  return io::parse(read_file(o.input));
}

std::string schema_of(const Json& j) {
  if (j.is_object() && j.contains("schema") && j["schema"].is_string()) return j["schema"].get<std::string>();
  throw FormatError("document has no schema tag");
}

ProtoBlender system_from(const Options& o) {
  const auto doc = input_doc(o);
  if (!doc) return build_reference();
  const std::string s = schema_of(*doc);
  if (s == "pb-1") return io::proto_blender_from_json(*doc);
  if (s == "b3-1") return io::blender3d_from_json(*doc).pb;
  if (s == "rc-1" && doc->contains("system")) return io::proto_blender_from_json((*doc)["system"]);
  if (s == "rc-1") return build_reference();
  throw FormatError("expected a pb-1 document, got " + s);
}

CycleScenario scenario_from(const Options& o) {
  const auto doc = input_doc(o);
  if (!doc) return build_reference_cycle();
  return io::cycle_from_json(*doc);
}

int depth_or(const Options& o, int fallback) {
  const int d = o.depth.value_or(fallback);
  if (d < 0) throw DepthLimitError("--depth must be >= 0");
  return d;
}

int cmd_validate(const Options& o, std::ostream& out) {
  const auto rep = validate(system_from(o));
  emit(o, out, io::to_json(rep));
  return rep.ok() ? kOk : kCertificateFailure;
}

int cmd_certify(const Options& o, std::ostream& out) {
  const ProtoBlender pb = system_from(o);
  try {
    emit(o, out, io::to_json(covering_certificate(pb), pb));
    return kOk;
  } catch (const CoveringError& e) {
    emit(o, out,
         Json{{"schema", "pb-1"},
              {"kind", "covering-failure"},
              {"gap", Json::array({e.gap_lo(), e.gap_hi()})},
              {"message", e.what()}});
    throw Reported{kCertificateFailure};
  } catch (const ValidationError& e) {
    emit(o, out, Json{{"schema", "pb-1"}, {"kind", "validation-failure"}, {"message", e.what()}});
    throw Reported{kCertificateFailure};
  }
}

int cmd_cantor(const Options& o, std::ostream& out) {
  const ProtoBlender pb = system_from(o);
  const int n = depth_or(o, 3);
  if (n > 16) throw DepthLimitError("cantor output is capped at depth 16");
  Json cells = Json::array();
  for_each_cell(pb, n, [&](const Word& w, const Rect2& r) {
    cells.push_back({{"word", to_string(w)}, {"x", Json::array({r.x.lo, r.x.hi})}, {"y", Json::array({r.y.lo, r.y.hi})}});
  });
  emit(o, out, Json{{"schema", "pb-1"}, {"kind", "cantor"}, {"depth", n}, {"cells", cells}});
  return kOk;
}

int cmd_project(const Options& o, std::ostream& out) {
  const ProtoBlender pb = system_from(o);
  const int n = depth_or(o, 10);
  const IntervalUnion u = horizontal_projection(pb, n);
  const ConnectivityReport c = is_connected(u);
  Json parts = Json::array();
  for (const auto& p : u.parts()) parts.push_back(Json::array({p.lo, p.hi}));
  emit(o, out,
       Json{{"schema", "pb-1"},
            {"kind", "projection"},
            {"depth", n},
            {"connected", c.connected},
            {"largest_gap", c.largest_gap},
            {"components", parts}});
  return kOk;
}

int cmd_witness(const Options& o, std::ostream& out) {
  const ProtoBlender pb = system_from(o);
  VerticalCurve curve = VerticalCurve::line(o.centre, o.slope);
  std::optional<PerturbationSpec> spec;
  if (const auto doc = input_doc(o); doc && schema_of(*doc) == "rc-1") {
    if (doc->contains("curve")) curve = io::curve_from_json((*doc)["curve"]);
    if (doc->contains("perturbation") && !(*doc)["perturbation"].is_null())
      spec = io::perturbation_from_json((*doc)["perturbation"]);
  }
  Witness w;
  if (spec) {
    const PerturbedSystem ps = perturb(pb, *spec);
    w = o.depth && !o.tol ? perturbed_witness(ps, curve, *o.depth) : perturbed_witness_tol(ps, curve, o.tol.value_or(1e-6));
  } else {
    w = o.depth && !o.tol ? find_witness_at_depth(pb, curve, *o.depth) : find_witness(pb, curve, o.tol.value_or(1e-6));
  }
  emit(o, out, io::to_json(w));
  return kOk;
}

struct TrialRow {
  std::uint64_t seed = 0;
  double c1 = 0.0;
  double margin = 0.0;
  bool certificate = false;
  bool witness = false;
};

int cmd_perturb_study(const Options& o, std::ostream& out) {
  const ProtoBlender pb = system_from(o);
  if (o.trials < 0) throw DomainError("--trials must be >= 0");
  if (o.jobs < 1) throw DomainError("--jobs must be >= 1");
  const double delta = o.delta.value_or(0.01);
  const int depth = depth_or(o, 20);
  // Margin check up front, so an oversized delta fails even with no trials.
  perturb(pb, PerturbationSpec{delta, 2, 2, 0});

  std::vector<std::uint64_t> seeds(o.trials);
  SplitMix64 rng(o.seed);
  for (auto& s : seeds) s = rng.next();
  std::vector<TrialRow> rows(o.trials);
  const VerticalCurve centre = VerticalCurve::line(0.5);
  auto trial = [&](std::size_t i) {
    TrialRow r;
    r.seed = seeds[i];
    const PerturbedSystem ps = perturb(pb, PerturbationSpec{delta, 2, 2, r.seed});
    const auto pc = perturbed_certificate(ps);
    r.c1 = pc.c1_size;
    r.certificate = pc.holds();
    r.margin = pc.holds() ? pc.certificate->margin : 0.0;
    if (r.certificate) {
      try {
        perturbed_witness(ps, centre, depth);
        r.witness = true;
      } catch (const Error&) {
        r.witness = false;
      }
    }
    rows[i] = r;
  };
  // Workers fill fixed slots, so the merged table is the same for any --jobs.
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < rows.size();) trial(i);
  };
  std::vector<std::thread> pool;
  const int extra = std::min<int>(o.jobs, std::max<int>(1, o.trials)) - 1;
  for (int k = 0; k < extra; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ostringstream csv;
  csv << "seed,c1_bound,margin,certificate,witness\n";
  int cert = 0, wit = 0;
  for (const auto& r : rows) {
    csv << r.seed << ',' << io::number(r.c1) << ',' << io::number(r.margin) << ',' << int(r.certificate) << ','
        << int(r.witness) << '\n';
    cert += r.certificate;
    wit += r.witness;
  }
  csv << "pass_rate," << o.trials << ',' << delta << ',' << cert << '/' << o.trials << ',' << wit << '/' << o.trials
      << '\n';
  emit(o, out, csv.str());
  return kOk;
}

int cmd_blender3d(const Options& o, std::ostream& out) {
  const auto doc = input_doc(o);
  const Blender3D b3 = doc && schema_of(*doc) == "b3-1" ? io::blender3d_from_json(*doc)
                                                        : build_blender3d(system_from(o), o.mu, true);
  if (o.action == "build") {
    emit(o, out, io::to_json(b3));
  } else if (o.action == "slice") {
    const auto rs = body_intersection_slice(b3, o.y);
    const auto r = [](const Rect2& q) {
      return Json{{"x", Json::array({q.x.lo, q.x.hi})}, {"z", Json::array({q.y.lo, q.y.hi})}};
    };
    emit(o, out, Json{{"schema", "b3-1"}, {"kind", "slice"}, {"y", o.y}, {"rects", Json::array({r(rs[0]), r(rs[1])})}});
  } else {
    throw FormatError("unknown blender3d action \"" + o.action + "\"");
  }
  return kOk;
}

Vec3 witness_start(const CycleScenario& sc) {
  const auto w = connection_p_to_blender(sc, 1e-9);
  return {static_cast<double>(w.point[0]), static_cast<double>(w.point[1]), static_cast<double>(w.point[2])};
}

int cmd_cycle(const Options& o, std::ostream& out) {
  if (o.action == "gap") {
    emit(o, out, io::to_json(nonrobust_cycle_demo(o.delta.value_or(1e-3))));
    return kOk;
  }
  const CycleScenario sc = scenario_from(o);
  if (o.action == "build") {
    emit(o, out, io::to_json(sc));
  } else if (o.action == "perturb") {
    emit(o, out, io::to_json(perturb_scenario(sc, o.delta.value_or(1e-3), o.seed)));
  } else if (o.action == "connect") {
    const auto w = connection_p_to_blender(sc, o.tol.value_or(1e-6));
    const auto rep = connection_blender_to_p(sc, depth_or(o, 20));
    Json wj = io::to_json(w.planar);
    wj["point3"] = Json::array({static_cast<double>(w.point[0]), static_cast<double>(w.point[1]),
                                static_cast<double>(w.point[2])});
    emit(o, out, Json{{"schema", "cy-1"}, {"kind", "connections"}, {"p_to_blender", wj}, {"blender_to_p", io::to_json(rep)}});
  } else if (o.action == "simulate") {
    Chart chart = Chart::cube;
    Vec3 start{};
    if (o.start.empty()) {
      start = witness_start(sc);
    } else {
      if (o.start.size() != 3) throw FormatError("--start takes three numbers");
      start = {o.start[0], o.start[1], o.start[2]};
      if (o.chart == "saddle")
        chart = Chart::saddle;
      else if (o.chart != "cube")
        throw FormatError("--chart must be saddle or cube");
    }
    const OrbitLog log = simulate_cycle_orbit(sc, chart, start, o.budget, o.eps);
    const Json summary{{"schema", "cy-1"},
                       {"kind", "orbit-summary"},
                       {"steps", log.steps.size()},
                       {"hits_p", log.hits_p},
                       {"hits_blender", log.hits_blender},
                       {"exited", log.exited}};
    if (o.output.empty()) {
      out << io::orbit_csv(log);
    } else {
      write_file(o.output, io::orbit_csv(log));
      out << summary.dump(2) << '\n';
    }
  } else {
    throw FormatError("unknown cycle action \"" + o.action + "\"");
  }
  return kOk;
}

int cmd_render(const Options& o, std::ostream& out) {
  if (o.action == "cantor") {
    const ProtoBlender pb = system_from(o);
    emit(o, out, render::cantor_svg(pb, depth_or(o, 5), VerticalCurve::line(o.centre, o.slope)));
  } else if (o.action == "blender3d-slices") {
    const auto doc = input_doc(o);
    const Blender3D b3 = doc && schema_of(*doc) == "b3-1" ? io::blender3d_from_json(*doc)
                                                          : build_blender3d(system_from(o), o.mu, true);
    emit(o, out, render::slices_svg(b3, o.ys));
  } else if (o.action == "cycle-orbit") {
    if (o.output.empty()) throw FormatError("cycle-orbit needs --output PREFIX for the .csv and .svg files");
    const CycleScenario sc = scenario_from(o);
    const OrbitLog log = simulate_cycle_orbit(sc, Chart::cube, witness_start(sc), o.budget, o.eps);
    write_file(o.output + ".csv", io::orbit_csv(log));
    write_file(o.output + ".svg", render::orbit_svg(log));
  } else {
    throw FormatError("unknown figure \"" + o.action + "\" (cantor, blender3d-slices, cycle-orbit)");
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Logger log(err);
  Options o;
  CLI::App app{"Proto-blender and blender certificates, witnesses and cycle scenarios", "blenderlab"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--input", o.input, "input document (JSON)");
  app.add_option("--output", o.output, "output file (default: stdout)");
  app.add_option("--seed", o.seed, "64-bit seed");
  app.add_option("--jobs", o.jobs, "worker threads for batch studies")->check(CLI::PositiveNumber);
  app.add_option("--depth", o.depth, "descent or approximation depth");
  app.add_option("--tol", o.tol, "enclosure diameter target");
  app.add_option("--delta", o.delta, "perturbation size");
  app.add_option("--trials", o.trials, "number of seeded trials");

  std::map<std::string, std::function<int(const Options&, std::ostream&)>> commands{
      {"validate", cmd_validate}, {"certify", cmd_certify},         {"cantor", cmd_cantor},
      {"project", cmd_project},   {"witness", cmd_witness},         {"perturb-study", cmd_perturb_study},
      {"blender3d", cmd_blender3d}, {"cycle", cmd_cycle},           {"render", cmd_render}};

  app.add_subcommand("validate", "structural checks of a pb-1 system");
  app.add_subcommand("certify", "covering certificate of a pb-1 system");
  app.add_subcommand("cantor", "depth-n cells");
  app.add_subcommand("project", "horizontal projection of the depth-n cells");
  auto* witness = app.add_subcommand("witness", "witness that a curve meets the Cantor set");
  witness->add_option("--centre", o.centre, "line position at y = 1/2");
  witness->add_option("--slope", o.slope, "line slope dx/dy");
  app.add_subcommand("perturb-study", "seeded perturbation trials");
  auto* b3 = app.add_subcommand("blender3d", "three-dimensional skew product");
  b3->add_option("action", o.action, "build | slice")->required();
  b3->add_option("--mu", o.mu, "slab stretch factor");
  b3->add_option("--y", o.y, "slice height");
  auto* cycle = app.add_subcommand("cycle", "heterodimensional cycle scenario");
  cycle->add_option("action", o.action, "build | connect | simulate | perturb | gap")->required();
  cycle->add_option("--budget", o.budget, "orbit steps")->check(CLI::NonNegativeNumber);
  cycle->add_option("--eps", o.eps, "hit radius");
  cycle->add_option("--start", o.start, "start point x y z")->expected(3);
  cycle->add_option("--chart", o.chart, "start chart: saddle | cube");
  auto* rnd = app.add_subcommand("render", "figure files");
  rnd->add_option("figure", o.action, "cantor | blender3d-slices | cycle-orbit")->required();
  rnd->add_option("--centre", o.centre, "overlay line position");
  rnd->add_option("--slope", o.slope, "overlay line slope");
  rnd->add_option("--ys", o.ys, "slice heights");
  rnd->add_option("--mu", o.mu, "slab stretch factor");
  rnd->add_option("--budget", o.budget, "orbit steps")->check(CLI::NonNegativeNumber);
  rnd->add_option("--eps", o.eps, "hit radius");

  std::vector<std::string> argv_s{"blenderlab"};
  argv_s.insert(argv_s.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_s) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kInputError;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    const int code = commands.at(name)(o, out);
    if (code == kOk) log.info(name);
    return code;
  } catch (const Reported& r) {
    log.error(name + " failed its certificate");
    return r.code;
  } catch (const CoveringError& e) {
    log.error(e.what());
    return kCertificateFailure;
  } catch (const ValidationError& e) {
    log.error(e.what());
    return kCertificateFailure;
  } catch (const WitnessError& e) {
    log.error(e.what());
    return kCertificateFailure;
  } catch (const AdmissibilityError& e) {
    log.error(e.what());
    return kMarginError;
  } catch (const MarginExceededError& e) {
    log.error(e.what());
    return kMarginError;
  } catch (const ConnectionBrokenError& e) {
    log.error(e.what());
    return kMarginError;
  } catch (const Error& e) {
    log.error(e.what());
    return kInputError;
  } catch (const std::exception& e) {
    log.error(e.what());
    return kInputError;
  }
}

}  // namespace blender::cli
