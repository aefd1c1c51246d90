#include "blender/proto_blender.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "blender/errors.hpp"

namespace blender {

std::string to_string(const Word& w) {
  std::string s;
  s.reserve(w.size());
  for (Symbol c : w) s.push_back(static_cast<char>('0' + c));
  return s;
}

Word parse_word(std::string_view s) {
  Word w;
  w.reserve(s.size());
  for (char c : s) {
    if (c != '1' && c != '2') throw FormatError("word symbols must be '1' or '2'");
    w.push_back(static_cast<Symbol>(c - '0'));
  }
  return w;
}

AxisCoefficients AxisCoefficients::from(const AffineMap2& h) {
  const auto& a = h.linear();
  if (a[0][1] != 0.0 || a[1][0] != 0.0) throw ValidationError("inverse branch is not axis-aligned");
  return {Rational(a[0][0]), Rational(h.offset()[0]), Rational(a[1][1]), Rational(h.offset()[1])};
}

AffineMap2 AxisCoefficients::nearest() const {
  return AffineMap2::axis(to_nearest(scale_x), to_nearest(offset_x), to_nearest(scale_y), to_nearest(offset_y));
}

IntervalAxisAffine2 AxisCoefficients::enclosure() const {
  return {{enclose(scale_x), enclose(offset_x)}, {enclose(scale_y), enclose(offset_y)}};
}

namespace {

std::pair<Rational, Rational> affine_image(const Rational& s, const Rational& o, const Rational& lo,
                                           const Rational& hi) {
  Rational a = s * lo + o;
  Rational b = s * hi + o;
  if (b < a) std::swap(a, b);
  return {a, b};
}

}  // namespace

std::pair<Rational, Rational> AxisCoefficients::image_x(const Rational& lo, const Rational& hi) const {
  return affine_image(scale_x, offset_x, lo, hi);
}

std::pair<Rational, Rational> AxisCoefficients::image_y(const Rational& lo, const Rational& hi) const {
  return affine_image(scale_y, offset_y, lo, hi);
}

namespace {

Rect2 exact_domain(const AxisCoefficients& h) {
  const auto x = h.image_x(0, 1);
  const auto y = h.image_y(0, 1);
  return {{round_down(x.first), round_up(x.second)}, {round_down(y.first), round_up(y.second)}};
}

}  // namespace

InverseBranch::InverseBranch(AxisCoefficients h, std::optional<Rect2> dom)
    : exact(std::move(h)), domain(dom ? *dom : exact_domain(exact)), inverse(exact.nearest()) {}

double InverseBranch::contraction_x() const { return to_nearest(abs(exact.scale_x)); }
double InverseBranch::contraction_y() const { return to_nearest(abs(exact.scale_y)); }

Vec2 InverseBranch::forward(const Vec2& p) const {
  const auto& a = inverse.linear();
  const auto& b = inverse.offset();
  return {(p[0] - b[0]) / a[0][0], (p[1] - b[1]) / a[1][1]};
}

namespace {

const Rect2 kUnitSquare{{0.0, 1.0}, {0.0, 1.0}};

Rational ratio(long p, long q) { return Rational(p, q); }

}  // namespace

ProtoBlender from_coefficients(const AxisCoefficients& h1, const AxisCoefficients& h2) {
  return {kUnitSquare, {InverseBranch(h1), InverseBranch(h2)}};
}

ProtoBlender from_inverse_maps(const AffineMap2& h1, const AffineMap2& h2) {
  return from_coefficients(AxisCoefficients::from(h1), AxisCoefficients::from(h2));
}

ProtoBlender build_reference() {
  return from_coefficients({ratio(2, 3), ratio(0, 1), ratio(1, 10), ratio(1, 20)},
                           {ratio(2, 3), ratio(1, 3), ratio(1, 10), ratio(17, 20)});
}

ProtoBlender build_disjoint_variant() {
  return from_coefficients({ratio(2, 3), ratio(0, 1), ratio(1, 10), ratio(1, 20)},
                           {ratio(3, 10), ratio(7, 10), ratio(1, 10), ratio(17, 20)});
}

bool ValidationReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

const Check& ValidationReport::at(std::string_view name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw std::out_of_range("no validation check named " + std::string(name));
}

ValidationReport validate(const ProtoBlender& pb) {
  ValidationReport r;
  const Rational zero(0), half(1, 2), one(1);
  for (int i = 0; i < 2; ++i) {
    const auto& br = pb.branches[i];
    const std::string k = std::to_string(i + 1);
    const auto& a = br.inverse.linear();
    const double off = std::max(std::abs(a[0][1]), std::abs(a[1][0]));
    r.checks.push_back({"axis_aligned_" + k, br.inverse.axis_aligned() && off == 0.0, off});
    const double onto = hausdorff(br.exact.enclosure().outer(pb.square), br.domain);
    r.checks.push_back({"inverse_onto_domain_" + k, onto <= 1e-12, onto});
    const bool inside = pb.square.contains(br.domain);
    r.checks.push_back({"domain_in_square_" + k, inside, inside ? 0.0 : 1.0});
    const Rational cx = abs(br.exact.scale_x);
    r.checks.push_back({"horizontal_contraction_" + k, cx > half && cx < one, to_nearest(cx)});
    const Rational cy = abs(br.exact.scale_y);
    r.checks.push_back({"vertical_contraction_" + k, cy > zero && cy < one, to_nearest(cy)});
  }
  // Exact images of the square.
  const Rational sq_x_lo(pb.square.x.lo), sq_x_hi(pb.square.x.hi);
  const Rational sq_y_lo(pb.square.y.lo), sq_y_hi(pb.square.y.hi);
  const auto& h1 = pb.branches[0].exact;
  const auto& h2 = pb.branches[1].exact;
  const auto x1 = h1.image_x(sq_x_lo, sq_x_hi), x2 = h2.image_x(sq_x_lo, sq_x_hi);
  const auto y1 = h1.image_y(sq_y_lo, sq_y_hi), y2 = h2.image_y(sq_y_lo, sq_y_hi);
  // Signed separation: positive gap, or minus the overlap width.
  auto separation = [](const std::pair<Rational, Rational>& u, const std::pair<Rational, Rational>& v) {
    return std::max(Rational(v.first - u.second), Rational(u.first - v.second));
  };
  const Rational gap = std::max(separation(x1, x2), separation(y1, y2));
  r.checks.push_back({"domains_disjoint", gap > zero, to_nearest(gap)});
  const Rational overlap = -separation(x1, x2);
  r.checks.push_back({"projection_overlap", overlap > zero, to_nearest(overlap)});
  return r;
}

IntervalAxisAffine2 composite_inverse(const ProtoBlender& pb, const Word& w) {
  auto m = IntervalAxisAffine2::identity();
  for (Symbol s : w) m = m.compose(pb.branch(s).exact.enclosure());
  return m;
}

namespace {

void check_depth(int n) {
  if (n < 0 || n > kMaxDepth) throw DepthLimitError("depth must lie in [0, 64]");
}

// Both the child's own enclosure and its parent's contain the true cell, so
// the child is clipped to the parent.
Rect2 clip(const Rect2& r, const Rect2& parent) {
  return {{std::max(r.x.lo, parent.x.lo), std::min(r.x.hi, parent.x.hi)},
          {std::max(r.y.lo, parent.y.lo), std::min(r.y.hi, parent.y.hi)}};
}

void visit_cells(const ProtoBlender& pb, int n, Word& word, const IntervalAxisAffine2& map, const Rect2& rect,
                 const std::array<IntervalAxisAffine2, 2>& branch_maps,
                 const std::function<void(const Word&, const Rect2&)>& visit) {
  if (static_cast<int>(word.size()) == n) {
    visit(word, rect);
    return;
  }
  for (Symbol s : {Symbol{1}, Symbol{2}}) {
    word.push_back(s);
    const auto child = map.compose(branch_maps[s - 1]);
    visit_cells(pb, n, word, child, clip(child.outer(pb.square), rect), branch_maps, visit);
    word.pop_back();
  }
}

}  // namespace

void for_each_cell(const ProtoBlender& pb, int n, const std::function<void(const Word&, const Rect2&)>& visit) {
  check_depth(n);
  const std::array<IntervalAxisAffine2, 2> maps{pb.branches[0].exact.enclosure(),
                                                pb.branches[1].exact.enclosure()};
  Word word;
  word.reserve(n);
  visit_cells(pb, n, word, IntervalAxisAffine2::identity(), pb.square, maps, visit);
}

CantorApprox preimage_rectangles(const ProtoBlender& pb, int n) {
  check_depth(n);
  if (n > 24) throw DepthLimitError("more than 2^24 cells requested; stream them with for_each_cell");
  CantorApprox out;
  out.depth = n;
  out.cells.reserve(std::size_t{1} << n);
  for_each_cell(pb, n, [&](const Word& w, const Rect2& r) { out.cells.push_back({w, r}); });
  return out;
}

IntervalUnion horizontal_projection(const ProtoBlender& pb, int n) {
  check_depth(n);
  // The projection of f^{-k-1}(S) is the union of the two rescaled copies
  // h_1^x(P_k) and h_2^x(P_k) of the projection P_k of f^{-k}(S).
  const IntervalAffine1 h1 = pb.branches[0].exact.enclosure().x;
  const IntervalAffine1 h2 = pb.branches[1].exact.enclosure().x;
  std::vector<Interval> current{pb.square.x};
  for (int k = 0; k < n; ++k) {
    std::vector<Interval> next;
    next.reserve(2 * current.size());
    for (const auto& iv : current) {
      for (const auto& img : {h1.outer(iv), h2.outer(iv)})
        next.push_back({std::max(img.lo, pb.square.x.lo), std::min(img.hi, pb.square.x.hi)});
    }
    current = IntervalUnion(next).parts();
  }
  return IntervalUnion(current);
}

double slope_capacity_rule(double margin, double contraction_x, double contraction_y) {
  const double ratio = contraction_x / contraction_y;
  if (ratio >= 1.0) return margin;
  return margin * std::pow(ratio, kMaxDepth);
}

std::pair<Rational, Rational> exact_core(const ProtoBlender& pb) {
  std::array<Rational, 2> fixed;
  for (int i = 0; i < 2; ++i) {
    const auto& h = pb.branches[i].exact;
    if (h.scale_x == 1) throw DegenerateError("horizontal part of an inverse branch has no fixed point");
    fixed[i] = h.offset_x / (1 - h.scale_x);
  }
  return {std::min(fixed[0], fixed[1]), std::max(fixed[0], fixed[1])};
}

CoveringCertificate covering_certificate(const ProtoBlender& pb) {
  // Everything below is exact: the coefficients are rational.
  const auto [core_lo, core_hi] = exact_core(pb);

  std::array<std::pair<Rational, Rational>, 2> images{pb.branches[0].exact.image_x(core_lo, core_hi),
                                                      pb.branches[1].exact.image_x(core_lo, core_hi)};
  std::sort(images.begin(), images.end());
  const auto& a = images[0];
  const auto& b = images[1];

  // Uncovered pieces of J; the widest one is reported.
  std::vector<std::pair<Rational, Rational>> gaps;
  if (a.first > core_lo) gaps.emplace_back(core_lo, a.first);
  if (a.second < b.first) gaps.emplace_back(a.second, b.first);
  const Rational right = std::max(a.second, b.second);
  if (right < core_hi) gaps.emplace_back(right, core_hi);
  if (!gaps.empty()) {
    const auto widest = *std::max_element(gaps.begin(), gaps.end(), [](const auto& u, const auto& v) {
      return u.second - u.first < v.second - v.first;
    });
    const double lo = round_down(widest.first), hi = round_up(widest.second);
    std::ostringstream os;
    os.precision(17);
    os << "branch images do not cover the core: (" << lo << ", " << hi << ") is not covered";
    throw CoveringError(os.str(), lo, hi);
  }

  const auto report = validate(pb);
  if (!report.ok()) {
    std::string failed;
    for (const auto& c : report.checks)
      if (!c.passed) failed += (failed.empty() ? "" : ", ") + c.name;
    throw ValidationError("system fails validation: " + failed);
  }

  const Rational overlap = std::min(a.second, b.second) - b.first;
  if (overlap <= 0) {
    const double t = round_down(b.first);
    throw CoveringError("branch images of the core only touch", t, t);
  }

  CoveringCertificate cert;
  cert.core = {round_down(core_lo), round_up(core_hi)};
  cert.margin = round_down(overlap);
  cert.contraction_x = std::min(pb.branches[0].contraction_x(), pb.branches[1].contraction_x());
  cert.contraction_y = std::max(pb.branches[0].contraction_y(), pb.branches[1].contraction_y());
  cert.slope_capacity = slope_capacity_rule(cert.margin, cert.contraction_x, cert.contraction_y);
  return cert;
}

namespace {

int minimal_period(const Word& w) {
  const int n = static_cast<int>(w.size());
  for (int d = 1; d <= n; ++d) {
    if (n % d != 0) continue;
    bool periodic = true;
    for (int i = d; i < n && periodic; ++i) periodic = w[i] == w[i - d];
    if (periodic) return d;
  }
  return n;
}

}  // namespace

PeriodicPoint periodic_point(const ProtoBlender& pb, const Word& w) {
  if (w.empty()) throw DomainError("periodic_point needs a nonempty word");
  if (static_cast<int>(w.size()) > kMaxDepth) throw DepthLimitError("word longer than 64 symbols");
  // H = h_{w_1} o ... o h_{w_n}, accumulated exactly from the innermost map outwards.
  std::array<Rational, 2> scale{Rational(1), Rational(1)};
  std::array<Rational, 2> offset{Rational(0), Rational(0)};
  for (auto it = w.rbegin(); it != w.rend(); ++it) {
    const auto& h = pb.branch(*it).exact;
    scale[0] = h.scale_x * scale[0];
    offset[0] = h.scale_x * offset[0] + h.offset_x;
    scale[1] = h.scale_y * scale[1];
    offset[1] = h.scale_y * offset[1] + h.offset_y;
  }
  PeriodicPoint out;
  for (int c = 0; c < 2; ++c) {
    if (scale[c] == 1) throw DegenerateError("composite branch is not contracting");
    out.point[c] = to_precise(Rational(offset[c] / (1 - scale[c])));
  }
  out.period = minimal_period(w);
  return out;
}

Word dense_itinerary(int n) {
  if (n < 1 || n > 16) throw DomainError("dense_itinerary order must lie in [1, 16]");
  // Fredricksen-Kessler-Maiorana construction of the binary de Bruijn sequence.
  std::vector<int> a(n + 1, 0);
  Word seq;
  std::function<void(int, int)> db = [&](int t, int p) {
    if (t > n) {
      if (n % p == 0)
        for (int i = 1; i <= p; ++i) seq.push_back(static_cast<Symbol>(a[i] + 1));
      return;
    }
    a[t] = a[t - p];
    db(t + 1, p);
    for (int j = a[t - p] + 1; j < 2; ++j) {
      a[t] = j;
      db(t + 1, t);
    }
  };
  db(1, 1);
  // Linearize the cyclic sequence.
  for (int i = 0; i < n - 1; ++i) seq.push_back(seq[i]);
  return seq;
}

namespace {

// Boundary slack for high-precision comparisons against the square: far below
// any cell size reachable at depth 64, far above the arithmetic error.
const Precise& boundary_slack() {
  static const Precise slack("1e-80");
  return slack;
}

bool in_square(const Rect2& sq, const PreciseVec2& p) {
  const auto& e = boundary_slack();
  return p[0] >= Precise(sq.x.lo) - e && p[0] <= Precise(sq.x.hi) + e && p[1] >= Precise(sq.y.lo) - e &&
         p[1] <= Precise(sq.y.hi) + e;
}

}  // namespace

PreciseVec2 apply_forward(const ProtoBlender& pb, Symbol s, const PreciseVec2& p) {
  const auto& h = pb.branch(s).exact;
  return {(p[0] - to_precise(h.offset_x)) / to_precise(h.scale_x),
          (p[1] - to_precise(h.offset_y)) / to_precise(h.scale_y)};
}

std::optional<Symbol> branch_of(const ProtoBlender& pb, const PreciseVec2& p) {
  for (Symbol s : {Symbol{1}, Symbol{2}})
    if (in_square(pb.square, apply_forward(pb, s, p))) return s;
  return std::nullopt;
}

Membership membership_depth(const ProtoBlender& pb, const PreciseVec2& p0, int n) {
  if (!in_square(pb.square, p0)) throw DomainError("membership_depth: point outside the square");
  Membership m;
  PreciseVec2 p = p0;
  for (int k = 0; k < n; ++k) {
    const auto s = branch_of(pb, p);
    if (!s) {
      m.exit_depth = k;
      return m;
    }
    m.itinerary.push_back(*s);
    p = apply_forward(pb, *s, p);
  }
  return m;
}

Membership membership_depth(const ProtoBlender& pb, const Vec2& p, int n) {
  return membership_depth(pb, to_precise(p), n);
}

}  // namespace blender
