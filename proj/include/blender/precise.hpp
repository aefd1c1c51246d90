#pragma once

#include <array>
#include <string>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "blender/geometry.hpp"

namespace blender {

// ~330-bit binary float. Forward iteration of the proto-blender expands the
// vertical coordinate tenfold per step, so orbit checks to depth 64 need far
// more than double precision.
using Precise = boost::multiprecision::cpp_bin_float_100;
using PreciseVec2 = std::array<Precise, 2>;

// Exact coefficients of the branch maps.
using Rational = boost::multiprecision::cpp_rational;

inline PreciseVec2 to_precise(const Vec2& p) { return {Precise(p[0]), Precise(p[1])}; }
inline Vec2 to_double(const PreciseVec2& p) { return {static_cast<double>(p[0]), static_cast<double>(p[1])}; }

// Decimal rendering with `digits` significant digits.
std::string to_string(const Precise& v, int digits = 40);
Precise precise_from_string(const std::string& s);

Precise to_precise(const Rational& q);
double round_down(const Rational& q);
double round_up(const Rational& q);
double to_nearest(const Rational& q);
// Tightest double interval containing q.
Interval enclose(const Rational& q);
// "p/q" or "p" for integers.
std::string to_string(const Rational& q);
// Accepts "p/q", integers, and decimal literals such as "0.05" (read exactly).
Rational rational_from_string(const std::string& s);

}  // namespace blender
