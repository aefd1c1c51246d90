#include "blender/precise.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "blender/errors.hpp"

namespace blender {

std::string to_string(const Precise& v, int digits) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

Precise precise_from_string(const std::string& s) {
  try {
    return Precise(s);
  } catch (const std::exception&) {
    throw FormatError("not a decimal number: " + s);
  }
}

Precise to_precise(const Rational& q) {
  return Precise(boost::multiprecision::numerator(q)) / Precise(boost::multiprecision::denominator(q));
}

double to_nearest(const Rational& q) { return static_cast<double>(to_precise(q)); }

double round_down(const Rational& q) {
  double d = to_nearest(q);
  while (Rational(d) > q) d = std::nextafter(d, -std::numeric_limits<double>::infinity());
  return d;
}

double round_up(const Rational& q) {
  double d = to_nearest(q);
  while (Rational(d) < q) d = std::nextafter(d, std::numeric_limits<double>::infinity());
  return d;
}

Interval enclose(const Rational& q) { return {round_down(q), round_up(q)}; }

std::string to_string(const Rational& q) {
  const auto den = boost::multiprecision::denominator(q);
  if (den == 1) return boost::multiprecision::numerator(q).str();
  return boost::multiprecision::numerator(q).str() + "/" + den.str();
}

Rational rational_from_string(const std::string& s) {
  try {
    const auto slash = s.find('/');
    if (slash != std::string::npos) {
      const boost::multiprecision::cpp_int num(s.substr(0, slash));
      const boost::multiprecision::cpp_int den(s.substr(slash + 1));
      if (den == 0) throw FormatError("zero denominator in " + s);
      return Rational(num, den);
    }
    const auto dot = s.find('.');
    const auto exp = s.find_first_of("eE");
    if (exp != std::string::npos) throw FormatError("exponent notation is not accepted for exact values: " + s);
    if (dot == std::string::npos) return Rational(boost::multiprecision::cpp_int(s));
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    boost::multiprecision::cpp_int den = 1;
    for (std::size_t i = dot + 1; i < s.size(); ++i) den *= 10;
    return Rational(boost::multiprecision::cpp_int(digits), den);
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception&) {
    throw FormatError("not an exact number: " + s);
  }
}

}  // namespace blender
