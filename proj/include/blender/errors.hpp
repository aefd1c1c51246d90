#pragma once

#include <stdexcept>
#include <string>

namespace blender {

// Base of every error raised by the library. The CLI maps subclasses to exit
// codes: input problems -> 1, certificate failures -> 2, admissibility and
// margin violations -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the domain of an operation (point not in S, y not in [0,1]).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Degenerate input such as an eigenvalue 1 in affine_fixed_point or an empty union.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

class DepthLimitError : public Error {
 public:
  using Error::Error;
};

// Malformed or schema-incompatible documents.
class FormatError : public Error {
 public:
  using Error::Error;
};

// The system violates a structural constraint (validate failed).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// The inductive covering check failed; carries the uncovered sub-interval.
class CoveringError : public Error {
 public:
  CoveringError(const std::string& what, double gap_lo, double gap_hi)
      : Error(what), gap_lo_(gap_lo), gap_hi_(gap_hi) {}
  double gap_lo() const { return gap_lo_; }
  double gap_hi() const { return gap_hi_; }

 private:
  double gap_lo_;
  double gap_hi_;
};

// Greedy descent reached a cell where no child accepts the curve.
class WitnessError : public Error {
 public:
  using Error::Error;
};

// A curve or scenario violates the quantitative admissibility bound.
class AdmissibilityError : public Error {
 public:
  using Error::Error;
};

class MarginExceededError : public Error {
 public:
  using Error::Error;
};

class ConnectionBrokenError : public Error {
 public:
  ConnectionBrokenError(const std::string& what, double margin)
      : Error(what), margin_(margin) {}
  // Signed slack of the violated bound (negative when violated).
  double margin() const { return margin_; }

 private:
  double margin_;
};

}  // namespace blender
