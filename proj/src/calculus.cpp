#include "prk/calculus.hpp"

#include <algorithm>
#include <cmath>

namespace prk {

Confidence::Confidence(double v) : value_(v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::out_of_range("confidence outside [0,1]: " + std::to_string(v));
  }
}

std::string_view to_string(Tnorm f) {
  switch (f) {
    case Tnorm::T1: return "T1";
    case Tnorm::T1_5: return "T1.5";
    case Tnorm::T2: return "T2";
    case Tnorm::T2_5: return "T2.5";
    case Tnorm::T3: return "T3";
  }
  return "?";
}

std::optional<Tnorm> parse_tnorm(std::string_view name) {
  for (Tnorm f : kAllTnorms) {
    if (to_string(f) == name) return f;
  }
  return std::nullopt;
}

double tnorm(Tnorm f, double a, double b) {
  // T(0, x) = T(x, 0) = 0 for every family; this also removes the 1/0 in T2.5.
  if (a == 0.0 || b == 0.0) return 0.0;
  switch (f) {
    case Tnorm::T1:
      return std::max(0.0, a + b - 1.0);
    case Tnorm::T1_5: {
      const double s = std::sqrt(a) + std::sqrt(b);
      if (s >= 1.0) {
        const double d = s - 1.0;
        return d * d;
      }
      return 0.0;
    }
    case Tnorm::T2:
      return a * b;
    case Tnorm::T2_5:
      return 1.0 / (1.0 / a + 1.0 / b - 1.0);
    case Tnorm::T3:
      return std::min(a, b);
  }
  return 0.0;
}

double tconorm(Tnorm f, double a, double b) {
  return 1.0 - tnorm(f, 1.0 - a, 1.0 - b);
}

double tnorm_n(Tnorm f, std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("tnorm_n over an empty list");
  double acc = values.front();
  for (double v : values.subspan(1)) acc = tnorm(f, acc, v);
  return acc;
}

double tconorm_n(Tnorm f, std::span<const double> values) {
  double acc = 0.0;
  bool first = true;
  for (double v : values) {
    acc = first ? v : tconorm(f, acc, v);
    first = false;
  }
  return acc;
}

Interval Interval::checked(double lb, double ub) {
  Confidence l(lb), u(ub);
  if (lb > ub) {
    throw std::invalid_argument("interval lower bound exceeds upper bound");
  }
  return {l.value(), u.value()};
}

}  // namespace prk
