#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace prk {

/// A degree of belief in [0,1].  Construction outside the unit interval throws.
class Confidence {
public:
  constexpr Confidence() = default;
  explicit Confidence(double v);

  constexpr double value() const { return value_; }
  constexpr operator double() const { return value_; }

private:
  double value_ = 0.0;
};

/// The five triangular-norm families, ordered pointwise from the weakest
/// conjunction (Lukasiewicz) to the strongest (min).
enum class Tnorm { T1, T1_5, T2, T2_5, T3 };

inline constexpr Tnorm kAllTnorms[] = {Tnorm::T1, Tnorm::T1_5, Tnorm::T2, Tnorm::T2_5, Tnorm::T3};

std::string_view to_string(Tnorm f);
std::optional<Tnorm> parse_tnorm(std::string_view name);

double tnorm(Tnorm f, double a, double b);
double tconorm(Tnorm f, double a, double b);
inline double negate(double a) { return 1.0 - a; }

/// Left fold of tnorm over a non-empty list.
double tnorm_n(Tnorm f, std::span<const double> values);
/// Left fold of tconorm; the empty fold is 0, the identity of every T-conorm.
double tconorm_n(Tnorm f, std::span<const double> values);

/// [lb, ub]: lb is the minimal degree of confirmation, 1 - ub the degree of
/// refutation.  lb > ub is representable and denotes a conflict.
struct Interval {
  double lb = 0.0;
  double ub = 1.0;

  static constexpr Interval unknown() { return {0.0, 1.0}; }
  static Interval checked(double lb, double ub);

  double width() const { return ub - lb; }
  /// ub - lb for a consistent interval; 0 once the bounds cross.
  double ignorance() const { return lb <= ub ? ub - lb : 0.0; }
  double refutation() const { return 1.0 - ub; }
  /// Interval of the negated wff: LB(~w) = 1 - UB(w).
  Interval negation() const { return {1.0 - ub, 1.0 - lb}; }
  bool conflicting() const { return lb > ub; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

}  // namespace prk
