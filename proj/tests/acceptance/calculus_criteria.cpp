#include <cmath>
#include <random>

#include "criteria.hpp"
#include "prk/calculus.hpp"

namespace acceptance {

using prk::Tnorm;

namespace {

constexpr double kTol = 1e-12;

}  // namespace

Outcome tnorm_calculus() {
  Stopwatch clock;
  Tally t;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // A tenth of the draws land exactly on 0 or 1 so the boundaries are hit.
  auto draw = [&] {
    double k = u(rng);
    if (k < 0.05) return 0.0;
    if (k < 0.10) return 1.0;
    return u(rng);
  };
  constexpr int kSamples = 10000;
  for (int i = 0; i < kSamples; ++i) {
    Tnorm f = prk::kAllTnorms[rng() % 5];
    double a = draw(), b = draw(), c = draw();
    double a2 = a + u(rng) * (1.0 - a);
    auto T = [&](double x, double y) { return prk::tnorm(f, x, y); };
    auto S = [&](double x, double y) { return prk::tconorm(f, x, y); };
    auto where = [&](const char* prop) {
      return cat(prop, " ", prk::to_string(f), " a=", a, " b=", b, " c=", c);
    };

    t.expect(T(a, b) >= 0.0 && T(a, b) <= 1.0 && S(a, b) >= 0.0 && S(a, b) <= 1.0, [&] { return where("range"); });
    t.expect(std::abs(T(a, b) - T(b, a)) <= kTol, [&] { return where("T commutativity"); });
    t.expect(std::abs(S(a, b) - S(b, a)) <= kTol, [&] { return where("S commutativity"); });
    t.expect(std::abs(T(T(a, b), c) - T(a, T(b, c))) <= kTol, [&] { return where("T associativity"); });
    t.expect(std::abs(S(S(a, b), c) - S(a, S(b, c))) <= kTol, [&] { return where("S associativity"); });
    t.expect(T(a, b) <= T(a2, b) + kTol, [&] { return where("T monotonicity"); });
    t.expect(S(a, b) <= S(a2, b) + kTol, [&] { return where("S monotonicity"); });
    t.expect(T(0.0, a) == 0.0 && T(a, 0.0) == 0.0, [&] { return where("T zero"); });
    t.expect(S(1.0, a) == 1.0 && S(a, 1.0) == 1.0, [&] { return where("S one"); });
    t.expect(std::abs(T(a, 1.0) - a) <= kTol && std::abs(T(1.0, a) - a) <= kTol, [&] { return where("T identity"); });
    t.expect(std::abs(S(a, 0.0) - a) <= kTol && std::abs(S(0.0, a) - a) <= kTol, [&] { return where("S identity"); });
    t.expect(std::abs(S(a, b) - (1.0 - T(1.0 - a, 1.0 - b))) <= kTol, [&] { return where("DeMorgan S"); });
    t.expect(std::abs(T(a, b) - (1.0 - S(1.0 - a, 1.0 - b))) <= kTol, [&] { return where("DeMorgan T"); });
    for (int k = 0; k + 1 < 5; ++k) {
      Tnorm lo = prk::kAllTnorms[k], hi = prk::kAllTnorms[k + 1];
      t.expect(prk::tnorm(lo, a, b) <= prk::tnorm(hi, a, b) + kTol, [&] {
        return cat("ordering ", prk::to_string(lo), " <= ", prk::to_string(hi), " a=", a, " b=", b);
      });
      t.expect(prk::tconorm(lo, a, b) + kTol >= prk::tconorm(hi, a, b), [&] {
        return cat("dual ordering ", prk::to_string(lo), " a=", a, " b=", b);
      });
    }
  }
  for (Tnorm f : prk::kAllTnorms) {
    t.expect(prk::tnorm(f, 1, 1) == 1 && prk::tnorm(f, 0, 0) == 0 && prk::tnorm(f, 1, 0) == 0,
             [&] { return cat("AND truth table ", prk::to_string(f)); });
    t.expect(prk::tconorm(f, 0, 0) == 0 && prk::tconorm(f, 1, 0) == 1 && prk::tconorm(f, 1, 1) == 1,
             [&] { return cat("OR truth table ", prk::to_string(f)); });
  }
  double secs = clock.seconds();
  t.expect(secs < 1.0, [&] { return cat("runtime ", secs, " s"); });
  return conclude(t, cat("samples=", kSamples));
}

}  // namespace acceptance
