#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "activerank/error.hpp"

namespace activerank {

// Confidence radius alpha_t = scale * sqrt(log(a * n * (log(b * t) + shift) / delta) / t).
//
//   paper:     a = 125, b = 1.12, scale = 1,   shift = 0  (anytime-valid LIL radius)
//   relaxed_a: a = 3,   b = 1.12, scale = 1/4, shift = 0
//   relaxed_b: a = 1/3, b = 1,    scale = 1/4, shift = 1
//
// A non-positive outer logarithm (only reachable for tiny n with delta near 1
// under the relaxed presets) is clamped to zero.
struct AlphaSchedule {
  std::string preset = "paper";
  double a = 125.0;
  double b = 1.12;
  double scale = 1.0;
  double shift = 0.0;

  static AlphaSchedule paper() { return {}; }
  static AlphaSchedule relaxed_a() { return {"relaxed_a", 3.0, 1.12, 0.25, 0.0}; }
  static AlphaSchedule relaxed_b() { return {"relaxed_b", 1.0 / 3.0, 1.0, 0.25, 1.0}; }
  static AlphaSchedule custom(double a, double b, double scale, double shift) {
    if (!(a > 0 && b > 0 && scale > 0 && shift >= 0))
      throw ConfigError("custom alpha schedule needs a, b, scale > 0 and shift >= 0");
    return {"custom", a, b, scale, shift};
  }

  static AlphaSchedule by_name(const std::string& name) {
    if (name == "paper") return paper();
    if (name == "relaxed_a") return relaxed_a();
    if (name == "relaxed_b") return relaxed_b();
    throw ConfigError("unknown alpha preset '" + name + "' (expected paper|relaxed_a|relaxed_b)");
  }

  double operator()(std::uint64_t t, std::size_t n, double delta) const {
    const double tt = static_cast<double>(t);
    const double inner = std::log(b * tt) + shift;
    const double outer = std::log(a * static_cast<double>(n) * inner / delta);
    return scale * std::sqrt(std::max(outer, 0.0) / tt);
  }
};

// Anytime deviation radius for the running mean of i.i.d. Bernoulli draws:
// |mean_t - mu| <= sqrt(log(125 log(1.12 t) / delta') / t) for all t >= 1
// with probability at least 1 - delta'.
inline double lil_radius(std::uint64_t t, double delta_prime) {
  return AlphaSchedule::paper()(t, 1, delta_prime);
}

}  // namespace activerank
