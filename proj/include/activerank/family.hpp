#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>

#include <boost/math/special_functions/erf.hpp>

#include "activerank/error.hpp"

namespace activerank {

// A parametric comparison model M_ij = cdf(w_i - w_j). The cdf must be
// continuous, strictly increasing and satisfy cdf(t) = 1 - cdf(-t).
struct ParametricFamily {
  enum class Kind { kBtl, kThurstone, kCustom };

  Kind kind = Kind::kCustom;
  std::string name;
  std::function<double(double)> cdf;
  std::function<double(double)> pdf;          // derivative of cdf; may be empty
  std::function<double(double)> inverse_cdf;  // may be empty for custom

  bool has_derivative() const { return static_cast<bool>(pdf); }

  // Inverse through bisection when no closed form was supplied.
  double inverse(double p) const {
    if (inverse_cdf) return inverse_cdf(p);
    double lo = -1.0, hi = 1.0;
    while (cdf(lo) > p) lo *= 2.0;
    while (cdf(hi) < p) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++it) {
      const double mid = 0.5 * (lo + hi);
      (cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

  // Throws unless cdf(0) = 1/2 within 1e-12.
  void check_symmetric_at_zero() const {
    if (!cdf) throw ConfigError("parametric family '" + name + "' has no cdf");
    if (std::abs(cdf(0.0) - 0.5) > 1e-12)
      throw ConfigError("parametric family '" + name + "' violates cdf(0) = 1/2");
  }
};

namespace detail {

inline double logistic(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace detail

// Bradley-Terry-Luce: the logistic sigmoid.
inline ParametricFamily btl() {
  ParametricFamily f;
  f.kind = ParametricFamily::Kind::kBtl;
  f.name = "btl";
  f.cdf = detail::logistic;
  f.pdf = [](double t) {
    const double s = detail::logistic(t);
    return s * (1.0 - s);
  };
  f.inverse_cdf = [](double p) { return std::log(p) - std::log1p(-p); };
  return f;
}

// Thurstone (Case V): the standard normal CDF. Evaluated through erfc and its
// inverse, both accurate to a few ulps.
inline ParametricFamily thurstone() {
  ParametricFamily f;
  f.kind = ParametricFamily::Kind::kThurstone;
  f.name = "thurstone";
  f.cdf = [](double t) { return 0.5 * std::erfc(-t / std::numbers::sqrt2); };
  f.pdf = [](double t) {
    return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
  };
  f.inverse_cdf = [](double p) {
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
  };
  return f;
}

inline ParametricFamily custom_family(std::string name,
                                      std::function<double(double)> cdf,
                                      std::function<double(double)> pdf = {},
                                      std::function<double(double)> inverse_cdf = {}) {
  ParametricFamily f;
  f.kind = ParametricFamily::Kind::kCustom;
  f.name = std::move(name);
  f.cdf = std::move(cdf);
  f.pdf = std::move(pdf);
  f.inverse_cdf = std::move(inverse_cdf);
  f.check_symmetric_at_zero();
  return f;
}

inline ParametricFamily family_by_name(const std::string& name) {
  if (name == "btl") return btl();
  if (name == "thurstone") return thurstone();
  throw ConfigError("unknown parametric family '" + name + "' (expected btl|thurstone)");
}

}  // namespace activerank
