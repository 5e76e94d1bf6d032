#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "activerank/comparison_matrix.hpp"
#include "activerank/error.hpp"
#include "activerank/family.hpp"
#include "activerank/model.hpp"
#include "activerank/partition.hpp"

namespace activerank {

// Per-item distances to the neighbouring set boundaries. For an item in set l
// (0-based), `up` is the score of the last item of set l-1 minus its own score
// and `down` is its own score minus the first item of set l+1. The first set
// has no `up`, the last set no `down`.
struct ItemGaps {
  std::size_t set = 0;
  std::optional<double> up;
  std::optional<double> down;
};

struct GapProfile {
  std::vector<ItemGaps> items;                   // indexed by item id
  std::vector<std::vector<std::size_t>> sets;    // ground-truth partition
  std::vector<std::size_t> order;                // items by descending score
};

inline GapProfile gaps(const ScoreVector& tau, const PartitionSpec& spec) {
  const std::size_t n = tau.size();
  if (spec.items() != n) throw ConfigError("partition and score vector disagree on item count");
  GapProfile g;
  g.order = score_order(tau);
  const std::size_t L = spec.sets();
  for (std::size_t l = 1; l < L; ++l) {
    const std::size_t k = spec.border(l);
    const double above = tau[g.order[k - 1]];
    const double below = tau[g.order[k]];
    if (above - below <= kScoreTieTolerance) {
      std::ostringstream os;
      os << "scores tie across boundary " << l << " (k = " << k << "): items "
         << g.order[k - 1] << " and " << g.order[k] << " both score " << above;
      throw BoundaryTieError(l, os.str());
    }
  }
  g.items.resize(n);
  g.sets.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t pos = spec.border(l); pos < spec.border(l + 1); ++pos) {
      const std::size_t i = g.order[pos];
      g.sets[l].push_back(i);
      ItemGaps& ig = g.items[i];
      ig.set = l;
      if (l > 0) ig.up = tau[g.order[spec.border(l) - 1]] - tau[i];
      if (l + 1 < L) ig.down = tau[i] - tau[g.order[spec.border(l + 1)]];
    }
  }
  return g;
}

inline void check_gap_domain(double x) {
  if (!(x > 0.0 && x <= 1.0)) {
    std::ostringstream os;
    os << "gap " << x << " outside (0, 1]";
    throw std::domain_error(os.str());
  }
}

inline double f0(double x) {
  check_gap_domain(x);
  return 1.0 / (x * x);
}

inline double f_ar(double x) {
  check_gap_domain(x);
  return std::log(2.0 * std::log(2.0 / x)) / (x * x);
}

// Sum over items of f(down) for the first set, max(f(down), f(up)) for
// interior sets and f(up) for the last set.
inline double structural_sum(const GapProfile& g, const std::function<double(double)>& f) {
  double total = 0.0;
  for (const ItemGaps& ig : g.items) {
    if (ig.up && ig.down)
      total += std::max(f(*ig.up), f(*ig.down));
    else if (ig.down)
      total += f(*ig.down);
    else
      total += f(*ig.up);
  }
  return total;
}

// The instance complexity gamma^2: structural sum with f(x) = 1/x^2.
inline double complexity_parameter(const ScoreVector& tau, const PartitionSpec& spec) {
  return structural_sum(gaps(tau, spec), f0);
}

// Constant of the per-item elimination-time bounds.
inline constexpr double kEliminationConstant = 654.0;

// Largest delta for which the accuracy and lower-bound guarantees are stated.
inline constexpr double kGuaranteeMaxDelta = 0.14;

struct ItemTimeBound {
  std::optional<double> t_up;
  std::optional<double> t_down;
  double bound = 0.0;  // the later of the two applicable times
};

struct UpperBound {
  std::vector<ItemTimeBound> items;  // indexed by item id
  double total = 0.0;                // sum of per-item bounds: comparisons
  double structural_sum_far = 0.0;   // structural sum with f_ar
  // log(n/delta) * structural_sum_far with the unnamed leading constant
  // reported as 1; a scale-free shape, not a guarantee.
  double log_factor_times_sum = 0.0;
  bool delta_in_guarantee_range = true;
};

// Time after which an item at distance `gap` from a boundary has separated
// from it: (654 / gap^2) log((n/delta) log(2/gap)).
inline double elimination_time(double gap, std::size_t n, double delta) {
  check_gap_domain(gap);
  return kEliminationConstant / (gap * gap) *
         std::log(static_cast<double>(n) / delta * std::log(2.0 / gap));
}

inline UpperBound ar_upper_bound(const ScoreVector& tau, const PartitionSpec& spec,
                                 double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  const GapProfile g = gaps(tau, spec);
  const std::size_t n = tau.size();
  UpperBound ub;
  ub.delta_in_guarantee_range = delta <= kGuaranteeMaxDelta;
  ub.items.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const ItemGaps& ig = g.items[i];
    ItemTimeBound& tb = ub.items[i];
    if (ig.up) tb.t_up = elimination_time(*ig.up, n, delta);
    if (ig.down) tb.t_down = elimination_time(*ig.down, n, delta);
    tb.bound = std::max(tb.t_up.value_or(0.0), tb.t_down.value_or(0.0));
    ub.total += tb.bound;
  }
  ub.structural_sum_far = structural_sum(g, f_ar);
  ub.log_factor_times_sum = std::log(static_cast<double>(n) / delta) * ub.structural_sum_far;
  return ub;
}

inline constexpr double kGeneralLowerConstant = 1.0 / 16.0;

// (1/16) log(1/(2 delta)) gamma^2: expected comparisons any uniformly
// delta-accurate algorithm needs. The formula is positive for delta < 1/2;
// the guarantee itself is stated for delta <= 0.14.
inline double lower_bound_from_complexity(double gamma2, double delta) {
  if (!(delta > 0.0 && delta < 0.5)) throw ConfigError("delta must lie in (0, 1/2)");
  return kGeneralLowerConstant * std::log(1.0 / (2.0 * delta)) * gamma2;
}

inline double lower_bound_general(const ScoreVector& tau, const PartitionSpec& spec,
                                  double delta) {
  return lower_bound_from_complexity(complexity_parameter(tau, spec), delta);
}

struct ParametricConstant {
  double mu_min = 0.0;
  double mu_max = 0.0;
  double c_par = 0.0;

  // c_par log(1/(2 delta)) gamma^2.
  double lower_bound(double gamma2, double delta) const {
    if (!(delta > 0.0 && delta < 0.5)) throw ConfigError("delta must lie in (0, 1/2)");
    return c_par * std::log(1.0 / (2.0 * delta)) * gamma2;
  }
};

inline constexpr std::size_t kDerivativeGridPoints = 10000;

// c_par = p_min mu_min^2 / (2.004 mu_max^2), where [mu_min, mu_max] bounds the
// cdf derivative on [cdf^-1(p_min), cdf^-1(1 - p_min)].
//
// BTL and Thurstone have symmetric unimodal densities, so the extremes are at
// 0 and at the interval ends. Custom families are scanned on a 10^4-point
// grid; a density that is not unimodal on the interval is rejected unless
// `allow_grid_fallback` is set, in which case the grid extremes are used.
inline ParametricConstant c_par(const ParametricFamily& family, double p_min,
                                bool allow_grid_fallback = false) {
  if (!(p_min > 0.0 && p_min < 0.5)) throw ConfigError("p_min must lie in (0, 1/2)");
  if (!family.has_derivative())
    throw ConfigError("family '" + family.name + "' has no derivative");
  ParametricConstant pc;
  const double lo = family.inverse(p_min);
  const double hi = family.inverse(1.0 - p_min);
  if (family.kind != ParametricFamily::Kind::kCustom) {
    pc.mu_max = family.pdf(0.0);
    pc.mu_min = std::min(family.pdf(lo), family.pdf(hi));
  } else {
    std::vector<double> values(kDerivativeGridPoints);
    for (std::size_t k = 0; k < kDerivativeGridPoints; ++k) {
      const double t = lo + (hi - lo) * static_cast<double>(k) /
                                static_cast<double>(kDerivativeGridPoints - 1);
      values[k] = family.pdf(t);
    }
    const auto peak = std::max_element(values.begin(), values.end());
    const bool unimodal =
        std::is_sorted(values.begin(), peak + 1) &&
        std::is_sorted(peak, values.end(), std::greater<>());
    if (!unimodal && !allow_grid_fallback)
      throw ConfigError("derivative of family '" + family.name +
                        "' is not unimodal on the p_min interval; enable the grid fallback");
    pc.mu_max = unimodal ? std::max(*peak, family.pdf(0.0)) : *peak;
    pc.mu_min = unimodal ? std::min(values.front(), values.back())
                         : *std::min_element(values.begin(), values.end());
  }
  pc.c_par = p_min * pc.mu_min * pc.mu_min / (2.004 * pc.mu_max * pc.mu_max);
  return pc;
}

}  // namespace activerank
