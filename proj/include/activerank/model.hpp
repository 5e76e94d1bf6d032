#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "activerank/comparison_matrix.hpp"
#include "activerank/error.hpp"
#include "activerank/family.hpp"
#include "activerank/partition.hpp"

namespace activerank {

// Borda scores of every item.
inline ScoreVector scores(const ComparisonMatrix& m) {
  const std::size_t n = m.size();
  std::vector<double> wins(n, 0.0);
  const auto& upper = m.upper();
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j, ++k) {
      wins[i] += upper[k];
      wins[j] += 1.0 - upper[k];
    }
  }
  for (double& w : wins) w /= static_cast<double>(n - 1);
  return ScoreVector(std::move(wins));
}

// Items sorted by score, descending; ties broken by ascending id.
inline std::vector<std::size_t> score_order(const ScoreVector& tau) {
  std::vector<std::size_t> order(tau.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return tau[a] > tau[b]; });
  return order;
}

inline constexpr double kScoreTieTolerance = 1e-12;

struct MembershipReport {
  bool member = true;
  double min_entry = 0.5;
  // (i, j) with M_ij < p_min, i != j.
  std::vector<std::pair<std::size_t, std::size_t>> low_entries;
  // (i, j), i < j, with |tau_i - tau_j| <= 1e-12 (only pairs that matter in
  // the chosen distinctness mode are listed).
  std::vector<std::pair<std::size_t, std::size_t>> tied_scores;
};

enum class DistinctScores {
  kNone,        // no distinctness requirement
  kAll,         // every pair of scores must differ
  kBoundaries,  // only items straddling a partition boundary must differ
};

// Checks membership of M in the class of matrices with entries >= p_min and
// (optionally) distinct scores.
inline MembershipReport validate(const ComparisonMatrix& m, double p_min,
                                 DistinctScores mode = DistinctScores::kAll,
                                 const std::optional<PartitionSpec>& spec = std::nullopt) {
  if (!(p_min >= 0.0 && p_min <= 0.5))
    throw ConfigError("p_min must lie in [0, 1/2]");
  MembershipReport r;
  const std::size_t n = m.size();
  r.min_entry = m.min_off_diagonal();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && m(i, j) < p_min) r.low_entries.emplace_back(i, j);

  const ScoreVector tau = scores(m);
  if (mode == DistinctScores::kAll) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (std::abs(tau[i] - tau[j]) <= kScoreTieTolerance) r.tied_scores.emplace_back(i, j);
  } else if (mode == DistinctScores::kBoundaries) {
    if (!spec || spec->items() != n)
      throw ConfigError("boundary-only validation needs a partition over the same items");
    const auto order = score_order(tau);
    for (std::size_t l = 1; l < spec->sets(); ++l) {
      const std::size_t above = order[spec->border(l) - 1];
      const std::size_t below = order[spec->border(l)];
      if (std::abs(tau[above] - tau[below]) <= kScoreTieTolerance)
        r.tied_scores.emplace_back(std::min(above, below), std::max(above, below));
    }
  }
  r.member = r.low_entries.empty() && r.tied_scores.empty();
  return r;
}

// M_ij = cdf(w_i - w_j).
inline ComparisonMatrix parametric_matrix(const ParametricFamily& family,
                                          const std::vector<double>& w) {
  family.check_symmetric_at_zero();
  const std::size_t n = w.size();
  for (double x : w)
    if (!std::isfinite(x)) throw ConfigError("parameter vector must be finite");
  std::vector<double> upper;
  upper.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) upper.push_back(family.cdf(w[i] - w[j]));
  return ComparisonMatrix(n, std::move(upper));
}

// BTL model with w_i = log(1/eta + n - i) (items numbered from 1), written in
// its closed form (1/eta + n - i) / (2(1/eta + n) - i - j).
inline ComparisonMatrix model_eta(std::size_t n, double eta) {
  if (!(eta > 0.0)) throw ConfigError("eta must be positive");
  const double a = 1.0 / eta;
  const double nn = static_cast<double>(n);
  std::vector<double> upper;
  upper.reserve(n * (n - 1) / 2);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = i + 1; j <= n; ++j) {
      const double di = static_cast<double>(i), dj = static_cast<double>(j);
      upper.push_back((a + nn - di) / (2.0 * (a + nn) - di - dj));
    }
  }
  return ComparisonMatrix(n, std::move(upper));
}

// The parameters model_eta encodes, for cross-checks against parametric_matrix.
inline std::vector<double> model_eta_weights(std::size_t n, double eta) {
  std::vector<double> w(n);
  for (std::size_t i = 1; i <= n; ++i)
    w[i - 1] = std::log(1.0 / eta + static_cast<double>(n) - static_cast<double>(i));
  return w;
}

// BTL model with w_i = xi (n - i): adjacent items are separated by
// 1 / (1 + e^{-xi}).
inline ComparisonMatrix model_xi(std::size_t n, double xi) {
  if (!(xi > 0.0)) throw ConfigError("xi must be positive");
  std::vector<double> upper;
  upper.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      upper.push_back(detail::logistic(xi * static_cast<double>(j - i)));
  return ComparisonMatrix(n, std::move(upper));
}

// Replaces round(lambda * n(n-1)/2) upper-triangle entries, chosen uniformly
// without replacement, by Uniform(1e-6, 1 - 1e-6) draws.
template <typename Rng>
ComparisonMatrix perturb_btl(const ComparisonMatrix& m, double lambda, Rng& rng) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  constexpr double kEps = 1e-6;
  std::vector<double> upper = m.upper();
  const auto count = static_cast<std::size_t>(std::llround(lambda * static_cast<double>(upper.size())));
  if (count == 0) return m;
  std::vector<std::size_t> positions(upper.size());
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  // Partial Fisher-Yates: the first `count` slots become a uniform sample.
  for (std::size_t k = 0; k < count; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, positions.size() - 1);
    std::swap(positions[k], positions[pick(rng)]);
  }
  std::uniform_real_distribution<double> draw(kEps, 1.0 - kEps);
  for (std::size_t k = 0; k < count; ++k) upper[positions[k]] = draw(rng);
  return ComparisonMatrix(m.size(), std::move(upper));
}

struct FeasibilityReport {
  enum class Condition { kNone, kSum, kLowerPartialSum, kUpperPartialSum };

  bool feasible = true;
  Condition violated = Condition::kNone;
  std::size_t j = 0;  // prefix length at which a partial-sum check failed
  double value = 0.0;
  double bound = 0.0;
  std::string message;
};

// Necessary (not sufficient) conditions for tau to be the score vector of some
// comparison matrix:
//   (a) sum tau = n/2;
//   (b) the j largest scores sum to at least j(j-1) / (2(n-1));
//   (c) the j largest scores sum to at most (j(j-1)/2 + j(n-j)) / (n-1).
// Reports the first violation found, checking (a) and then (b), (c) for
// j = 1..n.
inline FeasibilityReport check_score_feasibility(const ScoreVector& tau) {
  constexpr double kTol = 1e-9;
  const std::size_t n = tau.size();
  if (n < 2) throw ConfigError("score vector needs at least 2 items");
  for (double t : tau)
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("scores must lie in [0, 1]");

  FeasibilityReport r;
  const double nn = static_cast<double>(n);
  const double total = tau.sum();
  if (std::abs(total - nn / 2.0) > kTol) {
    r.feasible = false;
    r.violated = FeasibilityReport::Condition::kSum;
    r.value = total;
    r.bound = nn / 2.0;
    std::ostringstream os;
    os << "scores sum to " << total << ", expected n/2 = " << nn / 2.0;
    r.message = os.str();
    return r;
  }
  std::vector<double> sorted = tau.values();
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double prefix = 0.0;
  for (std::size_t j = 1; j <= n; ++j) {
    prefix += sorted[j - 1];
    const double dj = static_cast<double>(j);
    const double lower = dj * (dj - 1.0) / (2.0 * (nn - 1.0));
    const double upper = (dj * (dj - 1.0) / 2.0 + dj * (nn - dj)) / (nn - 1.0);
    if (prefix < lower - kTol || prefix > upper + kTol) {
      const bool low = prefix < lower - kTol;
      r.feasible = false;
      r.violated = low ? FeasibilityReport::Condition::kLowerPartialSum
                       : FeasibilityReport::Condition::kUpperPartialSum;
      r.j = j;
      r.value = prefix;
      r.bound = low ? lower : upper;
      std::ostringstream os;
      os << "the " << j << " largest scores sum to " << prefix << (low ? " < " : " > ")
         << r.bound;
      r.message = os.str();
      return r;
    }
  }
  return r;
}

}  // namespace activerank
