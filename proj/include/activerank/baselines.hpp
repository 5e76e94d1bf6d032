#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "activerank/engine.hpp"
#include "activerank/error.hpp"
#include "activerank/oracle.hpp"
#include "activerank/partition.hpp"
#include "activerank/rng.hpp"

namespace activerank {

enum class PassiveDesign {
  kUniform,     // ordered pairs i != j drawn uniformly with replacement
  kRoundRobin,  // cycle through all pairs i < j
};

struct PassiveResult {
  std::vector<std::uint64_t> wins;
  std::vector<std::size_t> ranking;  // by wins, ties by ascending id
  std::vector<std::vector<std::size_t>> sets;
  std::uint64_t comparisons = 0;
};

// Non-adaptive baseline: spends the whole budget on pairs chosen independently
// of the outcomes, then ranks by total wins.
inline PassiveResult passive_count_rank(ComparisonOracle& oracle, const PartitionSpec& spec,
                                        std::uint64_t budget, std::uint64_t seed,
                                        PassiveDesign design = PassiveDesign::kUniform) {
  if (budget < 1) throw ConfigError("passive budget must be at least 1");
  const std::size_t n = spec.items();
  PassiveResult r;
  r.wins.assign(n, 0);
  std::size_t rr_i = 0, rr_j = 1;
  for (std::uint64_t k = 0; k < budget; ++k) {
    std::size_t i = 0, j = 0;
    if (design == PassiveDesign::kUniform) {
      i = static_cast<std::size_t>(to_range(mix(seed, stream::kPassive, 2 * k), n));
      j = static_cast<std::size_t>(to_range(mix(seed, stream::kPassive, 2 * k + 1), n - 1));
      if (j >= i) ++j;
    } else {
      i = rr_i;
      j = rr_j;
      if (++rr_j == n) {
        if (++rr_i == n - 1) rr_i = 0;
        rr_j = rr_i + 1;
      }
    }
    const ComparisonOutcome o = oracle.answer({k, i, j, k + 1});
    ++r.wins[o.subject_won ? i : j];
  }
  r.comparisons = budget;
  r.ranking.resize(n);
  std::iota(r.ranking.begin(), r.ranking.end(), std::size_t{0});
  std::stable_sort(r.ranking.begin(), r.ranking.end(),
                   [&](std::size_t a, std::size_t b) { return r.wins[a] > r.wins[b]; });
  r.sets.resize(spec.sets());
  for (std::size_t l = 0; l < spec.sets(); ++l)
    r.sets[l].assign(r.ranking.begin() + static_cast<std::ptrdiff_t>(spec.border(l)),
                     r.ranking.begin() + static_cast<std::ptrdiff_t>(spec.border(l + 1)));
  return r;
}

}  // namespace activerank
