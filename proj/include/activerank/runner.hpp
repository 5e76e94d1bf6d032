#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <vector>

#include "activerank/engine.hpp"
#include "activerank/oracle.hpp"
#include "activerank/partition.hpp"
#include "activerank/schedule.hpp"

namespace activerank {

inline constexpr std::uint64_t kDefaultBudgetCap = 1'000'000'000;

struct RunResult {
  std::vector<std::vector<std::size_t>> sets;
  std::uint64_t comparisons = 0;
  std::uint64_t rounds = 0;
  bool truncated = false;
};

// Called after every applied round.
using RoundObserver = std::function<void(const ActiveRanker&)>;

// Plans and applies rounds against `oracle` until every item is assigned. A
// round that would push the comparison count past `budget_cap` is not started;
// the run then returns the best-effort partition flagged as truncated.
inline RunResult run_to_completion(ComparisonOracle& oracle, const PartitionSpec& spec,
                                   double delta, const AlphaSchedule& schedule,
                                   std::uint64_t seed,
                                   std::uint64_t budget_cap = kDefaultBudgetCap,
                                   const RoundObserver& observer = {}) {
  ActiveRanker engine(spec, delta, schedule, seed);
  std::vector<ComparisonOutcome> outcomes;
  while (!engine.terminated()) {
    const EngineState& s = engine.state();
    if (s.total_comparisons + s.active.size() > budget_cap) break;
    const auto& queries = engine.plan_round();
    outcomes.clear();
    outcomes.reserve(queries.size());
    for (const ComparisonQuery& q : queries) outcomes.push_back(oracle.answer(q));
    engine.apply_round(outcomes);
    if (observer) observer(engine);
  }
  RunResult r;
  r.truncated = !engine.terminated();
  r.sets = r.truncated ? engine.best_effort_partition() : engine.state().assigned;
  r.comparisons = engine.state().total_comparisons;
  r.rounds = engine.state().round;
  return r;
}

// True when both partitions hold the same items in each set.
inline bool same_partition(std::vector<std::vector<std::size_t>> a,
                           std::vector<std::vector<std::size_t>> b) {
  if (a.size() != b.size()) return false;
  for (std::size_t l = 0; l < a.size(); ++l) {
    std::sort(a[l].begin(), a[l].end());
    std::sort(b[l].begin(), b[l].end());
    if (a[l] != b[l]) return false;
  }
  return true;
}

}  // namespace activerank
