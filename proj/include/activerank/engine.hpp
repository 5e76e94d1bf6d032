#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <unordered_map>
#include <utility>
#include <vector>

#include "activerank/error.hpp"
#include "activerank/partition.hpp"
#include "activerank/rng.hpp"
#include "activerank/schedule.hpp"

namespace activerank {

struct ComparisonQuery {
  std::uint64_t query_id = 0;
  std::size_t subject = 0;
  std::size_t opponent = 0;
  std::uint64_t round = 0;

  friend bool operator==(const ComparisonQuery&, const ComparisonQuery&) = default;
};

struct ComparisonOutcome {
  std::uint64_t query_id = 0;
  bool subject_won = false;

  friend bool operator==(const ComparisonOutcome&, const ComparisonOutcome&) = default;
};

// Live state of an active-ranking run. Items are 0-based ids; sets are
// 0-based indices into the partition.
struct EngineState {
  std::size_t n = 0;
  double delta = 0.1;
  AlphaSchedule schedule;
  std::uint64_t seed = 0;

  std::uint64_t round = 0;                // t: completed rounds
  std::vector<std::size_t> active;        // S, sorted by estimate after each round
  std::vector<std::uint64_t> wins;        // per item
  std::vector<std::uint64_t> samples;     // rounds an item took part in
  std::vector<std::optional<std::size_t>> assigned_set;  // per item
  std::vector<std::vector<std::size_t>> assigned;        // \hat S_l in assignment order
  std::vector<std::size_t> borders;       // \hat k_0 .. \hat k_L over the active set
  std::uint64_t total_comparisons = 0;
  std::uint64_t next_query_id = 0;
  std::vector<ComparisonQuery> pending;   // planned, not yet applied
  bool terminated = false;

  // Running mean of the item's outcomes; 0 before its first comparison.
  double estimate(std::size_t i) const {
    return samples[i] == 0 ? 0.0
                           : static_cast<double>(wins[i]) / static_cast<double>(samples[i]);
  }

  // alpha_t of the most recent round; empty before the first.
  std::optional<double> alpha() const {
    if (round == 0) return std::nullopt;
    return schedule(round, n, delta);
  }

  std::size_t sets() const noexcept { return assigned.size(); }
};

struct ItemConfidence {
  std::size_t item = 0;
  double estimate = 0.0;
  std::uint64_t samples = 0;
  // [estimate - 4 alpha, estimate + 4 alpha] at the item's last update;
  // empty before the first comparison. `clipped_*` are clamped to [0, 1].
  std::optional<double> lo, hi;
  std::optional<double> clipped_lo, clipped_hi;
  std::optional<std::size_t> assigned_set;  // empty while active
};

struct ConfidenceSnapshot {
  std::uint64_t round = 0;
  std::optional<double> alpha;
  std::vector<ItemConfidence> items;  // by item id
};

// The active ranking algorithm as a resumable state machine. Each round asks
// every still-undecided item to face a uniformly random opponent, then moves
// items whose confidence interval has cleared the relevant neighbours into
// their output set.
class ActiveRanker {
 public:
  ActiveRanker(const PartitionSpec& spec, double delta, AlphaSchedule schedule,
               std::uint64_t seed) {
    if (spec.sets() < 2) throw ConfigError("a partition needs at least 2 sets");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
    const std::size_t n = spec.items();
    s_.n = n;
    s_.delta = delta;
    s_.schedule = std::move(schedule);
    s_.seed = seed;
    s_.active.resize(n);
    std::iota(s_.active.begin(), s_.active.end(), std::size_t{0});
    s_.wins.assign(n, 0);
    s_.samples.assign(n, 0);
    s_.assigned_set.assign(n, std::nullopt);
    s_.assigned.assign(spec.sets(), {});
    s_.borders.resize(spec.sets() + 1);
    for (std::size_t l = 0; l <= spec.sets(); ++l) s_.borders[l] = spec.border(l);
  }

  // Rebuild from a previously captured state.
  explicit ActiveRanker(EngineState state) : s_(std::move(state)) {}

  const EngineState& state() const noexcept { return s_; }
  bool terminated() const noexcept { return s_.terminated; }
  bool has_pending() const noexcept { return !s_.pending.empty(); }
  const std::vector<ComparisonQuery>& pending() const noexcept { return s_.pending; }

  // Opponent of `subject` in round `round`: uniform over the other n-1 items,
  // a pure function of (seed, round, subject).
  std::size_t opponent_for(std::uint64_t round, std::size_t subject) const {
    const std::uint64_t bits = mix(mix(s_.seed, stream::kOpponent, round), 0, subject);
    std::size_t j = static_cast<std::size_t>(to_range(bits, s_.n - 1));
    return j >= subject ? j + 1 : j;
  }

  // One query per active item for round t+1, in the current active order.
  const std::vector<ComparisonQuery>& plan_round() {
    if (s_.terminated) throw StateError("plan_round called on a terminated run");
    if (!s_.pending.empty()) throw StateError("plan_round called with unanswered queries pending");
    const std::uint64_t t = s_.round + 1;
    s_.pending.reserve(s_.active.size());
    for (std::size_t i : s_.active)
      s_.pending.push_back({s_.next_query_id++, i, opponent_for(t, i), t});
    return s_.pending;
  }

  // Applies the outcomes of the pending round (any order) and returns the
  // items eliminated in this round as (item, set) pairs.
  std::vector<std::pair<std::size_t, std::size_t>> apply_round(
      std::span<const ComparisonOutcome> outcomes) {
    if (s_.pending.empty()) throw StateError("apply_round called without a planned round");
    if (outcomes.size() != s_.pending.size()) {
      std::ostringstream os;
      os << "round " << s_.round + 1 << " has " << s_.pending.size() << " queries, got "
         << outcomes.size() << " outcomes";
      throw StateError(os.str());
    }
    std::unordered_map<std::uint64_t, std::size_t> slot;
    slot.reserve(s_.pending.size());
    for (std::size_t k = 0; k < s_.pending.size(); ++k) slot.emplace(s_.pending[k].query_id, k);
    std::vector<char> seen(s_.pending.size(), 0);
    for (const ComparisonOutcome& o : outcomes) {
      const auto it = slot.find(o.query_id);
      if (it == slot.end() || seen[it->second]) {
        std::ostringstream os;
        os << "outcome for query " << o.query_id
           << (it == slot.end() ? " does not belong to the pending round" : " given twice");
        throw StateError(os.str());
      }
      seen[it->second] = 1;
    }

    ++s_.round;
    for (const ComparisonOutcome& o : outcomes) {
      const std::size_t i = s_.pending[slot[o.query_id]].subject;
      s_.wins[i] += o.subject_won ? 1 : 0;
    }
    for (std::size_t i : s_.active) ++s_.samples[i];
    s_.total_comparisons += outcomes.size();
    s_.pending.clear();

    sort_active();
    auto removed = find_eliminations();
    remove_batch(removed);
    if (s_.active.empty()) s_.terminated = true;
    return removed;
  }

  ConfidenceSnapshot snapshot() const {
    ConfidenceSnapshot snap;
    snap.round = s_.round;
    snap.alpha = s_.alpha();
    snap.items.resize(s_.n);
    for (std::size_t i = 0; i < s_.n; ++i) {
      ItemConfidence& c = snap.items[i];
      c.item = i;
      c.samples = s_.samples[i];
      c.estimate = s_.estimate(i);
      c.assigned_set = s_.assigned_set[i];
      if (c.samples > 0) {
        const double r = 4.0 * s_.schedule(c.samples, s_.n, s_.delta);
        c.lo = c.estimate - r;
        c.hi = c.estimate + r;
        c.clipped_lo = std::clamp(*c.lo, 0.0, 1.0);
        c.clipped_hi = std::clamp(*c.hi, 0.0, 1.0);
      }
    }
    return snap;
  }

  // The decided sets, with undecided items filled in by their current
  // estimates so every set reaches its target size.
  std::vector<std::vector<std::size_t>> best_effort_partition() const {
    auto sets = s_.assigned;
    std::vector<std::size_t> order = s_.active;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return ranks_before(a, b);
    });
    for (std::size_t l = 0; l < sets.size(); ++l)
      for (std::size_t pos = s_.borders[l]; pos < s_.borders[l + 1]; ++pos)
        sets[l].push_back(order[pos]);
    return sets;
  }

 private:
  bool ranks_before(std::size_t a, std::size_t b) const {
    // Equal sample counts for active items, so comparing win counts is
    // comparing estimates.
    const double ea = s_.estimate(a), eb = s_.estimate(b);
    if (ea != eb) return ea > eb;
    return a < b;
  }

  void sort_active() {
    std::sort(s_.active.begin(), s_.active.end(),
              [&](std::size_t a, std::size_t b) { return ranks_before(a, b); });
  }

  // Scans every active item against the round's sorted snapshot. An item
  // joins set l when it sits confidently below the k_{l-1}-th estimate (or
  // k_{l-1} = 0) and confidently above the (k_l + 1)-th (or k_l = |S|).
  std::vector<std::pair<std::size_t, std::size_t>> find_eliminations() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    const double margin = 4.0 * s_.schedule(s_.round, s_.n, s_.delta);
    const std::size_t size = s_.active.size();
    const std::size_t L = s_.sets();
    // (k)-th largest estimate, 1-based.
    const auto kth = [&](std::size_t k) { return s_.estimate(s_.active[k - 1]); };
    for (std::size_t j : s_.active) {
      const double est = s_.estimate(j);
      for (std::size_t l = 0; l < L; ++l) {
        const std::size_t upper = s_.borders[l];
        const std::size_t lower = s_.borders[l + 1];
        const bool below_prev = upper == 0 || est < kth(upper) - margin;
        const bool above_next = lower == size || est > kth(lower + 1) + margin;
        if (below_prev && above_next) {
          out.emplace_back(j, l);
          break;
        }
      }
    }
    return out;
  }

  void remove_batch(const std::vector<std::pair<std::size_t, std::size_t>>& removed) {
    if (removed.empty()) return;
    std::vector<char> gone(s_.n, 0);
    for (const auto& [item, l] : removed) {
      gone[item] = 1;
      s_.assigned[l].push_back(item);
      s_.assigned_set[item] = l;
      // Set l now needs one item fewer, and so does every cumulative border
      // at or beyond it.
      for (std::size_t b = l + 1; b < s_.borders.size(); ++b) --s_.borders[b];
    }
    std::erase_if(s_.active, [&](std::size_t i) { return gone[i] != 0; });
  }

  EngineState s_;
};

}  // namespace activerank
