#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <sstream>
#include <unordered_map>
#include <utility>
#include <vector>

#include "activerank/comparison_matrix.hpp"
#include "activerank/engine.hpp"
#include "activerank/error.hpp"
#include "activerank/rng.hpp"

namespace activerank {

// One answered comparison, as written to trace files.
struct TraceEntry {
  std::uint64_t query_id = 0;
  std::uint64_t round = 0;
  std::size_t subject = 0;
  std::size_t opponent = 0;
  bool subject_won = false;

  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

// Synchronous answer source for the engine.
class ComparisonOracle {
 public:
  virtual ~ComparisonOracle() = default;

  ComparisonOutcome answer(const ComparisonQuery& q) {
    ComparisonOutcome o{q.query_id, decide(q)};
    ++served_;
    return o;
  }

  std::uint64_t comparisons_served() const noexcept { return served_; }

 protected:
  virtual bool decide(const ComparisonQuery& q) = 0;

 private:
  std::uint64_t served_ = 0;
};

// Independent Bernoulli(M_ij) draws. The draw for a query depends only on the
// seed and the query id.
class BernoulliOracle final : public ComparisonOracle {
 public:
  BernoulliOracle(ComparisonMatrix m, std::uint64_t seed) : m_(std::move(m)), seed_(seed) {}

  const ComparisonMatrix& matrix() const noexcept { return m_; }

 protected:
  bool decide(const ComparisonQuery& q) override {
    if (q.subject >= m_.size() || q.opponent >= m_.size() || q.subject == q.opponent)
      throw OracleError("query refers to items outside the comparison matrix");
    return to_unit(mix(seed_, stream::kOutcome, q.query_id)) < m_(q.subject, q.opponent);
  }

 private:
  ComparisonMatrix m_;
  std::uint64_t seed_;
};

// Replays a recorded trace; every query must match the next entry.
class RecordedOracle final : public ComparisonOracle {
 public:
  explicit RecordedOracle(std::vector<TraceEntry> trace) : trace_(std::move(trace)) {}

  std::size_t position() const noexcept { return next_; }

 protected:
  bool decide(const ComparisonQuery& q) override {
    if (next_ >= trace_.size()) {
      std::ostringstream os;
      os << "trace exhausted at query " << q.query_id << " (after " << trace_.size()
         << " entries)";
      throw OracleError(os.str());
    }
    const TraceEntry& e = trace_[next_];
    if (e.query_id != q.query_id || e.subject != q.subject || e.opponent != q.opponent ||
        e.round != q.round) {
      std::ostringstream os;
      os << "trace diverges at query " << q.query_id << ": expected (round " << e.round
         << ", " << e.subject << " vs " << e.opponent << "), engine asked (round " << q.round
         << ", " << q.subject << " vs " << q.opponent << ")";
      throw OracleError(os.str());
    }
    ++next_;
    return e.subject_won;
  }

 private:
  std::vector<TraceEntry> trace_;
  std::size_t next_ = 0;
};

// Forwards to another oracle and keeps a trace of everything it answered.
class RecordingOracle final : public ComparisonOracle {
 public:
  explicit RecordingOracle(ComparisonOracle& inner) : inner_(inner) {}

  const std::vector<TraceEntry>& trace() const noexcept { return trace_; }

 protected:
  bool decide(const ComparisonQuery& q) override {
    const bool won = inner_.answer(q).subject_won;
    trace_.push_back({q.query_id, q.round, q.subject, q.opponent, won});
    return won;
  }

 private:
  ComparisonOracle& inner_;
  std::vector<TraceEntry> trace_;
};

// Answers arrive from outside (a person behind the HTTP service). Holds at
// most one round: the next round may only be submitted once the current one
// is fully answered and taken. Safe for concurrent use.
class DeferredOracle {
 public:
  void submit(const std::vector<ComparisonQuery>& round) {
    std::lock_guard lock(mu_);
    if (!queue_.empty()) throw StateError("previous round is still open");
    for (const ComparisonQuery& q : round) {
      index_.emplace(q.query_id, queue_.size());
      queue_.push_back({q, std::nullopt});
    }
  }

  // Unanswered queries of the open round, in submission order.
  std::vector<ComparisonQuery> unanswered() const {
    std::lock_guard lock(mu_);
    std::vector<ComparisonQuery> out;
    for (const Slot& s : queue_)
      if (!s.answer) out.push_back(s.query);
    return out;
  }

  std::optional<ComparisonQuery> next_unanswered() const {
    std::lock_guard lock(mu_);
    for (const Slot& s : queue_)
      if (!s.answer) return s.query;
    return std::nullopt;
  }

  // Records an answer. Rejects ids outside the open round and second answers;
  // the first answer stands.
  void answer(std::uint64_t query_id, bool subject_won) {
    std::lock_guard lock(mu_);
    const auto it = index_.find(query_id);
    if (it == index_.end()) {
      std::ostringstream os;
      os << "query " << query_id << " is not part of the open round";
      throw OracleError(os.str());
    }
    Slot& s = queue_[it->second];
    if (s.answer) {
      std::ostringstream os;
      os << "query " << query_id << " was already answered";
      throw OracleError(os.str());
    }
    s.answer = subject_won;
    ++answered_;
    ++served_;
  }

  bool has_open_round() const {
    std::lock_guard lock(mu_);
    return !queue_.empty();
  }

  bool round_complete() const {
    std::lock_guard lock(mu_);
    return !queue_.empty() && answered_ == queue_.size();
  }

  std::size_t round_size() const {
    std::lock_guard lock(mu_);
    return queue_.size();
  }

  std::size_t answered_in_round() const {
    std::lock_guard lock(mu_);
    return answered_;
  }

  // Hands the completed round's outcomes over and closes the round.
  std::vector<ComparisonOutcome> take_outcomes() {
    std::lock_guard lock(mu_);
    if (queue_.empty() || answered_ != queue_.size())
      throw StateError("round is not fully answered");
    std::vector<ComparisonOutcome> out;
    out.reserve(queue_.size());
    for (const Slot& s : queue_) out.push_back({s.query.query_id, *s.answer});
    queue_.clear();
    index_.clear();
    answered_ = 0;
    return out;
  }

  std::uint64_t comparisons_served() const {
    std::lock_guard lock(mu_);
    return served_;
  }

 private:
  struct Slot {
    ComparisonQuery query;
    std::optional<bool> answer;
  };

  mutable std::mutex mu_;
  std::deque<Slot> queue_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
  std::size_t answered_ = 0;
  std::uint64_t served_ = 0;
};

}  // namespace activerank
