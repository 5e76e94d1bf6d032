#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "activerank/engine.hpp"
#include "activerank/io.hpp"
#include "activerank/oracle.hpp"

namespace activerank::service {

inline constexpr std::size_t kMaxSessionItems = 1000;

// Carries the HTTP status the failure maps to.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, std::string code, const std::string& message)
      : std::runtime_error(message), status_(status), code_(std::move(code)) {}
  int status() const noexcept { return status_; }
  const std::string& code() const noexcept { return code_; }

 private:
  int status_;
  std::string code_;
};

inline ServiceError not_found(const std::string& what) { return {404, "not_found", what}; }
inline ServiceError conflict(const std::string& what) { return {409, "conflict", what}; }
inline ServiceError invalid(const std::string& what) { return {422, "invalid", what}; }

inline std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct SessionConfig {
  std::vector<std::string> labels;
  std::vector<std::size_t> boundaries;
  double delta = 0.1;
  std::string alpha = "paper";
  std::uint64_t seed = 0;
};

inline json session_config_to_json(const SessionConfig& c) {
  return json{{"items", c.labels},
              {"boundaries", c.boundaries},
              {"delta", c.delta},
              {"alpha", c.alpha},
              {"seed", c.seed}};
}

// Parses a create request. `seed` is optional; `fresh_seed` fills it in.
inline SessionConfig session_config_from_json(const json& j, std::uint64_t fresh_seed) {
  if (!j.is_object()) throw invalid("request body must be a JSON object");
  SessionConfig c;
  try {
    c.labels = j.at("items").get<std::vector<std::string>>();
    c.boundaries = j.at("boundaries").get<std::vector<std::size_t>>();
    if (j.contains("delta")) c.delta = j.at("delta").get<double>();
    if (j.contains("alpha")) c.alpha = j.at("alpha").get<std::string>();
    c.seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : fresh_seed;
  } catch (const json::exception& e) {
    throw invalid(std::string("bad session request: ") + e.what());
  }
  const std::size_t n = c.labels.size();
  if (n < 2 || n > kMaxSessionItems)
    throw invalid("a session needs between 2 and " + std::to_string(kMaxSessionItems) + " items");
  std::set<std::string> seen;
  for (const auto& l : c.labels) {
    if (l.empty()) throw invalid("item labels must be non-empty");
    if (!seen.insert(l).second) throw invalid("duplicate item label '" + l + "'");
  }
  try {
    PartitionSpec(n, c.boundaries);
    AlphaSchedule::by_name(c.alpha);
  } catch (const ConfigError& e) {
    throw invalid(e.what());
  }
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw invalid("delta must lie in (0, 1)");
  return c;
}

// One ranking run answered by a person. Queries of a round are exposed one at
// a time in planning order; outcomes are buffered until the round is complete
// and then applied together.
class Session {
 public:
  Session(std::string id, SessionConfig config, std::optional<std::filesystem::path> log_path,
          std::string created = utc_now())
      : id_(std::move(id)),
        config_(std::move(config)),
        engine_(PartitionSpec(config_.labels.size(), config_.boundaries), config_.delta,
                AlphaSchedule::by_name(config_.alpha), config_.seed),
        created_(created),
        updated_(std::move(created)),
        log_path_(std::move(log_path)) {
    publish();
  }

  // Writes the create event of a new session.
  void start_log() {
    append({{"event", "create"}, {"id", id_}, {"config", session_config_to_json(config_)},
            {"at", created_}});
  }

  // Rebuilds a session from its event log.
  static std::shared_ptr<Session> replay(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open session log '" + path.string() + "'");
    std::string line;
    std::shared_ptr<Session> s;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        const json ev = json::parse(line);
        const std::string kind = ev.at("event").get<std::string>();
        if (kind == "create") {
          if (s) throw ConfigError("second create event");
          s = std::make_shared<Session>(ev.at("id").get<std::string>(),
                                        session_config_from_json(ev.at("config"), 0), std::nullopt,
                                        ev.at("at").get<std::string>());
        } else if (!s) {
          throw ConfigError("event before create");
        } else if (kind == "query") {
          const auto& queries = s->ensure_round();
          if (queries.empty() || queries.front().round != ev.at("round").get<std::uint64_t>() ||
              queries.front().query_id != ev.at("first_query_id").get<std::uint64_t>())
            throw ConfigError("planned round does not match the log");
        } else if (kind == "answer") {
          s->apply_answer(ev.at("query_id").get<std::uint64_t>(), ev.at("winner").get<std::string>());
          s->updated_ = ev.at("at").get<std::string>();
        } else {
          throw ConfigError("unknown event '" + kind + "'");
        }
      } catch (const std::exception& e) {
        throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
    if (!s) throw ConfigError("session log '" + path.string() + "' has no create event");
    s->log_path_ = path;
    s->publish();
    return s;
  }

  const std::string& id() const noexcept { return id_; }
  const SessionConfig& config() const noexcept { return config_; }
  const std::optional<std::filesystem::path>& log_path() const noexcept { return log_path_; }

  // The exposed query, planning the next round when needed; or the final
  // partition. Repeated calls return the same query until it is answered.
  json next() {
    std::lock_guard lock(mu_);
    if (engine_.terminated()) return json{{"status", "done"}, {"partition", partition_labels()}};
    const bool planned = !oracle_.has_open_round();
    ensure_round();
    if (planned) {
      append({{"event", "query"},
              {"round", engine_.state().round + 1},
              {"first_query_id", oracle_.next_unanswered()->query_id},
              {"count", oracle_.round_size()},
              {"at", utc_now()}});
      publish();
    }
    const ComparisonQuery q = *oracle_.next_unanswered();
    return json{{"status", "pending"},
                {"query_id", q.query_id},
                {"left", config_.labels[q.subject]},
                {"right", config_.labels[q.opponent]},
                {"left_item", q.subject},
                {"right_item", q.opponent},
                {"round", q.round},
                {"progress",
                 {{"question", oracle_.answered_in_round() + 1},
                  {"of", oracle_.round_size()},
                  {"round", q.round}}}};
  }

  // Left is the query's subject, right its opponent.
  json answer(std::uint64_t query_id, const std::string& winner) {
    std::lock_guard lock(mu_);
    check_answer(query_id, winner);
    const std::string at = utc_now();
    append({{"event", "answer"}, {"query_id", query_id}, {"winner", winner}, {"at", at}});
    const bool advanced = apply_answer(query_id, winner);
    updated_ = at;
    publish();
    return json{{"accepted", true}, {"round_advanced", advanced}};
  }

  // Latest published state; does not wait for an in-flight answer.
  std::shared_ptr<const json> state() const {
    std::lock_guard lock(snapshot_mu_);
    return snapshot_;
  }

 private:
  const std::vector<ComparisonQuery>& ensure_round() {
    if (!oracle_.has_open_round()) {
      const auto& qs = engine_.plan_round();
      oracle_.submit(qs);
    }
    return engine_.pending();
  }

  void check_answer(std::uint64_t query_id, const std::string& winner) const {
    if (winner != "left" && winner != "right")
      throw invalid("winner must be \"left\" or \"right\"");
    if (engine_.terminated()) throw conflict("session is finished");
    const auto exposed = oracle_.next_unanswered();
    if (!exposed || exposed->query_id != query_id) {
      throw conflict("query " + std::to_string(query_id) + " is not the pending query" +
                     (exposed ? " (pending: " + std::to_string(exposed->query_id) + ")" : ""));
    }
  }

  bool apply_answer(std::uint64_t query_id, const std::string& winner) {
    check_answer(query_id, winner);
    oracle_.answer(query_id, winner == "left");
    if (!oracle_.round_complete()) return false;
    engine_.apply_round(oracle_.take_outcomes());
    return true;
  }

  json partition_labels() const {
    const auto sets = engine_.terminated() ? engine_.state().assigned : engine_.best_effort_partition();
    json out = json::array();
    for (const auto& set : sets) {
      json labels = json::array();
      for (std::size_t i : set) labels.push_back(config_.labels[i]);
      out.push_back(labels);
    }
    return out;
  }

  void publish() {
    const EngineState& s = engine_.state();
    json snap = snapshot_to_json(engine_.snapshot());
    for (auto& item : snap["items"]) item["label"] = config_.labels[item["item"].get<std::size_t>()];
    json assigned = json::array();
    for (const auto& set : s.assigned) {
      json labels = json::array();
      for (std::size_t i : set) labels.push_back(config_.labels[i]);
      assigned.push_back(labels);
    }
    auto j = std::make_shared<json>(json{
        {"session_id", id_},
        {"status", s.terminated ? "done" : "running"},
        {"config", session_config_to_json(config_)},
        {"snapshot", snap},
        {"assigned", assigned},
        {"borders", s.borders},
        {"counts",
         {{"round", s.round},
          {"comparisons", s.total_comparisons},
          {"active", s.active.size()},
          {"answered_in_round", oracle_.answered_in_round()},
          {"round_size", oracle_.round_size()}}},
        {"created", created_},
        {"updated", updated_}});
    if (s.terminated) (*j)["partition"] = partition_labels();
    std::lock_guard lock(snapshot_mu_);
    snapshot_ = std::move(j);
  }

  void append(const json& event) {
    if (!log_path_) return;
    std::ofstream out(*log_path_, std::ios::app);
    out << event.dump() << '\n';
    out.flush();
    if (!out) throw std::runtime_error("cannot write session log '" + log_path_->string() + "'");
  }

  std::string id_;
  SessionConfig config_;
  ActiveRanker engine_;
  DeferredOracle oracle_;
  std::string created_, updated_;
  std::optional<std::filesystem::path> log_path_;
  mutable std::mutex mu_;
  mutable std::mutex snapshot_mu_;
  std::shared_ptr<const json> snapshot_;
};

// All live sessions, optionally persisted under a data directory as
// <id>.jsonl event logs.
class SessionStore {
 public:
  explicit SessionStore(std::optional<std::filesystem::path> data_dir = std::nullopt)
      : data_dir_(std::move(data_dir)) {
    if (!data_dir_) return;
    std::filesystem::create_directories(*data_dir_);
    for (const auto& entry : std::filesystem::directory_iterator(*data_dir_)) {
      if (entry.path().extension() != ".jsonl") continue;
      auto s = Session::replay(entry.path());
      sessions_.emplace(s->id(), std::move(s));
    }
  }

  std::shared_ptr<Session> create(const json& request) {
    std::lock_guard lock(mu_);
    std::string id;
    do id = fresh_id(); while (sessions_.count(id) != 0);
    SessionConfig config = session_config_from_json(request, rng_());
    std::optional<std::filesystem::path> path;
    if (data_dir_) path = *data_dir_ / (id + ".jsonl");
    auto s = std::make_shared<Session>(id, std::move(config), path);
    s->start_log();
    sessions_.emplace(id, s);
    return s;
  }

  std::shared_ptr<Session> get(const std::string& id) const {
    std::lock_guard lock(mu_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw not_found("no session '" + id + "'");
    return it->second;
  }

  void remove(const std::string& id) {
    std::lock_guard lock(mu_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw not_found("no session '" + id + "'");
    if (it->second->log_path()) std::filesystem::remove(*it->second->log_path());
    sessions_.erase(it);
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return sessions_.size();
  }

 private:
  std::string fresh_id() {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string id(16, '0');
    std::uint64_t bits = rng_();
    for (char& c : id) {
      c = kHex[bits & 15];
      bits >>= 4;
    }
    return id;
  }

  std::optional<std::filesystem::path> data_dir_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mt19937_64 rng_{std::random_device{}()};
};

}  // namespace activerank::service
