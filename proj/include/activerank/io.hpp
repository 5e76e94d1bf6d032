#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "activerank/comparison_matrix.hpp"
#include "activerank/engine.hpp"
#include "activerank/error.hpp"
#include "activerank/oracle.hpp"

namespace activerank {

using json = nlohmann::json;

// Matrix file: {"n": int, "upper": [M_01, M_02, ..., M_{n-2,n-1}]} row-major.
inline json matrix_to_json(const ComparisonMatrix& m) {
  return json{{"n", m.size()}, {"upper", m.upper()}};
}

inline ComparisonMatrix matrix_from_json(const json& j) {
  if (!j.is_object() || !j.contains("n") || !j.contains("upper"))
    throw ConfigError("matrix JSON must be an object with fields \"n\" and \"upper\"");
  if (!j["n"].is_number_integer() || j["n"].get<long long>() < 2)
    throw ConfigError("matrix JSON: \"n\" must be an integer >= 2");
  if (!j["upper"].is_array()) throw ConfigError("matrix JSON: \"upper\" must be an array");
  std::vector<double> upper;
  for (const auto& v : j["upper"]) {
    if (!v.is_number()) throw ConfigError("matrix JSON: \"upper\" entries must be numbers");
    upper.push_back(v.get<double>());
  }
  return ComparisonMatrix(j["n"].get<std::size_t>(), std::move(upper));
}

inline json scores_to_json(const ScoreVector& tau) { return json(tau.values()); }

inline ScoreVector scores_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("score vector JSON must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError("score vector JSON must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return ScoreVector(std::move(out));
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

// Parses "0.9,0.7,0.5".
inline std::vector<double> parse_reals(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t pos = 0;
    try {
      out.push_back(std::stod(tok, &pos));
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != tok.size()) throw ConfigError(what + ": '" + tok + "' is not a number");
  }
  return out;
}

// Trace lines: {query_id, round, subject, opponent, subject_won}.
inline json trace_entry_to_json(const TraceEntry& e) {
  return json{{"query_id", e.query_id},
              {"round", e.round},
              {"subject", e.subject},
              {"opponent", e.opponent},
              {"subject_won", e.subject_won}};
}

inline TraceEntry trace_entry_from_json(const json& j) {
  try {
    return TraceEntry{j.at("query_id").get<std::uint64_t>(), j.at("round").get<std::uint64_t>(),
                      j.at("subject").get<std::size_t>(), j.at("opponent").get<std::size_t>(),
                      j.at("subject_won").get<bool>()};
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed trace entry: ") + e.what());
  }
}

inline void write_trace(std::ostream& out, const std::vector<TraceEntry>& trace) {
  for (const TraceEntry& e : trace) out << trace_entry_to_json(e).dump() << '\n';
}

inline std::vector<TraceEntry> read_trace(std::istream& in) {
  std::vector<TraceEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(trace_entry_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw ConfigError("trace line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// Per-round log record: {t, alpha, estimates, borders, assignments}.
inline json round_record(const ActiveRanker& engine) {
  const EngineState& s = engine.state();
  std::vector<double> est(s.n);
  for (std::size_t i = 0; i < s.n; ++i) est[i] = s.estimate(i);
  json j{{"t", s.round},
         {"estimates", est},
         {"borders", s.borders},
         {"assignments", s.assigned}};
  const auto a = s.alpha();
  j["alpha"] = a ? json(*a) : json(nullptr);
  return j;
}

inline json snapshot_to_json(const ConfidenceSnapshot& snap) {
  json items = json::array();
  const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  for (const ItemConfidence& c : snap.items) {
    items.push_back({{"item", c.item},
                     {"estimate", c.estimate},
                     {"samples", c.samples},
                     {"lo", opt(c.lo)},
                     {"hi", opt(c.hi)},
                     {"clipped_lo", opt(c.clipped_lo)},
                     {"clipped_hi", opt(c.clipped_hi)},
                     {"status", c.assigned_set ? "assigned" : "active"},
                     {"set", c.assigned_set ? json(*c.assigned_set) : json(nullptr)}});
  }
  return json{{"round", snap.round}, {"alpha", opt(snap.alpha)}, {"items", items}};
}

}  // namespace activerank
