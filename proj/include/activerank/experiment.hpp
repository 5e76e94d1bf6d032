#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "activerank/baselines.hpp"
#include "activerank/complexity.hpp"
#include "activerank/io.hpp"
#include "activerank/model.hpp"
#include "activerank/parametric.hpp"
#include "activerank/rng.hpp"
#include "activerank/runner.hpp"

namespace activerank {

// Monte Carlo experiment description; mirrors the CLI flags and the JSON
// config file field for field.
//
// `model` is one of
//   eta:<eta>             BTL with w_i = log(1/eta + n - i)
//   xi:<xi>               BTL with w_i = xi (n - i)
//   perturbed-btl:<lam>   BTL with w_i = log(1 + n - i), a fraction lam of
//                         entries replaced by uniform draws
//   file:<path>           matrix JSON file
//   scores:<t1,t2,...>    BTL matrix realizing the given scores
struct ExperimentConfig {
  std::string model = "eta:1";
  std::size_t n = 10;
  std::vector<std::size_t> boundaries = {1, 10};
  double delta = 0.1;
  std::string alpha = "paper";
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  std::uint64_t budget_cap = kDefaultBudgetCap;
  std::string out;
  std::uint64_t budget = 0;  // passive baseline only
  std::size_t threads = 0;   // 0: hardware concurrency

  void validate() const {
    if (trials < 1) throw ConfigError("trials must be at least 1");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
    PartitionSpec(n, boundaries);
    AlphaSchedule::by_name(alpha);
  }
};

inline json config_to_json(const ExperimentConfig& c) {
  return json{{"model", c.model},     {"n", c.n},           {"boundaries", c.boundaries},
              {"delta", c.delta},     {"alpha", c.alpha},   {"trials", c.trials},
              {"seed", c.seed},       {"budget_cap", c.budget_cap}, {"out", c.out},
              {"budget", c.budget},   {"threads", c.threads}};
}

// Fields absent from `j` keep the values already in `c`.
inline void config_update_from_json(ExperimentConfig& c, const json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
  const auto field = [&](const char* name, auto& dst) {
    if (!j.contains(name)) return;
    try {
      j.at(name).get_to(dst);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config field '") + name + "': " + e.what());
    }
  };
  for (const auto& [key, _] : j.items()) {
    static const std::vector<std::string> known = {"model", "n", "boundaries", "delta",
                                                   "alpha", "trials", "seed", "budget_cap",
                                                   "out", "budget", "threads"};
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("config: unknown field '" + key + "'");
  }
  field("model", c.model);
  field("n", c.n);
  field("boundaries", c.boundaries);
  field("delta", c.delta);
  field("alpha", c.alpha);
  field("trials", c.trials);
  field("seed", c.seed);
  field("budget_cap", c.budget_cap);
  field("out", c.out);
  field("budget", c.budget);
  field("threads", c.threads);
}

inline constexpr int kPerturbResampleLimit = 1000;

// Perturbed BTL on w_i = log(1 + n - i), redrawn until the scores at the
// partition boundaries are distinct.
inline ComparisonMatrix perturbed_btl_instance(std::size_t n, double lambda,
                                               const PartitionSpec& spec, std::uint64_t seed) {
  const ComparisonMatrix base = model_eta(n, 1.0);
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < kPerturbResampleLimit; ++attempt) {
    ComparisonMatrix m = perturb_btl(base, lambda, rng);
    try {
      gaps(scores(m), spec);
      return m;
    } catch (const BoundaryTieError&) {
    }
  }
  throw ConfigError("could not draw a perturbed matrix with distinct boundary scores");
}

inline ComparisonMatrix build_model(const ExperimentConfig& c) {
  const auto colon = c.model.find(':');
  if (colon == std::string::npos)
    throw ConfigError("model '" + c.model + "': expected <kind>:<parameter>");
  const std::string kind = c.model.substr(0, colon);
  const std::string arg = c.model.substr(colon + 1);
  const auto number = [&] {
    const auto v = parse_reals(arg, "model parameter");
    if (v.size() != 1) throw ConfigError("model '" + c.model + "': expected one number");
    return v.front();
  };
  ComparisonMatrix m;
  if (kind == "eta") {
    m = model_eta(c.n, number());
  } else if (kind == "xi") {
    m = model_xi(c.n, number());
  } else if (kind == "perturbed-btl") {
    m = perturbed_btl_instance(c.n, number(), PartitionSpec(c.n, c.boundaries), c.seed);
  } else if (kind == "file") {
    m = matrix_from_json(read_json_file(arg));
  } else if (kind == "scores") {
    m = fit_parametric_scores(ScoreVector(parse_reals(arg, "scores")), btl()).matrix;
  } else {
    throw ConfigError("model kind '" + kind + "' (expected eta|xi|perturbed-btl|file|scores)");
  }
  if (m.size() != c.n) {
    throw ConfigError("model '" + c.model + "' has " + std::to_string(m.size()) +
                      " items but n = " + std::to_string(c.n));
  }
  return m;
}

struct TrialRow {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::uint64_t comparisons = 0;
  bool correct = false;
  std::uint64_t rounds = 0;
  bool truncated = false;
};

struct WilsonInterval {
  double lo = 0.0;
  double hi = 0.0;
  double half_width = 0.0;
};

// Wilson score interval for a binomial proportion, 95% by default.
inline WilsonInterval wilson_interval(std::size_t successes, std::size_t trials,
                                      double z = 1.959963984540054) {
  if (trials == 0) return {0.0, 1.0, 0.5};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half), half};
}

struct Summary {
  std::size_t trials = 0;
  double mean_comparisons = 0.0;
  double std_comparisons = 0.0;
  std::size_t failures = 0;
  double failure_rate = 0.0;
  WilsonInterval failure_ci;
  std::size_t truncated = 0;
  double gamma2 = 0.0;
};

inline Summary summarize(const std::vector<TrialRow>& rows, double gamma2) {
  Summary s;
  s.trials = rows.size();
  s.gamma2 = gamma2;
  if (rows.empty()) return s;
  double sum = 0.0, sq = 0.0;
  for (const TrialRow& r : rows) {
    const double c = static_cast<double>(r.comparisons);
    sum += c;
    sq += c * c;
    s.failures += r.correct ? 0 : 1;
    s.truncated += r.truncated ? 1 : 0;
  }
  const double n = static_cast<double>(rows.size());
  s.mean_comparisons = sum / n;
  s.std_comparisons = rows.size() > 1 ? std::sqrt(std::max(0.0, (sq - sum * sum / n) / (n - 1))) : 0.0;
  s.failure_rate = static_cast<double>(s.failures) / n;
  s.failure_ci = wilson_interval(s.failures, rows.size());
  return s;
}

inline json summary_to_json(const Summary& s) {
  return json{{"trials", s.trials},
              {"mean_comparisons", s.mean_comparisons},
              {"std_comparisons", s.std_comparisons},
              {"failures", s.failures},
              {"failure_rate", s.failure_rate},
              {"failure_wilson95", {s.failure_ci.lo, s.failure_ci.hi}},
              {"failure_wilson95_half_width", s.failure_ci.half_width},
              {"truncated", s.truncated},
              {"gamma2", s.gamma2},
              {"mean_comparisons_over_gamma2", s.gamma2 > 0 ? s.mean_comparisons / s.gamma2 : 0.0}};
}

// Runs `trials` trials of `body(trial_index)` over a small thread pool. Results
// land at their trial index, so the worker count never changes the output.
template <typename Row, typename Body>
std::vector<Row> parallel_trials(std::size_t trials, std::size_t threads, Body body) {
  std::vector<Row> rows(trials);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, trials);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  const auto worker = [&](std::size_t w) {
    try {
      for (std::size_t k = next++; k < trials; k = next++) rows[k] = body(k);
    } catch (...) {
      errors[w] = std::current_exception();
      next = trials;
    }
  };
  if (threads <= 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(worker, w);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

// Simulates the active ranker on `m`. Trial k uses seed derive_seed(seed, k)
// for both its opponent draws and its comparison outcomes.
inline std::vector<TrialRow> simulate_trials(const ComparisonMatrix& m, const PartitionSpec& spec,
                                             double delta, const AlphaSchedule& schedule,
                                             std::size_t trials, std::uint64_t seed,
                                             std::uint64_t budget_cap = kDefaultBudgetCap,
                                             std::size_t threads = 0) {
  const auto truth = gaps(scores(m), spec).sets;
  return parallel_trials<TrialRow>(trials, threads, [&](std::size_t k) {
    const std::uint64_t s = derive_seed(seed, k);
    BernoulliOracle oracle(m, s);
    const RunResult r = run_to_completion(oracle, spec, delta, schedule, s, budget_cap);
    return TrialRow{k, s, r.comparisons, same_partition(r.sets, truth), r.rounds, r.truncated};
  });
}

inline std::vector<TrialRow> passive_trials(const ComparisonMatrix& m, const PartitionSpec& spec,
                                            std::uint64_t budget, std::size_t trials,
                                            std::uint64_t seed, std::size_t threads = 0) {
  const auto truth = gaps(scores(m), spec).sets;
  return parallel_trials<TrialRow>(trials, threads, [&](std::size_t k) {
    const std::uint64_t s = derive_seed(seed, k);
    BernoulliOracle oracle(m, s);
    const PassiveResult r = passive_count_rank(oracle, spec, budget, s);
    return TrialRow{k, s, r.comparisons, same_partition(r.sets, truth), 0, false};
  });
}

inline constexpr const char* kCsvHeader = "trial,seed,comparisons,correct,rounds,truncated";

inline void write_csv(std::ostream& out, const std::vector<TrialRow>& rows) {
  out << kCsvHeader << '\n';
  for (const TrialRow& r : rows)
    out << r.trial << ',' << r.seed << ',' << r.comparisons << ',' << (r.correct ? 1 : 0) << ','
        << r.rounds << ',' << (r.truncated ? 1 : 0) << '\n';
}

// runs.csv -> runs.summary.json
inline std::string summary_path_for(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension(".summary.json");
  return p.string();
}

}  // namespace activerank
