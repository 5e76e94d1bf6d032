// activerank: simulate | bounds | fit | baseline | serve
//
// Exit codes: 0 success, 2 configuration error, 3 oracle or solver failure.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "activerank/complexity.hpp"
#include "activerank/experiment.hpp"
#include "activerank/io.hpp"
#include "activerank/parametric.hpp"
#include "activerank/service/http.hpp"

namespace ar = activerank;
using ar::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitFailure = 3;

// Flags shared by simulate and baseline. Raw strings so that only options
// given on the command line override the config file.
struct ExperimentFlags {
  std::string config;
  std::string model, boundaries, alpha, out;
  std::size_t n = 0, trials = 0, threads = 0;
  double delta = 0.0;
  std::uint64_t seed = 0, budget_cap = 0, budget = 0;
  std::map<std::string, CLI::Option*> opts;

  void add_to(CLI::App& app, bool passive) {
    app.add_option("--config", config, "JSON file mirroring the experiment fields")->check(CLI::ExistingFile);
    opts["model"] = app.add_option("--model", model, "eta:<e> | xi:<x> | perturbed-btl:<lambda> | file:<path> | scores:<t1,t2,...>");
    opts["n"] = app.add_option("--n", n, "number of items");
    opts["boundaries"] = app.add_option("--boundaries", boundaries, "set boundaries, e.g. 2,4,6 (last = n)");
    opts["trials"] = app.add_option("--trials", trials, "Monte Carlo trials");
    opts["seed"] = app.add_option("--seed", seed, "master seed");
    opts["out"] = app.add_option("--out", out, "CSV output path (default: stdout)");
    opts["threads"] = app.add_option("--threads", threads, "worker threads (0: all cores)");
    if (passive) {
      opts["budget"] = app.add_option("--budget", budget, "comparisons per trial")->required();
    } else {
      opts["delta"] = app.add_option("--delta", delta, "target error probability");
      opts["alpha"] = app.add_option("--alpha", alpha, "paper | relaxed_a | relaxed_b");
      opts["budget_cap"] = app.add_option("--budget-cap", budget_cap, "comparison cap per trial");
    }
  }

  ar::ExperimentConfig resolve() const {
    ar::ExperimentConfig c;
    if (!config.empty()) ar::config_update_from_json(c, ar::read_json_file(config));
    const auto given = [&](const char* name) {
      const auto it = opts.find(name);
      return it != opts.end() && it->second->count() > 0;
    };
    if (given("model")) c.model = model;
    if (given("n")) c.n = n;
    if (given("boundaries")) c.boundaries = ar::parse_boundaries(boundaries);
    if (given("trials")) c.trials = trials;
    if (given("seed")) c.seed = seed;
    if (given("out")) c.out = out;
    if (given("threads")) c.threads = threads;
    if (given("budget")) c.budget = budget;
    if (given("delta")) c.delta = delta;
    if (given("alpha")) c.alpha = alpha;
    if (given("budget_cap")) c.budget_cap = budget_cap;
    // n follows the boundaries when only those were given.
    if (!given("n") && given("boundaries") && config.empty()) c.n = c.boundaries.back();
    c.validate();
    return c;
  }
};

void emit_rows(const ar::ExperimentConfig& c, const std::vector<ar::TrialRow>& rows, double gamma2,
               const json& extra) {
  const ar::Summary s = ar::summarize(rows, gamma2);
  json summary = ar::summary_to_json(s);
  summary["config"] = ar::config_to_json(c);
  summary.update(extra);
  if (c.out.empty()) {
    ar::write_csv(std::cout, rows);
    std::cerr << summary.dump(2) << '\n';
    return;
  }
  std::ofstream csv(c.out);
  if (!csv) throw ar::ConfigError("cannot write '" + c.out + "'");
  ar::write_csv(csv, rows);
  std::ofstream js(ar::summary_path_for(c.out));
  js << summary.dump(2) << '\n';
  std::cerr << "wrote " << c.out << " and " << ar::summary_path_for(c.out) << '\n';
  std::cerr << "failures " << s.failures << "/" << s.trials << " (Wilson 95% [" << s.failure_ci.lo
            << ", " << s.failure_ci.hi << "]), mean comparisons " << s.mean_comparisons << '\n';
}

int run_simulate(const ExperimentFlags& f, const std::string& round_log) {
  const ar::ExperimentConfig c = f.resolve();
  const ar::ComparisonMatrix m = ar::build_model(c);
  const ar::PartitionSpec spec(c.n, c.boundaries);
  const ar::AlphaSchedule schedule = ar::AlphaSchedule::by_name(c.alpha);
  const double gamma2 = ar::complexity_parameter(ar::scores(m), spec);
  if (!round_log.empty()) {
    std::ofstream log(round_log);
    if (!log) throw ar::ConfigError("cannot write '" + round_log + "'");
    const std::uint64_t s = ar::derive_seed(c.seed, 0);
    ar::BernoulliOracle oracle(m, s);
    ar::run_to_completion(oracle, spec, c.delta, schedule, s, c.budget_cap,
                          [&](const ar::ActiveRanker& e) { log << ar::round_record(e).dump() << '\n'; });
  }
  const auto rows = ar::simulate_trials(m, spec, c.delta, schedule, c.trials, c.seed, c.budget_cap, c.threads);
  emit_rows(c, rows, gamma2, json{{"algorithm", "active"}});
  return 0;
}

int run_baseline(const ExperimentFlags& f) {
  const ar::ExperimentConfig c = f.resolve();
  if (c.budget < 1) throw ar::ConfigError("--budget must be at least 1");
  const ar::ComparisonMatrix m = ar::build_model(c);
  const ar::PartitionSpec spec(c.n, c.boundaries);
  const double gamma2 = ar::complexity_parameter(ar::scores(m), spec);
  const auto rows = ar::passive_trials(m, spec, c.budget, c.trials, c.seed, c.threads);
  emit_rows(c, rows, gamma2, json{{"algorithm", "passive"}, {"budget", c.budget}});
  return 0;
}

struct BoundsFlags {
  std::string tau, model, boundaries, format = "text";
  std::size_t n = 0;
  double delta = 0.1;
  std::optional<double> p_min;
};

int run_bounds(const BoundsFlags& f) {
  ar::ScoreVector tau;
  std::optional<double> p_min = f.p_min;
  if (!f.tau.empty() == !f.model.empty()) throw ar::ConfigError("give exactly one of --tau and --model");
  const auto boundaries = ar::parse_boundaries(f.boundaries);
  if (!f.tau.empty()) {
    tau = ar::ScoreVector(ar::parse_reals(f.tau, "--tau"));
  } else {
    ar::ExperimentConfig c;
    c.model = f.model;
    c.n = f.n ? f.n : boundaries.back();
    c.boundaries = boundaries;
    const ar::ComparisonMatrix m = ar::build_model(c);
    tau = ar::scores(m);
    if (!p_min) p_min = m.min_off_diagonal();
  }
  const auto feas = ar::check_score_feasibility(tau);
  if (!feas.feasible) throw ar::ConfigError("scores are not realizable: " + feas.message);
  const ar::PartitionSpec spec(tau.size(), boundaries);
  const double gamma2 = ar::complexity_parameter(tau, spec);
  const ar::UpperBound ub = ar::ar_upper_bound(tau, spec, f.delta);
  const ar::GapProfile g = ar::gaps(tau, spec);
  json out{{"n", tau.size()},
           {"boundaries", boundaries},
           {"delta", f.delta},
           {"gamma2", gamma2},
           {"lower_bound_general", ar::lower_bound_general(tau, spec, f.delta)},
           {"upper_bound_total", ub.total},
           {"upper_bound_delta_in_guarantee_range", ub.delta_in_guarantee_range},
           {"structural_sum_far", ub.structural_sum_far}};
  json items = json::array();
  for (std::size_t i = 0; i < tau.size(); ++i) {
    const auto& it = ub.items[i];
    const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    items.push_back({{"item", i}, {"tau", tau[i]}, {"set", g.items[i].set}, {"t_up", opt(it.t_up)},
                     {"t_down", opt(it.t_down)}, {"bound", it.bound}});
  }
  out["items"] = items;
  if (p_min) {
    json par = json::object();
    for (const auto& fam : {ar::btl(), ar::thurstone()}) {
      const ar::ParametricConstant pc = ar::c_par(fam, *p_min);
      par[fam.name] = {{"c_par", pc.c_par}, {"lower_bound", pc.lower_bound(gamma2, f.delta)}};
    }
    out["p_min"] = *p_min;
    out["parametric"] = par;
  }
  if (f.format == "json") {
    std::cout << out.dump(2) << '\n';
    return 0;
  }
  std::cout << std::setprecision(10);
  std::cout << "gamma^2                     " << gamma2 << '\n';
  std::cout << "lower bound (general)       " << out["lower_bound_general"].get<double>() << '\n';
  if (p_min) {
    for (const char* name : {"btl", "thurstone"}) {
      std::cout << "c_par " << std::left << std::setw(22) << name << out["parametric"][name]["c_par"].get<double>()
                << "  lower bound " << out["parametric"][name]["lower_bound"].get<double>() << '\n';
    }
  }
  std::cout << "upper bound (total)         " << ub.total
            << (ub.delta_in_guarantee_range ? "" : "  (delta above the guarantee range)") << '\n';
  std::cout << "item  tau           set  t_up            t_down          bound\n";
  for (const auto& it : out["items"]) {
    const auto cell = [](const json& v) {
      std::ostringstream os;
      os << std::setprecision(8);
      if (v.is_null()) os << "-"; else os << v.get<double>();
      return os.str();
    };
    std::cout << std::left << std::setw(6) << it["item"].get<std::size_t>() << std::setw(14)
              << cell(it["tau"]) << std::setw(5) << it["set"].get<std::size_t>() << std::setw(16)
              << cell(it["t_up"]) << std::setw(16) << cell(it["t_down"]) << cell(it["bound"]) << '\n';
  }
  return 0;
}

struct FitFlags {
  std::string tau, matrix, family = "btl", out;
  std::optional<double> p_min;
};

int run_fit(const FitFlags& f) {
  if (!f.tau.empty() == !f.matrix.empty()) throw ar::ConfigError("give exactly one of --tau and --matrix");
  const ar::ScoreVector tau = f.tau.empty()
                                  ? ar::scores(ar::matrix_from_json(ar::read_json_file(f.matrix)))
                                  : ar::ScoreVector(ar::parse_reals(f.tau, "--tau"));
  const ar::ParametricFamily family = ar::family_by_name(f.family);
  ar::FitOptions opts;
  opts.p_min = f.p_min;
  const ar::FitResult r = ar::fit_parametric_scores(tau, family, opts);
  const ar::KktReport kkt = ar::kkt_verify(r.matrix, family);
  json report{{"family", family.name},
              {"w", r.w},
              {"residual", r.residual},
              {"iterations", r.iterations},
              {"converged", r.converged},
              {"min_entry", r.min_entry},
              {"kkt_residual", kkt.max_residual},
              {"achieved_scores", r.achieved_scores.values()}};
  if (f.p_min) report["p_min_violated"] = r.p_min_violated;
  if (f.out.empty()) {
    std::cout << ar::matrix_to_json(r.matrix).dump() << '\n';
  } else {
    std::ofstream out(f.out);
    if (!out) throw ar::ConfigError("cannot write '" + f.out + "'");
    out << ar::matrix_to_json(r.matrix).dump() << '\n';
  }
  std::cerr << report.dump(2) << '\n';
  if (r.p_min_violated) std::cerr << "warning: fitted entries fall below p_min\n";
  return 0;
}

int run_serve(std::optional<int> port, const std::string& data_dir) {
  ar::service::ServeOptions o = ar::service::ServeOptions::from_env();
  if (port) o.port = *port;
  if (!data_dir.empty()) o.data_dir = data_dir;
  ar::service::SessionStore store(o.data_dir);
  httplib::Server server;
  ar::service::register_routes(server, store);
  std::cerr << "listening on " << o.host << ":" << o.port
            << (o.data_dir ? " (data in " + o.data_dir->string() + ")" : " (in-memory sessions)") << '\n';
  if (!server.listen(o.host, o.port)) throw ar::ConfigError("cannot listen on port " + std::to_string(o.port));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active ranking from pairwise comparisons"};
  app.require_subcommand(1);

  ExperimentFlags sim_flags, base_flags;
  std::string round_log;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo runs of the active ranker");
  sim_flags.add_to(*sim, false);
  sim->add_option("--round-log", round_log, "JSON-lines per-round log of trial 0");

  auto* base = app.add_subcommand("baseline", "Monte Carlo runs of the passive counting ranker");
  base_flags.add_to(*base, true);

  BoundsFlags bflags;
  auto* bounds = app.add_subcommand("bounds", "complexity parameter and sample-complexity bounds");
  bounds->add_option("--tau", bflags.tau, "score vector, e.g. 0.65,0.5,0.35");
  bounds->add_option("--model", bflags.model, "model spec as for simulate");
  bounds->add_option("--n", bflags.n, "number of items (with --model)");
  bounds->add_option("--boundaries", bflags.boundaries, "set boundaries")->required();
  bounds->add_option("--delta", bflags.delta, "error probability");
  bounds->add_option("--p-min", bflags.p_min, "minimum comparison probability for c_par");
  bounds->add_option("--format", bflags.format, "text | json")->check(CLI::IsMember({"text", "json"}));

  FitFlags fflags;
  auto* fit = app.add_subcommand("fit", "parametric matrix realizing a score vector");
  fit->add_option("--tau", fflags.tau, "target scores");
  fit->add_option("--matrix", fflags.matrix, "take the scores of this matrix file");
  fit->add_option("--family", fflags.family, "btl | thurstone");
  fit->add_option("--out", fflags.out, "matrix output path (default: stdout)");
  fit->add_option("--p-min", fflags.p_min, "flag fitted entries below this value");

  std::optional<int> port;
  std::string data_dir;
  auto* serve = app.add_subcommand("serve", "HTTP session service (env: PORT, DATA_DIR)");
  serve->add_option("--port", port, "listen port (overrides PORT)");
  serve->add_option("--data-dir", data_dir, "session log directory (overrides DATA_DIR)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*sim) return run_simulate(sim_flags, round_log);
    if (*base) return run_baseline(base_flags);
    if (*bounds) return run_bounds(bflags);
    if (*fit) return run_fit(fflags);
    if (*serve) return run_serve(port, data_dir);
  } catch (const ar::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ar::OracleError& e) {
    std::cerr << "oracle failure: " << e.what() << '\n';
    return kExitFailure;
  } catch (const ar::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
