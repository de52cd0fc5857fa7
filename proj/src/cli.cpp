#include "mbal/cli.hpp"

#include "mbal/metrics.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

namespace mbal {

void ExperimentConfig::validate() const {
  if (algorithm != "mbal" && algorithm != "supervised") throw InputError("unknown algorithm: " + algorithm);
  if (T < 0) throw InputError("T must be >= 0");
  if (trials < 1) throw InputError("trials must be >= 1");
  if (test_size < 1) throw InputError("test size must be >= 1");
  if (max_labels && *max_labels < 0) throw InputError("max labels must be >= 0");
  if (eval_every < 0) throw InputError("eval_every must be >= 0");
  if (jobs < 1) throw InputError("jobs must be >= 1");
  mbal.validate();
}

nlohmann::json ExperimentConfig::to_json() const {
  return {{"algorithm", algorithm},
          {"mbal", mbal.to_json()},
          {"T", T},
          {"trials", trials},
          {"test_size", test_size},
          {"max_labels", max_labels ? nlohmann::json(*max_labels) : nlohmann::json(nullptr)},
          {"eval_every", eval_every}};
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Scenario& scn) {
  cfg.validate();
  struct Slot {
    std::optional<TrialTrace> trace;
    std::string error;
  };
  std::vector<Slot> slots(static_cast<std::size_t>(cfg.trials));
  std::atomic<int> next{0};

  const auto worker = [&]() {
    for (int trial = next++; trial < cfg.trials; trial = next++) {
      Slot& slot = slots[static_cast<std::size_t>(trial)];
      try {
        const EvalSet test = make_trial_test_set(scn, cfg.mbal.seed, trial, cfg.test_size);
        RunOptions opts;
        opts.T = cfg.T;
        opts.trial = trial;
        opts.max_labels = cfg.max_labels;
        opts.eval_every = cfg.eval_every;
        RunResult r = cfg.algorithm == "supervised" ? run_supervised(cfg.mbal, scn, opts, test)
                                                    : run_stream(cfg.mbal, scn, opts, test);
        slot.trace = std::move(r.trace);
      } catch (const std::exception& e) {
        slot.error = e.what();
      }
    }
  };

  const int threads = std::min(cfg.jobs, cfg.trials);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  ExperimentResult result;
  for (int trial = 0; trial < cfg.trials; ++trial) {
    Slot& slot = slots[static_cast<std::size_t>(trial)];
    if (slot.trace) {
      result.traces.push_back(std::move(*slot.trace));
    } else {
      result.failures.push_back({trial, slot.error});
    }
  }
  return result;
}

int default_jobs() {
  const char* env = std::getenv("MBAL_JOBS");
  if (env == nullptr) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1 || v > 1024) return 1;
  return static_cast<int>(v);
}

namespace {

// Exit codes
constexpr int kOk = 0;
constexpr int kTrialsFailed = 1;
constexpr int kUsage = 2;
constexpr int kGeneration = 3;
constexpr int kIo = 4;

struct ScenarioFlags {
  std::string path;
  std::string problem;
  int grid = 3;
  std::uint64_t seed = 0;
  std::optional<double> eps_bar;
  int deg = 1;
  std::string law = "gaussian";
  double ball_radius = 0.0;
  double threshold_scale = 0.1;
  double kappa = 1.0;
  std::string base = "triangle";
};

void add_scenario_flags(CLI::App& app, ScenarioFlags& f, bool allow_file) {
  if (allow_file) app.add_option("--scenario", f.path, "scenario JSON written by gen");
  app.add_option("--problem", f.problem, "shortest-path, pricing or induced-ball")
      ->check(CLI::IsMember({"shortest-path", "pricing", "induced-ball"}));
  app.add_option("--grid", f.grid, "grid size k for shortest-path")->check(CLI::Range(2, 8));
  app.add_option(allow_file ? "--scenario-seed" : "--seed", f.seed, "scenario seed");
  app.add_option("--eps-bar", f.eps_bar, "label noise half-width");
  app.add_option("--deg", f.deg, "degree of the shortest-path cost model")->check(CLI::Range(1, 16));
  app.add_option("--law", f.law, "feature law: gaussian or ball")->check(CLI::IsMember({"gaussian", "ball"}));
  app.add_option("--ball-radius", f.ball_radius, "radius of the per-center ball");
  app.add_option("--threshold-scale", f.threshold_scale, "center margin as a fraction of ||E[c|mu]||");
  app.add_option("--kappa", f.kappa, "margin exponent for induced-ball");
  app.add_option("--base", f.base, "polytope for induced-ball: triangle or grid3")
      ->check(CLI::IsMember({"triangle", "grid3"}));
}

Scenario build_scenario(const ScenarioFlags& f) {
  if (!f.path.empty()) {
    if (!f.problem.empty()) throw InputError("give either --scenario or --problem, not both");
    std::ifstream in(f.path);
    if (!in) throw InputError("cannot open scenario file " + f.path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw InputError("scenario file " + f.path + " is not valid JSON: " + e.what());
    }
    return Scenario::from_json(j);
  }
  if (f.problem == "shortest-path") {
    ShortestPathOptions opts;
    opts.k = f.grid;
    opts.deg = f.deg;
    if (f.eps_bar) opts.eps_bar = *f.eps_bar;
    opts.threshold_scale = f.threshold_scale;
    opts.law = f.law == "ball" ? FeatureLaw::UniformBall : FeatureLaw::Gaussian;
    opts.ball_radius = f.ball_radius;
    return gen_shortest_path_scenario(f.seed, opts);
  }
  if (f.problem == "pricing") return make_pricing_scenario(f.seed, f.eps_bar.value_or(0.1));
  if (f.problem == "induced-ball") {
    return make_induced_ball_scenario(f.base == "grid3" ? build_grid_polytope(3) : make_triangle(), f.kappa, f.seed);
  }
  throw InputError("a scenario is required (--scenario FILE or --problem NAME)");
}

std::vector<std::string> reversed(const std::vector<std::string>& args) { return {args.rbegin(), args.rend()}; }

// Parses args; returns an exit code if parsing ended the command (help or error).
std::optional<int> parse(CLI::App& app, const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    auto rev = reversed(args);
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  return std::nullopt;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  out.close();
  if (!out) throw std::runtime_error("error writing " + path);
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const GenerationError& e) {
    err << "error: " << e.what() << '\n';
    return kGeneration;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed input: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  }
}

std::string scenario_summary(const Scenario& scn) {
  std::ostringstream s;
  s << "problem=" << scn.kind() << " d=" << scn.d() << " p=" << scn.p()
    << " vertices=" << scn.polytope().num_vertices();
  if (const auto* sp = std::get_if<ShortestPathScenario>(&scn.data())) {
    s << " centers=" << sp->centers.size() << " matrix_draws=" << sp->matrix_draws;
    if (!std::isnan(sp->margin_floor)) s << " margin_floor=" << format_double(sp->margin_floor);
  } else if (const auto* pr = std::get_if<PricingScenario>(&scn.data())) {
    s << " centers=" << pr->centers.size();
  }
  return s.str();
}

}  // namespace

int cmd_gen(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generate a scenario file", "gen"};
  ScenarioFlags flags;
  std::string out_path;
  add_scenario_flags(app, flags, false);
  app.get_option("--problem")->required();
  app.add_option("--out", out_path, "output JSON path")->required();
  if (auto code = parse(app, args, out, err)) return *code;

  return guarded(err, [&] {
    const Scenario scn = build_scenario(flags);
    write_file(out_path, scn.to_json().dump(2) + "\n");
    out << scenario_summary(scn) << '\n';
    return kOk;
  });
}

int cmd_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Run MBAL or the supervised baseline over several trials", "run"};
  ScenarioFlags flags;
  add_scenario_flags(app, flags, true);

  ExperimentConfig cfg;
  cfg.jobs = default_jobs();
  std::string surrogate = "spo+";
  std::string decay = "inv_sqrt";
  std::optional<double> clip;
  std::string standardize = "auto";
  std::string out_path;
  std::string summary_path;
  bool record_time = false;

  app.add_option("--algo", cfg.algorithm, "mbal or supervised")->check(CLI::IsMember({"mbal", "supervised"}));
  app.add_option("--seed", cfg.mbal.seed, "master seed for data, coins and test sets");
  app.add_option("--trials", cfg.trials, "number of independent trials");
  app.add_option("--T", cfg.T, "stream length after warm-up");
  app.add_option("--max-labels", cfg.max_labels, "stop a trial after this many post-warm-up labels");
  app.add_option("--test-size", cfg.test_size, "test samples per trial");
  app.add_option("--eval-every", cfg.eval_every, "also evaluate every k steps (0 = labels only)");
  app.add_option("--p-tilde", cfg.mbal.p_tilde, "label probability far from degeneracy");
  app.add_option("--q-tilde", cfg.mbal.q_tilde, "warm-up quantile giving b0");
  app.add_option("--warmup", cfg.mbal.n0, "warm-up length n0");
  app.add_option("--schedule-exponent", cfg.mbal.schedule_exponent, "exponent of the threshold schedule");
  app.add_flag("--refit-on-rejection", cfg.mbal.refit_on_rejection, "refit after steps without a label");
  app.add_option("--surrogate", surrogate, "spo, spo+, squared, mae, huber or huber:<delta>");
  app.add_option("--step-size", cfg.mbal.trainer.step_size, "descent step size");
  app.add_option("--step-decay", decay, "constant or inv_sqrt")->check(CLI::IsMember({"constant", "inv_sqrt"}));
  app.add_option("--epochs", cfg.mbal.trainer.epochs_per_update, "full passes per update");
  app.add_option("--weight-clip", clip, "sup-norm bound on the weights");
  app.add_option("--standardize", standardize, "auto, on or off (auto: on for pricing)")
      ->check(CLI::IsMember({"auto", "on", "off"}));
  app.add_option("--jobs", cfg.jobs, "worker threads (default: MBAL_JOBS or 1)");
  app.add_option("--out", out_path, "results CSV path")->required();
  app.add_option("--summary", summary_path, "summary JSON path (default: <out>.summary.json)");
  app.add_flag("--record-time", record_time, "include wall-clock seconds in the summary");
  if (auto code = parse(app, args, out, err)) return *code;

  return guarded(err, [&] {
    const auto start = std::chrono::steady_clock::now();
    cfg.mbal.surrogate = surrogate_from_string(surrogate);
    cfg.mbal.trainer.step_decay = decay == "constant" ? StepDecay::Constant : StepDecay::InvSqrt;
    cfg.mbal.trainer.weight_clip = clip;
    const Scenario scn = build_scenario(flags);
    cfg.mbal.trainer.standardize = standardize == "on" || (standardize == "auto" && scn.kind() == "pricing");
    cfg.validate();

    const ExperimentResult result = run_experiment(cfg, scn);

    TraceFileMeta meta;
    meta.fields = {{"algo", cfg.algorithm},
                   {"problem", scn.kind()},
                   {"surrogate", to_string(cfg.mbal.surrogate)},
                   {"n0", std::to_string(cfg.mbal.n0)},
                   {"seed", std::to_string(cfg.mbal.seed)},
                   {"scenario_seed", std::to_string(scn.seed())},
                   {"trials", std::to_string(cfg.trials)}};
    // raw SPO is minimized with the SPO+ direction, no optimality claim
    const bool heuristic = cfg.mbal.surrogate.tag == SurrogateKind::Tag::SPO;
    if (heuristic) meta.fields["heuristic"] = "1";
    std::ostringstream csv;
    write_trace_csv(csv, meta, result.traces);
    write_file(out_path, csv.str());

    nlohmann::json summary = {{"format", "mbal-clo-summary/1"},
                              {"command", "run"},
                              {"config", cfg.to_json()},
                              {"scenario", {{"kind", scn.kind()}, {"seed", scn.seed()}, {"d", scn.d()}, {"p", scn.p()}}}};
    nlohmann::json trials = nlohmann::json::array();
    double risk_sum = 0.0;
    for (const auto& tr : result.traces) {
      const auto evals = tr.evaluations();
      const double final_risk = evals.empty() ? kNotEvaluated : evals.back().excess_spo_risk_test;
      risk_sum += final_risk;
      trials.push_back({{"trial", tr.trial},
                        {"steps", tr.steps.size()},
                        {"labels", tr.final_labels()},
                        {"oracle_calls", tr.oracle_calls},
                        {"final_excess_spo_risk", final_risk}});
    }
    summary["heuristic"] = heuristic;
    summary["trials"] = trials;
    summary["completed"] = result.traces.size();
    nlohmann::json failed = nlohmann::json::array();
    for (const auto& f : result.failures) failed.push_back({{"trial", f.trial}, {"error", f.message}});
    summary["failed"] = failed;
    if (!result.traces.empty()) {
      summary["mean_final_excess_spo_risk"] = risk_sum / static_cast<double>(result.traces.size());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (record_time) summary["wall_clock_seconds"] = seconds;
    write_file(summary_path.empty() ? out_path + ".summary.json" : summary_path, summary.dump(2) + "\n");

    out << cfg.algorithm << ": " << result.traces.size() << "/" << cfg.trials << " trials on " << scn.kind();
    if (!result.traces.empty()) {
      out << ", mean final excess SPO risk " << format_double(summary["mean_final_excess_spo_risk"].get<double>());
    }
    out << '\n';
    err << "wall-clock " << seconds << " s\n";
    if (!result.failures.empty()) {
      for (const auto& f : result.failures) {
        err << "trial " << f.trial << " (seed " << cfg.mbal.seed << ") failed: " << f.message << '\n';
      }
      return kTrialsFailed;
    }
    return kOk;
  });
}

int cmd_compare(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Supervised-over-MBAL excess risk ratios at label budgets", "compare"};
  std::string sup_path;
  std::string mbal_path;
  std::vector<int> budgets;
  std::uint64_t seed = 0;
  std::string out_path;
  app.add_option("--supervised", sup_path, "results CSV of the supervised run")->required();
  app.add_option("--mbal", mbal_path, "results CSV of the MBAL run")->required();
  app.add_option("--budget", budgets, "post-warm-up label budget (repeatable)")->required();
  app.add_option("--seed", seed, "bootstrap seed");
  app.add_option("--out", out_path, "ratio CSV path")->required();
  if (auto code = parse(app, args, out, err)) return *code;

  return guarded(err, [&] {
    const auto load = [](const std::string& path, TraceFileMeta& meta) {
      std::ifstream in(path);
      if (!in) throw InputError("cannot open results file " + path);
      return read_trace_csv(in, &meta);
    };
    TraceFileMeta sup_meta;
    TraceFileMeta mbal_meta;
    const auto sup = load(sup_path, sup_meta);
    const auto act = load(mbal_path, mbal_meta);
    const auto field = [](const TraceFileMeta& m, const std::string& k) {
      auto it = m.fields.find(k);
      return it == m.fields.end() ? std::string() : it->second;
    };
    for (const char* key : {"problem", "surrogate", "n0", "scenario_seed"}) {
      if (field(sup_meta, key) != field(mbal_meta, key)) {
        throw InputError(std::string("incompatible inputs: ") + key + " differs (" + field(sup_meta, key) + " vs " +
                         field(mbal_meta, key) + ")");
      }
    }
    if (field(sup_meta, "algo") != "supervised") throw InputError(sup_path + " is not a supervised run");
    if (field(mbal_meta, "algo") != "mbal") throw InputError(mbal_path + " is not an MBAL run");

    std::vector<RatioRow> rows;
    for (int b : budgets) {
      RatioRow row{field(sup_meta, "problem"), field(sup_meta, "surrogate"), b, risk_ratio_table(sup, act, b, seed)};
      if (row.summary.excluded > 0) {
        err << "warning: budget " << b << ": " << row.summary.excluded << " trial(s) never reached it\n";
      }
      out << "budget " << b << ": ratio " << format_ratio(row.summary.ratio) << " [" << format_ratio(row.summary.ci_lo)
          << ", " << format_ratio(row.summary.ci_hi) << "]\n";
      rows.push_back(std::move(row));
    }
    std::ostringstream csv;
    write_ratio_csv(csv, rows);
    write_file(out_path, csv.str());
    return kOk;
  });
}

int cmd_psi(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Estimate the near-degeneracy function", "psi"};
  ScenarioFlags flags;
  add_scenario_flags(app, flags, true);
  long m = 100000;
  double b_min = 1e-3;
  double b_max = 1.0;
  int points = 25;
  std::vector<double> b_values;
  std::uint64_t seed = 0;
  std::string out_path;
  app.add_option("--M", m, "number of feature draws");
  app.add_option("--b-min", b_min, "smallest b of the geometric grid");
  app.add_option("--b-max", b_max, "largest b of the geometric grid");
  app.add_option("--points", points, "grid points");
  app.add_option("--b", b_values, "explicit b values instead of a grid");
  app.add_option("--seed", seed, "sampling seed");
  app.add_option("--out", out_path, "output CSV path")->required();
  if (auto code = parse(app, args, out, err)) return *code;

  return guarded(err, [&] {
    const Scenario scn = build_scenario(flags);
    std::vector<double> grid = b_values.empty() ? geometric_grid(b_min, b_max, points) : b_values;
    Rng rng = make_rng(seed, 0, "scenario");
    const PsiEstimate est = estimate_near_degeneracy(scn, grid, m, rng);

    const auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("none"); };
    std::ostringstream csv;
    csv << kCsvVersionLine << '\n';
    csv << "# problem=" << scn.kind() << " M=" << est.samples << " kappa_hat=" << opt(est.kappa_hat)
        << " b0_hat=" << opt(est.b0_hat) << " fit_points=" << est.fit_points << " proxy=" << (est.proxy ? 1 : 0)
        << '\n';
    csv << "b,psi_hat\n";
    for (std::size_t i = 0; i < grid.size(); ++i) csv << format_double(grid[i]) << ',' << format_double(est.psi[i]) << '\n';
    write_file(out_path, csv.str());
    out << "kappa_hat=" << opt(est.kappa_hat) << " b0_hat=" << opt(est.b0_hat) << " fit_points=" << est.fit_points
        << (est.proxy ? " (proxy: hypothesis class is mis-specified)" : "") << '\n';
    return kOk;
  });
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  static const std::map<std::string, int (*)(const std::vector<std::string>&, std::ostream&, std::ostream&)>
      commands = {{"gen", cmd_gen}, {"run", cmd_run}, {"compare", cmd_compare}, {"psi", cmd_psi}};
  if (args.empty() || args[0] == "--help" || args[0] == "-h") {
    out << "usage: mbal_clo <gen|run|compare|psi> [options]\n"
           "run '<command> --help' for the options of a command\n";
    return args.empty() ? kUsage : kOk;
  }
  const auto it = commands.find(args[0]);
  if (it == commands.end()) {
    err << "unknown command: " << args[0] << '\n';
    return kUsage;
  }
  return it->second({args.begin() + 1, args.end()}, out, err);
}

}  // namespace mbal
