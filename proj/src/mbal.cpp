#include "mbal/mbal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mbal {

void MbalConfig::validate() const {
  if (!(p_tilde >= 0.0 && p_tilde <= 1.0)) throw InputError("p_tilde must be in [0, 1]");
  if (!(q_tilde > 0.0 && q_tilde <= 1.0)) throw InputError("q_tilde must be in (0, 1]");
  if (n0 < 1) throw InputError("warm-up length n0 must be >= 1");
  if (!std::isfinite(schedule_exponent)) throw InputError("schedule_exponent must be finite");
  trainer.validate();
}

nlohmann::json MbalConfig::to_json() const {
  return {{"p_tilde", p_tilde},
          {"q_tilde", q_tilde},
          {"n0", n0},
          {"surrogate", to_string(surrogate)},
          {"trainer", trainer.to_json()},
          {"norm", to_string(norm)},
          {"seed", seed},
          {"schedule_exponent", schedule_exponent},
          {"refit_on_rejection", refit_on_rejection}};
}

MbalConfig MbalConfig::from_json(const nlohmann::json& j) {
  MbalConfig cfg;
  cfg.p_tilde = j.value("p_tilde", cfg.p_tilde);
  cfg.q_tilde = j.value("q_tilde", cfg.q_tilde);
  cfg.n0 = j.value("n0", cfg.n0);
  if (j.contains("surrogate")) cfg.surrogate = surrogate_from_string(j["surrogate"].get<std::string>());
  if (j.contains("trainer")) cfg.trainer = TrainerConfig::from_json(j["trainer"]);
  if (j.contains("norm")) cfg.norm = norm_from_string(j["norm"].get<std::string>());
  cfg.seed = j.value("seed", cfg.seed);
  cfg.schedule_exponent = j.value("schedule_exponent", cfg.schedule_exponent);
  cfg.refit_on_rejection = j.value("refit_on_rejection", cfg.refit_on_rejection);
  cfg.validate();
  return cfg;
}

double nearest_rank_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InputError("quantile of an empty set");
  if (!(q > 0.0 && q <= 1.0)) throw InputError("quantile level must be in (0, 1]");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  // the small slack keeps e.g. 0.3 * 10 from rounding up to rank 4
  auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

double threshold_at(double b0, int n0, int t, double exponent) {
  if (t < 1) throw InputError("threshold_at needs t >= 1");
  if (b0 == 0.0) return 0.0;
  const double ratio = static_cast<double>(n0) * std::log(static_cast<double>(n0 + t)) / static_cast<double>(t);
  return b0 * std::pow(ratio, exponent);
}

LearnerState warmup_init(const MbalConfig& cfg, const SampleSource& stream, const Polytope& poly, int trial) {
  cfg.validate();
  LearnerState state;
  state.coin_rng = make_rng(cfg.seed, static_cast<std::uint64_t>(trial), "coin");
  state.w.reserve(static_cast<std::size_t>(cfg.n0));
  for (int i = 0; i < cfg.n0; ++i) {
    auto s = stream();
    if (!s) {
      throw InputError("sample stream exhausted after " + std::to_string(i) + " of " + std::to_string(cfg.n0) +
                       " warm-up samples");
    }
    state.w.push_back(std::move(*s));
  }
  const int p = static_cast<int>(state.w.front().x.size());
  const LinearPredictor zero(poly.dim(), p);
  const std::vector<LabeledSample> none;
  state.h = fit_erm(zero, cfg.surrogate, poly, state.w, none, cfg.p_tilde, static_cast<double>(cfg.n0), cfg.trainer);
  state.warmup_distances.reserve(state.w.size());
  for (const auto& s : state.w) {
    state.warmup_distances.push_back(poly.distance_to_degeneracy(state.h.predict(s.x), cfg.norm));
  }
  state.b0 = nearest_rank_quantile(state.warmup_distances, cfg.q_tilde);
  state.b_t = state.b0;
  state.n_t = cfg.n0;
  state.t = 0;
  return state;
}

TraceRecord margin_step(LearnerState& state, const Vec& x, const LabelOracle& label_oracle, const Polytope& poly,
                        const MbalConfig& cfg) {
  TraceRecord rec;
  rec.t = ++state.t;
  rec.b = state.b_t;
  rec.nu = poly.distance_to_degeneracy(state.h.predict(x), cfg.norm);
  rec.near_margin = rec.nu < state.b_t;
  if (rec.near_margin) {
    state.w.push_back({x, label_oracle(x)});
    rec.labeled = true;
  } else {
    std::bernoulli_distribution coin(cfg.p_tilde);
    rec.coin = coin(state.coin_rng);
    if (rec.coin) {
      state.w_tilde.push_back({x, label_oracle(x)});
      rec.labeled = true;
    }
  }
  if (rec.labeled) ++state.n_t;
  rec.n_t = state.n_t;

  const double denom = static_cast<double>(state.t + cfg.n0);
  if (rec.labeled || cfg.refit_on_rejection) {
    state.h = fit_erm(state.h, cfg.surrogate, poly, state.w, state.w_tilde, cfg.p_tilde, denom, cfg.trainer);
  }
  state.b_t = std::isinf(state.b0) ? state.b0 : threshold_at(state.b0, cfg.n0, state.t, cfg.schedule_exponent);
  rec.b_next = state.b_t;
  return rec;
}

EvalSet make_trial_test_set(const Scenario& scn, std::uint64_t seed, int trial, int size) {
  if (size < 1) throw InputError("test set size must be >= 1");
  Rng rng = make_rng(seed, static_cast<std::uint64_t>(trial), "test");
  return make_eval_set(scn, sample_many(scn, size, rng));
}

namespace {

void evaluate(TraceRecord& rec, const LinearPredictor& h, const MbalConfig& cfg, const Polytope& poly,
              const EvalSet& test) {
  rec.excess_spo_risk_test = excess_spo_risk(h, poly, test);
  rec.surrogate_risk_test = surrogate_risk(h, cfg.surrogate, poly, test);
}

}  // namespace

RunResult run_stream(const MbalConfig& cfg, const Scenario& scn, const RunOptions& opts, const EvalSet& test) {
  cfg.validate();
  if (opts.T < 0) throw InputError("T must be >= 0");
  if (opts.eval_every < 0) throw InputError("eval_every must be >= 0");
  const Polytope& poly = scn.polytope();

  Rng data_rng = make_rng(cfg.seed, static_cast<std::uint64_t>(opts.trial), "data");
  const SampleSource stream = [&]() -> std::optional<LabeledSample> { return scn.sample(data_rng); };

  LearnerState state = warmup_init(cfg, stream, poly, opts.trial);
  if (opts.b0_override) {
    state.b0 = *opts.b0_override;
    state.b_t = state.b0;
  }

  RunResult result{TrialTrace{}, state.h};
  TrialTrace& trace = result.trace;
  trace.algorithm = "mbal";
  trace.trial = opts.trial;
  trace.seed = cfg.seed;
  trace.n0 = cfg.n0;
  trace.warmup.t = 0;
  trace.warmup.b = state.b0;
  trace.warmup.b_next = state.b_t;
  trace.warmup.labeled = true;
  trace.warmup.n_t = state.n_t;
  evaluate(trace.warmup, state.h, cfg, poly, test);
  trace.steps.reserve(static_cast<std::size_t>(opts.T));

  for (int t = 1; t <= opts.T; ++t) {
    if (opts.max_labels && state.n_t - cfg.n0 >= *opts.max_labels) break;
    // the label is drawn with the features so the data sequence does not
    // depend on which samples get labeled
    LabeledSample next = scn.sample(data_rng);
    const LabelOracle oracle = [&](const Vec&) {
      ++trace.oracle_calls;
      return next.c;
    };
    TraceRecord rec = margin_step(state, next.x, oracle, poly, cfg);
    const bool due = (opts.eval_on_label && rec.labeled) || (opts.eval_every > 0 && t % opts.eval_every == 0);
    if (due) evaluate(rec, state.h, cfg, poly, test);
    trace.steps.push_back(rec);
  }
  result.final_h = state.h;
  return result;
}

RunResult run_supervised(const MbalConfig& cfg, const Scenario& scn, const RunOptions& opts, const EvalSet& test) {
  RunOptions sup = opts;
  sup.b0_override = std::numeric_limits<double>::infinity();
  RunResult out = run_stream(cfg, scn, sup, test);
  out.trace.algorithm = "supervised";
  return out;
}

}  // namespace mbal
