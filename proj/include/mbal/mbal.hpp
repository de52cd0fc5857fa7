#pragma once

#include "mbal/datagen.hpp"
#include "mbal/hypothesis.hpp"
#include "mbal/losses.hpp"
#include "mbal/metrics.hpp"
#include "mbal/polytope.hpp"
#include "mbal/random.hpp"
#include "mbal/trace.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace mbal {

struct MbalConfig {
  double p_tilde = 1e-5;  // label probability for far-from-degeneracy samples
  double q_tilde = 0.5;   // quantile of warm-up distances used as b0
  int n0 = 10;            // warm-up length
  SurrogateKind surrogate = SurrogateKind::spo_plus();
  TrainerConfig trainer;
  NormKind norm = NormKind::L2;
  std::uint64_t seed = 0;
  // b_t = b0 * (n0 ln(n0 + t) / t)^schedule_exponent
  double schedule_exponent = 0.25;
  // Re-run the trainer on steps that acquired no label. The objective is
  // then the previous one rescaled, so its minimizer is unchanged.
  bool refit_on_rejection = false;

  void validate() const;
  nlohmann::json to_json() const;
  static MbalConfig from_json(const nlohmann::json& j);
};

struct LearnerState {
  int t = 0;
  LinearPredictor h{1, 0};
  double b0 = 0.0;
  double b_t = 0.0;  // threshold used for the next decision
  std::vector<LabeledSample> w;
  std::vector<LabeledSample> w_tilde;
  int n_t = 0;
  Rng coin_rng;
  // distances of the warm-up samples under h0, in stream order
  std::vector<double> warmup_distances;
};

/// Returns the next labeled sample, or nullopt once exhausted.
using SampleSource = std::function<std::optional<LabeledSample>()>;
using LabelOracle = std::function<Vec(const Vec&)>;

/// q-quantile by nearest rank: element ceil(q n) (1-based) of the ascending
/// sort.
double nearest_rank_quantile(std::vector<double> values, double q);

double threshold_at(double b0, int n0, int t, double exponent = 0.25);

/// Collects n0 samples, fits h0 on them and sets b0 from the distances to
/// degeneracy of h0's predictions.
LearnerState warmup_init(const MbalConfig& cfg, const SampleSource& stream, const Polytope& poly,
                         int trial = 0);

/// One iteration of the margin rule followed by the warm-started refit.
TraceRecord margin_step(LearnerState& state, const Vec& x, const LabelOracle& label_oracle, const Polytope& poly,
                        const MbalConfig& cfg);

struct RunOptions {
  int T = 100;
  int trial = 0;
  // Stop once this many labels beyond the warm-up were acquired.
  std::optional<int> max_labels;
  // Evaluate test risks after every label acquisition.
  bool eval_on_label = true;
  // Additionally evaluate every k steps (0 = off).
  int eval_every = 0;
  // Overrides the quantile threshold (+inf labels every sample).
  std::optional<double> b0_override;
};

struct RunResult {
  TrialTrace trace;
  LinearPredictor final_h;
};

RunResult run_stream(const MbalConfig& cfg, const Scenario& scn, const RunOptions& opts, const EvalSet& test);

/// The label-everything baseline: the same loop with b0 = +inf.
RunResult run_supervised(const MbalConfig& cfg, const Scenario& scn, const RunOptions& opts, const EvalSet& test);

/// Test set for a trial, drawn from its own sub-stream.
EvalSet make_trial_test_set(const Scenario& scn, std::uint64_t seed, int trial, int size);

}  // namespace mbal
