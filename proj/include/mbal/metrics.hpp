#pragma once

#include "mbal/datagen.hpp"
#include "mbal/hypothesis.hpp"
#include "mbal/polytope.hpp"
#include "mbal/trace.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mbal {

using TrueModel = std::function<Vec(const Vec&)>;

/// Test samples with E[c|x] and its optimal value precomputed.
struct EvalSet {
  std::vector<LabeledSample> samples;
  std::vector<Vec> means;
  std::vector<double> best_values;  // E[c|x]·w*(E[c|x])
};

EvalSet make_eval_set(const Scenario& scn, std::vector<LabeledSample> samples);

/// mean_x E[c|x]·(w*(h(x)) - w*(E[c|x])).
double excess_spo_risk(const LinearPredictor& h, const Polytope& poly, const std::vector<Vec>& test_xs,
                       const TrueModel& true_model);
double excess_spo_risk(const LinearPredictor& h, const Polytope& poly, const EvalSet& test);

/// Mean surrogate loss of h over the labeled test samples.
double surrogate_risk(const LinearPredictor& h, const SurrogateKind& kind, const Polytope& poly,
                      const EvalSet& test);

// ---------------------------------------------------------------------------

struct PsiEstimate {
  std::vector<double> b_grid;
  std::vector<double> psi;
  std::optional<double> kappa_hat;
  std::optional<double> b0_hat;
  int fit_points = 0;
  long samples = 0;
  bool proxy = false;  // true-model reading is only a proxy (mis-specified world)
};

/// Fraction of `m` draws with nu(E[c|x]) <= b for every b in `b_grid`
/// (ascending), plus a least-squares fit of log psi = kappa (log b - log b0)
/// over the grid points with 0 < psi < 1.
PsiEstimate estimate_near_degeneracy(const Scenario& scn, const std::vector<double>& b_grid, long m, Rng& rng);

/// Same, for an arbitrary sampler of true conditional means.
PsiEstimate estimate_near_degeneracy(const Polytope& poly, const std::function<Vec(Rng&)>& draw_mean,
                                     const std::vector<double>& b_grid, long m, Rng& rng);

std::vector<double> geometric_grid(double lo, double hi, int points);

// ---------------------------------------------------------------------------

/// Supervised-over-MBAL ratio of mean excess SPO risk at a label budget.
struct RatioSummary {
  double ratio = 0.0;  // +inf when MBAL risk is 0 and supervised risk > 0
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double mean_supervised = 0.0;
  double mean_mbal = 0.0;
  int trials_supervised = 0;
  int trials_mbal = 0;
  int excluded = 0;  // trials that never reached the budget
};

double risk_ratio(double numerator_mean, double denominator_mean);

/// Ratio of means with a 90% percentile bootstrap interval over trials.
/// Trials are resampled independently within each group.
RatioSummary ratio_with_ci(const std::vector<double>& supervised, const std::vector<double>& mbal,
                           std::uint64_t seed = 0, int resamples = 2000, double level = 0.90);

/// Percentile bootstrap interval for the mean of `values`.
std::pair<double, double> bootstrap_mean_ci(const std::vector<double>& values, std::uint64_t seed,
                                            int resamples = 2000, double level = 0.90);

std::string format_ratio(double r);

/// Compares the two trace sets at `label_budget` labels beyond warm-up.
/// Traces that never reach the budget are excluded and counted.
RatioSummary risk_ratio_table(const std::vector<TrialTrace>& supervised, const std::vector<TrialTrace>& mbal,
                              int label_budget, std::uint64_t seed = 0);

struct RatioRow {
  std::string problem;
  std::string surrogate;
  int label_budget = 0;
  RatioSummary summary;
};

/// Columns: problem,surrogate,label_budget,ratio,ci_lo,ci_hi,trials
void write_ratio_csv(std::ostream& out, const std::vector<RatioRow>& rows);

}  // namespace mbal
