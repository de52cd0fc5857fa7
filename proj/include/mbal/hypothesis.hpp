#pragma once

#include "mbal/losses.hpp"
#include "mbal/polytope.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace mbal {

/// Affine cost predictor c_hat = weights * [x; 1]. `weights` is d x (p+1),
/// the last column holds the intercept.
class LinearPredictor {
 public:
  LinearPredictor(int d, int p);
  explicit LinearPredictor(Mat weights);

  int d() const { return static_cast<int>(weights_.rows()); }
  int p() const { return static_cast<int>(weights_.cols()) - 1; }
  const Mat& weights() const { return weights_; }
  Mat& weights() { return weights_; }

  Vec predict(const Vec& x) const;

  nlohmann::json to_json() const;
  static LinearPredictor from_json(const nlohmann::json& j);

  friend bool operator==(const LinearPredictor& a, const LinearPredictor& b) {
    return a.weights_.rows() == b.weights_.rows() && a.weights_.cols() == b.weights_.cols() &&
           a.weights_ == b.weights_;
  }

 private:
  Mat weights_;
};

inline Vec predict(const LinearPredictor& h, const Vec& x) { return h.predict(x); }

enum class StepDecay { Constant, InvSqrt };

struct TrainerConfig {
  double step_size = 0.01;
  StepDecay step_decay = StepDecay::InvSqrt;
  int epochs_per_update = 50;
  double tolerance = 1e-8;
  std::optional<double> weight_clip;
  // Scale steps by denom / (total sample weight). The minimizer does not
  // depend on denom, so neither should the step.
  bool weight_normalized_step = true;
  // Run descent on features centered and scaled by the training set's
  // mean and standard deviation. The affine class is unchanged.
  bool standardize = false;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainerConfig from_json(const nlohmann::json& j);
};

/// The training problem handed to fit_erm: near-margin set W (weight 1),
/// soft-accepted set W~ (weight 1/p_tilde), and the normalizer t + n0.
struct ErmProblem {
  const Polytope* poly = nullptr;
  SurrogateKind kind;
  const std::vector<LabeledSample>* w = nullptr;
  const std::vector<LabeledSample>* w_tilde = nullptr;
  double p_tilde = 1.0;
  double denom = 1.0;
};

double reweighted_empirical_loss(const SurrogateKind& kind, const Polytope& poly, const LinearPredictor& h,
                                 const std::vector<LabeledSample>& w,
                                 const std::vector<LabeledSample>& w_tilde, double p_tilde, double denom);

double objective(const ErmProblem& problem, const LinearPredictor& h);

/// Full-batch (sub)gradient descent on the reweighted objective, warm
/// started from `init`. Returns the best iterate seen, so the objective
/// never exceeds its value at `init`.
LinearPredictor fit_erm(const LinearPredictor& init, const ErmProblem& problem, const TrainerConfig& cfg);

LinearPredictor fit_erm(const LinearPredictor& init, const SurrogateKind& kind, const Polytope& poly,
                        const std::vector<LabeledSample>& w, const std::vector<LabeledSample>& w_tilde,
                        double p_tilde, double denom, const TrainerConfig& cfg);

}  // namespace mbal
