#include "mbal/hypothesis.hpp"

#include <cmath>

namespace mbal {

LinearPredictor::LinearPredictor(int d, int p) {
  if (d < 1 || p < 0) throw InputError("predictor shape must have d >= 1, p >= 0");
  weights_ = Mat::Zero(d, p + 1);
}

LinearPredictor::LinearPredictor(Mat weights) : weights_(std::move(weights)) {
  if (weights_.rows() < 1 || weights_.cols() < 1) throw InputError("empty predictor weights");
  if (!weights_.allFinite()) throw InputError("predictor weights must be finite");
}

Vec LinearPredictor::predict(const Vec& x) const {
  if (x.size() != p()) {
    throw InputError("feature dimension " + std::to_string(x.size()) + " does not match predictor p=" +
                     std::to_string(p()));
  }
  return weights_.leftCols(p()) * x + weights_.col(p());
}

nlohmann::json LinearPredictor::to_json() const {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(weights_.size()));
  for (Eigen::Index r = 0; r < weights_.rows(); ++r) {
    for (Eigen::Index c = 0; c < weights_.cols(); ++c) flat.push_back(weights_(r, c));
  }
  return {{"d", d()}, {"p", p()}, {"weights", flat}};
}

LinearPredictor LinearPredictor::from_json(const nlohmann::json& j) {
  const int d = j.at("d").get<int>();
  const int p = j.at("p").get<int>();
  const auto flat = j.at("weights").get<std::vector<double>>();
  if (static_cast<long>(flat.size()) != static_cast<long>(d) * (p + 1)) {
    throw InputError("predictor JSON weight count does not match d x (p+1)");
  }
  Mat w(d, p + 1);
  std::size_t k = 0;
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c <= p; ++c) w(r, c) = flat[k++];
  }
  return LinearPredictor(std::move(w));
}

void TrainerConfig::validate() const {
  if (!(step_size > 0.0)) throw InputError("step_size must be positive");
  if (epochs_per_update < 1) throw InputError("epochs_per_update must be >= 1");
  if (!(tolerance >= 0.0)) throw InputError("tolerance must be >= 0");
  if (weight_clip && !(*weight_clip > 0.0)) throw InputError("weight_clip must be positive");
  if (weight_clip && standardize) throw InputError("weight_clip cannot be combined with standardize");
}

nlohmann::json TrainerConfig::to_json() const {
  nlohmann::json j = {{"step_size", step_size},
                      {"step_decay", step_decay == StepDecay::Constant ? "constant" : "inv_sqrt"},
                      {"epochs_per_update", epochs_per_update},
                      {"tolerance", tolerance}};
  j["weight_clip"] = weight_clip ? nlohmann::json(*weight_clip) : nlohmann::json(nullptr);
  j["weight_normalized_step"] = weight_normalized_step;
  j["standardize"] = standardize;
  return j;
}

TrainerConfig TrainerConfig::from_json(const nlohmann::json& j) {
  TrainerConfig cfg;
  cfg.step_size = j.value("step_size", cfg.step_size);
  const std::string decay = j.value("step_decay", std::string("inv_sqrt"));
  if (decay == "constant") {
    cfg.step_decay = StepDecay::Constant;
  } else if (decay == "inv_sqrt") {
    cfg.step_decay = StepDecay::InvSqrt;
  } else {
    throw InputError("unknown step_decay: " + decay);
  }
  cfg.epochs_per_update = j.value("epochs_per_update", cfg.epochs_per_update);
  cfg.tolerance = j.value("tolerance", cfg.tolerance);
  if (j.contains("weight_clip") && !j["weight_clip"].is_null()) cfg.weight_clip = j["weight_clip"].get<double>();
  cfg.weight_normalized_step = j.value("weight_normalized_step", cfg.weight_normalized_step);
  cfg.standardize = j.value("standardize", cfg.standardize);
  cfg.validate();
  return cfg;
}

namespace {

void check_problem(const ErmProblem& problem) {
  if (problem.poly == nullptr || problem.w == nullptr || problem.w_tilde == nullptr) {
    throw UsageError("incomplete ERM problem");
  }
  if (!problem.w_tilde->empty() && !(problem.p_tilde > 0.0)) {
    throw UsageError("soft-accepted samples present but p_tilde is zero");
  }
  const auto n = static_cast<double>(problem.w->size() + problem.w_tilde->size());
  if (n > 0 && problem.denom < n) throw UsageError("denominator smaller than the number of samples");
}

// Objective value and its (sub)gradient with respect to the weights.
double objective_and_grad(const ErmProblem& problem, const LinearPredictor& h, Mat* grad) {
  const int p = h.p();
  if (grad != nullptr) grad->setZero(h.d(), p + 1);
  double total = 0.0;
  const auto accumulate = [&](const std::vector<LabeledSample>& set, double weight) {
    for (const auto& s : set) {
      const Vec c_hat = h.predict(s.x);
      if (grad == nullptr) {
        total += weight * surrogate_value(problem.kind, *problem.poly, c_hat, s.c);
        continue;
      }
      const LossEval e = surrogate_loss(problem.kind, *problem.poly, c_hat, s.c);
      total += weight * e.value;
      grad->leftCols(p).noalias() += weight * e.grad * s.x.transpose();
      grad->col(p) += weight * e.grad;
    }
  };
  accumulate(*problem.w, 1.0);
  if (!problem.w_tilde->empty()) accumulate(*problem.w_tilde, 1.0 / problem.p_tilde);
  if (grad != nullptr) *grad /= problem.denom;
  return total / problem.denom;
}

}  // namespace

double reweighted_empirical_loss(const SurrogateKind& kind, const Polytope& poly, const LinearPredictor& h,
                                 const std::vector<LabeledSample>& w,
                                 const std::vector<LabeledSample>& w_tilde, double p_tilde, double denom) {
  return objective({&poly, kind, &w, &w_tilde, p_tilde, denom}, h);
}

double objective(const ErmProblem& problem, const LinearPredictor& h) {
  check_problem(problem);
  if (problem.w->empty() && problem.w_tilde->empty()) return 0.0;
  return objective_and_grad(problem, h, nullptr);
}

namespace {

LinearPredictor descend(const LinearPredictor& init, const ErmProblem& problem, const TrainerConfig& cfg);

std::vector<LabeledSample> standardized(const std::vector<LabeledSample>& set, const Vec& mean, const Vec& scale) {
  std::vector<LabeledSample> out;
  out.reserve(set.size());
  for (const auto& s : set) out.push_back({(s.x - mean).cwiseQuotient(scale), s.c});
  return out;
}

}  // namespace

LinearPredictor fit_erm(const LinearPredictor& init, const ErmProblem& problem, const TrainerConfig& cfg) {
  check_problem(problem);
  cfg.validate();
  if (problem.w->empty() && problem.w_tilde->empty()) return init;
  if (!cfg.standardize || init.p() == 0) return descend(init, problem, cfg);

  const int p = init.p();
  Vec mean = Vec::Zero(p);
  Vec sq = Vec::Zero(p);
  double n = 0.0;
  for (const auto* set : {problem.w, problem.w_tilde}) {
    for (const auto& s : *set) {
      mean += s.x;
      sq += s.x.cwiseProduct(s.x);
      n += 1.0;
    }
  }
  mean /= n;
  Vec scale = (sq / n - mean.cwiseProduct(mean)).cwiseMax(0.0).cwiseSqrt();
  for (Eigen::Index i = 0; i < p; ++i) {
    if (!(scale[i] > 1e-12)) scale[i] = 1.0;
  }
  const auto w = standardized(*problem.w, mean, scale);
  const auto w_tilde = standardized(*problem.w_tilde, mean, scale);
  ErmProblem z = problem;
  z.w = &w;
  z.w_tilde = &w_tilde;

  // h(x) = A x + b = (A diag(s)) z + (b + A m)
  Mat wz = init.weights();
  wz.col(p) += init.weights().leftCols(p) * mean;
  wz.leftCols(p) = wz.leftCols(p) * scale.asDiagonal();
  const LinearPredictor fit = descend(LinearPredictor(std::move(wz)), z, cfg);
  Mat out = fit.weights();
  out.leftCols(p) = out.leftCols(p) * scale.cwiseInverse().asDiagonal();
  out.col(p) -= out.leftCols(p) * mean;
  LinearPredictor back(std::move(out));
  // mapping back can cost a few ulps; never return something worse than init
  if (objective_and_grad(problem, back, nullptr) > objective_and_grad(problem, init, nullptr)) return init;
  return back;
}

namespace {

LinearPredictor descend(const LinearPredictor& init, const ErmProblem& problem, const TrainerConfig& cfg) {
  const auto project = [&cfg](LinearPredictor& h) {
    if (!cfg.weight_clip) return;
    const double clip = *cfg.weight_clip;
    h.weights() = h.weights().cwiseMax(-clip).cwiseMin(clip);
  };

  LinearPredictor current = init;
  project(current);
  LinearPredictor best = current;
  Mat grad;
  double best_value = objective_and_grad(problem, current, &grad);
  double step_scale = 1.0;
  if (cfg.weight_normalized_step) {
    double total_weight = static_cast<double>(problem.w->size());
    if (!problem.w_tilde->empty()) total_weight += static_cast<double>(problem.w_tilde->size()) / problem.p_tilde;
    step_scale = problem.denom / total_weight;
  }
  for (int epoch = 1; epoch <= cfg.epochs_per_update; ++epoch) {
    if (best_value <= cfg.tolerance || grad.norm() <= cfg.tolerance) break;
    const double base = step_scale * cfg.step_size;
    const double step = cfg.step_decay == StepDecay::InvSqrt ? base / std::sqrt(static_cast<double>(epoch)) : base;
    current.weights() -= step * grad;
    project(current);
    const double value = objective_and_grad(problem, current, &grad);
    if (value < best_value) {
      best_value = value;
      best = current;
    }
  }
  return best;
}

}  // namespace

LinearPredictor fit_erm(const LinearPredictor& init, const SurrogateKind& kind, const Polytope& poly,
                        const std::vector<LabeledSample>& w, const std::vector<LabeledSample>& w_tilde,
                        double p_tilde, double denom, const TrainerConfig& cfg) {
  return fit_erm(init, ErmProblem{&poly, kind, &w, &w_tilde, p_tilde, denom}, cfg);
}

}  // namespace mbal
