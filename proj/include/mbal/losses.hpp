#pragma once

#include "mbal/polytope.hpp"

#include <string>
#include <vector>

namespace mbal {

struct SurrogateKind {
  enum class Tag { SPO, SPOPlus, Squared, MAE, Huber };

  Tag tag = Tag::SPOPlus;
  double huber_delta = 1.0;

  static SurrogateKind spo() { return {Tag::SPO, 1.0}; }
  static SurrogateKind spo_plus() { return {Tag::SPOPlus, 1.0}; }
  static SurrogateKind squared() { return {Tag::Squared, 1.0}; }
  static SurrogateKind mae() { return {Tag::MAE, 1.0}; }
  static SurrogateKind huber(double delta = 1.0);

  bool is_regression() const { return tag == Tag::Squared || tag == Tag::MAE || tag == Tag::Huber; }
  bool is_convex() const { return tag != Tag::SPO; }

  friend bool operator==(const SurrogateKind&, const SurrogateKind&) = default;
};

std::string to_string(const SurrogateKind& kind);
// Accepts "spo", "spo+", "squared", "mae", "huber" and "huber:<delta>".
SurrogateKind surrogate_from_string(const std::string& s);

struct LabeledSample {
  Vec x;
  Vec c;
};

// c·w*(c_hat) - c·w*(c)
double spo_loss(const Polytope& poly, const Vec& c_hat, const Vec& c);

// max_w (c - 2 c_hat)·w + 2 c_hat·w*(c) - c·w*(c)
double spo_plus_loss(const Polytope& poly, const Vec& c_hat, const Vec& c);

// 2 (w*(c) - w*(2 c_hat - c)), a subgradient of c_hat -> spo_plus_loss.
Vec spo_plus_subgradient(const Polytope& poly, const Vec& c_hat, const Vec& c);

struct LossEval {
  double value = 0.0;
  Vec grad;
};

LossEval regression_loss(const SurrogateKind& kind, const Vec& c_hat, const Vec& c);

/// Value and a (sub)gradient in c_hat for any surrogate. For raw SPO the
/// value is the SPO loss and the direction is the SPO+ subgradient, which
/// serves only as a descent heuristic.
LossEval surrogate_loss(const SurrogateKind& kind, const Polytope& poly, const Vec& c_hat, const Vec& c);

double surrogate_value(const SurrogateKind& kind, const Polytope& poly, const Vec& c_hat, const Vec& c);

/// (1/denom) * (sum_W l_i + (1/p_tilde) * sum_Wtilde l_i) from per-sample
/// losses.
double reweighted_sum(const std::vector<double>& losses_w, const std::vector<double>& losses_w_tilde,
                      double p_tilde, double denom);

}  // namespace mbal
