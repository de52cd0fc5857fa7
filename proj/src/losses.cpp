#include "mbal/losses.hpp"

#include <cmath>
#include <cstdlib>

namespace mbal {

namespace {

void check_pair(const Polytope& poly, const Vec& c_hat, const Vec& c) {
  if (c_hat.size() != poly.dim() || c.size() != poly.dim()) {
    throw InputError("prediction/label dimension does not match polytope dimension " +
                     std::to_string(poly.dim()));
  }
}

}  // namespace

SurrogateKind SurrogateKind::huber(double delta) {
  if (!(delta > 0.0)) throw InputError("huber delta must be positive");
  return {Tag::Huber, delta};
}

std::string to_string(const SurrogateKind& kind) {
  switch (kind.tag) {
    case SurrogateKind::Tag::SPO:
      return "spo";
    case SurrogateKind::Tag::SPOPlus:
      return "spo+";
    case SurrogateKind::Tag::Squared:
      return "squared";
    case SurrogateKind::Tag::MAE:
      return "mae";
    case SurrogateKind::Tag::Huber:
      return kind.huber_delta == 1.0 ? "huber" : "huber:" + std::to_string(kind.huber_delta);
  }
  return "?";
}

SurrogateKind surrogate_from_string(const std::string& s) {
  if (s == "spo") return SurrogateKind::spo();
  if (s == "spo+" || s == "spoplus" || s == "spo_plus") return SurrogateKind::spo_plus();
  if (s == "squared" || s == "l2") return SurrogateKind::squared();
  if (s == "mae" || s == "l1") return SurrogateKind::mae();
  if (s == "huber") return SurrogateKind::huber();
  if (s.rfind("huber:", 0) == 0) {
    char* end = nullptr;
    const double delta = std::strtod(s.c_str() + 6, &end);
    if (end == s.c_str() + 6 || *end != '\0') throw InputError("bad huber delta in '" + s + "'");
    return SurrogateKind::huber(delta);
  }
  throw InputError("unknown surrogate: " + s);
}

double spo_loss(const Polytope& poly, const Vec& c_hat, const Vec& c) {
  check_pair(poly, c_hat, c);
  const Vec values = poly.objective_values(c);
  return values[poly.argmin_index(c_hat)] - values[poly.argmin_index(c)];
}

double spo_plus_loss(const Polytope& poly, const Vec& c_hat, const Vec& c) {
  check_pair(poly, c_hat, c);
  const Vec shifted = poly.objective_values(c - 2.0 * c_hat);
  const Vec w_c = poly.vertex(poly.argmin_index(c));
  return shifted.maxCoeff() + 2.0 * c_hat.dot(w_c) - c.dot(w_c);
}

Vec spo_plus_subgradient(const Polytope& poly, const Vec& c_hat, const Vec& c) {
  check_pair(poly, c_hat, c);
  // argmax (c - 2 c_hat)·w == argmin (2 c_hat - c)·w
  const int worst = poly.argmin_index(2.0 * c_hat - c);
  const int best = poly.argmin_index(c);
  return 2.0 * (poly.vertex(best) - poly.vertex(worst));
}

LossEval regression_loss(const SurrogateKind& kind, const Vec& c_hat, const Vec& c) {
  if (!kind.is_regression()) throw UsageError("regression_loss called with " + to_string(kind));
  if (c_hat.size() != c.size()) throw InputError("prediction/label dimension mismatch");
  const Vec r = c_hat - c;
  LossEval out;
  switch (kind.tag) {
    case SurrogateKind::Tag::Squared:
      out.value = r.squaredNorm();
      out.grad = 2.0 * r;
      break;
    case SurrogateKind::Tag::MAE:
      out.value = r.cwiseAbs().sum();
      out.grad = r.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
      break;
    case SurrogateKind::Tag::Huber: {
      const double delta = kind.huber_delta;
      out.grad.resize(r.size());
      for (Eigen::Index i = 0; i < r.size(); ++i) {
        const double a = std::abs(r[i]);
        if (a <= delta) {
          out.value += 0.5 * r[i] * r[i];
          out.grad[i] = r[i];
        } else {
          out.value += delta * (a - 0.5 * delta);
          out.grad[i] = r[i] > 0.0 ? delta : -delta;
        }
      }
      break;
    }
    default:
      break;
  }
  return out;
}

LossEval surrogate_loss(const SurrogateKind& kind, const Polytope& poly, const Vec& c_hat, const Vec& c) {
  switch (kind.tag) {
    case SurrogateKind::Tag::SPO:
      return {spo_loss(poly, c_hat, c), spo_plus_subgradient(poly, c_hat, c)};
    case SurrogateKind::Tag::SPOPlus:
      return {spo_plus_loss(poly, c_hat, c), spo_plus_subgradient(poly, c_hat, c)};
    default:
      if (c_hat.size() != poly.dim() || c.size() != poly.dim()) {
        throw InputError("prediction/label dimension does not match polytope");
      }
      return regression_loss(kind, c_hat, c);
  }
}

double surrogate_value(const SurrogateKind& kind, const Polytope& poly, const Vec& c_hat, const Vec& c) {
  switch (kind.tag) {
    case SurrogateKind::Tag::SPO:
      return spo_loss(poly, c_hat, c);
    case SurrogateKind::Tag::SPOPlus:
      return spo_plus_loss(poly, c_hat, c);
    default:
      return surrogate_loss(kind, poly, c_hat, c).value;
  }
}

double reweighted_sum(const std::vector<double>& losses_w, const std::vector<double>& losses_w_tilde,
                      double p_tilde, double denom) {
  if (!losses_w_tilde.empty() && !(p_tilde > 0.0)) {
    throw UsageError("soft-accepted samples present but p_tilde is zero");
  }
  if (losses_w.empty() && losses_w_tilde.empty()) return 0.0;
  if (!(denom > 0.0)) throw InputError("denominator must be positive");
  double near = 0.0;
  for (double l : losses_w) near += l;
  double far = 0.0;
  for (double l : losses_w_tilde) far += l;
  if (!losses_w_tilde.empty()) near += far / p_tilde;
  return near / denom;
}

}  // namespace mbal
