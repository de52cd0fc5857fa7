#include "mbal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace mbal {

EvalSet make_eval_set(const Scenario& scn, std::vector<LabeledSample> samples) {
  EvalSet out;
  out.means.reserve(samples.size());
  out.best_values.reserve(samples.size());
  const Polytope& poly = scn.polytope();
  for (const auto& s : samples) {
    Vec mean = scn.conditional_mean(s.x);
    out.best_values.push_back(poly.objective_values(mean).minCoeff());
    out.means.push_back(std::move(mean));
  }
  out.samples = std::move(samples);
  return out;
}

double excess_spo_risk(const LinearPredictor& h, const Polytope& poly, const std::vector<Vec>& test_xs,
                       const TrueModel& true_model) {
  if (test_xs.empty()) throw InputError("excess risk needs a non-empty test set");
  double total = 0.0;
  for (const Vec& x : test_xs) {
    const Vec mean = true_model(x);
    const Vec values = poly.objective_values(mean);
    total += values[poly.argmin_index(h.predict(x))] - values.minCoeff();
  }
  return total / static_cast<double>(test_xs.size());
}

double excess_spo_risk(const LinearPredictor& h, const Polytope& poly, const EvalSet& test) {
  if (test.samples.empty()) throw InputError("excess risk needs a non-empty test set");
  double total = 0.0;
  for (std::size_t i = 0; i < test.samples.size(); ++i) {
    const int chosen = poly.argmin_index(h.predict(test.samples[i].x));
    total += poly.vertices().row(chosen).dot(test.means[i]) - test.best_values[i];
  }
  // each term is >= 0 up to rounding
  return std::max(0.0, total / static_cast<double>(test.samples.size()));
}

double surrogate_risk(const LinearPredictor& h, const SurrogateKind& kind, const Polytope& poly,
                      const EvalSet& test) {
  if (test.samples.empty()) throw InputError("surrogate risk needs a non-empty test set");
  double total = 0.0;
  for (const auto& s : test.samples) total += surrogate_value(kind, poly, h.predict(s.x), s.c);
  return total / static_cast<double>(test.samples.size());
}

// --- near-degeneracy -------------------------------------------------------

std::vector<double> geometric_grid(double lo, double hi, int points) {
  if (!(lo > 0.0 && hi > lo) || points < 2) throw InputError("geometric grid needs 0 < lo < hi and >= 2 points");
  std::vector<double> grid(static_cast<std::size_t>(points));
  const double step = std::log(hi / lo) / (points - 1);
  for (int i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = lo * std::exp(step * i);
  grid.back() = hi;
  return grid;
}

PsiEstimate estimate_near_degeneracy(const Polytope& poly, const std::function<Vec(Rng&)>& draw_mean,
                                     const std::vector<double>& b_grid, long m, Rng& rng) {
  if (m < 1) throw InputError("near-degeneracy estimate needs M >= 1");
  if (b_grid.empty()) throw InputError("empty b grid");
  if (!std::is_sorted(b_grid.begin(), b_grid.end())) throw InputError("b grid must be ascending");

  std::vector<double> nus(static_cast<std::size_t>(m));
  for (auto& nu : nus) nu = poly.distance_to_degeneracy(draw_mean(rng));
  std::sort(nus.begin(), nus.end());

  PsiEstimate est;
  est.b_grid = b_grid;
  est.samples = m;
  est.psi.reserve(b_grid.size());
  for (double b : b_grid) {
    const auto count = std::upper_bound(nus.begin(), nus.end(), b) - nus.begin();
    est.psi.push_back(static_cast<double>(count) / static_cast<double>(m));
  }

  // log psi = kappa log b + beta  =>  b0 = exp(-beta / kappa)
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < b_grid.size(); ++i) {
    if (est.psi[i] > 0.0 && est.psi[i] < 1.0 && b_grid[i] > 0.0) {
      lx.push_back(std::log(b_grid[i]));
      ly.push_back(std::log(est.psi[i]));
    }
  }
  est.fit_points = static_cast<int>(lx.size());
  if (lx.size() >= 2) {
    const double n = static_cast<double>(lx.size());
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxx += (lx[i] - mx) * (lx[i] - mx);
      sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx > 0.0) {
      const double kappa = sxy / sxx;
      est.kappa_hat = kappa;
      if (kappa != 0.0) est.b0_hat = std::exp(-(my - kappa * mx) / kappa);
    }
  }
  return est;
}

PsiEstimate estimate_near_degeneracy(const Scenario& scn, const std::vector<double>& b_grid, long m, Rng& rng) {
  PsiEstimate est = estimate_near_degeneracy(
      scn.polytope(), [&scn](Rng& r) { return scn.conditional_mean(scn.sample_x(r)); }, b_grid, m, rng);
  est.proxy = std::holds_alternative<PricingScenario>(scn.data());
  return est;
}

// --- ratios ----------------------------------------------------------------

double risk_ratio(double numerator_mean, double denominator_mean) {
  if (denominator_mean == 0.0) {
    return numerator_mean == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  }
  return numerator_mean / denominator_mean;
}

namespace {

double mean_of(const std::vector<double>& v) {
  return v.empty() ? std::numeric_limits<double>::quiet_NaN()
                   : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Percentile of an already sorted sample, linear interpolation.
double percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (std::isinf(sorted[lo]) || std::isinf(sorted[hi])) return frac < 0.5 ? sorted[lo] : sorted[hi];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double resampled_mean(const std::vector<double>& v, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, v.size() - 1);
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) total += v[pick(rng)];
  return total / static_cast<double>(v.size());
}

}  // namespace

std::pair<double, double> bootstrap_mean_ci(const std::vector<double>& values, std::uint64_t seed, int resamples,
                                            double level) {
  if (values.empty()) throw InputError("bootstrap of an empty sample");
  if (resamples < 1 || !(level > 0.0 && level < 1.0)) throw InputError("bad bootstrap parameters");
  Rng rng = make_rng(seed, 0, "bootstrap");
  std::vector<double> means(static_cast<std::size_t>(resamples));
  for (auto& m : means) m = resampled_mean(values, rng);
  std::sort(means.begin(), means.end());
  const double tail = (1.0 - level) / 2.0;
  return {percentile(means, tail), percentile(means, 1.0 - tail)};
}

RatioSummary ratio_with_ci(const std::vector<double>& supervised, const std::vector<double>& mbal,
                           std::uint64_t seed, int resamples, double level) {
  RatioSummary out;
  out.trials_supervised = static_cast<int>(supervised.size());
  out.trials_mbal = static_cast<int>(mbal.size());
  out.mean_supervised = mean_of(supervised);
  out.mean_mbal = mean_of(mbal);
  if (supervised.empty() || mbal.empty()) {
    out.ratio = out.ci_lo = out.ci_hi = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.ratio = risk_ratio(out.mean_supervised, out.mean_mbal);
  if (resamples < 1 || !(level > 0.0 && level < 1.0)) throw InputError("bad bootstrap parameters");
  Rng rng_sup = make_rng(seed, 0, "bootstrap-numerator");
  Rng rng_mbal = make_rng(seed, 0, "bootstrap-denominator");
  std::vector<double> ratios(static_cast<std::size_t>(resamples));
  for (auto& r : ratios) {
    const double num = resampled_mean(supervised, rng_sup);
    const double den = resampled_mean(mbal, rng_mbal);
    r = risk_ratio(num, den);
  }
  std::sort(ratios.begin(), ratios.end());
  const double tail = (1.0 - level) / 2.0;
  out.ci_lo = percentile(ratios, tail);
  out.ci_hi = percentile(ratios, 1.0 - tail);
  return out;
}

std::string format_ratio(double r) { return format_double(r); }

RatioSummary risk_ratio_table(const std::vector<TrialTrace>& supervised, const std::vector<TrialTrace>& mbal,
                              int label_budget, std::uint64_t seed) {
  if (label_budget < 0) throw InputError("label budget must be >= 0");
  int excluded = 0;
  const auto collect = [&](const std::vector<TrialTrace>& traces) {
    std::vector<double> risks;
    for (const auto& tr : traces) {
      if (auto r = tr.risk_at_labels(label_budget)) {
        risks.push_back(*r);
      } else {
        ++excluded;
      }
    }
    return risks;
  };
  const auto sup = collect(supervised);
  const auto act = collect(mbal);
  RatioSummary out = ratio_with_ci(sup, act, seed);
  out.excluded = excluded;
  return out;
}

void write_ratio_csv(std::ostream& out, const std::vector<RatioRow>& rows) {
  out << kCsvVersionLine << '\n';
  out << "problem,surrogate,label_budget,ratio,ci_lo,ci_hi,trials\n";
  for (const auto& row : rows) {
    const auto& s = row.summary;
    out << row.problem << ',' << row.surrogate << ',' << row.label_budget << ',' << format_ratio(s.ratio) << ','
        << format_ratio(s.ci_lo) << ',' << format_ratio(s.ci_hi) << ',' << std::min(s.trials_supervised, s.trials_mbal)
        << '\n';
  }
}

}  // namespace mbal
