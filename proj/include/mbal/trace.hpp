#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mbal {

inline constexpr double kNotEvaluated = std::numeric_limits<double>::quiet_NaN();

/// One iteration of the stream learner.
struct TraceRecord {
  int t = 0;
  double nu = kNotEvaluated;  // nu(h_{t-1}(x_t))
  double b = 0.0;             // threshold b_{t-1} the decision was made against
  double b_next = 0.0;        // threshold b_t after the update
  bool near_margin = false;
  bool coin = false;
  bool labeled = false;
  int n_t = 0;
  double surrogate_risk_test = kNotEvaluated;
  double excess_spo_risk_test = kNotEvaluated;

  bool evaluated() const { return !std::isnan(excess_spo_risk_test); }
};

struct TrialTrace {
  std::string algorithm;  // "mbal" or "supervised"
  int trial = 0;
  std::uint64_t seed = 0;
  int n0 = 0;
  TraceRecord warmup;  // t = 0, state right after warm-up
  std::vector<TraceRecord> steps;
  long oracle_calls = 0;

  int final_labels() const { return steps.empty() ? warmup.n_t : steps.back().n_t; }

  /// Evaluated records in order, warm-up first.
  std::vector<TraceRecord> evaluations() const;

  /// Excess SPO risk at the first evaluation with n_t - n0 == budget.
  std::optional<double> risk_at_labels(int post_warmup_labels) const;

  /// Fraction of labeled steps with t in [t_lo, t_hi].
  double labeled_fraction(int t_lo, int t_hi) const;
};

/// Header metadata carried by a results CSV.
struct TraceFileMeta {
  std::map<std::string, std::string> fields;  // algo, problem, surrogate, n0, seed, ...
};

inline constexpr const char* kCsvVersionLine = "# mbal-clo v1";

/// Long format, one row per (trial, evaluation point):
///   trial,t,n_labels,excess_spo_risk,surrogate_risk,b_t,labeled_flag
void write_trace_csv(std::ostream& out, const TraceFileMeta& meta, const std::vector<TrialTrace>& traces);

/// Parses a results CSV back into traces holding only evaluated records.
std::vector<TrialTrace> read_trace_csv(std::istream& in, TraceFileMeta* meta = nullptr);

/// Shortest round-trip decimal; "inf"/"-inf"/"nan" for non-finite values.
std::string format_double(double v);
double parse_double(const std::string& s);

}  // namespace mbal
