#include "mbal/trace.hpp"

#include "mbal/polytope.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace mbal {

std::vector<TraceRecord> TrialTrace::evaluations() const {
  std::vector<TraceRecord> out;
  if (warmup.evaluated()) out.push_back(warmup);
  for (const auto& r : steps) {
    if (r.evaluated()) out.push_back(r);
  }
  return out;
}

std::optional<double> TrialTrace::risk_at_labels(int post_warmup_labels) const {
  const int target = n0 + post_warmup_labels;
  if (warmup.evaluated() && warmup.n_t == target) return warmup.excess_spo_risk_test;
  for (const auto& r : steps) {
    if (r.evaluated() && r.n_t == target) return r.excess_spo_risk_test;
    if (r.n_t > target) break;
  }
  return std::nullopt;
}

double TrialTrace::labeled_fraction(int t_lo, int t_hi) const {
  long seen = 0;
  long labeled = 0;
  for (const auto& r : steps) {
    if (r.t < t_lo || r.t > t_hi) continue;
    ++seen;
    if (r.labeled) ++labeled;
  }
  return seen == 0 ? 0.0 : static_cast<double>(labeled) / static_cast<double>(seen);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw InputError("not a number: '" + s + "'");
  return v;
}

namespace {

constexpr const char* kColumns = "trial,t,n_labels,excess_spo_risk,surrogate_risk,b_t,labeled_flag";

void write_row(std::ostream& out, int trial, const TraceRecord& r, bool labeled) {
  out << trial << ',' << r.t << ',' << r.n_t << ',' << format_double(r.excess_spo_risk_test) << ','
      << format_double(r.surrogate_risk_test) << ',' << format_double(r.b_next) << ',' << (labeled ? 1 : 0) << '\n';
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

void write_trace_csv(std::ostream& out, const TraceFileMeta& meta, const std::vector<TrialTrace>& traces) {
  out << kCsvVersionLine << '\n';
  out << '#';
  for (const auto& [k, v] : meta.fields) out << ' ' << k << '=' << v;
  out << '\n' << kColumns << '\n';
  for (const auto& tr : traces) {
    if (tr.warmup.evaluated()) write_row(out, tr.trial, tr.warmup, true);
    for (const auto& r : tr.steps) {
      if (r.evaluated()) write_row(out, tr.trial, r, r.labeled);
    }
  }
}

std::vector<TrialTrace> read_trace_csv(std::istream& in, TraceFileMeta* meta) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvVersionLine) {
    throw InputError("results CSV must start with '" + std::string(kCsvVersionLine) + "'");
  }
  TraceFileMeta parsed;
  bool header_seen = false;
  std::vector<TrialTrace> traces;
  std::map<int, std::size_t> by_trial;
  int n0 = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string kv;
      while (ss >> kv) {
        const auto eq = kv.find('=');
        if (eq != std::string::npos) parsed.fields[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
      continue;
    }
    if (!header_seen) {
      if (line != kColumns) throw InputError("unexpected CSV columns: " + line);
      header_seen = true;
      if (auto it = parsed.fields.find("n0"); it != parsed.fields.end()) n0 = std::stoi(it->second);
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != 7) throw InputError("malformed CSV row: " + line);
    const int trial = std::stoi(cells[0]);
    auto [it, inserted] = by_trial.try_emplace(trial, traces.size());
    if (inserted) {
      TrialTrace tr;
      tr.trial = trial;
      tr.n0 = n0;
      if (auto a = parsed.fields.find("algo"); a != parsed.fields.end()) tr.algorithm = a->second;
      traces.push_back(std::move(tr));
    }
    TrialTrace& tr = traces[it->second];
    TraceRecord r;
    r.t = std::stoi(cells[1]);
    r.n_t = std::stoi(cells[2]);
    r.excess_spo_risk_test = parse_double(cells[3]);
    r.surrogate_risk_test = parse_double(cells[4]);
    r.b_next = parse_double(cells[5]);
    r.labeled = cells[6] == "1";
    if (r.t == 0) {
      tr.warmup = r;
    } else {
      tr.steps.push_back(r);
    }
  }
  if (!header_seen) throw InputError("results CSV has no column header");
  if (meta != nullptr) *meta = std::move(parsed);
  return traces;
}

}  // namespace mbal
