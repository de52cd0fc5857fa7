#pragma once

#include "mbal/datagen.hpp"
#include "mbal/mbal.hpp"
#include "mbal/trace.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mbal {

/// Settings of a multi-trial run over one scenario.
struct ExperimentConfig {
  std::string algorithm = "mbal";  // "mbal" or "supervised"
  MbalConfig mbal;
  int T = 1000;
  int trials = 25;
  int test_size = 1000;
  std::optional<int> max_labels;
  int eval_every = 0;
  int jobs = 1;

  void validate() const;
  nlohmann::json to_json() const;
};

struct TrialFailure {
  int trial = 0;
  std::string message;
};

struct ExperimentResult {
  std::vector<TrialTrace> traces;  // completed trials, in trial order
  std::vector<TrialFailure> failures;
};

/// Runs trials 0..trials-1 on a bounded pool of `jobs` threads. Each trial
/// draws from its own sub-streams, so results do not depend on `jobs`.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Scenario& scn);

/// Worker count from MBAL_JOBS, or 1 when unset or invalid.
int default_jobs();

// Subcommands. `args` excludes the program and subcommand names. The return
// value is the process exit code.
int cmd_gen(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cmd_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cmd_compare(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cmd_psi(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Dispatches on args[0] (gen, run, compare, psi).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mbal
