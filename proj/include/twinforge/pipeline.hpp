#pragma once

/**
 * @file
 * Experiment orchestration: signal bank, cached full-order runs, 1-signal
 * ROM sweeps, test-set selection, evaluation, and the headline report.
 *
 * Workspace layout:
 *   signals/     <id>.csv + <id>.json
 *   simresults/  <id>.<key16>.csv, keyed by a SHA-256 over signal values,
 *                grid, constants and solver version
 *   models/      rom-<signal id>.json
 *   eval/        test sets, KPIs, error tables, rankings, correlations
 *   report/      report.md, acceptance.csv, log.txt (the only file with
 *                timestamps and wall-clock timings)
 */

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twinforge/core_model.hpp"
#include "twinforge/evaluation.hpp"
#include "twinforge/rom.hpp"
#include "twinforge/signals.hpp"

namespace twinforge::pipeline {

struct BankSpec {
  int aprbs = 50;
  int sinaprbs = 25;
  int multisine = 20;
  int schroeder = 5;
  bool step = true;
  bool sine = true;
};

struct ExperimentConfig {
  std::filesystem::path workspace = "workspace";
  std::uint64_t seed = 1;
  BankSpec bank;
  core::CuboidGrid grid;
  core::MaterialConstants constants;
  rom::TrainConfig train;
  int test_size = 15;
  int best_k = 5;
  int jobs = 1;
  int extrapolation_repeats = 2;
  int min_correlation_roms = 30;  // below this the correlation checks are skipped

  /// Throws DomainError. A kind with a nonzero count needs at least
  /// test_size + best_k signals (multi-sine and Schroeder count together).
  void validate() const;
};

/// `key = value` lines; `#` starts a comment. A relative workspace resolves
/// against `base_dir`. Unknown keys throw SchemaError.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
/// Reads a config file, then applies the TWINFORGE_WORKSPACE override.
ExperimentConfig load_config(const std::filesystem::path& path);

std::string sha256_hex(const std::string& data);

/// Run `count` independent tasks on up to `jobs` threads. Every task runs;
/// the returned vector holds an error message per failed task.
std::vector<std::optional<std::string>> run_parallel(std::size_t count, int jobs,
                                                     const std::function<void(std::size_t)>& task);

class Workspace {
 public:
  explicit Workspace(ExperimentConfig config);

  const ExperimentConfig& config() const { return config_; }
  std::filesystem::path signals_dir() const { return config_.workspace / "signals"; }
  std::filesystem::path simresults_dir() const { return config_.workspace / "simresults"; }
  std::filesystem::path models_dir() const { return config_.workspace / "models"; }
  std::filesystem::path eval_dir() const { return config_.workspace / "eval"; }
  std::filesystem::path report_dir() const { return config_.workspace / "report"; }

  /// Timestamped line to report/log.txt and stderr.
  void log(const std::string& line) const;

  std::vector<std::string> signal_ids() const;
  signals::Signal signal(const std::string& id) const;

  std::string cache_key(const signals::Signal& signal) const;
  std::filesystem::path result_path(const signals::Signal& signal) const;
  /// Throws IoError naming the signal when no cached result exists.
  core::SimResult result(const signals::Signal& signal) const;

  rom::RomModel model(const std::string& rom_id) const;
  std::vector<std::string> model_ids() const;

 private:
  ExperimentConfig config_;
};

std::string rom_id_for(const std::string& signal_id);
/// Reporting kind: aprbs, sinaprbs, multisine (Schroeder included), step, sine.
std::string rom_kind(signals::SignalKind kind);

void write_result(const std::filesystem::path& path, const core::SimResult& r);
core::SimResult read_result(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Stages

/// The bank in id order. Ids: ap###, sap###, ms###, sms###, step, sine.
std::vector<signals::Signal> synthesize_bank(const ExperimentConfig& config);
std::vector<std::string> cmd_synth(const Workspace& ws);

struct SimulateSummary {
  int cache_hits = 0;
  int computed = 0;
  std::vector<std::pair<std::string, std::string>> failures;  // id, message
};
/// Simulates the given signals (all when empty), skipping cache hits.
SimulateSummary cmd_simulate(const Workspace& ws, const std::vector<std::string>& ids = {});

struct TestSet {
  std::string id;  // AP15, sinAP15, MS15, Mixed (size-suffixed names)
  std::vector<std::string> signal_ids;
  std::optional<eval::Chi2Result> chi2;  // absent for the union set
  int tries = 0;
};
std::vector<TestSet> cmd_testset(const Workspace& ws);
std::vector<TestSet> load_testsets(const Workspace& ws);
const TestSet& find_testset(const std::vector<TestSet>& sets, const std::string& prefix);

/// Signals that may train ROMs: everything outside the test sets.
std::vector<std::string> training_candidates(const Workspace& ws, const std::vector<TestSet>& sets);

struct TrainSummary {
  std::string rom_id;
  std::string signal_id;
  double initial_loss;
  double final_loss;
  double train_rmse;
  int epochs_run;
};
/// Trains one ROM per signal id; existing models are kept.
std::vector<TrainSummary> cmd_train(const Workspace& ws, const std::vector<std::string>& signal_ids);

std::vector<kpis::KpiRecord> cmd_kpi(const Workspace& ws);

struct ErrorRow {
  std::string rom_id;
  std::string signal_id;
  std::optional<eval::MeasureSet> m;  // empty when the rollout diverged
};
struct Aggregate {
  std::string rom_id;
  std::string kind;
  std::string testset;
  int n = 0;
  int n_diverged = 0;
  eval::MeasureSet mean;
};
/// Evaluates models on one test set; writes eval/errors_<set>.csv and
/// eval/aggregates_<set>.csv.
std::vector<ErrorRow> cmd_eval(const Workspace& ws, const std::vector<std::string>& rom_ids,
                               const TestSet& set);
std::vector<Aggregate> aggregate_rows(const Workspace& ws, const std::vector<ErrorRow>& rows,
                                      const TestSet& set);

/// APRBS ROMs on the APRBS test set; writes eval/correlation_<set>.csv.
std::optional<eval::CorrelationTable> cmd_correlate(const Workspace& ws);

struct Check {
  std::string name;
  std::string detail;
  enum Status { Pass, Fail, Skip } status;
};

/// Every stage in order, then the report. Returns the process exit code:
/// nonzero iff an acceptance check in the report fails.
int cmd_pipeline(const Workspace& ws);

}  // namespace twinforge::pipeline
