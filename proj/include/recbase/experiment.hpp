#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "recbase/config.hpp"
#include "recbase/dataset.hpp"
#include "recbase/diagnostics.hpp"
#include "recbase/evaluation.hpp"
#include "recbase/hpo.hpp"

namespace recbase {

std::string_view version();

/// Held-out interactions guarded until the evaluation stage opens them.
/// Every read is logged with the stage that made it.
class SealedTest {
 public:
  explicit SealedTest(InteractionMatrix test) : test_(std::move(test)) {}

  void open(std::string_view stage);
  bool is_open() const noexcept { return open_; }
  /// Throws TestIsolationViolation while sealed.
  const InteractionMatrix& read(std::string_view stage);
  const std::vector<std::string>& access_log() const noexcept { return log_; }

 private:
  InteractionMatrix test_;
  bool open_ = false;
  std::vector<std::string> log_;
};

struct RunOptions {
  Exec exec = Exec::parallel;
  bool write_files = true;
  /// Restricts the run to one algorithm.
  std::optional<std::string> only_algorithm;
  /// Stop after hyper-parameter search (no test evaluation, no audit).
  bool tune_only = false;
  /// Fixed parameters replacing the config's params or tune block.
  std::optional<Configuration> params_override;
  /// Replays matching study logs found in the output directory.
  bool resume = false;
  std::function<void(const std::string&)> log;
  /// Called after each stage with the guarded test set.
  std::function<void(std::string_view stage, SealedTest& test)> stage_hook;
};

struct AlgorithmResult {
  std::string name;
  ModelKind kind = ModelKind::toppop;
  Configuration params;
  std::optional<MetricTable> metrics;
  std::optional<StudyResult> study;
};

struct ResultBundle {
  std::string config_hash;
  std::string version;
  ParseStats stats;
  std::size_t train_interactions = 0;
  std::size_t test_interactions = 0;
  std::vector<AlgorithmResult> algorithms;
  std::optional<SplitAuditReport> audit;
  std::optional<PopularityProfile> profile;
  std::vector<std::string> test_accesses;
  std::filesystem::path output_dir;
  std::vector<std::string> files;
};

/// Output directory: the config's `output` (relative values resolve against
/// RECBASE_OUTPUT_ROOT when set), else RECBASE_OUTPUT_ROOT or ./results
/// joined with the config hash.
std::filesystem::path output_directory(const ExperimentConfig& cfg);

/// Outer split of the loaded data as configured (or as imported).
SplitPair make_split(const ExperimentConfig& cfg, const LoadedDataset& data);

/// Validation split carved from `train` for tuning: leave-one-out when the
/// outer split is leave-one-out, otherwise an 80/20 holdout.
SplitPair inner_split(const SplitPair& outer, std::uint64_t seed);

/// load -> split -> tune -> refit -> evaluate -> audit -> persist. Stage
/// failures are raised as StageError naming the stage.
ResultBundle run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

/// Writes train/test (and negatives under the sampled protocol) as
/// delimited files with the original ids; returns the file names.
std::vector<std::string> write_split_files(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                                           const RunOptions& options = {});

}  // namespace recbase
