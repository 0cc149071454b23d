#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "recbase/exec.hpp"
#include "recbase/recommenders.hpp"
#include "recbase/sparse.hpp"

namespace recbase {

enum class SplitMethod { holdout, leave_one_out };
enum class LeaveOneOutMode { last_by_timestamp, random_one };

struct SplitSpec {
  SplitMethod method = SplitMethod::holdout;
  double ratio = 0.8;
  /// Holdout only: exact-count shuffle instead of per-interaction Bernoulli.
  bool exact_count = false;
  LeaveOneOutMode mode = LeaveOneOutMode::random_one;
};

struct SplitPair {
  InteractionMatrix train;
  InteractionMatrix test;
  std::uint64_t seed = 0;
  SplitSpec spec;
};

/// Each interaction goes to train with probability `ratio` (or, with
/// exact_count, the first round(ratio * nnz) of a seeded shuffle).
SplitPair split_random_holdout(const InteractionMatrix& m, double ratio, std::uint64_t seed,
                               bool exact_count = false);

/// One test interaction per user with at least two interactions.
SplitPair split_leave_one_out(const InteractionMatrix& m, LeaveOneOutMode mode, std::uint64_t seed);

/// Re-runs the method recorded in `spec` on `m`.
SplitPair resplit(const InteractionMatrix& m, const SplitSpec& spec, std::uint64_t seed);

/// Per-user candidate negatives for the sampled ranking protocol.
struct NegativeSampleSet {
  std::uint64_t seed = 0;
  std::size_t per_positive = 0;
  /// Indexed by user; empty for users without test data.
  std::vector<std::vector<Index>> negatives;
  /// Users whose eligible pool was smaller than requested.
  std::size_t exhausted_users = 0;
};

/// Samples, per test user, `n` negatives per test positive uniformly without
/// replacement from the items the user never interacted with.
NegativeSampleSet sample_negatives(const SplitPair& split, std::size_t n, std::uint64_t seed);

enum class Metric { precision, recall, hit_rate, ndcg, map, mrr };

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view name);

/// Canonical column label, e.g. "NDCG@10".
std::string metric_label(Metric m, std::size_t cutoff);

using MetricKey = std::pair<Metric, std::size_t>;
using MetricValues = std::map<MetricKey, double>;

/// Metrics of one ranked list against a non-empty relevant set, binary gains.
MetricValues compute_metrics(std::span<const Index> ranked, std::span<const Index> relevant,
                             std::span<const std::size_t> cutoffs);

struct MetricTable {
  MetricValues values;
  std::size_t evaluated_users = 0;
  std::size_t skipped_users = 0;

  double at(Metric m, std::size_t cutoff) const;
};

/// Averages per-user metrics over users with test data. The candidate set is
/// the catalog minus the user's training items, or the test positives plus
/// the sampled negatives when `negatives` is given.
MetricTable evaluate_model(const TrainedModel& model, const SplitPair& split,
                           const NegativeSampleSet* negatives, std::span<const std::size_t> cutoffs,
                           Exec exec = Exec::parallel);

/// Same, but against an explicit test matrix (train taken from the model).
MetricTable evaluate_model(const TrainedModel& model, const InteractionMatrix& test,
                           const NegativeSampleSet* negatives, std::span<const std::size_t> cutoffs,
                           Exec exec = Exec::parallel);

/// Fixed-precision rendering used in every metric file.
std::string format_metric(double v);

/// Rows are algorithms, columns metric@cutoff in the order of `metrics`.
void write_metrics_csv(std::ostream& out, const std::vector<std::pair<std::string, MetricTable>>& rows,
                       std::span<const Metric> metrics, std::span<const std::size_t> cutoffs,
                       const std::vector<std::string>& header_comments = {});

nlohmann::json metrics_to_json(const std::vector<std::pair<std::string, MetricTable>>& rows);

}  // namespace recbase
