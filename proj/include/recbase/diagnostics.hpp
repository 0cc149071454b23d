#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "recbase/evaluation.hpp"
#include "recbase/exec.hpp"
#include "recbase/recommenders.hpp"

namespace recbase {

/// G = sum_i (2i - n - 1) x_(i) / (n sum x) over ascending x; in [0, (n-1)/n].
double gini_index(std::span<const double> counts);

/// Shannon entropy in bits of the normalized counts.
double shannon_entropy(std::span<const double> counts);

struct ItemPopularity {
  Index item;
  std::size_t train_count;
  std::size_t test_count;
  double train_norm;
  double test_norm;
};

/// One row per item, ordered by descending train count (lower index first
/// on ties); each side normalized by its own maximum.
struct PopularityProfile {
  std::vector<ItemPopularity> items;
};

PopularityProfile popularity_profile(const SplitPair& split);

/// Mean |train_norm - test_norm| over items.
double profile_divergence(const PopularityProfile& p);

/// `item,train_norm,test_norm` rows; item ids taken from `item_ids` when
/// given, otherwise the index.
void write_profile_csv(std::ostream& out, const PopularityProfile& p,
                       const std::vector<std::string>* item_ids = nullptr,
                       const std::vector<std::string>& header_comments = {});

enum class Verdict { plausible, anomalous };

struct SplitAuditReport {
  double gini_train = 0.0;
  double gini_test = 0.0;
  double entropy_train = 0.0;
  double entropy_test = 0.0;
  std::size_t resamples = 0;
  std::uint64_t seed = 0;
  double reference_mean = 0.0;
  double reference_sd = 0.0;
  /// Quantiles 0.01, 0.05, 0.5, 0.95, 0.99 of the resampled test Gini.
  std::vector<double> reference_quantiles;
  double z_score = 0.0;
  double threshold = 4.0;
  Verdict verdict = Verdict::plausible;
};

/// Pools train and test, re-splits `resamples` times with the split's own
/// method and test share, and z-scores the observed test Gini against the
/// resampled distribution. Item counts include zero-count items.
SplitAuditReport audit_split(const SplitPair& split, std::size_t resamples, std::uint64_t seed,
                             double threshold = 4.0, Exec exec = Exec::parallel);

nlohmann::json to_json(const SplitAuditReport& r);

struct PopularityBias {
  double mean_popularity;
  std::optional<double> ratio;
};

/// Average over lists of the mean training degree of the listed items.
double mean_list_popularity(const std::vector<std::vector<Index>>& lists,
                            std::span<const std::size_t> item_degrees);

/// Mean training popularity of each model's top-`cutoff` lists (seen items
/// excluded), optionally relative to a baseline model.
PopularityBias mean_recommended_popularity(const TrainedModel& model, std::span<const Index> users,
                                           std::size_t cutoff, const TrainedModel* baseline = nullptr);

}  // namespace recbase
