#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "recbase/evaluation.hpp"
#include "recbase/hpo.hpp"
#include "recbase/params.hpp"
#include "recbase/recommenders.hpp"
#include "recbase/sparse.hpp"

namespace recbase {

inline constexpr int kSchemaVersion = 1;

/// Zero-based field positions within a delimited row.
struct ColumnMap {
  std::size_t user = 0;
  std::size_t item = 1;
  std::optional<std::size_t> rating = 2;
  std::optional<std::size_t> timestamp;
};

struct FeatureFileSpec {
  std::string path;
  std::string delimiter = "\t";
  bool header = false;
  /// item, feature and optional weight columns.
  std::size_t item_column = 0;
  std::size_t feature_column = 1;
  std::optional<std::size_t> weight_column;
};

/// Published split files read verbatim. `negatives` uses the
/// "(user,item)<TAB>neg<TAB>neg..." layout.
struct SplitImportSpec {
  std::string train;
  std::string test;
  std::optional<std::string> negatives;
};

struct DatasetSpec {
  std::string path;
  std::string delimiter = "\t";
  bool header = false;
  ColumnMap columns;
  std::optional<double> binarize_threshold;
  DuplicatePolicy duplicates = DuplicatePolicy::keep_last;
  std::optional<FeatureFileSpec> features;
  std::optional<SplitImportSpec> split_import;
};

struct SplitConfig {
  SplitSpec spec;
  std::uint64_t seed = 0;
};

struct ProtocolConfig {
  bool sampled = false;
  std::size_t negatives = 0;
  std::uint64_t seed = 0;
};

struct TuneBlock {
  std::size_t n_trials = 35;
  std::size_t n_init = 5;
  Metric metric = Metric::precision;
  std::size_t cutoff = 10;
  SearchMode mode = SearchMode::smbo;
  std::uint64_t seed = 0;
  std::vector<Dimension> space_overrides;
  Configuration fixed;
};

struct AlgorithmConfig {
  std::string name;
  ModelKind kind = ModelKind::toppop;
  Configuration params;
  std::optional<TuneBlock> tune;
};

struct AuditConfig {
  bool enabled = true;
  std::size_t resamples = 100;
  double threshold = 4.0;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 0;
  DatasetSpec dataset;
  SplitConfig split;
  ProtocolConfig protocol;
  std::vector<std::size_t> cutoffs;
  std::vector<Metric> metrics;
  std::vector<AlgorithmConfig> algorithms;
  AuditConfig audit;
  std::string output;
  int threads = 0;
  /// Directory that relative input paths resolve against.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& path) const;
  const AlgorithmConfig& algorithm(const std::string& name) const;
};

/// Parses and validates a config document. Unknown keys are errors.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);

/// Reads a JSON config file; relative paths resolve against its directory.
/// `seed_override` replaces the global seed before derived seeds are set.
ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<std::uint64_t> seed_override = std::nullopt);

/// Canonical form with every default made explicit. Output location and
/// thread count are left out so they do not change the hash.
nlohmann::json canonical_json(const ExperimentConfig& cfg);

/// 64-bit FNV-1a of the canonical form, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

std::string fnv1a_hex(std::string_view bytes);

}  // namespace recbase
