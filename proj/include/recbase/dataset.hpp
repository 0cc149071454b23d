#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "recbase/config.hpp"
#include "recbase/evaluation.hpp"
#include "recbase/sparse.hpp"

namespace recbase {

struct ParseStats {
  std::size_t rows_read = 0;
  /// Rows whose rating fell below the binarization threshold.
  std::size_t rows_dropped = 0;
  /// Repeated (user, item) pairs merged by the duplicate policy.
  std::size_t duplicates = 0;
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t interactions = 0;
};

/// Splits on a literal, possibly multi-character, delimiter.
std::vector<std::string_view> split_fields(std::string_view line, std::string_view delimiter);

/// Appends the rows of a delimited interaction file to `out`; `source` names
/// the input in error messages. A missing rating column means value 1.
/// Blank lines and lines starting with '#' are skipped.
void read_triples(std::istream& in, const std::string& source, std::string_view delimiter, bool header,
                  const ColumnMap& columns, RatingTriples& out, ParseStats* stats = nullptr);

/// Item x feature matrix over the items already in `items`; rows for unknown
/// items are ignored and feature ids are interned into `features`.
FeatureMatrix read_features(std::istream& in, const std::string& source, const FeatureFileSpec& spec,
                            const IdMap& items, IdMap& features);

struct LoadedDataset {
  IdMap users;
  IdMap items;
  std::shared_ptr<const InteractionMatrix> urm;
  std::optional<FeatureMatrix> icm;
  ParseStats stats;
  /// Present when the dataset came as published split files.
  std::optional<SplitPair> imported_split;
  std::optional<NegativeSampleSet> imported_negatives;
};

/// Loads interactions (or imported split files) and the optional feature
/// file named by `spec`, resolving relative paths through `cfg`.
LoadedDataset load_dataset(const ExperimentConfig& cfg);

/// Reads two interaction files over shared id dictionaries, as used by the
/// audit and profile commands.
struct TriplePair {
  IdMap users;
  IdMap items;
  SplitPair split;
};
TriplePair read_split_files(const std::string& train_path, const std::string& test_path,
                            std::string_view delimiter = "\t", const ColumnMap& columns = {});

/// Writes "user<delim>item<delim>value[<delim>timestamp]" rows with the
/// original ids.
void write_triples(std::ostream& out, const InteractionMatrix& m, const IdMap& users, const IdMap& items,
                   std::string_view delimiter = "\t");

/// Writes the "(user,item)<TAB>neg..." negatives layout, one line per test
/// positive.
void write_negatives(std::ostream& out, const InteractionMatrix& test, const NegativeSampleSet& negatives,
                     const IdMap& users, const IdMap& items);

}  // namespace recbase
