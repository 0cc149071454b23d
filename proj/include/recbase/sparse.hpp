#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace recbase {

using Index = std::uint32_t;

struct Triplet {
  Index row;
  Index col;
  double value;
};

/// Immutable sparse matrix holding both a row-major (CSR) and a column-major
/// (CSC) copy of the same entries. Stored values are strictly positive and
/// finite; coordinates are unique. Optional per-entry timestamps follow the
/// CSR order.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t n_rows, std::size_t n_cols) : SparseMatrix(from_triplets(n_rows, n_cols, {})) {}

  /// Zero values are dropped; negative or non-finite values and duplicate
  /// coordinates are rejected. `timestamps`, when non-empty, is parallel to
  /// `entries`.
  static SparseMatrix from_triplets(std::size_t n_rows, std::size_t n_cols,
                                    std::vector<Triplet> entries,
                                    std::vector<std::int64_t> timestamps = {});

  std::size_t n_rows() const noexcept { return n_rows_; }
  std::size_t n_cols() const noexcept { return n_cols_; }
  std::size_t nnz() const noexcept { return row_cols_.size(); }
  bool has_timestamps() const noexcept { return !row_times_.empty(); }

  std::span<const Index> row_indices(Index r) const;
  std::span<const double> row_values(Index r) const;
  std::span<const std::int64_t> row_timestamps(Index r) const;
  std::span<const Index> col_indices(Index c) const;
  std::span<const double> col_values(Index c) const;

  std::size_t row_size(Index r) const { return row_ptr_[r + 1] - row_ptr_[r]; }
  std::size_t col_size(Index c) const { return col_ptr_[c + 1] - col_ptr_[c]; }

  /// Value at (r, c), 0 when structurally absent.
  double at(Index r, Index c) const;
  bool contains(Index r, Index c) const { return at(r, c) != 0.0; }

  /// Entries in row-major order.
  std::vector<Triplet> triplets() const;
  std::vector<std::int64_t> timestamps() const { return row_times_; }

  SparseMatrix transposed() const;

  /// Applies `f(row, col, value)` to every entry; results equal to zero are
  /// dropped. Timestamps are kept.
  template <typename F>
  SparseMatrix map_values(F&& f) const {
    auto entries = triplets();
    for (auto& t : entries) t.value = f(t.row, t.col, t.value);
    return from_triplets(n_rows_, n_cols_, std::move(entries), row_times_);
  }

  bool same_entries(const SparseMatrix& other) const;

 private:
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<Index> row_cols_;
  std::vector<double> row_vals_;
  std::vector<std::int64_t> row_times_;
  std::vector<std::size_t> col_ptr_{0};
  std::vector<Index> col_rows_;
  std::vector<double> col_vals_;
};

/// Users x items feedback values.
using InteractionMatrix = SparseMatrix;
/// Items x features content values.
using FeatureMatrix = SparseMatrix;

/// Stacks `top` over `bottom`; both must have the same column count.
SparseMatrix vstack(const SparseMatrix& top, const SparseMatrix& bottom);

/// Union of two matrices with disjoint supports and equal shapes.
SparseMatrix merge_disjoint(const SparseMatrix& a, const SparseMatrix& b);

/// Bidirectional id <-> index dictionary; indices follow first appearance.
class IdMap {
 public:
  Index intern(std::string_view id);
  std::optional<Index> find(std::string_view id) const;
  const std::string& id(Index index) const { return ids_.at(index); }
  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

 private:
  std::unordered_map<std::string, Index> index_;
  std::vector<std::string> ids_;
};

struct Rating {
  Index user;
  Index item;
  double value;
  std::optional<std::int64_t> timestamp;
};

/// Parsed feedback events in input order plus the id dictionaries.
struct RatingTriples {
  std::vector<Rating> ratings;
  IdMap users;
  IdMap items;

  void add(std::string_view user, std::string_view item, double value,
           std::optional<std::int64_t> timestamp = std::nullopt) {
    ratings.push_back({users.intern(user), items.intern(item), value, timestamp});
  }
  bool empty() const noexcept { return ratings.empty(); }
};

enum class DuplicatePolicy { keep_last, keep_max, sum };

DuplicatePolicy parse_duplicate_policy(std::string_view name);

/// Builds the users x items matrix sized by the dictionaries. Duplicates are
/// resolved before thresholding; with a threshold, values >= threshold
/// become 1 and the rest are dropped. Timestamps are kept when every rating
/// carries one.
InteractionMatrix build_interaction_matrix(const RatingTriples& triples,
                                           std::optional<double> binarize_threshold = std::nullopt,
                                           DuplicatePolicy policy = DuplicatePolicy::keep_last);

/// Inverse of build_interaction_matrix for duplicate-free data.
RatingTriples export_triples(const InteractionMatrix& m, const IdMap& users, const IdMap& items);

enum class Axis { users, items };

/// Entry counts per row (users) or per column (items).
std::vector<std::size_t> degree_vector(const SparseMatrix& m, Axis axis);

/// Dot products of column `target` with every column sharing at least one
/// row, including `target` itself, in ascending column order.
std::vector<std::pair<Index, double>> sparse_dot_products(const SparseMatrix& m, Index target);

/// Reusable dense accumulator for repeated sparse column products.
class DotAccumulator {
 public:
  explicit DotAccumulator(std::size_t n) : acc_(n, 0.0), seen_(n, 0) {}

  void add(Index j, double v) {
    if (!seen_[j]) {
      seen_[j] = 1;
      touched_.push_back(j);
    }
    acc_[j] += v;
  }

  /// Column products of `target` against all columns of `m` (m as CSC).
  void column_products(const SparseMatrix& m, Index target);

  std::span<const Index> touched() const { return touched_; }
  double value(Index j) const { return acc_[j]; }
  void sort_touched();
  void clear();

 private:
  std::vector<double> acc_;
  std::vector<unsigned char> seen_;
  std::vector<Index> touched_;
};

}  // namespace recbase
