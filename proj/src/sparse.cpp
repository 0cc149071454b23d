#include "recbase/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "recbase/errors.hpp"

namespace recbase {

SparseMatrix SparseMatrix::from_triplets(std::size_t n_rows, std::size_t n_cols,
                                         std::vector<Triplet> entries,
                                         std::vector<std::int64_t> timestamps) {
  const bool with_times = !timestamps.empty();
  if (with_times && timestamps.size() != entries.size()) {
    throw DimensionMismatch("timestamps must be parallel to entries");
  }

  std::vector<std::size_t> order;
  order.reserve(entries.size());
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const auto& t = entries[e];
    if (t.row >= n_rows || t.col >= n_cols) {
      throw IndexOutOfRange("entry (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                            ") outside " + std::to_string(n_rows) + "x" + std::to_string(n_cols));
    }
    if (!std::isfinite(t.value) || t.value < 0.0) {
      throw InvalidValue("sparse values must be finite and non-negative");
    }
    if (t.value > 0.0) order.push_back(e);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = entries[a];
    const auto& y = entries[b];
    return x.row != y.row ? x.row < y.row : x.col < y.col;
  });

  SparseMatrix m;
  m.n_rows_ = n_rows;
  m.n_cols_ = n_cols;
  m.row_ptr_.assign(n_rows + 1, 0);
  m.row_cols_.reserve(order.size());
  m.row_vals_.reserve(order.size());
  if (with_times) m.row_times_.reserve(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& t = entries[order[k]];
    if (k > 0) {
      const auto& p = entries[order[k - 1]];
      if (p.row == t.row && p.col == t.col) {
        throw DuplicateEntry("duplicate coordinate (" + std::to_string(t.row) + ", " +
                             std::to_string(t.col) + ")");
      }
    }
    ++m.row_ptr_[t.row + 1];
    m.row_cols_.push_back(t.col);
    m.row_vals_.push_back(t.value);
    if (with_times) m.row_times_.push_back(timestamps[order[k]]);
  }
  std::partial_sum(m.row_ptr_.begin(), m.row_ptr_.end(), m.row_ptr_.begin());

  // Counting sort into CSC keeps row indices ascending within each column.
  m.col_ptr_.assign(n_cols + 1, 0);
  for (Index c : m.row_cols_) ++m.col_ptr_[c + 1];
  std::partial_sum(m.col_ptr_.begin(), m.col_ptr_.end(), m.col_ptr_.begin());
  m.col_rows_.resize(m.row_cols_.size());
  m.col_vals_.resize(m.row_cols_.size());
  std::vector<std::size_t> fill(m.col_ptr_.begin(), m.col_ptr_.end() - 1);
  for (Index r = 0; r < n_rows; ++r) {
    for (std::size_t p = m.row_ptr_[r]; p < m.row_ptr_[r + 1]; ++p) {
      const std::size_t dst = fill[m.row_cols_[p]]++;
      m.col_rows_[dst] = r;
      m.col_vals_[dst] = m.row_vals_[p];
    }
  }
  return m;
}

std::span<const Index> SparseMatrix::row_indices(Index r) const {
  if (r >= n_rows_) throw IndexOutOfRange("row " + std::to_string(r));
  return {row_cols_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
}

std::span<const double> SparseMatrix::row_values(Index r) const {
  if (r >= n_rows_) throw IndexOutOfRange("row " + std::to_string(r));
  return {row_vals_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
}

std::span<const std::int64_t> SparseMatrix::row_timestamps(Index r) const {
  if (r >= n_rows_) throw IndexOutOfRange("row " + std::to_string(r));
  if (row_times_.empty()) return {};
  return {row_times_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
}

std::span<const Index> SparseMatrix::col_indices(Index c) const {
  if (c >= n_cols_) throw IndexOutOfRange("column " + std::to_string(c));
  return {col_rows_.data() + col_ptr_[c], col_ptr_[c + 1] - col_ptr_[c]};
}

std::span<const double> SparseMatrix::col_values(Index c) const {
  if (c >= n_cols_) throw IndexOutOfRange("column " + std::to_string(c));
  return {col_vals_.data() + col_ptr_[c], col_ptr_[c + 1] - col_ptr_[c]};
}

double SparseMatrix::at(Index r, Index c) const {
  if (c >= n_cols_) throw IndexOutOfRange("column " + std::to_string(c));
  const auto cols = row_indices(r);
  const auto it = std::lower_bound(cols.begin(), cols.end(), c);
  if (it == cols.end() || *it != c) return 0.0;
  return row_vals_[row_ptr_[r] + static_cast<std::size_t>(it - cols.begin())];
}

std::vector<Triplet> SparseMatrix::triplets() const {
  std::vector<Triplet> out;
  out.reserve(nnz());
  for (Index r = 0; r < n_rows_; ++r) {
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
      out.push_back({r, row_cols_[p], row_vals_[p]});
    }
  }
  return out;
}

SparseMatrix SparseMatrix::transposed() const {
  auto entries = triplets();
  for (auto& t : entries) std::swap(t.row, t.col);
  return from_triplets(n_cols_, n_rows_, std::move(entries), row_times_);
}

bool SparseMatrix::same_entries(const SparseMatrix& other) const {
  return n_rows_ == other.n_rows_ && n_cols_ == other.n_cols_ && row_ptr_ == other.row_ptr_ &&
         row_cols_ == other.row_cols_ && row_vals_ == other.row_vals_;
}

SparseMatrix vstack(const SparseMatrix& top, const SparseMatrix& bottom) {
  if (top.n_cols() != bottom.n_cols()) {
    throw DimensionMismatch("vstack: column counts " + std::to_string(top.n_cols()) + " and " +
                            std::to_string(bottom.n_cols()));
  }
  auto entries = top.triplets();
  const auto offset = static_cast<Index>(top.n_rows());
  for (auto t : bottom.triplets()) {
    t.row += offset;
    entries.push_back(t);
  }
  return SparseMatrix::from_triplets(top.n_rows() + bottom.n_rows(), top.n_cols(),
                                     std::move(entries));
}

SparseMatrix merge_disjoint(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.n_rows() != b.n_rows() || a.n_cols() != b.n_cols()) {
    throw DimensionMismatch("merge_disjoint: shapes differ");
  }
  auto entries = a.triplets();
  auto more = b.triplets();
  entries.insert(entries.end(), more.begin(), more.end());
  std::vector<std::int64_t> times;
  if (a.has_timestamps() && b.has_timestamps()) {
    times = a.timestamps();
    const auto tb = b.timestamps();
    times.insert(times.end(), tb.begin(), tb.end());
  }
  return SparseMatrix::from_triplets(a.n_rows(), a.n_cols(), std::move(entries), std::move(times));
}

Index IdMap::intern(std::string_view id) {
  const auto [it, inserted] = index_.try_emplace(std::string(id), static_cast<Index>(ids_.size()));
  if (inserted) ids_.emplace_back(id);
  return it->second;
}

std::optional<Index> IdMap::find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

DuplicatePolicy parse_duplicate_policy(std::string_view name) {
  if (name == "keep-last") return DuplicatePolicy::keep_last;
  if (name == "keep-max") return DuplicatePolicy::keep_max;
  if (name == "sum") return DuplicatePolicy::sum;
  throw InvalidConfig("unknown duplicate policy '" + std::string(name) +
                      "' (expected keep-last, keep-max or sum)");
}

InteractionMatrix build_interaction_matrix(const RatingTriples& triples,
                                           std::optional<double> binarize_threshold,
                                           DuplicatePolicy policy) {
  if (triples.empty()) throw EmptyDataset("no ratings to build a matrix from");
  if (binarize_threshold && !(*binarize_threshold > 0.0)) {
    throw InvalidThreshold("binarize threshold must be positive");
  }

  const bool with_times = std::all_of(triples.ratings.begin(), triples.ratings.end(),
                                      [](const Rating& r) { return r.timestamp.has_value(); });

  // Stable order by coordinate keeps input order among duplicates.
  std::vector<std::size_t> order(triples.ratings.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = triples.ratings[a];
    const auto& y = triples.ratings[b];
    return x.user != y.user ? x.user < y.user : x.item < y.item;
  });

  std::vector<Triplet> entries;
  std::vector<std::int64_t> times;
  for (std::size_t k = 0; k < order.size();) {
    const auto& first = triples.ratings[order[k]];
    double value = first.value;
    std::int64_t time = first.timestamp.value_or(0);
    std::size_t next = k + 1;
    for (; next < order.size(); ++next) {
      const auto& r = triples.ratings[order[next]];
      if (r.user != first.user || r.item != first.item) break;
      const std::int64_t t = r.timestamp.value_or(0);
      switch (policy) {
        case DuplicatePolicy::keep_last:
          value = r.value;
          time = t;
          break;
        case DuplicatePolicy::keep_max:
          if (r.value > value) {
            value = r.value;
            time = t;
          }
          break;
        case DuplicatePolicy::sum:
          value += r.value;
          time = std::max(time, t);
          break;
      }
    }
    k = next;

    if (!std::isfinite(value) || value < 0.0) {
      throw InvalidValue("ratings must be finite and non-negative");
    }
    if (binarize_threshold) {
      if (value < *binarize_threshold) continue;
      value = 1.0;
    }
    if (value == 0.0) continue;
    entries.push_back({first.user, first.item, value});
    if (with_times) times.push_back(time);
  }
  if (entries.empty()) throw EmptyDataset("no interactions survive preprocessing");
  return SparseMatrix::from_triplets(triples.users.size(), triples.items.size(), std::move(entries),
                                     std::move(times));
}

RatingTriples export_triples(const InteractionMatrix& m, const IdMap& users, const IdMap& items) {
  if (users.size() != m.n_rows() || items.size() != m.n_cols()) {
    throw DimensionMismatch("dictionaries do not match matrix shape");
  }
  RatingTriples out;
  // Re-intern in index order so the rebuilt dictionaries match.
  for (const auto& id : users.ids()) out.users.intern(id);
  for (const auto& id : items.ids()) out.items.intern(id);
  const auto times = m.timestamps();
  std::size_t e = 0;
  for (const auto& t : m.triplets()) {
    std::optional<std::int64_t> ts;
    if (!times.empty()) ts = times[e];
    out.ratings.push_back({t.row, t.col, t.value, ts});
    ++e;
  }
  return out;
}

std::vector<std::size_t> degree_vector(const SparseMatrix& m, Axis axis) {
  std::vector<std::size_t> out;
  if (axis == Axis::users) {
    out.resize(m.n_rows());
    for (Index r = 0; r < m.n_rows(); ++r) out[r] = m.row_size(r);
  } else {
    out.resize(m.n_cols());
    for (Index c = 0; c < m.n_cols(); ++c) out[c] = m.col_size(c);
  }
  return out;
}

void DotAccumulator::column_products(const SparseMatrix& m, Index target) {
  const auto rows = m.col_indices(target);
  const auto vals = m.col_values(target);
  for (std::size_t p = 0; p < rows.size(); ++p) {
    const double a = vals[p];
    const auto cols = m.row_indices(rows[p]);
    const auto cvals = m.row_values(rows[p]);
    for (std::size_t q = 0; q < cols.size(); ++q) add(cols[q], a * cvals[q]);
  }
}

void DotAccumulator::sort_touched() { std::sort(touched_.begin(), touched_.end()); }

void DotAccumulator::clear() {
  for (Index j : touched_) {
    acc_[j] = 0.0;
    seen_[j] = 0;
  }
  touched_.clear();
}

std::vector<std::pair<Index, double>> sparse_dot_products(const SparseMatrix& m, Index target) {
  if (target >= m.n_cols()) throw IndexOutOfRange("column " + std::to_string(target));
  DotAccumulator acc(m.n_cols());
  acc.column_products(m, target);
  acc.sort_touched();
  std::vector<std::pair<Index, double>> out;
  out.reserve(acc.touched().size());
  for (Index j : acc.touched()) {
    if (acc.value(j) != 0.0) out.emplace_back(j, acc.value(j));
  }
  return out;
}

}  // namespace recbase
