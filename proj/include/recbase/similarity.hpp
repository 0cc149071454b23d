#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "recbase/exec.hpp"
#include "recbase/sparse.hpp"

namespace recbase {

enum class Weighting { none, tfidf, bm25 };

Weighting parse_weighting(std::string_view name);
std::string_view to_string(Weighting w);

struct KnnConfig {
  std::size_t k = 100;
  double shrink = 0.0;
  Weighting weighting = Weighting::none;
  bool normalize = true;
  double bm25_k1 = 1.2;
  double bm25_b = 0.75;

  /// Throws InvalidConfig when k < 1 or shrink < 0.
  void validate() const;
};

struct Neighbor {
  Index index;
  double value;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Strict ranking order: larger value first, lower index on ties.
inline bool ranks_before(const Neighbor& a, const Neighbor& b) {
  return a.value != b.value ? a.value > b.value : a.index < b.index;
}

/// Keeps the k best candidates by `ranks_before` and returns them sorted by
/// ascending index.
std::vector<Neighbor> select_topk(std::vector<Neighbor> candidates, std::size_t k);

/// Sparse n x n weight table. Row t lists the (source, weight) pairs that
/// feed the score of target t; rows are sorted by source index.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  explicit SimilarityMatrix(std::vector<std::vector<Neighbor>> rows);

  std::size_t n() const noexcept { return offsets_.size() - 1; }
  std::size_t nnz() const noexcept { return entries_.size(); }
  std::span<const Neighbor> row(Index target) const;

  /// Weight of source -> target, 0 when absent.
  double at(Index target, Index source) const;

  /// Same weights indexed by source: row s lists (target, weight).
  SimilarityMatrix transposed() const;

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<Neighbor> entries_;
};

/// Rows are documents, columns are terms. value * log(n_docs / df).
/// Terms present in every document get weight 0 and vanish.
SparseMatrix apply_tfidf(const SparseMatrix& m);

/// Okapi BM25 with idf = log((n_docs - df + 0.5) / (df + 0.5) + 1) and
/// document length = number of entries in the row.
SparseMatrix apply_bm25(const SparseMatrix& m, double k1 = 1.2, double b = 0.75);

/// Weights the columns of `m` as documents (so each compared vector is a
/// document over the row dimension) according to cfg.weighting.
SparseMatrix weight_columns(const SparseMatrix& m, const KnnConfig& cfg);

/// Shrunk cosine similarity between the columns of `m`:
///   s_ij = (c_i . c_j) / (|c_i| |c_j| + shrink)  when normalize
///   s_ij = c_i . c_j                            otherwise
/// keeping, per target column, the k largest values (self excluded).
SimilarityMatrix cosine_topk(const SparseMatrix& m, const KnnConfig& cfg,
                             Exec exec = Exec::parallel);

}  // namespace recbase
