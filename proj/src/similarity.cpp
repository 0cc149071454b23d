#include "recbase/similarity.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "recbase/errors.hpp"

namespace recbase {

void set_num_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int num_threads() { return omp_get_max_threads(); }

Weighting parse_weighting(std::string_view name) {
  if (name == "none") return Weighting::none;
  if (name == "tfidf") return Weighting::tfidf;
  if (name == "bm25") return Weighting::bm25;
  throw InvalidConfig("unknown weighting '" + std::string(name) + "'");
}

std::string_view to_string(Weighting w) {
  switch (w) {
    case Weighting::none:
      return "none";
    case Weighting::tfidf:
      return "tfidf";
    case Weighting::bm25:
      return "bm25";
  }
  return "none";
}

void KnnConfig::validate() const {
  if (k < 1) throw InvalidConfig("neighborhood size k must be >= 1");
  if (!(shrink >= 0.0) || !std::isfinite(shrink)) throw InvalidConfig("shrink must be >= 0");
  if (!(bm25_k1 >= 0.0) || !(bm25_b >= 0.0 && bm25_b <= 1.0)) {
    throw InvalidConfig("bm25 parameters out of range");
  }
}

std::vector<Neighbor> select_topk(std::vector<Neighbor> candidates, std::size_t k) {
  if (candidates.size() > k) {
    std::nth_element(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                     candidates.end(), ranks_before);
    candidates.resize(k);
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Neighbor& a, const Neighbor& b) { return a.index < b.index; });
  return candidates;
}

SimilarityMatrix::SimilarityMatrix(std::vector<std::vector<Neighbor>> rows) {
  offsets_.assign(rows.size() + 1, 0);
  for (std::size_t t = 0; t < rows.size(); ++t) offsets_[t + 1] = offsets_[t] + rows[t].size();
  entries_.reserve(offsets_.back());
  for (auto& r : rows) {
    std::sort(r.begin(), r.end(), [](const Neighbor& a, const Neighbor& b) { return a.index < b.index; });
    entries_.insert(entries_.end(), r.begin(), r.end());
  }
}

std::span<const Neighbor> SimilarityMatrix::row(Index target) const {
  if (target >= n()) throw IndexOutOfRange("similarity row " + std::to_string(target));
  return {entries_.data() + offsets_[target], offsets_[target + 1] - offsets_[target]};
}

double SimilarityMatrix::at(Index target, Index source) const {
  const auto r = row(target);
  const auto it = std::lower_bound(r.begin(), r.end(), source,
                                   [](const Neighbor& n, Index s) { return n.index < s; });
  return it != r.end() && it->index == source ? it->value : 0.0;
}

SimilarityMatrix SimilarityMatrix::transposed() const {
  std::vector<std::vector<Neighbor>> rows(n());
  for (Index t = 0; t < n(); ++t) {
    for (const auto& nb : row(t)) rows[nb.index].push_back({t, nb.value});
  }
  return SimilarityMatrix(std::move(rows));
}

SparseMatrix apply_tfidf(const SparseMatrix& m) {
  const double n_docs = static_cast<double>(m.n_rows());
  std::vector<double> idf(m.n_cols());
  for (Index t = 0; t < m.n_cols(); ++t) {
    const auto df = m.col_size(t);
    idf[t] = df == 0 ? 0.0 : std::log(n_docs / static_cast<double>(df));
  }
  return m.map_values([&](Index, Index t, double v) { return v * idf[t]; });
}

SparseMatrix apply_bm25(const SparseMatrix& m, double k1, double b) {
  const double n_docs = static_cast<double>(m.n_rows());
  const double avg_len = n_docs > 0 ? static_cast<double>(m.nnz()) / n_docs : 0.0;
  std::vector<double> idf(m.n_cols());
  for (Index t = 0; t < m.n_cols(); ++t) {
    const double df = static_cast<double>(m.col_size(t));
    idf[t] = std::log((n_docs - df + 0.5) / (df + 0.5) + 1.0);
  }
  return m.map_values([&](Index d, Index t, double v) {
    const double len = static_cast<double>(m.row_size(d));
    const double norm = avg_len > 0 ? len / avg_len : 0.0;
    return idf[t] * v * (k1 + 1.0) / (v + k1 * (1.0 - b + b * norm));
  });
}

SparseMatrix weight_columns(const SparseMatrix& m, const KnnConfig& cfg) {
  switch (cfg.weighting) {
    case Weighting::none:
      return m;
    case Weighting::tfidf:
      return apply_tfidf(m.transposed()).transposed();
    case Weighting::bm25:
      return apply_bm25(m.transposed(), cfg.bm25_k1, cfg.bm25_b).transposed();
  }
  return m;
}

namespace {

std::vector<double> column_norms(const SparseMatrix& m) {
  std::vector<double> norms(m.n_cols());
  for (Index c = 0; c < m.n_cols(); ++c) {
    double sq = 0.0;
    for (double v : m.col_values(c)) sq += v * v;
    norms[c] = std::sqrt(sq);
  }
  return norms;
}

std::vector<Neighbor> cosine_row(const SparseMatrix& m, const std::vector<double>& norms,
                                 const KnnConfig& cfg, Index target, DotAccumulator& acc) {
  acc.column_products(m, target);
  std::vector<Neighbor> candidates;
  candidates.reserve(acc.touched().size());
  for (Index j : acc.touched()) {
    if (j == target) continue;
    const double dot = acc.value(j);
    if (dot == 0.0) continue;
    const double s = cfg.normalize ? dot / (norms[target] * norms[j] + cfg.shrink) : dot;
    if (s != 0.0 && std::isfinite(s)) candidates.push_back({j, s});
  }
  acc.clear();
  return select_topk(std::move(candidates), cfg.k);
}

}  // namespace

SimilarityMatrix cosine_topk(const SparseMatrix& input, const KnnConfig& cfg, Exec exec) {
  cfg.validate();
  const SparseMatrix m = weight_columns(input, cfg);
  const auto norms = column_norms(m);
  const auto n = static_cast<std::int64_t>(m.n_cols());
  std::vector<std::vector<Neighbor>> rows(m.n_cols());

  if (exec == Exec::serial) {
    DotAccumulator acc(m.n_cols());
    for (std::int64_t i = 0; i < n; ++i) {
      rows[i] = cosine_row(m, norms, cfg, static_cast<Index>(i), acc);
    }
  } else {
#pragma omp parallel
    {
      DotAccumulator acc(m.n_cols());
#pragma omp for schedule(dynamic, 32)
      for (std::int64_t i = 0; i < n; ++i) {
        rows[i] = cosine_row(m, norms, cfg, static_cast<Index>(i), acc);
      }
    }
  }
  return SimilarityMatrix(std::move(rows));
}

}  // namespace recbase
