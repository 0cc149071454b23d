#include <cmath>

#include "recbase/recommenders.hpp"

namespace recbase {

namespace {

// Transition probabilities aligned with the matrix storage:
//   forward[p]  = (r_vj / N_v)^alpha for CSR entry p = (v, j)   user -> item
//   backward[p] = (r_vj / N_j)^alpha for CSR entry p = (v, j)   item -> user
//   into[q]     = (r_vi / N_v)^alpha for CSC entry q = (v, i)   user -> item
struct Transitions {
  std::vector<double> backward;
  std::vector<double> into;
};

Transitions transitions(const InteractionMatrix& urm, double alpha) {
  const auto user_deg = degree_vector(urm, Axis::users);
  const auto item_deg = degree_vector(urm, Axis::items);
  Transitions t;
  t.backward.reserve(urm.nnz());
  for (Index v = 0; v < urm.n_rows(); ++v) {
    const auto items = urm.row_indices(v);
    const auto values = urm.row_values(v);
    for (std::size_t p = 0; p < items.size(); ++p) {
      t.backward.push_back(std::pow(values[p] / static_cast<double>(item_deg[items[p]]), alpha));
    }
  }
  t.into.reserve(urm.nnz());
  for (Index i = 0; i < urm.n_cols(); ++i) {
    const auto users = urm.col_indices(i);
    const auto values = urm.col_values(i);
    for (std::size_t q = 0; q < users.size(); ++q) {
      t.into.push_back(std::pow(values[q] / static_cast<double>(user_deg[users[q]]), alpha));
    }
  }
  return t;
}

}  // namespace

SimilarityMatrix p3_similarity(const InteractionMatrix& urm, const GraphConfig& cfg, bool rp3,
                               Exec exec) {
  cfg.validate();
  const Transitions t = transitions(urm, cfg.alpha);

  // Offsets of each row / column in the flattened transition arrays.
  std::vector<std::size_t> row_start(urm.n_rows() + 1, 0);
  for (Index v = 0; v < urm.n_rows(); ++v) row_start[v + 1] = row_start[v] + urm.row_size(v);
  std::vector<std::size_t> col_start(urm.n_cols() + 1, 0);
  for (Index i = 0; i < urm.n_cols(); ++i) col_start[i + 1] = col_start[i] + urm.col_size(i);

  std::vector<double> popularity_penalty;
  if (rp3) {
    const auto item_deg = degree_vector(urm, Axis::items);
    popularity_penalty.resize(urm.n_cols());
    for (Index i = 0; i < urm.n_cols(); ++i) {
      popularity_penalty[i] = std::pow(static_cast<double>(item_deg[i]), cfg.beta);
    }
  }
  const bool penalize_destination = rp3 && cfg.penalty != PopularityPenalty::source;
  const bool penalize_source = rp3 && cfg.penalty != PopularityPenalty::destination;

  const auto row_for = [&](Index target, DotAccumulator& acc) {
    const auto users = urm.col_indices(target);
    for (std::size_t q = 0; q < users.size(); ++q) {
      const Index v = users[q];
      const double p_vi = t.into[col_start[target] + q];
      const auto items = urm.row_indices(v);
      for (std::size_t p = 0; p < items.size(); ++p) {
        acc.add(items[p], t.backward[row_start[v] + p] * p_vi);
      }
    }
    std::vector<Neighbor> candidates;
    candidates.reserve(acc.touched().size());
    for (Index j : acc.touched()) {
      if (j == target) continue;
      double s = acc.value(j);
      if (penalize_destination) s /= popularity_penalty[target];
      if (penalize_source) s /= popularity_penalty[j];
      if (s != 0.0 && std::isfinite(s)) candidates.push_back({j, s});
    }
    acc.clear();
    return select_topk(std::move(candidates), cfg.k);
  };

  const auto n = static_cast<std::int64_t>(urm.n_cols());
  std::vector<std::vector<Neighbor>> rows(urm.n_cols());
  if (exec == Exec::serial) {
    DotAccumulator acc(urm.n_cols());
    for (std::int64_t i = 0; i < n; ++i) rows[i] = row_for(static_cast<Index>(i), acc);
  } else {
#pragma omp parallel
    {
      DotAccumulator acc(urm.n_cols());
#pragma omp for schedule(dynamic, 32)
      for (std::int64_t i = 0; i < n; ++i) rows[i] = row_for(static_cast<Index>(i), acc);
    }
  }
  return SimilarityMatrix(std::move(rows));
}

}  // namespace recbase
