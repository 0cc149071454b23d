#include <algorithm>
#include <cmath>

#include "recbase/recommenders.hpp"

namespace recbase {

namespace {

// Item-item Gram matrix R^T R, column-wise, diagonal included.
struct Gram {
  std::vector<std::vector<Neighbor>> cols;
  std::vector<double> diag;
};

Gram gram(const InteractionMatrix& urm, Exec exec) {
  Gram g;
  g.cols.resize(urm.n_cols());
  g.diag.assign(urm.n_cols(), 0.0);
  const auto n = static_cast<std::int64_t>(urm.n_cols());
  const auto column = [&](Index k, DotAccumulator& acc) {
    acc.column_products(urm, k);
    acc.sort_touched();
    auto& out = g.cols[k];
    out.reserve(acc.touched().size());
    for (Index j : acc.touched()) {
      const double v = acc.value(j);
      if (v == 0.0) continue;
      out.push_back({j, v});
      if (j == k) g.diag[k] = v;
    }
    acc.clear();
  };
  if (exec == Exec::serial) {
    DotAccumulator acc(urm.n_cols());
    for (std::int64_t k = 0; k < n; ++k) column(static_cast<Index>(k), acc);
  } else {
#pragma omp parallel
    {
      DotAccumulator acc(urm.n_cols());
#pragma omp for schedule(dynamic, 32)
      for (std::int64_t k = 0; k < n; ++k) column(static_cast<Index>(k), acc);
    }
  }
  return g;
}

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

struct Workspace {
  explicit Workspace(std::size_t n) : target_cov(n, 0.0), fitted_cov(n, 0.0), w(n, 0.0) {}
  std::vector<double> target_cov;  // c_j = x_j . y
  std::vector<double> fitted_cov;  // q_j = x_j . (X w)
  std::vector<double> w;
};

struct ColumnFit {
  std::vector<Neighbor> weights;
  std::size_t sweeps;
  bool converged;
};

ColumnFit fit_column(const Gram& g, const SlimConfig& cfg, double n_scale, Index target,
                     Workspace& ws) {
  const std::size_t n_items = g.diag.size();
  for (const auto& e : g.cols[target]) ws.target_cov[e.index] = e.value;

  const double l1 = cfg.reg_magnitude * cfg.l1_ratio * n_scale;
  const double l2 = cfg.reg_magnitude * (1.0 - cfg.l1_ratio) * n_scale;

  ColumnFit fit{{}, 0, false};
  for (std::size_t sweep = 0; sweep < cfg.max_iterations; ++sweep) {
    double max_delta = 0.0;
    double max_w = 0.0;
    for (Index j = 0; j < n_items; ++j) {
      if (j == target || g.diag[j] == 0.0) continue;
      const double old = ws.w[j];
      const double rho = ws.target_cov[j] - ws.fitted_cov[j] + g.diag[j] * old;
      double updated = soft_threshold(rho, l1) / (g.diag[j] + l2);
      if (cfg.nonnegative && updated < 0.0) updated = 0.0;
      const double delta = updated - old;
      if (delta != 0.0) {
        ws.w[j] = updated;
        for (const auto& e : g.cols[j]) ws.fitted_cov[e.index] += delta * e.value;
        max_delta = std::max(max_delta, std::abs(delta));
      }
      max_w = std::max(max_w, std::abs(updated));
    }
    fit.sweeps = sweep + 1;
    if (max_delta <= cfg.tolerance * max_w) {
      fit.converged = true;
      break;
    }
  }

  std::vector<Neighbor> kept;
  for (Index j = 0; j < n_items; ++j) {
    if (ws.w[j] != 0.0) kept.push_back({j, ws.w[j]});
  }
  fit.weights = cfg.topk ? select_topk(std::move(kept), *cfg.topk) : std::move(kept);

  std::fill(ws.target_cov.begin(), ws.target_cov.end(), 0.0);
  std::fill(ws.fitted_cov.begin(), ws.fitted_cov.end(), 0.0);
  std::fill(ws.w.begin(), ws.w.end(), 0.0);
  return fit;
}

}  // namespace

SimilarityMatrix slim_weights(const InteractionMatrix& urm, const SlimConfig& cfg, SlimReport* report,
                              Exec exec) {
  cfg.validate();
  const Gram g = gram(urm, exec);
  const double n_scale = static_cast<double>(urm.n_rows());
  const auto n = static_cast<std::int64_t>(urm.n_cols());
  std::vector<std::vector<Neighbor>> rows(urm.n_cols());
  std::vector<std::size_t> sweeps(urm.n_cols(), 0);
  std::vector<unsigned char> converged(urm.n_cols(), 1);

  const auto run = [&](Index i, Workspace& ws) {
    auto fit = fit_column(g, cfg, n_scale, i, ws);
    rows[i] = std::move(fit.weights);
    sweeps[i] = fit.sweeps;
    converged[i] = fit.converged ? 1 : 0;
  };
  if (exec == Exec::serial) {
    Workspace ws(urm.n_cols());
    for (std::int64_t i = 0; i < n; ++i) run(static_cast<Index>(i), ws);
  } else {
#pragma omp parallel
    {
      Workspace ws(urm.n_cols());
#pragma omp for schedule(dynamic, 8)
      for (std::int64_t i = 0; i < n; ++i) run(static_cast<Index>(i), ws);
    }
  }

  if (report != nullptr) {
    report->columns = urm.n_cols();
    report->nonconverged =
        static_cast<std::size_t>(std::count(converged.begin(), converged.end(), 0));
    report->max_sweeps = sweeps.empty() ? 0 : *std::max_element(sweeps.begin(), sweeps.end());
  }
  return SimilarityMatrix(std::move(rows));
}

}  // namespace recbase
