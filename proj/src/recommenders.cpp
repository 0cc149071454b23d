#include "recbase/recommenders.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "recbase/errors.hpp"

namespace recbase {

namespace {

constexpr std::pair<ModelKind, std::string_view> kModelNames[] = {
    {ModelKind::toppop, "toppop"},
    {ModelKind::itemknn, "itemknn"},
    {ModelKind::userknn, "userknn"},
    {ModelKind::itemknn_cbf, "itemknn-cbf"},
    {ModelKind::itemknn_cfcbf, "itemknn-cfcbf"},
    {ModelKind::p3alpha, "p3alpha"},
    {ModelKind::rp3beta, "rp3beta"},
    {ModelKind::slim, "slim"},
};

}  // namespace

ModelKind parse_model_kind(std::string_view name) {
  for (const auto& [kind, label] : kModelNames) {
    if (label == name) return kind;
  }
  throw UnknownAlgorithm("unknown algorithm '" + std::string(name) + "'");
}

std::string_view to_string(ModelKind kind) {
  for (const auto& [k, label] : kModelNames) {
    if (k == kind) return label;
  }
  return "unknown";
}

bool needs_features(ModelKind kind) {
  return kind == ModelKind::itemknn_cbf || kind == ModelKind::itemknn_cfcbf;
}

PopularityPenalty parse_popularity_penalty(std::string_view name) {
  if (name == "destination") return PopularityPenalty::destination;
  if (name == "source") return PopularityPenalty::source;
  if (name == "both") return PopularityPenalty::both;
  throw InvalidConfig("unknown popularity penalty '" + std::string(name) + "'");
}

std::string_view to_string(PopularityPenalty p) {
  switch (p) {
    case PopularityPenalty::destination:
      return "destination";
    case PopularityPenalty::source:
      return "source";
    case PopularityPenalty::both:
      return "both";
  }
  return "destination";
}

void GraphConfig::validate() const {
  if (k < 1) throw InvalidConfig("neighborhood size k must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 2.0)) throw InvalidConfig("alpha must lie in [0, 2]");
  if (!(beta >= 0.0 && beta <= 2.0)) throw InvalidConfig("beta must lie in [0, 2]");
}

void HybridConfig::validate() const {
  knn.validate();
  if (!(feature_weight > 0.0) || !std::isfinite(feature_weight)) {
    throw InvalidConfig("feature weight must be > 0");
  }
}

void SlimConfig::validate() const {
  if (!(l1_ratio >= 1e-5 && l1_ratio <= 1.0)) throw InvalidConfig("l1_ratio must lie in [1e-5, 1]");
  if (!(reg_magnitude >= 1e-3 && reg_magnitude <= 1.0)) {
    throw InvalidConfig("reg_magnitude must lie in [1e-3, 1]");
  }
  if (topk && *topk < 1) throw InvalidConfig("topk must be >= 1");
  if (max_iterations < 1) throw InvalidConfig("max_iterations must be >= 1");
  if (!(tolerance > 0.0)) throw InvalidConfig("tolerance must be > 0");
}

TrainedModel TrainedModel::popularity(ModelKind kind, InteractionPtr train,
                                      std::vector<double> scores) {
  if (scores.size() != train->n_cols()) throw DimensionMismatch("popularity vector length");
  TrainedModel m(kind, Artifact::popularity, std::move(train));
  m.popularity_ = std::move(scores);
  return m;
}

TrainedModel TrainedModel::item_neighborhood(ModelKind kind, InteractionPtr train,
                                             SimilarityMatrix weights) {
  if (weights.n() != train->n_cols()) throw DimensionMismatch("item weights vs catalog size");
  TrainedModel m(kind, Artifact::item_neighborhood, std::move(train));
  m.by_source_ = weights.transposed();
  m.weights_ = std::move(weights);
  return m;
}

TrainedModel TrainedModel::user_neighborhood(ModelKind kind, InteractionPtr train,
                                             SimilarityMatrix weights) {
  if (weights.n() != train->n_rows()) throw DimensionMismatch("user weights vs user count");
  TrainedModel m(kind, Artifact::user_neighborhood, std::move(train));
  m.weights_ = std::move(weights);
  return m;
}

void TrainedModel::score_into(Index user, std::span<double> out) const {
  if (user >= n_users()) throw IndexOutOfRange("user " + std::to_string(user));
  if (out.size() != n_items()) throw DimensionMismatch("score buffer length");
  std::fill(out.begin(), out.end(), 0.0);

  switch (artifact_) {
    case Artifact::popularity:
      std::copy(popularity_.begin(), popularity_.end(), out.begin());
      return;
    case Artifact::item_neighborhood: {
      const auto items = train_->row_indices(user);
      const auto values = train_->row_values(user);
      std::vector<double> denom(normalize_scores_ ? n_items() : 0, 0.0);
      for (std::size_t p = 0; p < items.size(); ++p) {
        const double r = values[p];
        for (const auto& nb : by_source_.row(items[p])) {
          out[nb.index] += r * nb.value;
          if (normalize_scores_) denom[nb.index] += std::abs(nb.value);
        }
      }
      if (normalize_scores_) {
        for (std::size_t i = 0; i < out.size(); ++i) {
          if (denom[i] > 0.0) out[i] /= denom[i];
        }
      }
      return;
    }
    case Artifact::user_neighborhood: {
      std::vector<double> denom(normalize_scores_ ? n_items() : 0, 0.0);
      for (const auto& nb : weights_.row(user)) {
        const auto items = train_->row_indices(nb.index);
        const auto values = train_->row_values(nb.index);
        for (std::size_t p = 0; p < items.size(); ++p) {
          out[items[p]] += nb.value * values[p];
          if (normalize_scores_) denom[items[p]] += std::abs(nb.value);
        }
      }
      if (normalize_scores_) {
        for (std::size_t i = 0; i < out.size(); ++i) {
          if (denom[i] > 0.0) out[i] /= denom[i];
        }
      }
      return;
    }
  }
}

std::vector<double> TrainedModel::score(Index user) const {
  std::vector<double> out(n_items());
  score_into(user, out);
  return out;
}

std::vector<Index> rank_items(std::span<const double> scores, std::size_t cutoff,
                              std::span<const unsigned char> excluded) {
  std::vector<Index> candidates;
  candidates.reserve(scores.size());
  for (Index i = 0; i < scores.size(); ++i) {
    if (!excluded.empty() && excluded[i]) continue;
    candidates.push_back(i);
  }
  const auto before = [&](Index a, Index b) {
    return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
  };
  const std::size_t n = std::min(cutoff, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n),
                    candidates.end(), before);
  candidates.resize(n);
  return candidates;
}

std::vector<Index> TrainedModel::recommend(Index user, std::size_t cutoff, bool exclude_seen) const {
  if (cutoff < 1) throw InvalidConfig("cutoff must be >= 1");
  const auto scores = score(user);
  std::vector<unsigned char> excluded;
  if (exclude_seen) {
    excluded.assign(n_items(), 0);
    for (Index i : train_->row_indices(user)) excluded[i] = 1;
  }
  return rank_items(scores, cutoff, excluded);
}

TrainedModel train_top_popular(InteractionPtr urm) {
  if (urm->nnz() == 0) throw EmptyDataset("TopPopular needs a non-empty training matrix");
  const auto degrees = degree_vector(*urm, Axis::items);
  std::vector<double> scores(degrees.begin(), degrees.end());
  return TrainedModel::popularity(ModelKind::toppop, std::move(urm), std::move(scores));
}

TrainedModel train_item_knn(InteractionPtr urm, const KnnConfig& cfg, Exec exec) {
  auto sim = cosine_topk(*urm, cfg, exec);
  return TrainedModel::item_neighborhood(ModelKind::itemknn, std::move(urm), std::move(sim));
}

TrainedModel train_user_knn(InteractionPtr urm, const KnnConfig& cfg, Exec exec) {
  auto sim = cosine_topk(urm->transposed(), cfg, exec);
  return TrainedModel::user_neighborhood(ModelKind::userknn, std::move(urm), std::move(sim));
}

TrainedModel train_item_knn_cbf(InteractionPtr urm, const FeatureMatrix& icm, const KnnConfig& cfg,
                                Exec exec) {
  if (icm.n_rows() != urm->n_cols()) {
    throw DimensionMismatch("feature matrix has " + std::to_string(icm.n_rows()) +
                            " items, interactions have " + std::to_string(urm->n_cols()));
  }
  auto sim = cosine_topk(icm.transposed(), cfg, exec);
  return TrainedModel::item_neighborhood(ModelKind::itemknn_cbf, std::move(urm), std::move(sim));
}

TrainedModel train_item_knn_cfcbf(InteractionPtr urm, const FeatureMatrix& icm,
                                  const HybridConfig& cfg, Exec exec) {
  cfg.validate();
  if (icm.n_rows() != urm->n_cols()) {
    throw DimensionMismatch("feature matrix has " + std::to_string(icm.n_rows()) +
                            " items, interactions have " + std::to_string(urm->n_cols()));
  }
  const double w = cfg.feature_weight;
  const auto features = icm.transposed().map_values([w](Index, Index, double v) { return w * v; });
  auto sim = cosine_topk(vstack(*urm, features), cfg.knn, exec);
  return TrainedModel::item_neighborhood(ModelKind::itemknn_cfcbf, std::move(urm), std::move(sim));
}

TrainedModel train_p3alpha(InteractionPtr urm, const GraphConfig& cfg, Exec exec) {
  auto sim = p3_similarity(*urm, cfg, false, exec);
  return TrainedModel::item_neighborhood(ModelKind::p3alpha, std::move(urm), std::move(sim));
}

TrainedModel train_rp3beta(InteractionPtr urm, const GraphConfig& cfg, Exec exec) {
  auto sim = p3_similarity(*urm, cfg, true, exec);
  return TrainedModel::item_neighborhood(ModelKind::rp3beta, std::move(urm), std::move(sim));
}

TrainedModel train_slim(InteractionPtr urm, const SlimConfig& cfg, Exec exec) {
  SlimReport report;
  auto w = slim_weights(*urm, cfg, &report, exec);
  auto model = TrainedModel::item_neighborhood(ModelKind::slim, std::move(urm), std::move(w));
  model.set_slim_report(report);
  return model;
}

std::vector<std::string> parameter_names(ModelKind kind) {
  switch (kind) {
    case ModelKind::toppop:
      return {};
    case ModelKind::itemknn:
    case ModelKind::userknn:
    case ModelKind::itemknn_cbf:
      return {"k", "shrink", "weighting", "normalize", "bm25_k1", "bm25_b", "normalize_scores"};
    case ModelKind::itemknn_cfcbf:
      return {"k",      "shrink",  "weighting",      "normalize",
              "bm25_k1", "bm25_b", "feature_weight", "normalize_scores"};
    case ModelKind::p3alpha:
      return {"k", "alpha", "normalize_scores"};
    case ModelKind::rp3beta:
      return {"k", "alpha", "beta", "penalty", "normalize_scores"};
    case ModelKind::slim:
      return {"l1_ratio", "reg_magnitude", "nonnegative", "topk", "max_iterations", "tolerance",
              "normalize_scores"};
  }
  return {};
}

namespace {

template <typename F>
void read_if(const Configuration& params, const std::string& name, F&& apply) {
  const auto it = params.find(name);
  if (it != params.end()) apply(it->second);
}

std::size_t positive_count(const ParamValue& v, const std::string& name) {
  const auto n = as_integer(v, name);
  if (n < 1) throw InvalidConfig("parameter '" + name + "' must be >= 1");
  return static_cast<std::size_t>(n);
}

}  // namespace

KnnConfig knn_config_from(const Configuration& params) {
  KnnConfig cfg;
  read_if(params, "k", [&](const ParamValue& v) { cfg.k = positive_count(v, "k"); });
  read_if(params, "shrink", [&](const ParamValue& v) { cfg.shrink = as_real(v, "shrink"); });
  read_if(params, "weighting",
          [&](const ParamValue& v) { cfg.weighting = parse_weighting(as_label(v, "weighting")); });
  read_if(params, "normalize", [&](const ParamValue& v) { cfg.normalize = as_flag(v, "normalize"); });
  read_if(params, "bm25_k1", [&](const ParamValue& v) { cfg.bm25_k1 = as_real(v, "bm25_k1"); });
  read_if(params, "bm25_b", [&](const ParamValue& v) { cfg.bm25_b = as_real(v, "bm25_b"); });
  cfg.validate();
  return cfg;
}

GraphConfig graph_config_from(const Configuration& params) {
  GraphConfig cfg;
  read_if(params, "k", [&](const ParamValue& v) { cfg.k = positive_count(v, "k"); });
  read_if(params, "alpha", [&](const ParamValue& v) { cfg.alpha = as_real(v, "alpha"); });
  read_if(params, "beta", [&](const ParamValue& v) { cfg.beta = as_real(v, "beta"); });
  read_if(params, "penalty", [&](const ParamValue& v) {
    cfg.penalty = parse_popularity_penalty(as_label(v, "penalty"));
  });
  cfg.validate();
  return cfg;
}

HybridConfig hybrid_config_from(const Configuration& params) {
  HybridConfig cfg;
  Configuration knn_only = params;
  knn_only.erase("feature_weight");
  cfg.knn = knn_config_from(knn_only);
  read_if(params, "feature_weight",
          [&](const ParamValue& v) { cfg.feature_weight = as_real(v, "feature_weight"); });
  cfg.validate();
  return cfg;
}

SlimConfig slim_config_from(const Configuration& params) {
  SlimConfig cfg;
  read_if(params, "l1_ratio", [&](const ParamValue& v) { cfg.l1_ratio = as_real(v, "l1_ratio"); });
  read_if(params, "reg_magnitude",
          [&](const ParamValue& v) { cfg.reg_magnitude = as_real(v, "reg_magnitude"); });
  read_if(params, "nonnegative",
          [&](const ParamValue& v) { cfg.nonnegative = as_flag(v, "nonnegative"); });
  read_if(params, "topk", [&](const ParamValue& v) { cfg.topk = positive_count(v, "topk"); });
  read_if(params, "max_iterations",
          [&](const ParamValue& v) { cfg.max_iterations = positive_count(v, "max_iterations"); });
  read_if(params, "tolerance", [&](const ParamValue& v) { cfg.tolerance = as_real(v, "tolerance"); });
  cfg.validate();
  return cfg;
}

TrainedModel train_model(ModelKind kind, InteractionPtr urm, const FeatureMatrix* icm,
                         const Configuration& params, Exec exec) {
  const auto names = parameter_names(kind);
  const std::set<std::string> allowed(names.begin(), names.end());
  for (const auto& [name, value] : params) {
    if (!allowed.count(name)) {
      throw InvalidConfig("unknown parameter '" + name + "' for " + std::string(to_string(kind)));
    }
  }
  if (needs_features(kind) && icm == nullptr) {
    throw InvalidConfig(std::string(to_string(kind)) + " requires an item feature matrix");
  }

  Configuration model_params = params;
  bool normalize_scores = false;
  if (const auto it = model_params.find("normalize_scores"); it != model_params.end()) {
    normalize_scores = as_flag(it->second, "normalize_scores");
    model_params.erase(it);
  }

  auto model = [&]() {
    switch (kind) {
      case ModelKind::toppop:
        return train_top_popular(urm);
      case ModelKind::itemknn:
        return train_item_knn(urm, knn_config_from(model_params), exec);
      case ModelKind::userknn:
        return train_user_knn(urm, knn_config_from(model_params), exec);
      case ModelKind::itemknn_cbf:
        return train_item_knn_cbf(urm, *icm, knn_config_from(model_params), exec);
      case ModelKind::itemknn_cfcbf:
        return train_item_knn_cfcbf(urm, *icm, hybrid_config_from(model_params), exec);
      case ModelKind::p3alpha: {
        auto cfg = graph_config_from(model_params);
        return train_p3alpha(urm, cfg, exec);
      }
      case ModelKind::rp3beta:
        return train_rp3beta(urm, graph_config_from(model_params), exec);
      case ModelKind::slim:
        return train_slim(urm, slim_config_from(model_params), exec);
    }
    throw UnknownAlgorithm("unhandled model kind");
  }();
  model.set_normalize_scores(normalize_scores);
  model.set_params(params);
  return model;
}

}  // namespace recbase
