#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "recbase/exec.hpp"
#include "recbase/params.hpp"
#include "recbase/similarity.hpp"
#include "recbase/sparse.hpp"

namespace recbase {

enum class ModelKind { toppop, itemknn, userknn, itemknn_cbf, itemknn_cfcbf, p3alpha, rp3beta, slim };

ModelKind parse_model_kind(std::string_view name);
std::string_view to_string(ModelKind kind);
bool needs_features(ModelKind kind);

/// Which endpoint of an item-to-item walk RP3beta divides by its popularity.
enum class PopularityPenalty { destination, source, both };

PopularityPenalty parse_popularity_penalty(std::string_view name);
std::string_view to_string(PopularityPenalty p);

struct GraphConfig {
  std::size_t k = 100;
  double alpha = 1.0;
  double beta = 0.0;
  PopularityPenalty penalty = PopularityPenalty::destination;

  void validate() const;
};

struct HybridConfig {
  KnnConfig knn;
  double feature_weight = 1.0;

  void validate() const;
};

struct SlimConfig {
  double l1_ratio = 0.1;
  double reg_magnitude = 1e-3;
  bool nonnegative = true;
  std::optional<std::size_t> topk;
  std::size_t max_iterations = 100;
  double tolerance = 1e-4;

  void validate() const;
};

/// Per-column coordinate-descent bookkeeping of a SLIM fit.
struct SlimReport {
  std::size_t columns = 0;
  std::size_t nonconverged = 0;
  std::size_t max_sweeps = 0;
};

/// A trained baseline behind the uniform score-then-rank contract.
/// Immutable; scoring distinct users concurrently is safe.
class TrainedModel {
 public:
  enum class Artifact { popularity, item_neighborhood, user_neighborhood };

  static TrainedModel popularity(ModelKind kind, std::shared_ptr<const InteractionMatrix> train,
                                 std::vector<double> scores);
  static TrainedModel item_neighborhood(ModelKind kind,
                                        std::shared_ptr<const InteractionMatrix> train,
                                        SimilarityMatrix weights);
  static TrainedModel user_neighborhood(ModelKind kind,
                                        std::shared_ptr<const InteractionMatrix> train,
                                        SimilarityMatrix weights);

  ModelKind kind() const noexcept { return kind_; }
  Artifact artifact() const noexcept { return artifact_; }
  const InteractionMatrix& train() const noexcept { return *train_; }
  std::size_t n_users() const noexcept { return train_->n_rows(); }
  std::size_t n_items() const noexcept { return train_->n_cols(); }

  /// Popularity vector (popularity artifact only).
  std::span<const double> popularity_scores() const { return popularity_; }
  /// Row t holds the (source, weight) pairs feeding target t.
  const SimilarityMatrix& weights() const noexcept { return weights_; }

  const Configuration& params() const noexcept { return params_; }
  void set_params(Configuration p) { params_ = std::move(p); }

  const SlimReport& slim_report() const noexcept { return slim_report_; }
  void set_slim_report(SlimReport r) { slim_report_ = r; }

  /// Divide each neighborhood score by the sum of contributing weights.
  /// Off by default.
  void set_normalize_scores(bool on) { normalize_scores_ = on; }
  bool normalize_scores() const noexcept { return normalize_scores_; }

  std::vector<double> score(Index user) const;
  void score_into(Index user, std::span<double> out) const;

  /// Items by descending score, lower index first on ties; the user's
  /// training items are removed first when exclude_seen.
  std::vector<Index> recommend(Index user, std::size_t cutoff, bool exclude_seen) const;

 private:
  TrainedModel(ModelKind kind, Artifact artifact, std::shared_ptr<const InteractionMatrix> train)
      : kind_(kind), artifact_(artifact), train_(std::move(train)) {}

  ModelKind kind_;
  Artifact artifact_;
  std::shared_ptr<const InteractionMatrix> train_;
  std::vector<double> popularity_;
  SimilarityMatrix weights_;
  SimilarityMatrix by_source_;
  Configuration params_;
  SlimReport slim_report_;
  bool normalize_scores_ = false;
};

/// Indices of the `cutoff` best entries of `scores` (descending, lower index
/// first on ties), skipping indices flagged in `excluded`.
std::vector<Index> rank_items(std::span<const double> scores, std::size_t cutoff,
                              std::span<const unsigned char> excluded = {});

using InteractionPtr = std::shared_ptr<const InteractionMatrix>;

TrainedModel train_top_popular(InteractionPtr urm);
TrainedModel train_item_knn(InteractionPtr urm, const KnnConfig& cfg, Exec exec = Exec::parallel);
TrainedModel train_user_knn(InteractionPtr urm, const KnnConfig& cfg, Exec exec = Exec::parallel);
TrainedModel train_item_knn_cbf(InteractionPtr urm, const FeatureMatrix& icm, const KnnConfig& cfg,
                                Exec exec = Exec::parallel);
TrainedModel train_item_knn_cfcbf(InteractionPtr urm, const FeatureMatrix& icm,
                                  const HybridConfig& cfg, Exec exec = Exec::parallel);

/// Three-step random-walk item similarity s_ij = sum_v p_jv p_vi with
/// p_ui = (r_ui / N_u)^alpha and p_iu = (r_ui / N_i)^alpha; RP3beta also
/// divides by popularity^beta. Row i holds the top-k sources j of target i.
SimilarityMatrix p3_similarity(const InteractionMatrix& urm, const GraphConfig& cfg, bool rp3,
                               Exec exec = Exec::parallel);

TrainedModel train_p3alpha(InteractionPtr urm, const GraphConfig& cfg, Exec exec = Exec::parallel);
TrainedModel train_rp3beta(InteractionPtr urm, const GraphConfig& cfg, Exec exec = Exec::parallel);

/// Per-item elastic net with zero diagonal:
///   min_w 1/2 |r_i - R w|^2 + n (lambda rho |w|_1 + lambda (1 - rho) / 2 |w|^2)
/// where n = number of users (the 1/n loss scaling), solved by cyclic
/// coordinate descent in covariance form.
SimilarityMatrix slim_weights(const InteractionMatrix& urm, const SlimConfig& cfg,
                              SlimReport* report = nullptr, Exec exec = Exec::parallel);

TrainedModel train_slim(InteractionPtr urm, const SlimConfig& cfg, Exec exec = Exec::parallel);

/// Hyper-parameter names accepted by train_model for `kind`.
std::vector<std::string> parameter_names(ModelKind kind);

KnnConfig knn_config_from(const Configuration& params);
GraphConfig graph_config_from(const Configuration& params);
HybridConfig hybrid_config_from(const Configuration& params);
SlimConfig slim_config_from(const Configuration& params);

/// Trains `kind` from a named parameter map; missing names take defaults,
/// unknown names raise InvalidConfig. `icm` is required for content models.
TrainedModel train_model(ModelKind kind, InteractionPtr urm, const FeatureMatrix* icm,
                         const Configuration& params, Exec exec = Exec::parallel);

}  // namespace recbase
