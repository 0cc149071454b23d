#include "recbase/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "recbase/errors.hpp"
#include "recbase/rng.hpp"

namespace recbase {

namespace {

SplitPair assemble(const InteractionMatrix& m, const std::vector<unsigned char>& to_test,
                   std::uint64_t seed, SplitSpec spec) {
  const auto entries = m.triplets();
  const auto times = m.timestamps();
  std::vector<Triplet> train;
  std::vector<Triplet> test;
  std::vector<std::int64_t> train_times;
  std::vector<std::int64_t> test_times;
  for (std::size_t e = 0; e < entries.size(); ++e) {
    if (to_test[e]) {
      test.push_back(entries[e]);
      if (!times.empty()) test_times.push_back(times[e]);
    } else {
      train.push_back(entries[e]);
      if (!times.empty()) train_times.push_back(times[e]);
    }
  }
  SplitPair out;
  out.train = SparseMatrix::from_triplets(m.n_rows(), m.n_cols(), std::move(train), std::move(train_times));
  out.test = SparseMatrix::from_triplets(m.n_rows(), m.n_cols(), std::move(test), std::move(test_times));
  out.seed = seed;
  out.spec = spec;
  return out;
}

}  // namespace

SplitPair split_random_holdout(const InteractionMatrix& m, double ratio, std::uint64_t seed,
                               bool exact_count) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidConfig("holdout ratio must lie in (0, 1)");
  Rng rng(seed);
  std::vector<unsigned char> to_test(m.nnz(), 0);
  if (exact_count) {
    std::vector<std::size_t> order(m.nnz());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }
    const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(m.nnz())));
    for (std::size_t k = n_train; k < order.size(); ++k) to_test[order[k]] = 1;
  } else {
    for (auto& flag : to_test) flag = rng.uniform() < ratio ? 0 : 1;
  }
  SplitSpec spec;
  spec.method = SplitMethod::holdout;
  spec.ratio = ratio;
  spec.exact_count = exact_count;
  return assemble(m, to_test, seed, spec);
}

SplitPair split_leave_one_out(const InteractionMatrix& m, LeaveOneOutMode mode, std::uint64_t seed) {
  if (mode == LeaveOneOutMode::last_by_timestamp && !m.has_timestamps()) {
    throw MissingTimestamps("leave-one-out by timestamp needs timestamps");
  }
  std::vector<unsigned char> to_test(m.nnz(), 0);
  std::size_t offset = 0;
  for (Index u = 0; u < m.n_rows(); ++u) {
    const std::size_t deg = m.row_size(u);
    if (deg >= 2) {
      std::size_t pick = 0;
      if (mode == LeaveOneOutMode::last_by_timestamp) {
        const auto times = m.row_timestamps(u);
        // Latest timestamp; the higher item index wins a tie.
        for (std::size_t p = 1; p < deg; ++p) {
          if (times[p] >= times[pick]) pick = p;
        }
      } else {
        Rng rng(seed, u);
        pick = static_cast<std::size_t>(rng.below(deg));
      }
      to_test[offset + pick] = 1;
    }
    offset += deg;
  }
  SplitSpec spec;
  spec.method = SplitMethod::leave_one_out;
  spec.mode = mode;
  return assemble(m, to_test, seed, spec);
}

SplitPair resplit(const InteractionMatrix& m, const SplitSpec& spec, std::uint64_t seed) {
  if (spec.method == SplitMethod::holdout) {
    return split_random_holdout(m, spec.ratio, seed, spec.exact_count);
  }
  return split_leave_one_out(m, spec.mode, seed);
}

NegativeSampleSet sample_negatives(const SplitPair& split, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw InvalidConfig("number of negatives must be >= 1");
  const auto& train = split.train;
  const auto& test = split.test;
  NegativeSampleSet out;
  out.seed = seed;
  out.per_positive = n;
  out.negatives.resize(test.n_rows());
  std::vector<unsigned char> seen(test.n_cols(), 0);
  std::vector<Index> pool;
  for (Index u = 0; u < test.n_rows(); ++u) {
    const auto positives = test.row_indices(u);
    if (positives.empty()) continue;
    for (Index i : train.row_indices(u)) seen[i] = 1;
    for (Index i : positives) seen[i] = 1;
    pool.clear();
    for (Index i = 0; i < test.n_cols(); ++i) {
      if (!seen[i]) pool.push_back(i);
    }
    for (Index i : train.row_indices(u)) seen[i] = 0;
    for (Index i : positives) seen[i] = 0;

    const std::size_t want = n * positives.size();
    auto& chosen = out.negatives[u];
    if (pool.size() <= want) {
      if (pool.size() < want) ++out.exhausted_users;
      chosen = pool;
    } else {
      Rng rng(seed, u);
      for (std::size_t k = 0; k < want; ++k) {
        const auto pick = k + static_cast<std::size_t>(rng.below(pool.size() - k));
        std::swap(pool[k], pool[pick]);
      }
      chosen.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(want));
      std::sort(chosen.begin(), chosen.end());
    }
  }
  return out;
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::precision:
      return "PRECISION";
    case Metric::recall:
      return "RECALL";
    case Metric::hit_rate:
      return "HR";
    case Metric::ndcg:
      return "NDCG";
    case Metric::map:
      return "MAP";
    case Metric::mrr:
      return "MRR";
  }
  return "?";
}

Metric parse_metric(std::string_view name) {
  std::string upper(name);
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper == "PRECISION" || upper == "PREC") return Metric::precision;
  if (upper == "RECALL" || upper == "REC") return Metric::recall;
  if (upper == "HR" || upper == "HIT_RATE" || upper == "HITRATE") return Metric::hit_rate;
  if (upper == "NDCG") return Metric::ndcg;
  if (upper == "MAP") return Metric::map;
  if (upper == "MRR") return Metric::mrr;
  throw InvalidConfig("unknown metric '" + std::string(name) + "'");
}

std::string metric_label(Metric m, std::size_t cutoff) {
  return std::string(to_string(m)) + "@" + std::to_string(cutoff);
}

namespace {

constexpr Metric kAllMetrics[] = {Metric::precision, Metric::recall, Metric::hit_rate,
                                  Metric::ndcg,      Metric::map,    Metric::mrr};

}  // namespace

MetricValues compute_metrics(std::span<const Index> ranked, std::span<const Index> relevant,
                             std::span<const std::size_t> cutoffs) {
  if (relevant.empty()) throw EmptyRelevantSet("relevant set is empty");
  std::vector<Index> rel(relevant.begin(), relevant.end());
  std::sort(rel.begin(), rel.end());
  rel.erase(std::unique(rel.begin(), rel.end()), rel.end());
  const auto is_relevant = [&](Index i) { return std::binary_search(rel.begin(), rel.end(), i); };

  MetricValues out;
  for (std::size_t c : cutoffs) {
    if (c < 1) throw InvalidConfig("cutoff must be >= 1");
    const std::size_t depth = std::min(c, ranked.size());
    std::size_t hits = 0;
    std::size_t first_hit = 0;
    double dcg = 0.0;
    double precision_sum = 0.0;
    for (std::size_t r = 1; r <= depth; ++r) {
      if (!is_relevant(ranked[r - 1])) continue;
      ++hits;
      if (first_hit == 0) first_hit = r;
      dcg += 1.0 / std::log2(static_cast<double>(r) + 1.0);
      precision_sum += static_cast<double>(hits) / static_cast<double>(r);
    }
    const std::size_t ideal = std::min(rel.size(), c);
    double idcg = 0.0;
    for (std::size_t r = 1; r <= ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 1.0);

    out[{Metric::precision, c}] = static_cast<double>(hits) / static_cast<double>(c);
    out[{Metric::recall, c}] = static_cast<double>(hits) / static_cast<double>(rel.size());
    out[{Metric::hit_rate, c}] = hits > 0 ? 1.0 : 0.0;
    out[{Metric::ndcg, c}] = dcg / idcg;
    out[{Metric::map, c}] = precision_sum / static_cast<double>(ideal);
    out[{Metric::mrr, c}] = first_hit > 0 ? 1.0 / static_cast<double>(first_hit) : 0.0;
  }
  return out;
}

double MetricTable::at(Metric m, std::size_t cutoff) const {
  const auto it = values.find({m, cutoff});
  if (it == values.end()) throw InvalidConfig("metric " + metric_label(m, cutoff) + " not computed");
  return it->second;
}

MetricTable evaluate_model(const TrainedModel& model, const SplitPair& split,
                           const NegativeSampleSet* negatives, std::span<const std::size_t> cutoffs,
                           Exec exec) {
  if (!model.train().same_entries(split.train)) {
    throw DimensionMismatch("model was not trained on this split's training matrix");
  }
  return evaluate_model(model, split.test, negatives, cutoffs, exec);
}

MetricTable evaluate_model(const TrainedModel& model, const InteractionMatrix& test,
                           const NegativeSampleSet* negatives, std::span<const std::size_t> cutoffs,
                           Exec exec) {
  const auto& train = model.train();
  if (test.n_rows() != train.n_rows() || test.n_cols() != train.n_cols()) {
    throw DimensionMismatch("test matrix shape differs from training matrix");
  }
  if (negatives != nullptr && negatives->negatives.size() != test.n_rows()) {
    throw DimensionMismatch("negative sample set does not cover every user");
  }
  if (cutoffs.empty()) throw InvalidConfig("at least one cutoff is required");
  const std::size_t max_cutoff = *std::max_element(cutoffs.begin(), cutoffs.end());

  std::vector<MetricKey> keys;
  for (Metric m : kAllMetrics) {
    for (std::size_t c : cutoffs) keys.emplace_back(m, c);
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  enum : unsigned char { kNoTest = 0, kEvaluated = 1, kSkipped = 2 };
  const std::size_t n_users = test.n_rows();
  std::vector<unsigned char> status(n_users, kNoTest);
  std::vector<double> per_user(n_users * keys.size(), 0.0);

  const auto evaluate_user = [&](Index u, std::vector<double>& scores,
                                 std::vector<unsigned char>& excluded) {
    const auto test_items = test.row_indices(u);
    if (test_items.empty()) return;
    const auto seen = train.row_indices(u);
    std::vector<Index> relevant;
    for (Index i : test_items) {
      if (!std::binary_search(seen.begin(), seen.end(), i)) relevant.push_back(i);
    }
    if (relevant.empty()) {
      status[u] = kSkipped;
      return;
    }
    model.score_into(u, scores);
    std::vector<Index> ranked;
    if (negatives == nullptr) {
      for (Index i : seen) excluded[i] = 1;
      ranked = rank_items(scores, max_cutoff, excluded);
      for (Index i : seen) excluded[i] = 0;
    } else {
      std::vector<Index> candidates = relevant;
      const auto& neg = negatives->negatives[u];
      candidates.insert(candidates.end(), neg.begin(), neg.end());
      std::sort(candidates.begin(), candidates.end());
      candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
      const auto before = [&](Index a, Index b) {
        return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
      };
      const std::size_t depth = std::min(max_cutoff, candidates.size());
      std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(depth),
                        candidates.end(), before);
      candidates.resize(depth);
      ranked = std::move(candidates);
    }
    const auto values = compute_metrics(ranked, relevant, cutoffs);
    for (std::size_t k = 0; k < keys.size(); ++k) per_user[u * keys.size() + k] = values.at(keys[k]);
    status[u] = kEvaluated;
  };

  const auto n = static_cast<std::int64_t>(n_users);
  if (exec == Exec::serial) {
    std::vector<double> scores(train.n_cols());
    std::vector<unsigned char> excluded(train.n_cols(), 0);
    for (std::int64_t u = 0; u < n; ++u) evaluate_user(static_cast<Index>(u), scores, excluded);
  } else {
#pragma omp parallel
    {
      std::vector<double> scores(train.n_cols());
      std::vector<unsigned char> excluded(train.n_cols(), 0);
#pragma omp for schedule(dynamic, 16)
      for (std::int64_t u = 0; u < n; ++u) evaluate_user(static_cast<Index>(u), scores, excluded);
    }
  }

  // Reduction in user order so the result does not depend on scheduling.
  MetricTable table;
  std::vector<double> sums(keys.size(), 0.0);
  for (std::size_t u = 0; u < n_users; ++u) {
    if (status[u] == kSkipped) ++table.skipped_users;
    if (status[u] != kEvaluated) continue;
    ++table.evaluated_users;
    for (std::size_t k = 0; k < keys.size(); ++k) sums[k] += per_user[u * keys.size() + k];
  }
  for (std::size_t k = 0; k < keys.size(); ++k) {
    table.values[keys[k]] =
        table.evaluated_users > 0 ? sums[k] / static_cast<double>(table.evaluated_users) : 0.0;
  }
  return table;
}

std::string format_metric(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.8f", v);
  return buf;
}

void write_metrics_csv(std::ostream& out, const std::vector<std::pair<std::string, MetricTable>>& rows,
                       std::span<const Metric> metrics, std::span<const std::size_t> cutoffs,
                       const std::vector<std::string>& header_comments) {
  for (const auto& line : header_comments) out << "# " << line << '\n';
  out << "algorithm";
  for (Metric m : metrics) {
    for (std::size_t c : cutoffs) out << ',' << metric_label(m, c);
  }
  out << ",evaluated_users,skipped_users\n";
  for (const auto& [name, table] : rows) {
    out << name;
    for (Metric m : metrics) {
      for (std::size_t c : cutoffs) out << ',' << format_metric(table.at(m, c));
    }
    out << ',' << table.evaluated_users << ',' << table.skipped_users << '\n';
  }
}

nlohmann::json metrics_to_json(const std::vector<std::pair<std::string, MetricTable>>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [name, table] : rows) {
    nlohmann::json values = nlohmann::json::object();
    for (const auto& [key, v] : table.values) values[metric_label(key.first, key.second)] = v;
    out.push_back({{"algorithm", name},
                   {"evaluated_users", table.evaluated_users},
                   {"skipped_users", table.skipped_users},
                   {"metrics", values}});
  }
  return out;
}

}  // namespace recbase
