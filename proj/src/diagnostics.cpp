#include "recbase/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "recbase/errors.hpp"
#include "recbase/rng.hpp"

namespace recbase {

namespace {

double checked_total(std::span<const double> counts) {
  double total = 0.0;
  for (double c : counts) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw InvalidValue("counts must be finite and non-negative");
    total += c;
  }
  if (!(total > 0.0)) throw AllZero("all counts are zero");
  return total;
}

std::vector<double> item_counts(const InteractionMatrix& m) {
  const auto deg = degree_vector(m, Axis::items);
  return {deg.begin(), deg.end()};
}

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

double gini_index(std::span<const double> counts) {
  const double total = checked_total(counts);
  std::vector<double> x(counts.begin(), counts.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += (2.0 * static_cast<double>(i + 1) - n - 1.0) * x[i];
  }
  return acc / (n * total);
}

double shannon_entropy(std::span<const double> counts) {
  const double total = checked_total(counts);
  double h = 0.0;
  for (double c : counts) {
    if (c <= 0.0) continue;
    const double p = c / total;
    h -= p * std::log2(p);
  }
  return h;
}

PopularityProfile popularity_profile(const SplitPair& split) {
  if (split.train.n_cols() != split.test.n_cols()) throw DimensionMismatch("split sides differ in items");
  const auto train = degree_vector(split.train, Axis::items);
  const auto test = degree_vector(split.test, Axis::items);
  const auto train_max = train.empty() ? 0 : *std::max_element(train.begin(), train.end());
  const auto test_max = test.empty() ? 0 : *std::max_element(test.begin(), test.end());

  PopularityProfile p;
  p.items.reserve(train.size());
  for (Index i = 0; i < train.size(); ++i) {
    p.items.push_back({i, train[i], test[i],
                       train_max > 0 ? static_cast<double>(train[i]) / static_cast<double>(train_max) : 0.0,
                       test_max > 0 ? static_cast<double>(test[i]) / static_cast<double>(test_max) : 0.0});
  }
  std::stable_sort(p.items.begin(), p.items.end(), [](const ItemPopularity& a, const ItemPopularity& b) {
    return a.train_count > b.train_count;
  });
  return p;
}

double profile_divergence(const PopularityProfile& p) {
  if (p.items.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& it : p.items) acc += std::abs(it.train_norm - it.test_norm);
  return acc / static_cast<double>(p.items.size());
}

void write_profile_csv(std::ostream& out, const PopularityProfile& p,
                       const std::vector<std::string>* item_ids,
                       const std::vector<std::string>& header_comments) {
  for (const auto& line : header_comments) out << "# " << line << '\n';
  out << "item,train_norm,test_norm\n";
  for (const auto& it : p.items) {
    if (item_ids != nullptr) out << (*item_ids)[it.item];
    else out << it.item;
    out << ',' << format_metric(it.train_norm) << ',' << format_metric(it.test_norm) << '\n';
  }
}

SplitAuditReport audit_split(const SplitPair& split, std::size_t resamples, std::uint64_t seed,
                             double threshold, Exec exec) {
  if (resamples < 20) throw InvalidConfig("audit needs at least 20 resamples");
  const auto pooled = merge_disjoint(split.train, split.test);

  SplitAuditReport r;
  r.resamples = resamples;
  r.seed = seed;
  r.threshold = threshold;
  const auto train_counts = item_counts(split.train);
  const auto test_counts = item_counts(split.test);
  r.gini_train = gini_index(train_counts);
  r.gini_test = gini_index(test_counts);
  r.entropy_train = shannon_entropy(train_counts);
  r.entropy_test = shannon_entropy(test_counts);

  SplitSpec spec = split.spec;
  // A timestamp-ordered leave-one-out split is deterministic; its random
  // counterpart supplies the reference spread.
  if (spec.method == SplitMethod::leave_one_out) spec.mode = LeaveOneOutMode::random_one;

  std::vector<double> reference(resamples, 0.0);
  const auto n = static_cast<std::int64_t>(resamples);
  const auto one = [&](std::int64_t k) {
    const auto s = resplit(pooled, spec, mix_seed(seed, static_cast<std::uint64_t>(k)));
    reference[static_cast<std::size_t>(k)] = gini_index(item_counts(s.test));
  };
  if (exec == Exec::serial) {
    for (std::int64_t k = 0; k < n; ++k) one(k);
  } else {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t k = 0; k < n; ++k) one(k);
  }

  const double mean = std::accumulate(reference.begin(), reference.end(), 0.0) / static_cast<double>(resamples);
  double ss = 0.0;
  for (double g : reference) ss += (g - mean) * (g - mean);
  r.reference_mean = mean;
  r.reference_sd = std::sqrt(ss / static_cast<double>(resamples - 1));
  auto sorted = reference;
  std::sort(sorted.begin(), sorted.end());
  for (double q : {0.01, 0.05, 0.5, 0.95, 0.99}) r.reference_quantiles.push_back(quantile(sorted, q));

  const double diff = r.gini_test - mean;
  if (r.reference_sd > 0.0) {
    r.z_score = diff / r.reference_sd;
  } else {
    r.z_score = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
  }
  r.verdict = std::abs(r.z_score) > threshold ? Verdict::anomalous : Verdict::plausible;
  return r;
}

nlohmann::json to_json(const SplitAuditReport& r) {
  nlohmann::json j;
  j["gini_train"] = r.gini_train;
  j["gini_test"] = r.gini_test;
  j["entropy_train"] = r.entropy_train;
  j["entropy_test"] = r.entropy_test;
  j["resamples"] = r.resamples;
  j["seed"] = r.seed;
  j["reference"] = {{"mean", r.reference_mean},
                    {"sd", r.reference_sd},
                    {"quantiles",
                     {{"q01", r.reference_quantiles.at(0)},
                      {"q05", r.reference_quantiles.at(1)},
                      {"q50", r.reference_quantiles.at(2)},
                      {"q95", r.reference_quantiles.at(3)},
                      {"q99", r.reference_quantiles.at(4)}}}};
  j["z_score"] = std::isfinite(r.z_score) ? nlohmann::json(r.z_score)
                                          : nlohmann::json(r.z_score > 0 ? "inf" : "-inf");
  j["threshold"] = r.threshold;
  j["verdict"] = r.verdict == Verdict::plausible ? "plausible" : "anomalous";
  return j;
}

double mean_list_popularity(const std::vector<std::vector<Index>>& lists,
                            std::span<const std::size_t> item_degrees) {
  double total = 0.0;
  std::size_t counted = 0;
  for (const auto& list : lists) {
    if (list.empty()) continue;
    double s = 0.0;
    for (Index i : list) s += static_cast<double>(item_degrees[i]);
    total += s / static_cast<double>(list.size());
    ++counted;
  }
  return counted > 0 ? total / static_cast<double>(counted) : 0.0;
}

namespace {

std::vector<std::vector<Index>> top_lists(const TrainedModel& model, std::span<const Index> users,
                                          std::size_t cutoff) {
  std::vector<std::vector<Index>> lists(users.size());
  const auto n = static_cast<std::int64_t>(users.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t k = 0; k < n; ++k) lists[k] = model.recommend(users[k], cutoff, true);
  return lists;
}

}  // namespace

PopularityBias mean_recommended_popularity(const TrainedModel& model, std::span<const Index> users,
                                           std::size_t cutoff, const TrainedModel* baseline) {
  const auto degrees = degree_vector(model.train(), Axis::items);
  PopularityBias out{mean_list_popularity(top_lists(model, users, cutoff), degrees), std::nullopt};
  if (baseline != nullptr) {
    if (!baseline->train().same_entries(model.train())) {
      throw DimensionMismatch("models were trained on different matrices");
    }
    const double base = mean_list_popularity(top_lists(*baseline, users, cutoff), degrees);
    if (base > 0.0) out.ratio = out.mean_popularity / base;
  }
  return out;
}

}  // namespace recbase
