#include "recbase/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "recbase/errors.hpp"
#include "recbase/rng.hpp"

namespace recbase {

namespace {

std::vector<double> zipf_cdf(std::size_t n, double skew) {
  std::vector<double> cdf(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += std::pow(static_cast<double>(i + 1), -skew);
    cdf[i] = acc;
  }
  for (auto& c : cdf) c /= acc;
  return cdf;
}

Index draw(const std::vector<double>& cdf, Rng& rng) {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return static_cast<Index>(std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1));
}

}  // namespace

InteractionMatrix synthetic_interactions(const SyntheticSpec& spec) {
  if (spec.n_users == 0 || spec.n_items == 0) throw InvalidConfig("synthetic data needs users and items");
  if (spec.n_interactions > spec.n_users * spec.n_items) {
    throw InvalidConfig("more interactions requested than user-item pairs");
  }
  Rng rng(spec.seed);
  const auto users = zipf_cdf(spec.n_users, spec.user_skew);
  const auto items = zipf_cdf(spec.n_items, spec.item_skew);
  // Shuffle item identities so popularity is not aligned with index order.
  std::vector<Index> item_perm(spec.n_items);
  for (Index i = 0; i < item_perm.size(); ++i) item_perm[i] = i;
  for (std::size_t i = item_perm.size(); i > 1; --i) std::swap(item_perm[i - 1], item_perm[rng.below(i)]);

  std::unordered_set<std::uint64_t> seen;
  std::vector<Triplet> entries;
  std::vector<std::int64_t> times;
  const std::size_t max_attempts = spec.n_interactions * 200 + 1000;
  for (std::size_t attempt = 0; entries.size() < spec.n_interactions && attempt < max_attempts; ++attempt) {
    const Index u = draw(users, rng);
    const Index i = item_perm[draw(items, rng)];
    const auto key = static_cast<std::uint64_t>(u) * spec.n_items + i;
    if (!seen.insert(key).second) continue;
    entries.push_back({u, i, 1.0});
    if (spec.with_timestamps) times.push_back(static_cast<std::int64_t>(entries.size()));
  }
  return SparseMatrix::from_triplets(spec.n_users, spec.n_items, std::move(entries), std::move(times));
}

FeatureMatrix synthetic_features(std::size_t n_items, std::size_t n_features, std::size_t per_item,
                                 std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Triplet> entries;
  for (Index i = 0; i < n_items; ++i) {
    std::unordered_set<Index> picked;
    for (std::size_t k = 0; k < per_item && picked.size() < n_features; ++k) {
      picked.insert(static_cast<Index>(rng.below(n_features)));
    }
    for (Index f : picked) entries.push_back({i, f, 1.0});
  }
  return SparseMatrix::from_triplets(n_items, n_features, std::move(entries));
}

}  // namespace recbase
