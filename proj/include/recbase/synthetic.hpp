#pragma once

#include <cstddef>
#include <cstdint>

#include "recbase/sparse.hpp"

namespace recbase {

/// Popularity-skewed implicit feedback: users and items are drawn with
/// Zipf-like weights (rank^-skew) until `n_interactions` distinct pairs exist.
struct SyntheticSpec {
  std::size_t n_users = 100;
  std::size_t n_items = 50;
  std::size_t n_interactions = 1000;
  double item_skew = 1.0;
  double user_skew = 0.5;
  std::uint64_t seed = 1;
  bool with_timestamps = false;
};

InteractionMatrix synthetic_interactions(const SyntheticSpec& spec);

/// Binary item x feature matrix with roughly `per_item` features per item.
FeatureMatrix synthetic_features(std::size_t n_items, std::size_t n_features, std::size_t per_item,
                                 std::uint64_t seed);

}  // namespace recbase
