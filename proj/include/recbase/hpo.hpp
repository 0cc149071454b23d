#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "recbase/params.hpp"
#include "recbase/recommenders.hpp"
#include "recbase/rng.hpp"

namespace recbase {

enum class DimensionKind { real_uniform, real_log_uniform, integer_uniform, categorical };

struct Dimension {
  std::string name;
  DimensionKind kind = DimensionKind::real_uniform;
  double low = 0.0;
  double high = 1.0;
  std::vector<std::string> categories;

  static Dimension real(std::string name, double low, double high);
  static Dimension log_real(std::string name, double low, double high);
  static Dimension integer(std::string name, std::int64_t low, std::int64_t high);
  static Dimension categorical(std::string name, std::vector<std::string> categories);

  /// Width of this dimension in the unit-cube encoding.
  std::size_t encoded_width() const { return kind == DimensionKind::categorical ? categories.size() : 1; }
};

/// Ordered search dimensions with their unit-cube encoding: reals and
/// integers map linearly (log-reals in log space), categoricals one-hot.
class SearchSpace {
 public:
  SearchSpace() = default;
  explicit SearchSpace(std::vector<Dimension> dims);

  const std::vector<Dimension>& dimensions() const noexcept { return dims_; }
  bool empty() const noexcept { return dims_.empty(); }
  std::size_t encoded_size() const;

  const Dimension* find(std::string_view name) const;
  /// Replaces the bounds or categories of an existing dimension.
  void override_dimension(const Dimension& d);

  Configuration sample(Rng& rng) const;
  std::vector<double> encode(const Configuration& c) const;
  /// Inverse of encode; integers are rounded, categoricals take the argmax.
  Configuration decode(const std::vector<double>& x) const;
  bool contains(const Configuration& c) const;

 private:
  std::vector<Dimension> dims_;
};

/// Search ranges used for tuning each baseline.
SearchSpace default_space(ModelKind kind);

struct Trial {
  std::size_t number = 0;
  Configuration config;
  std::optional<double> value;
  std::string error;
  double duration_seconds = 0.0;
};

enum class SearchMode { smbo, random };

SearchMode parse_search_mode(std::string_view name);
std::string_view to_string(SearchMode m);

struct StudyOptions {
  std::size_t n_trials = 35;
  std::size_t n_init = 5;
  std::uint64_t seed = 0;
  SearchMode mode = SearchMode::smbo;
  /// Random candidates scored by expected improvement per proposal.
  std::size_t n_candidates = 512;
  double xi = 0.01;
  /// Previously logged trials replayed instead of re-evaluated.
  std::vector<Trial> resume;
  std::function<void(const Trial&)> on_trial;
};

struct StudyResult {
  std::vector<Trial> trials;
  std::optional<std::size_t> best;
  std::uint64_t seed = 0;
  SearchMode mode = SearchMode::smbo;

  const Trial& best_trial() const;
};

/// Higher is better. Exceptions and non-finite values are recorded as failed
/// trials and the study continues.
using Objective = std::function<double(const Configuration&)>;

/// Sequential model-based search: the first n_init trials are uniform
/// samples, later ones maximize expected improvement under a GP surrogate.
/// Trial t draws from generator stream t, so a resumed study continues
/// exactly as an uninterrupted one.
StudyResult run_study(const Objective& objective, const SearchSpace& space, const StudyOptions& options);

nlohmann::json trial_to_json(const Trial& t, bool with_duration = false);
Trial trial_from_json(const nlohmann::json& j);

/// Reads a JSON-lines study log; blank lines are ignored.
std::vector<Trial> read_study_log(std::istream& in);

}  // namespace recbase
