#include "recbase/hpo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>

#include "recbase/errors.hpp"
#include "recbase/gp.hpp"

namespace recbase {

Dimension Dimension::real(std::string name, double low, double high) {
  return {std::move(name), DimensionKind::real_uniform, low, high, {}};
}

Dimension Dimension::log_real(std::string name, double low, double high) {
  return {std::move(name), DimensionKind::real_log_uniform, low, high, {}};
}

Dimension Dimension::integer(std::string name, std::int64_t low, std::int64_t high) {
  return {std::move(name), DimensionKind::integer_uniform, static_cast<double>(low),
          static_cast<double>(high), {}};
}

Dimension Dimension::categorical(std::string name, std::vector<std::string> categories) {
  return {std::move(name), DimensionKind::categorical, 0.0, 0.0, std::move(categories)};
}

namespace {

void validate(const Dimension& d) {
  if (d.name.empty()) throw InvalidConfig("search dimension without a name");
  if (d.kind == DimensionKind::categorical) {
    if (d.categories.empty()) throw InvalidConfig("categorical '" + d.name + "' has no categories");
    return;
  }
  if (!(d.low < d.high)) throw InvalidConfig("dimension '" + d.name + "' needs low < high");
  if (d.kind == DimensionKind::real_log_uniform && !(d.low > 0.0)) {
    throw InvalidConfig("log-uniform dimension '" + d.name + "' needs low > 0");
  }
  if (d.kind == DimensionKind::integer_uniform &&
      (std::floor(d.low) != d.low || std::floor(d.high) != d.high)) {
    throw InvalidConfig("integer dimension '" + d.name + "' needs integral bounds");
  }
}

}  // namespace

SearchSpace::SearchSpace(std::vector<Dimension> dims) : dims_(std::move(dims)) {
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    validate(dims_[i]);
    for (std::size_t j = 0; j < i; ++j) {
      if (dims_[j].name == dims_[i].name) throw InvalidConfig("duplicate dimension '" + dims_[i].name + "'");
    }
  }
}

std::size_t SearchSpace::encoded_size() const {
  std::size_t n = 0;
  for (const auto& d : dims_) n += d.encoded_width();
  return n;
}

const Dimension* SearchSpace::find(std::string_view name) const {
  for (const auto& d : dims_) {
    if (d.name == name) return &d;
  }
  return nullptr;
}

void SearchSpace::override_dimension(const Dimension& d) {
  validate(d);
  for (auto& existing : dims_) {
    if (existing.name == d.name) {
      existing = d;
      return;
    }
  }
  throw InvalidConfig("search space has no dimension '" + d.name + "'");
}

Configuration SearchSpace::sample(Rng& rng) const {
  Configuration c;
  for (const auto& d : dims_) {
    switch (d.kind) {
      case DimensionKind::real_uniform:
        c[d.name] = rng.uniform(d.low, d.high);
        break;
      case DimensionKind::real_log_uniform:
        c[d.name] = std::exp(rng.uniform(std::log(d.low), std::log(d.high)));
        break;
      case DimensionKind::integer_uniform: {
        const auto span = static_cast<std::uint64_t>(d.high - d.low) + 1;
        c[d.name] = static_cast<std::int64_t>(d.low) + static_cast<std::int64_t>(rng.below(span));
        break;
      }
      case DimensionKind::categorical:
        c[d.name] = d.categories[rng.below(d.categories.size())];
        break;
    }
  }
  return c;
}

std::vector<double> SearchSpace::encode(const Configuration& c) const {
  std::vector<double> x;
  x.reserve(encoded_size());
  for (const auto& d : dims_) {
    const auto it = c.find(d.name);
    if (it == c.end()) throw InvalidConfig("configuration lacks '" + d.name + "'");
    switch (d.kind) {
      case DimensionKind::real_uniform:
      case DimensionKind::integer_uniform:
        x.push_back((as_real(it->second, d.name) - d.low) / (d.high - d.low));
        break;
      case DimensionKind::real_log_uniform:
        x.push_back((std::log(as_real(it->second, d.name)) - std::log(d.low)) /
                    (std::log(d.high) - std::log(d.low)));
        break;
      case DimensionKind::categorical: {
        const auto label = as_label(it->second, d.name);
        for (const auto& cat : d.categories) x.push_back(cat == label ? 1.0 : 0.0);
        break;
      }
    }
  }
  return x;
}

Configuration SearchSpace::decode(const std::vector<double>& x) const {
  if (x.size() != encoded_size()) throw DimensionMismatch("encoded vector length");
  Configuration c;
  std::size_t pos = 0;
  for (const auto& d : dims_) {
    const double u = std::clamp(x[pos], 0.0, 1.0);
    switch (d.kind) {
      case DimensionKind::real_uniform:
        c[d.name] = std::clamp(d.low + u * (d.high - d.low), d.low, d.high);
        break;
      case DimensionKind::real_log_uniform:
        c[d.name] = std::clamp(std::exp(std::log(d.low) + u * (std::log(d.high) - std::log(d.low))),
                               d.low, d.high);
        break;
      case DimensionKind::integer_uniform:
        c[d.name] = static_cast<std::int64_t>(std::clamp(std::round(d.low + u * (d.high - d.low)), d.low, d.high));
        break;
      case DimensionKind::categorical: {
        std::size_t best = 0;
        for (std::size_t k = 1; k < d.categories.size(); ++k) {
          if (x[pos + k] > x[pos + best]) best = k;
        }
        c[d.name] = d.categories[best];
        break;
      }
    }
    pos += d.encoded_width();
  }
  return c;
}

bool SearchSpace::contains(const Configuration& c) const {
  if (c.size() != dims_.size()) return false;
  for (const auto& d : dims_) {
    const auto it = c.find(d.name);
    if (it == c.end()) return false;
    const auto& v = it->second;
    switch (d.kind) {
      case DimensionKind::real_uniform:
      case DimensionKind::real_log_uniform: {
        if (!std::holds_alternative<double>(v)) return false;
        const double r = std::get<double>(v);
        if (!(r >= d.low && r <= d.high)) return false;
        break;
      }
      case DimensionKind::integer_uniform: {
        if (!std::holds_alternative<std::int64_t>(v)) return false;
        const auto i = static_cast<double>(std::get<std::int64_t>(v));
        if (i < d.low || i > d.high) return false;
        break;
      }
      case DimensionKind::categorical: {
        if (!std::holds_alternative<std::string>(v)) return false;
        if (std::find(d.categories.begin(), d.categories.end(), std::get<std::string>(v)) ==
            d.categories.end()) {
          return false;
        }
        break;
      }
    }
  }
  return true;
}

SearchSpace default_space(ModelKind kind) {
  const auto k = Dimension::integer("k", 5, 800);
  const auto shrink = Dimension::real("shrink", 0.0, 1000.0);
  const auto weighting = Dimension::categorical("weighting", {"none", "tfidf", "bm25"});
  const auto normalize = Dimension::categorical("normalize", {"true", "false"});
  const auto alpha = Dimension::real("alpha", 0.0, 2.0);
  const auto beta = Dimension::real("beta", 0.0, 2.0);
  switch (kind) {
    case ModelKind::toppop:
      return SearchSpace{};
    case ModelKind::itemknn:
    case ModelKind::userknn:
    case ModelKind::itemknn_cbf:
      return SearchSpace({k, shrink, weighting, normalize});
    case ModelKind::itemknn_cfcbf:
      return SearchSpace({k, shrink, weighting, normalize, Dimension::log_real("feature_weight", 1e-2, 1e2)});
    case ModelKind::p3alpha:
      return SearchSpace({k, alpha});
    case ModelKind::rp3beta:
      return SearchSpace({k, alpha, beta});
    case ModelKind::slim:
      return SearchSpace({Dimension::log_real("l1_ratio", 1e-5, 1.0),
                          Dimension::log_real("reg_magnitude", 1e-3, 1.0)});
  }
  throw UnknownAlgorithm("no search space for this algorithm");
}

SearchMode parse_search_mode(std::string_view name) {
  if (name == "smbo") return SearchMode::smbo;
  if (name == "random") return SearchMode::random;
  throw InvalidConfig("unknown search mode '" + std::string(name) + "'");
}

std::string_view to_string(SearchMode m) { return m == SearchMode::smbo ? "smbo" : "random"; }

const Trial& StudyResult::best_trial() const {
  if (!best) throw Error("study has no successful trial");
  return trials.at(*best);
}

namespace {

struct Scored {
  std::vector<double> x;
  double ei;
};

std::vector<double> roundtrip(const SearchSpace& space, const std::vector<double>& x) {
  return space.encode(space.decode(x));
}

Configuration propose(const SearchSpace& space, const std::vector<Trial>& trials,
                      const StudyOptions& opt, Rng& rng) {
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  for (const auto& t : trials) {
    if (!t.value) continue;
    xs.push_back(space.encode(t.config));
    ys.push_back(*t.value);
  }
  GaussianProcess gp;
  gp.fit(xs, ys);
  const double best = *std::max_element(ys.begin(), ys.end());
  const double xi = opt.xi * gp.y_scale();
  const auto acquisition = [&](const std::vector<double>& x) {
    const auto p = gp.predict(x);
    return expected_improvement(p.mean, p.variance, best, xi);
  };

  std::vector<Scored> pool;
  pool.reserve(opt.n_candidates);
  for (std::size_t c = 0; c < opt.n_candidates; ++c) {
    auto x = space.encode(space.sample(rng));
    const double ei = acquisition(x);
    pool.push_back({std::move(x), ei});
  }

  // Local refinement around the best random candidates and observed points.
  constexpr std::size_t kStarts = 8;
  constexpr std::size_t kSteps = 32;
  constexpr double kStep = 0.05;
  std::vector<std::vector<double>> starts;
  {
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const std::size_t n_top = std::min(kStarts, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_top), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        return pool[a].ei != pool[b].ei ? pool[a].ei > pool[b].ei : a < b;
                      });
    for (std::size_t i = 0; i < n_top; ++i) starts.push_back(pool[order[i]].x);
    std::vector<std::size_t> by_value(ys.size());
    for (std::size_t i = 0; i < by_value.size(); ++i) by_value[i] = i;
    std::stable_sort(by_value.begin(), by_value.end(), [&](std::size_t a, std::size_t b) { return ys[a] > ys[b]; });
    for (std::size_t i = 0; i < std::min<std::size_t>(3, by_value.size()); ++i) starts.push_back(xs[by_value[i]]);
  }
  for (const auto& start : starts) {
    auto current = start;
    double current_ei = acquisition(current);
    for (std::size_t s = 0; s < kSteps; ++s) {
      auto x = current;
      std::size_t pos = 0;
      for (const auto& d : space.dimensions()) {
        if (d.kind == DimensionKind::categorical) {
          if (rng.uniform() < 0.1) {
            const auto pick = rng.below(d.categories.size());
            for (std::size_t k = 0; k < d.categories.size(); ++k) x[pos + k] = k == pick ? 1.0 : 0.0;
          }
        } else {
          x[pos] = std::clamp(x[pos] + kStep * rng.normal(), 0.0, 1.0);
        }
        pos += d.encoded_width();
      }
      x = roundtrip(space, x);
      const double ei = acquisition(x);
      pool.push_back({x, ei});
      if (ei > current_ei) {
        current = std::move(x);
        current_ei = ei;
      }
    }
  }

  std::size_t arg = 0;
  for (std::size_t i = 1; i < pool.size(); ++i) {
    if (pool[i].ei > pool[arg].ei) arg = i;
  }
  return space.decode(pool[arg].x);
}

}  // namespace

StudyResult run_study(const Objective& objective, const SearchSpace& space, const StudyOptions& options) {
  if (options.n_trials < 1) throw InvalidConfig("a study needs at least one trial");
  if (options.n_init > options.n_trials) throw InvalidConfig("n_init must not exceed n_trials");

  StudyResult result;
  result.seed = options.seed;
  result.mode = options.mode;
  const std::size_t n_trials = space.empty() ? 1 : options.n_trials;

  for (std::size_t t = 0; t < n_trials; ++t) {
    if (t < options.resume.size()) {
      Trial replay = options.resume[t];
      if (replay.number != t) throw InvalidConfig("study log is out of order at trial " + std::to_string(t));
      if (!space.empty() && !space.contains(replay.config)) {
        throw InvalidConfig("logged trial " + std::to_string(t) + " lies outside the search space");
      }
      result.trials.push_back(std::move(replay));
      continue;
    }

    Rng rng(options.seed, t + 1);
    const auto successes = static_cast<std::size_t>(std::count_if(
        result.trials.begin(), result.trials.end(), [](const Trial& x) { return x.value.has_value(); }));
    Configuration config;
    if (space.empty()) {
      config = {};
    } else if (options.mode == SearchMode::random || t < options.n_init || successes < 2) {
      config = space.sample(rng);
    } else {
      config = propose(space, result.trials, options, rng);
    }

    Trial trial;
    trial.number = t;
    trial.config = config;
    const auto start = std::chrono::steady_clock::now();
    try {
      const double v = objective(config);
      if (std::isfinite(v)) {
        trial.value = v;
      } else {
        trial.error = "objective returned a non-finite value";
      }
    } catch (const std::exception& e) {
      trial.error = e.what();
    }
    trial.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (options.on_trial) options.on_trial(trial);
    result.trials.push_back(std::move(trial));
  }

  for (std::size_t i = 0; i < result.trials.size(); ++i) {
    const auto& v = result.trials[i].value;
    if (v && (!result.best || *v > *result.trials[*result.best].value)) result.best = i;
  }
  return result;
}

nlohmann::json trial_to_json(const Trial& t, bool with_duration) {
  nlohmann::json j;
  j["trial"] = t.number;
  j["config"] = to_json(t.config);
  j["value"] = t.value ? nlohmann::json(*t.value) : nlohmann::json(nullptr);
  if (!t.error.empty()) j["error"] = t.error;
  // Logical clock: the trial's position in the sequence.
  j["timestamp"] = t.number;
  if (with_duration) j["duration_seconds"] = t.duration_seconds;
  return j;
}

Trial trial_from_json(const nlohmann::json& j) {
  Trial t;
  t.number = j.at("trial").get<std::size_t>();
  t.config = configuration_from_json(j.at("config"));
  if (!j.at("value").is_null()) t.value = j.at("value").get<double>();
  if (j.contains("error")) t.error = j.at("error").get<std::string>();
  if (j.contains("duration_seconds")) t.duration_seconds = j.at("duration_seconds").get<double>();
  return t;
}

std::vector<Trial> read_study_log(std::istream& in) {
  std::vector<Trial> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(trial_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("study log", line_no, e.what());
    }
  }
  return out;
}

}  // namespace recbase
