#include "recbase/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>

#include "recbase/errors.hpp"
#include "recbase/rng.hpp"

namespace recbase {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw InvalidConfig(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!ok.count(key)) throw InvalidConfig("unknown key '" + key + "' in " + where);
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw InvalidConfig(where + " is missing '" + key + "'");
  return obj.at(key);
}

template <typename T>
T read(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidConfig(where + "." + key + " has the wrong type");
  }
}

template <typename T>
T read_required(const json& obj, const char* key, const std::string& where) {
  require(obj, key, where);
  return read<T>(obj, key, where);
}

template <typename T>
T read_or(const json& obj, const char* key, T fallback, const std::string& where) {
  return obj.contains(key) ? read<T>(obj, key, where) : fallback;
}

std::size_t read_count(const json& obj, const char* key, std::size_t fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw InvalidConfig(where + "." + key + " must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::uint64_t read_seed(const json& obj, const char* key, std::uint64_t fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw InvalidConfig(where + "." + key + " must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

ColumnMap parse_columns(const json& j) {
  check_keys(j, {"user", "item", "rating", "timestamp"}, "dataset.columns");
  ColumnMap c;
  c.user = read_count(j, "user", 0, "dataset.columns");
  c.item = read_count(j, "item", 1, "dataset.columns");
  c.rating = std::nullopt;
  if (j.contains("rating") && !j.at("rating").is_null()) c.rating = read_count(j, "rating", 0, "dataset.columns");
  if (j.contains("timestamp") && !j.at("timestamp").is_null()) {
    c.timestamp = read_count(j, "timestamp", 0, "dataset.columns");
  }
  if (c.user == c.item) throw InvalidConfig("dataset.columns: user and item share a column");
  return c;
}

DatasetSpec parse_dataset(const json& j) {
  const std::string where = "dataset";
  check_keys(j, {"path", "delimiter", "header", "columns", "binarize_threshold", "duplicates", "features",
                 "split_import"},
             where);
  DatasetSpec d;
  d.path = read_or<std::string>(j, "path", "", where);
  d.delimiter = read_or<std::string>(j, "delimiter", "\t", where);
  if (d.delimiter.empty()) throw InvalidConfig("dataset.delimiter must not be empty");
  d.header = read_or<bool>(j, "header", false, where);
  if (j.contains("columns")) d.columns = parse_columns(j.at("columns"));
  if (j.contains("binarize_threshold") && !j.at("binarize_threshold").is_null()) {
    d.binarize_threshold = read<double>(j, "binarize_threshold", where);
    if (!(*d.binarize_threshold > 0.0)) throw InvalidConfig("dataset.binarize_threshold must be positive");
  }
  if (j.contains("duplicates")) {
    try {
      d.duplicates = parse_duplicate_policy(read<std::string>(j, "duplicates", where));
    } catch (const Error& e) {
      throw InvalidConfig(std::string("dataset.duplicates: ") + e.what());
    }
  }
  if (j.contains("features")) {
    const auto& f = j.at("features");
    const std::string fw = "dataset.features";
    check_keys(f, {"path", "delimiter", "header", "item_column", "feature_column", "weight_column"}, fw);
    FeatureFileSpec spec;
    spec.path = read_required<std::string>(f, "path", fw);
    spec.delimiter = read_or<std::string>(f, "delimiter", "\t", fw);
    if (spec.delimiter.empty()) throw InvalidConfig("dataset.features.delimiter must not be empty");
    spec.header = read_or<bool>(f, "header", false, fw);
    spec.item_column = read_count(f, "item_column", 0, fw);
    spec.feature_column = read_count(f, "feature_column", 1, fw);
    if (f.contains("weight_column") && !f.at("weight_column").is_null()) {
      spec.weight_column = read_count(f, "weight_column", 0, fw);
    }
    d.features = spec;
  }
  if (j.contains("split_import")) {
    const auto& s = j.at("split_import");
    const std::string sw = "dataset.split_import";
    check_keys(s, {"train", "test", "negatives"}, sw);
    require(s, "train", sw);
    require(s, "test", sw);
    SplitImportSpec spec{read<std::string>(s, "train", sw), read<std::string>(s, "test", sw), std::nullopt};
    if (s.contains("negatives")) spec.negatives = read<std::string>(s, "negatives", sw);
    d.split_import = spec;
  }
  if (d.path.empty() && !d.split_import) throw InvalidConfig("dataset needs a path or split_import");
  return d;
}

SplitMethod parse_split_method(const std::string& s) {
  if (s == "holdout") return SplitMethod::holdout;
  if (s == "leave-one-out") return SplitMethod::leave_one_out;
  throw InvalidConfig("split.method must be 'holdout' or 'leave-one-out', got '" + s + "'");
}

LeaveOneOutMode parse_loo_mode(const std::string& s) {
  if (s == "last") return LeaveOneOutMode::last_by_timestamp;
  if (s == "random") return LeaveOneOutMode::random_one;
  throw InvalidConfig("split.mode must be 'last' or 'random', got '" + s + "'");
}

SplitConfig parse_split(const json& j, std::uint64_t global_seed, bool imported) {
  const std::string where = "split";
  check_keys(j, {"method", "ratio", "exact_count", "mode", "seed"}, where);
  SplitConfig s;
  s.seed = read_seed(j, "seed", mix_seed(global_seed, 1), where);
  if (!j.contains("method")) {
    if (imported) return s;
    throw InvalidConfig("split is missing 'method'");
  }
  s.spec.method = parse_split_method(read<std::string>(j, "method", where));
  if (s.spec.method == SplitMethod::holdout) {
    if (j.contains("mode")) throw InvalidConfig("split.mode applies to leave-one-out only");
    s.spec.ratio = read_or<double>(j, "ratio", 0.8, where);
    if (!(s.spec.ratio > 0.0 && s.spec.ratio < 1.0)) throw InvalidConfig("split.ratio must lie in (0, 1)");
    s.spec.exact_count = read_or<bool>(j, "exact_count", false, where);
  } else {
    if (j.contains("ratio") || j.contains("exact_count")) {
      throw InvalidConfig("split.ratio and split.exact_count apply to holdout only");
    }
    // Which interaction is held out changes results; it must be stated.
    s.spec.mode = parse_loo_mode(read_required<std::string>(j, "mode", where));
  }
  return s;
}

ProtocolConfig parse_protocol(const json& j, std::uint64_t global_seed) {
  const std::string where = "protocol";
  check_keys(j, {"kind", "negatives", "seed"}, where);
  ProtocolConfig p;
  const auto kind = read_required<std::string>(j, "kind", where);
  p.seed = read_seed(j, "seed", mix_seed(global_seed, 2), where);
  if (kind == "full-ranking") {
    if (j.contains("negatives")) throw InvalidConfig("protocol.negatives applies to sampled-negatives only");
    return p;
  }
  if (kind != "sampled-negatives") {
    throw InvalidConfig("protocol.kind must be 'full-ranking' or 'sampled-negatives', got '" + kind + "'");
  }
  p.sampled = true;
  p.negatives = read_count(j, "negatives", 100, where);
  if (p.negatives == 0) throw InvalidConfig("protocol.negatives must be positive");
  return p;
}

Dimension parse_dimension(const std::string& name, const json& j, const std::string& where) {
  check_keys(j, {"type", "low", "high", "values"}, where);
  const auto type = read_required<std::string>(j, "type", where);
  if (type == "categorical") {
    std::vector<std::string> values;
    for (const auto& v : require(j, "values", where)) {
      if (v.is_string()) values.push_back(v.get<std::string>());
      else if (v.is_boolean()) values.push_back(v.get<bool>() ? "true" : "false");
      else throw InvalidConfig(where + ".values must hold strings");
    }
    return Dimension::categorical(name, std::move(values));
  }
  require(j, "low", where);
  require(j, "high", where);
  if (type == "integer") {
    return Dimension::integer(name, read<std::int64_t>(j, "low", where), read<std::int64_t>(j, "high", where));
  }
  if (type == "real") return Dimension::real(name, read<double>(j, "low", where), read<double>(j, "high", where));
  if (type == "log-real") {
    return Dimension::log_real(name, read<double>(j, "low", where), read<double>(j, "high", where));
  }
  throw InvalidConfig(where + ".type must be integer, real, log-real or categorical");
}

TuneBlock parse_tune(const json& j, const std::string& where, std::uint64_t seed) {
  check_keys(j, {"n_trials", "n_init", "metric", "cutoff", "mode", "seed", "space", "fixed"}, where);
  TuneBlock t;
  t.n_trials = read_count(j, "n_trials", 35, where);
  t.n_init = read_count(j, "n_init", 5, where);
  if (t.n_trials == 0) throw InvalidConfig(where + ".n_trials must be positive");
  if (t.n_init > t.n_trials) throw InvalidConfig(where + ".n_init must not exceed n_trials");
  try {
    t.metric = parse_metric(read_required<std::string>(j, "metric", where));
  } catch (const InvalidConfig&) {
    throw;
  } catch (const Error& e) {
    throw InvalidConfig(where + ".metric: " + e.what());
  }
  require(j, "cutoff", where);
  t.cutoff = read_count(j, "cutoff", 10, where);
  if (t.cutoff == 0) throw InvalidConfig(where + ".cutoff must be positive");
  if (j.contains("mode")) {
    try {
      t.mode = parse_search_mode(read<std::string>(j, "mode", where));
    } catch (const Error& e) {
      throw InvalidConfig(where + ".mode: " + e.what());
    }
  }
  t.seed = read_seed(j, "seed", seed, where);
  if (j.contains("space")) {
    const auto& space = j.at("space");
    if (!space.is_object()) throw InvalidConfig(where + ".space must be an object");
    for (const auto& [name, dim] : space.items()) {
      t.space_overrides.push_back(parse_dimension(name, dim, where + ".space." + name));
    }
  }
  if (j.contains("fixed")) t.fixed = configuration_from_json(j.at("fixed"));
  return t;
}

AlgorithmConfig parse_algorithm(const json& j, std::size_t index, std::uint64_t global_seed) {
  const std::string where = "algorithms[" + std::to_string(index) + "]";
  check_keys(j, {"name", "kind", "params", "tune"}, where);
  AlgorithmConfig a;
  const auto kind = read_required<std::string>(j, "kind", where);
  try {
    a.kind = parse_model_kind(kind);
  } catch (const Error& e) {
    throw InvalidConfig(where + ".kind: " + e.what());
  }
  a.name = read_or<std::string>(j, "name", kind, where);
  if (a.name.empty() || a.name.find_first_of(",/\\ \t\n") != std::string::npos) {
    throw InvalidConfig(where + ".name must be non-empty without separators or whitespace");
  }
  if (j.contains("params") && j.contains("tune")) throw InvalidConfig(where + " has both params and tune");
  const auto names = parameter_names(a.kind);
  const auto check_names = [&](const Configuration& c, const std::string& ctx) {
    for (const auto& [name, _] : c) {
      if (std::find(names.begin(), names.end(), name) == names.end()) {
        throw InvalidConfig("unknown parameter '" + name + "' in " + ctx);
      }
    }
  };
  if (j.contains("params")) {
    a.params = configuration_from_json(j.at("params"));
    check_names(a.params, where + ".params");
  }
  if (j.contains("tune")) {
    a.tune = parse_tune(j.at("tune"), where + ".tune", mix_seed(global_seed, 100 + index));
    check_names(a.tune->fixed, where + ".tune.fixed");
    for (const auto& d : a.tune->space_overrides) {
      if (std::find(names.begin(), names.end(), d.name) == names.end()) {
        throw InvalidConfig("unknown parameter '" + d.name + "' in " + where + ".tune.space");
      }
    }
  }
  return a;
}

AuditConfig parse_audit(const json& j, std::uint64_t global_seed) {
  const std::string where = "audit";
  check_keys(j, {"enabled", "resamples", "threshold", "seed"}, where);
  AuditConfig a;
  a.enabled = read_or<bool>(j, "enabled", true, where);
  a.resamples = read_count(j, "resamples", 100, where);
  if (a.resamples < 20) throw InvalidConfig("audit.resamples must be at least 20");
  a.threshold = read_or<double>(j, "threshold", 4.0, where);
  if (!(a.threshold > 0.0)) throw InvalidConfig("audit.threshold must be positive");
  a.seed = read_seed(j, "seed", mix_seed(global_seed, 3), where);
  return a;
}

std::string split_method_name(SplitMethod m) { return m == SplitMethod::holdout ? "holdout" : "leave-one-out"; }

json dimension_json(const Dimension& d) {
  switch (d.kind) {
    case DimensionKind::categorical: return {{"type", "categorical"}, {"values", d.categories}};
    case DimensionKind::integer_uniform:
      return {{"type", "integer"}, {"low", static_cast<std::int64_t>(d.low)}, {"high", static_cast<std::int64_t>(d.high)}};
    case DimensionKind::real_uniform: return {{"type", "real"}, {"low", d.low}, {"high", d.high}};
    case DimensionKind::real_log_uniform: return {{"type", "log-real"}, {"low", d.low}, {"high", d.high}};
  }
  return {};
}

}  // namespace

fs::path ExperimentConfig::resolve(const std::string& path) const {
  const fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

const AlgorithmConfig& ExperimentConfig::algorithm(const std::string& name) const {
  for (const auto& a : algorithms) {
    if (a.name == name) return a;
  }
  throw InvalidConfig("no algorithm named '" + name + "' in config");
}

ExperimentConfig parse_config(const json& doc, const fs::path& base_dir) {
  check_keys(doc, {"schema_version", "seed", "dataset", "split", "protocol", "cutoffs", "metrics", "algorithms",
                   "audit", "output", "threads"},
             "config");
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  cfg.schema_version = read_required<int>(doc, "schema_version", "config");
  if (cfg.schema_version != kSchemaVersion) {
    throw InvalidConfig("unsupported schema_version " + std::to_string(cfg.schema_version));
  }
  require(doc, "seed", "config");
  cfg.seed = read_seed(doc, "seed", 0, "config");
  cfg.dataset = parse_dataset(require(doc, "dataset", "config"));
  const bool imported = cfg.dataset.split_import.has_value();
  cfg.split = parse_split(doc.contains("split") ? doc.at("split") : json::object(), cfg.seed, imported);
  if (!doc.contains("split") && !imported) throw InvalidConfig("config is missing 'split'");
  cfg.protocol = parse_protocol(require(doc, "protocol", "config"), cfg.seed);

  for (const auto& c : require(doc, "cutoffs", "config")) {
    if (!c.is_number_integer() || c.get<std::int64_t>() <= 0) throw InvalidConfig("cutoffs must be positive integers");
    cfg.cutoffs.push_back(c.get<std::size_t>());
  }
  if (cfg.cutoffs.empty()) throw InvalidConfig("cutoffs must not be empty");
  std::sort(cfg.cutoffs.begin(), cfg.cutoffs.end());
  cfg.cutoffs.erase(std::unique(cfg.cutoffs.begin(), cfg.cutoffs.end()), cfg.cutoffs.end());

  if (doc.contains("metrics")) {
    for (const auto& m : doc.at("metrics")) {
      if (!m.is_string()) throw InvalidConfig("metrics must be names");
      try {
        cfg.metrics.push_back(parse_metric(m.get<std::string>()));
      } catch (const InvalidConfig&) {
        throw;
      } catch (const Error& e) {
        throw InvalidConfig(std::string("metrics: ") + e.what());
      }
    }
  } else {
    cfg.metrics = {Metric::precision, Metric::recall, Metric::hit_rate, Metric::ndcg, Metric::map, Metric::mrr};
  }

  const auto& algos = require(doc, "algorithms", "config");
  if (!algos.is_array() || algos.empty()) throw InvalidConfig("algorithms must be a non-empty list");
  std::set<std::string> names;
  for (std::size_t i = 0; i < algos.size(); ++i) {
    auto a = parse_algorithm(algos.at(i), i, cfg.seed);
    if (!names.insert(a.name).second) throw InvalidConfig("duplicate algorithm name '" + a.name + "'");
    if (needs_features(a.kind) && !cfg.dataset.features) {
      throw InvalidConfig("algorithm '" + a.name + "' needs dataset.features");
    }
    cfg.algorithms.push_back(std::move(a));
  }
  cfg.audit = doc.contains("audit") ? parse_audit(doc.at("audit"), cfg.seed) : parse_audit(json::object(), cfg.seed);
  cfg.output = read_or<std::string>(doc, "output", "", "config");
  if (doc.contains("threads")) {
    cfg.threads = read<int>(doc, "threads", "config");
    if (cfg.threads < 0) throw InvalidConfig("threads must be non-negative");
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidConfig("config " + path.string() + " is not valid JSON: " + e.what());
  }
  if (seed_override && doc.is_object()) doc["seed"] = *seed_override;
  return parse_config(doc, fs::absolute(path).parent_path());
}

json canonical_json(const ExperimentConfig& cfg) {
  json j;
  j["schema_version"] = cfg.schema_version;
  j["seed"] = cfg.seed;

  const auto& d = cfg.dataset;
  json ds;
  ds["path"] = d.path;
  ds["delimiter"] = d.delimiter;
  ds["header"] = d.header;
  ds["columns"] = {{"user", d.columns.user},
                   {"item", d.columns.item},
                   {"rating", d.columns.rating ? json(*d.columns.rating) : json(nullptr)},
                   {"timestamp", d.columns.timestamp ? json(*d.columns.timestamp) : json(nullptr)}};
  ds["binarize_threshold"] = d.binarize_threshold ? json(*d.binarize_threshold) : json(nullptr);
  ds["duplicates"] = d.duplicates == DuplicatePolicy::keep_last  ? "keep-last"
                     : d.duplicates == DuplicatePolicy::keep_max ? "keep-max"
                                                                 : "sum";
  if (d.features) {
    ds["features"] = {{"path", d.features->path},
                      {"delimiter", d.features->delimiter},
                      {"header", d.features->header},
                      {"item_column", d.features->item_column},
                      {"feature_column", d.features->feature_column},
                      {"weight_column", d.features->weight_column ? json(*d.features->weight_column) : json(nullptr)}};
  }
  if (d.split_import) {
    ds["split_import"] = {{"train", d.split_import->train},
                          {"test", d.split_import->test},
                          {"negatives", d.split_import->negatives ? json(*d.split_import->negatives) : json(nullptr)}};
  }
  j["dataset"] = ds;

  json split{{"method", split_method_name(cfg.split.spec.method)}, {"seed", cfg.split.seed}};
  if (cfg.split.spec.method == SplitMethod::holdout) {
    split["ratio"] = cfg.split.spec.ratio;
    split["exact_count"] = cfg.split.spec.exact_count;
  } else {
    split["mode"] = cfg.split.spec.mode == LeaveOneOutMode::last_by_timestamp ? "last" : "random";
  }
  j["split"] = split;

  j["protocol"] = cfg.protocol.sampled
                      ? json{{"kind", "sampled-negatives"}, {"negatives", cfg.protocol.negatives}, {"seed", cfg.protocol.seed}}
                      : json{{"kind", "full-ranking"}, {"seed", cfg.protocol.seed}};
  j["cutoffs"] = cfg.cutoffs;
  json metrics = json::array();
  for (auto m : cfg.metrics) metrics.push_back(std::string(to_string(m)));
  j["metrics"] = metrics;

  json algos = json::array();
  for (const auto& a : cfg.algorithms) {
    json aj{{"name", a.name}, {"kind", std::string(to_string(a.kind))}};
    if (a.tune) {
      json space = json::object();
      for (const auto& dim : a.tune->space_overrides) space[dim.name] = dimension_json(dim);
      aj["tune"] = {{"n_trials", a.tune->n_trials}, {"n_init", a.tune->n_init},
                    {"metric", std::string(to_string(a.tune->metric))}, {"cutoff", a.tune->cutoff},
                    {"mode", std::string(to_string(a.tune->mode))}, {"seed", a.tune->seed},
                    {"space", space}, {"fixed", to_json(a.tune->fixed)}};
    } else {
      aj["params"] = to_json(a.params);
    }
    algos.push_back(aj);
  }
  j["algorithms"] = algos;
  j["audit"] = {{"enabled", cfg.audit.enabled},
                {"resamples", cfg.audit.resamples},
                {"threshold", cfg.audit.threshold},
                {"seed", cfg.audit.seed}};
  return j;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const ExperimentConfig& cfg) { return fnv1a_hex(canonical_json(cfg).dump()); }

}  // namespace recbase
