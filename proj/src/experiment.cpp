#include "recbase/experiment.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "recbase/errors.hpp"
#include "recbase/exec.hpp"
#include "recbase/rng.hpp"

namespace recbase {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view version() { return RECBASE_VERSION; }

void SealedTest::open(std::string_view stage) {
  open_ = true;
  log_.push_back("open:" + std::string(stage));
}

const InteractionMatrix& SealedTest::read(std::string_view stage) {
  if (!open_) {
    log_.push_back("denied:" + std::string(stage));
    throw TestIsolationViolation("stage '" + std::string(stage) + "' read the test split before evaluation");
  }
  log_.push_back("read:" + std::string(stage));
  return test_;
}

namespace {

const char* kInnerHoldout = "inner 80/20 random holdout of train";
const char* kInnerLoo = "inner leave-one-out of train";

template <typename F>
auto run_stage(const std::string& stage, const RunOptions& options, F&& body) -> decltype(body()) {
  if (options.log) options.log("stage " + stage);
  try {
    return body();
  } catch (const TestIsolationViolation&) {
    throw;
  } catch (const StageError&) {
    throw;
  } catch (const InvalidConfig& e) {
    throw StageError(stage, e.what(), true);
  } catch (const std::exception& e) {
    throw StageError(stage, e.what(), false);
  }
}

std::string split_description(const SplitSpec& s, bool imported) {
  std::string d = imported ? "imported " : "";
  if (s.method == SplitMethod::leave_one_out) {
    return d + "leave-one-out (" + (s.mode == LeaveOneOutMode::last_by_timestamp ? "last" : "random") + ")";
  }
  std::ostringstream os;
  os << d << "holdout ratio=" << format_metric(s.ratio) << (s.exact_count ? " exact-count" : " bernoulli");
  return os.str();
}

std::string protocol_description(const ExperimentConfig& cfg, bool imported_negatives) {
  if (!cfg.protocol.sampled) return "full-ranking over unseen items";
  if (imported_negatives) return "sampled-negatives from imported file";
  return "sampled-negatives n=" + std::to_string(cfg.protocol.negatives) + " per positive";
}

std::vector<std::string> header_lines(const std::string& hash) {
  return {"config_hash=" + hash, "version=" + std::string(version())};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

SearchSpace tuning_space(const AlgorithmConfig& a) {
  const auto base = default_space(a.kind);
  std::vector<Dimension> dims;
  for (const auto& d : base.dimensions()) {
    if (!a.tune->fixed.count(d.name)) dims.push_back(d);
  }
  SearchSpace space(std::move(dims));
  for (const auto& d : a.tune->space_overrides) {
    if (a.tune->fixed.count(d.name)) throw InvalidConfig("parameter '" + d.name + "' is both fixed and searched");
    if (space.find(d.name) == nullptr) throw InvalidConfig("'" + d.name + "' is not a tunable parameter");
    space.override_dimension(d);
  }
  return space;
}

Configuration merged(const Configuration& searched, const Configuration& fixed) {
  Configuration c = fixed;
  for (const auto& [k, v] : searched) c[k] = v;
  return c;
}

std::vector<Trial> read_resume_log(const fs::path& path, const std::string& hash) {
  std::vector<Trial> out;
  std::ifstream in(path);
  if (!in) return out;
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (lines[k].find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(lines[k]);
    } catch (const json::exception& e) {
      // A torn final line from an interrupted run is dropped.
      if (k + 1 == lines.size()) break;
      throw ParseError(path.string(), k + 1, e.what());
    }
    if (j.value("config_hash", std::string()) != hash) {
      throw InvalidConfig("study log " + path.string() + " was written by a different config");
    }
    out.push_back(trial_from_json(j));
  }
  return out;
}

std::string trial_line(const Trial& t, const std::string& hash, const std::string& algo) {
  auto j = trial_to_json(t);
  j["config_hash"] = hash;
  j["version"] = std::string(version());
  j["algorithm"] = algo;
  return j.dump() + "\n";
}

}  // namespace

fs::path output_directory(const ExperimentConfig& cfg) {
  const char* root_env = std::getenv("RECBASE_OUTPUT_ROOT");
  const fs::path root = (root_env != nullptr && *root_env != '\0') ? fs::path(root_env) : fs::path("results");
  if (!cfg.output.empty()) {
    const fs::path out(cfg.output);
    return out.is_absolute() ? out : root / out;
  }
  return root / config_hash(cfg);
}

SplitPair make_split(const ExperimentConfig& cfg, const LoadedDataset& data) {
  if (data.imported_split) return *data.imported_split;
  const auto& s = cfg.split;
  if (s.spec.method == SplitMethod::holdout) {
    return split_random_holdout(*data.urm, s.spec.ratio, s.seed, s.spec.exact_count);
  }
  return split_leave_one_out(*data.urm, s.spec.mode, s.seed);
}

SplitPair inner_split(const SplitPair& outer, std::uint64_t seed) {
  if (outer.spec.method == SplitMethod::leave_one_out) {
    const auto mode = outer.spec.mode == LeaveOneOutMode::last_by_timestamp && outer.train.has_timestamps()
                          ? LeaveOneOutMode::last_by_timestamp
                          : LeaveOneOutMode::random_one;
    return split_leave_one_out(outer.train, mode, seed);
  }
  return split_random_holdout(outer.train, 0.8, seed);
}

ResultBundle run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  ResultBundle bundle;
  bundle.config_hash = config_hash(cfg);
  bundle.version = std::string(version());
  if (cfg.threads > 0) set_num_threads(cfg.threads);
  const auto exec = options.exec;
  const auto& hash = bundle.config_hash;

  std::vector<const AlgorithmConfig*> algos;
  for (const auto& a : cfg.algorithms) {
    if (!options.only_algorithm || a.name == *options.only_algorithm) algos.push_back(&a);
  }
  if (algos.empty()) {
    throw StageError("setup", "no algorithm named '" + options.only_algorithm.value_or("") + "'", true);
  }

  const fs::path out_dir = output_directory(cfg);
  bundle.output_dir = out_dir;
  if (options.write_files) {
    run_stage("setup", options, [&] { fs::create_directories(out_dir); });
  }

  const auto data = run_stage("load", options, [&] { return load_dataset(cfg); });
  bundle.stats = data.stats;
  if (options.log) {
    options.log("loaded " + std::to_string(data.stats.users) + " users x " + std::to_string(data.stats.items) +
                " items, " + std::to_string(data.stats.interactions) + " interactions (" +
                std::to_string(data.stats.rows_read) + " rows read, " + std::to_string(data.stats.rows_dropped) +
                " dropped, " + std::to_string(data.stats.duplicates) + " duplicates)");
  }
  const FeatureMatrix* icm = data.icm ? &*data.icm : nullptr;

  // Only the training side is kept in the clear; the test side is sealed.
  auto [train, sealed, split_spec, split_seed] = run_stage("split", options, [&] {
    auto s = make_split(cfg, data);
    return std::tuple{std::make_shared<const InteractionMatrix>(std::move(s.train)), SealedTest(std::move(s.test)),
                      s.spec, s.seed};
  });
  bundle.train_interactions = train->nnz();
  if (options.stage_hook) options.stage_hook("split", sealed);
  const bool inner_loo = split_spec.method == SplitMethod::leave_one_out;

  for (const auto* a : algos) {
    AlgorithmResult r;
    r.name = a->name;
    r.kind = a->kind;
    if (options.params_override) {
      r.params = *options.params_override;
    } else if (!a->tune) {
      r.params = a->params;
    } else {
      const auto& tune = *a->tune;
      r.study = run_stage("tune:" + a->name, options, [&] {
        SplitPair outer_view;
        outer_view.train = *train;
        outer_view.spec = split_spec;
        const auto inner = inner_split(outer_view, mix_seed(tune.seed, 0));
        std::optional<NegativeSampleSet> inner_negs;
        if (cfg.protocol.sampled) {
          inner_negs = sample_negatives(inner, cfg.protocol.negatives, mix_seed(tune.seed, 1));
        }
        const auto inner_train = std::make_shared<const InteractionMatrix>(inner.train);
        const std::vector<std::size_t> cutoff{tune.cutoff};
        const auto space = tuning_space(*a);

        const Objective objective = [&](const Configuration& c) {
          const auto model = train_model(a->kind, inner_train, icm, merged(c, tune.fixed), exec);
          const auto table = evaluate_model(model, inner.test, inner_negs ? &*inner_negs : nullptr, cutoff, exec);
          return table.at(tune.metric, tune.cutoff);
        };

        StudyOptions so;
        so.n_trials = tune.n_trials;
        so.n_init = tune.n_init;
        so.seed = tune.seed;
        so.mode = tune.mode;
        const fs::path log_path = out_dir / ("study_" + a->name + ".jsonl");
        if (options.resume) so.resume = read_resume_log(log_path, hash);
        std::ofstream log_file;
        if (options.write_files) {
          log_file.open(log_path, std::ios::binary | std::ios::trunc);
          if (!log_file) throw Error("cannot write " + log_path.string());
          for (const auto& t : so.resume) log_file << trial_line(t, hash, a->name);
          log_file.flush();
        }
        so.on_trial = [&](const Trial& t) {
          if (options.log) {
            options.log(a->name + " trial " + std::to_string(t.number) + ": " +
                        (t.value ? format_metric(*t.value) : "failed (" + t.error + ")"));
          }
          if (log_file.is_open()) {
            log_file << trial_line(t, hash, a->name);
            log_file.flush();
          }
        };
        auto study = run_study(objective, space, so);
        if (!study.best) throw Error("every trial of '" + a->name + "' failed");
        return study;
      });
      if (options.write_files) bundle.files.push_back("study_" + a->name + ".jsonl");
      r.params = merged(r.study->best_trial().config, tune.fixed);
    }
    bundle.algorithms.push_back(std::move(r));
    if (options.stage_hook) options.stage_hook("tune:" + a->name, sealed);
  }

  if (options.tune_only) {
    if (options.write_files) {
      json best = json::object();
      best["config_hash"] = hash;
      best["version"] = bundle.version;
      for (const auto& r : bundle.algorithms) best["best"][r.name] = to_json(r.params);
      write_text(out_dir / "best_params.json", best.dump(2) + "\n");
      bundle.files.push_back("best_params.json");
    }
    bundle.test_accesses = sealed.access_log();
    return bundle;
  }

  std::vector<TrainedModel> models;
  for (const auto& r : bundle.algorithms) {
    models.push_back(run_stage("fit:" + r.name, options, [&] { return train_model(r.kind, train, icm, r.params, exec); }));
    if (options.stage_hook) options.stage_hook("fit:" + r.name, sealed);
  }

  // Evaluation is the first stage allowed to see the test split.
  sealed.open("evaluate");
  SplitPair split;
  bool imported_negs = false;
  std::optional<NegativeSampleSet> negatives;
  run_stage("evaluate", options, [&] {
    split.train = *train;
    split.test = sealed.read("evaluate");
    split.spec = split_spec;
    split.seed = split_seed;
    bundle.test_interactions = split.test.nnz();
    if (cfg.protocol.sampled) {
      if (data.imported_negatives) {
        negatives = *data.imported_negatives;
        imported_negs = true;
      } else {
        negatives = sample_negatives(split, cfg.protocol.negatives, cfg.protocol.seed);
      }
    }
    for (std::size_t k = 0; k < models.size(); ++k) {
      bundle.algorithms[k].metrics =
          evaluate_model(models[k], split.test, negatives ? &*negatives : nullptr, cfg.cutoffs, exec);
    }
  });

  if (cfg.audit.enabled) {
    run_stage("audit", options, [&] {
      sealed.read("audit");
      bundle.audit = audit_split(split, cfg.audit.resamples, cfg.audit.seed, cfg.audit.threshold, exec);
      bundle.profile = popularity_profile(split);
    });
  }
  bundle.test_accesses = sealed.access_log();

  if (!options.write_files) return bundle;

  run_stage("persist", options, [&] {
    const auto header = header_lines(hash);
    const std::string validation = inner_loo ? kInnerLoo : kInnerHoldout;
    std::vector<std::string> comments = header;
    comments.push_back("split=" + split_description(split_spec, data.imported_split.has_value()));
    comments.push_back("protocol=" + protocol_description(cfg, imported_negs));
    comments.push_back("tuning_validation=" + validation);
    comments.push_back("users without test interactions are excluded from averages");

    std::vector<std::pair<std::string, MetricTable>> rows;
    for (const auto& r : bundle.algorithms) rows.emplace_back(r.name, *r.metrics);
    std::ostringstream csv;
    write_metrics_csv(csv, rows, cfg.metrics, cfg.cutoffs, comments);
    write_text(out_dir / "metrics.csv", csv.str());
    bundle.files.push_back("metrics.csv");

    json mj;
    mj["config_hash"] = hash;
    mj["version"] = bundle.version;
    mj["split"] = split_description(split_spec, data.imported_split.has_value());
    mj["protocol"] = protocol_description(cfg, imported_negs);
    mj["tuning_validation"] = validation;
    auto table = metrics_to_json(rows);
    for (std::size_t k = 0; k < bundle.algorithms.size(); ++k) {
      table[k]["kind"] = std::string(to_string(bundle.algorithms[k].kind));
      table[k]["params"] = to_json(bundle.algorithms[k].params);
      table[k]["tuned"] = bundle.algorithms[k].study.has_value();
    }
    mj["algorithms"] = table;
    write_text(out_dir / "metrics.json", mj.dump(2) + "\n");
    bundle.files.push_back("metrics.json");

    if (bundle.audit) {
      json aj;
      aj["config_hash"] = hash;
      aj["version"] = bundle.version;
      aj["report"] = to_json(*bundle.audit);
      aj["profile_divergence"] = profile_divergence(*bundle.profile);
      write_text(out_dir / "audit.json", aj.dump(2) + "\n");
      bundle.files.push_back("audit.json");

      std::ostringstream prof;
      write_profile_csv(prof, *bundle.profile, &data.items.ids(), header);
      write_text(out_dir / "profile.csv", prof.str());
      bundle.files.push_back("profile.csv");
    }

    json manifest;
    manifest["config_hash"] = hash;
    manifest["version"] = bundle.version;
    manifest["config"] = canonical_json(cfg);
    manifest["seeds"] = {{"global", cfg.seed},
                         {"split", split_seed},
                         {"protocol", cfg.protocol.seed},
                         {"audit", cfg.audit.seed}};
    for (const auto* a : algos) {
      if (a->tune) manifest["seeds"]["tune"][a->name] = a->tune->seed;
    }
    manifest["dataset"] = {{"rows_read", data.stats.rows_read},
                           {"rows_dropped", data.stats.rows_dropped},
                           {"duplicates", data.stats.duplicates},
                           {"users", data.stats.users},
                           {"items", data.stats.items},
                           {"interactions", data.stats.interactions},
                           {"train_interactions", bundle.train_interactions},
                           {"test_interactions", bundle.test_interactions}};
    if (negatives) manifest["negatives"] = {{"exhausted_users", negatives->exhausted_users}};
    for (const auto& r : bundle.algorithms) {
      if (r.kind == ModelKind::slim) {
        const auto& rep = models[static_cast<std::size_t>(&r - bundle.algorithms.data())].slim_report();
        manifest["slim"][r.name] = {{"columns", rep.columns},
                                    {"nonconverged", rep.nonconverged},
                                    {"max_sweeps", rep.max_sweeps}};
      }
    }
    manifest["test_accesses"] = bundle.test_accesses;
    auto files = bundle.files;
    files.push_back("manifest.json");
    manifest["files"] = files;
    write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
    bundle.files.push_back("manifest.json");
  });
  return bundle;
}

std::vector<std::string> write_split_files(const ExperimentConfig& cfg, const fs::path& dir,
                                           const RunOptions& options) {
  const auto hash = config_hash(cfg);
  const auto data = run_stage("load", options, [&] { return load_dataset(cfg); });
  return run_stage("split", options, [&] {
    const auto split = make_split(cfg, data);
    fs::create_directories(dir);
    std::vector<std::string> files;
    const auto emit = [&](const std::string& name, const InteractionMatrix& m) {
      std::ostringstream os;
      for (const auto& line : header_lines(hash)) os << "# " << line << '\n';
      write_triples(os, m, data.users, data.items);
      write_text(dir / name, os.str());
      files.push_back(name);
    };
    emit("train.tsv", split.train);
    emit("test.tsv", split.test);
    if (cfg.protocol.sampled) {
      const auto negs = data.imported_negatives ? *data.imported_negatives
                                                : sample_negatives(split, cfg.protocol.negatives, cfg.protocol.seed);
      std::ostringstream os;
      for (const auto& line : header_lines(hash)) os << "# " << line << '\n';
      write_negatives(os, split.test, negs, data.users, data.items);
      write_text(dir / "test.negative", os.str());
      files.push_back("test.negative");
    }
    return files;
  });
}

}  // namespace recbase
