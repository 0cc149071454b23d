// recbase: tuned top-n baselines, evaluation protocols and split forensics.
//
//   recbase run <config>
//   recbase tune <config> --algo <name>
//   recbase evaluate <config> --algo <name> --params <file>
//   recbase split <config>
//   recbase audit <train> <test>
//   recbase profile <train> <test>
//
// Exit status: 0 success, 1 configuration or usage error, 2 runtime error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "recbase/config.hpp"
#include "recbase/dataset.hpp"
#include "recbase/diagnostics.hpp"
#include "recbase/errors.hpp"
#include "recbase/exec.hpp"
#include "recbase/experiment.hpp"

namespace fs = std::filesystem;
using namespace recbase;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

struct Common {
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 0;
  bool serial = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Override the global seed");
  cmd->add_option("--out", c.out, "Override the output location");
  cmd->add_option("--threads", c.threads, "Worker threads (0 keeps the default)")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--serial", c.serial, "Use the serial reference kernels");
  cmd->add_flag("-q,--quiet", c.quiet, "Suppress progress output");
}

// Config problems exit with 1; anything the loader raises counts as one.
ExperimentConfig configure(const std::string& path, const Common& c) {
  auto cfg = load_config(path, c.seed);
  if (!c.out.empty()) cfg.output = fs::absolute(c.out).string();
  if (c.threads > 0) cfg.threads = c.threads;
  if (cfg.threads > 0) set_num_threads(cfg.threads);
  return cfg;
}

RunOptions options_for(const Common& c) {
  RunOptions o;
  o.exec = c.serial ? Exec::serial : Exec::parallel;
  if (!c.quiet) o.log = [](const std::string& line) { std::cerr << "[recbase] " << line << '\n'; };
  return o;
}

Configuration read_params_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("cannot open params file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidConfig("params file " + path + " is not valid JSON: " + e.what());
  }
  // Accept either a bare object or the best_params.json layout.
  if (j.contains("best") && j.at("best").is_object() && j.at("best").size() == 1) j = j.at("best").begin().value();
  return configuration_from_json(j);
}

void print_summary(const ResultBundle& b) {
  for (const auto& r : b.algorithms) {
    std::cout << r.name << " " << to_json(r.params).dump();
    if (r.metrics) {
      for (const auto& [key, v] : r.metrics->values) {
        std::cout << " " << metric_label(key.first, key.second) << "=" << format_metric(v);
      }
    }
    std::cout << '\n';
  }
  if (b.audit) {
    std::cout << "audit " << (b.audit->verdict == Verdict::plausible ? "plausible" : "anomalous")
              << " z=" << b.audit->z_score << '\n';
  }
  if (!b.files.empty()) std::cout << "output " << b.output_dir.string() << '\n';
}

int report(const std::exception& e, int code) {
  std::cerr << "recbase: " << e.what() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tuned top-n recommendation baselines with evaluation and split forensics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(version()));

  Common common;
  std::string config_path;
  std::string algo;
  std::string params_path;
  bool resume = false;

  auto* run = app.add_subcommand("run", "Run a full experiment");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_flag("--resume", resume, "Replay study logs found in the output directory");
  add_common(run, common);

  auto* tune = app.add_subcommand("tune", "Run the hyper-parameter study of one algorithm");
  tune->add_option("config", config_path, "Experiment config (JSON)")->required();
  tune->add_option("--algo", algo, "Algorithm name from the config")->required();
  tune->add_flag("--resume", resume, "Replay the study log found in the output directory");
  add_common(tune, common);

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate one algorithm with fixed parameters");
  evaluate->add_option("config", config_path, "Experiment config (JSON)")->required();
  evaluate->add_option("--algo", algo, "Algorithm name from the config")->required();
  evaluate->add_option("--params", params_path, "JSON object of parameters")->required();
  add_common(evaluate, common);

  auto* split = app.add_subcommand("split", "Write the configured split as delimited files");
  split->add_option("config", config_path, "Experiment config (JSON)")->required();
  add_common(split, common);

  std::string train_path;
  std::string test_path;
  std::string delimiter = "\t";
  std::size_t resamples = 100;
  double threshold = 4.0;
  std::uint64_t audit_seed = 0;
  std::string file_out;

  auto* audit = app.add_subcommand("audit", "Test a train/test split for popularity bias");
  audit->add_option("train", train_path, "Train interactions (user item [value [timestamp]])")->required();
  audit->add_option("test", test_path, "Test interactions")->required();
  audit->add_option("--resamples", resamples, "Reference re-splits")->check(CLI::Range(20, 1000000));
  audit->add_option("--threshold", threshold, "Anomaly threshold on |z|")->check(CLI::PositiveNumber);
  audit->add_option("--seed", audit_seed, "Resampling seed");
  audit->add_option("--delimiter", delimiter, "Field delimiter");
  audit->add_option("--out", file_out, "Write the JSON report here instead of stdout");
  audit->add_option("--threads", common.threads, "Worker threads")->check(CLI::NonNegativeNumber);

  auto* profile = app.add_subcommand("profile", "Per-item normalized popularity of train and test");
  profile->add_option("train", train_path, "Train interactions")->required();
  profile->add_option("test", test_path, "Test interactions")->required();
  profile->add_option("--delimiter", delimiter, "Field delimiter");
  profile->add_option("--out", file_out, "Write the CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kConfigError;
  }

  ExperimentConfig cfg;
  const bool needs_config = run->parsed() || tune->parsed() || evaluate->parsed() || split->parsed();
  if (needs_config) {
    try {
      cfg = configure(config_path, common);
    } catch (const std::exception& e) {
      return report(e, kConfigError);
    }
  }

  try {
    auto options = options_for(common);
    options.resume = resume;
    if (run->parsed()) {
      print_summary(run_experiment(cfg, options));
    } else if (tune->parsed()) {
      cfg.algorithm(algo);
      options.only_algorithm = algo;
      options.tune_only = true;
      print_summary(run_experiment(cfg, options));
    } else if (evaluate->parsed()) {
      cfg.algorithm(algo);
      options.only_algorithm = algo;
      options.params_override = read_params_file(params_path);
      print_summary(run_experiment(cfg, options));
    } else if (split->parsed()) {
      const auto dir = output_directory(cfg);
      for (const auto& f : write_split_files(cfg, dir, options)) std::cout << (dir / f).string() << '\n';
    } else if (audit->parsed() || profile->parsed()) {
      if (common.threads > 0) set_num_threads(common.threads);
      const auto pair = read_split_files(train_path, test_path, delimiter);
      std::ostringstream text;
      if (audit->parsed()) {
        const auto rep = audit_split(pair.split, resamples, audit_seed, threshold);
        text << to_json(rep).dump(2) << '\n';
        std::cerr << "verdict " << (rep.verdict == Verdict::plausible ? "plausible" : "anomalous") << '\n';
      } else {
        write_profile_csv(text, popularity_profile(pair.split), &pair.items.ids());
      }
      if (file_out.empty()) {
        std::cout << text.str();
      } else {
        std::ofstream out(file_out, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + file_out);
        out << text.str();
      }
    }
  } catch (const StageError& e) {
    return report(e, e.config_error() ? kConfigError : kRuntimeError);
  } catch (const InvalidConfig& e) {
    return report(e, kConfigError);
  } catch (const std::exception& e) {
    return report(e, kRuntimeError);
  }
  return kOk;
}
