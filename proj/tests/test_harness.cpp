#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "recbase/config.hpp"
#include "recbase/dataset.hpp"
#include "recbase/errors.hpp"
#include "recbase/experiment.hpp"
#include "recbase/synthetic.hpp"

namespace fs = std::filesystem;
using namespace recbase;
using nlohmann::json;

namespace {

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / (std::string("recbase_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

void write_synthetic(const fs::path& p) {
  SyntheticSpec spec;
  spec.n_users = 80;
  spec.n_items = 60;
  spec.n_interactions = 1200;
  spec.with_timestamps = true;
  const auto m = synthetic_interactions(spec);
  IdMap users;
  IdMap items;
  for (std::size_t u = 0; u < m.n_rows(); ++u) users.intern("u" + std::to_string(u));
  for (std::size_t i = 0; i < m.n_cols(); ++i) items.intern("i" + std::to_string(i));
  std::ofstream out(p);
  write_triples(out, m, users, items);
}

json base_config() {
  return json::parse(R"({
    "schema_version": 1, "seed": 3,
    "dataset": {"path": "data.tsv", "columns": {"user": 0, "item": 1, "rating": 2, "timestamp": 3}},
    "split": {"method": "holdout", "ratio": 0.8},
    "protocol": {"kind": "full-ranking"},
    "cutoffs": [5, 10],
    "algorithms": [
      {"name": "TopPop", "kind": "toppop"},
      {"name": "ItemKNN", "kind": "itemknn", "tune": {"n_trials": 4, "n_init": 2, "metric": "NDCG", "cutoff": 5}}
    ],
    "audit": {"resamples": 20},
    "output": "out"
  })");
}

ExperimentConfig prepare(const TempDir& dir, const json& doc) {
  write_synthetic(dir.path() / "data.tsv");
  write_file(dir.path() / "config.json", doc.dump(2));
  return load_config(dir.path() / "config.json");
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RECBASE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, RejectsUnknownKeysAndMissingSeed) {
  auto doc = base_config();
  doc["colour"] = "blue";
  EXPECT_THROW(parse_config(doc, "."), InvalidConfig);
  doc = base_config();
  doc.erase("seed");
  EXPECT_THROW(parse_config(doc, "."), InvalidConfig);
  doc = base_config();
  doc["algorithms"][1]["tune"]["budget"] = 3;
  EXPECT_THROW(parse_config(doc, "."), InvalidConfig);
  doc = base_config();
  doc["schema_version"] = 2;
  EXPECT_THROW(parse_config(doc, "."), InvalidConfig);
  doc = base_config();
  doc["algorithms"][0]["kind"] = "mf";
  EXPECT_THROW(parse_config(doc, "."), Error);
}

TEST(Config, DefaultsAndHash) {
  const auto cfg = parse_config(base_config(), ".");
  EXPECT_EQ(cfg.metrics.size(), 6u);
  EXPECT_EQ(cfg.split.seed, mix_seed(3, 1));
  EXPECT_EQ(config_hash(cfg).size(), 16u);
  auto moved = base_config();
  moved["output"] = "elsewhere";
  moved["threads"] = 4;
  EXPECT_EQ(config_hash(parse_config(moved, ".")), config_hash(cfg));
  auto reseeded = base_config();
  reseeded["seed"] = 4;
  EXPECT_NE(config_hash(parse_config(reseeded, ".")), config_hash(cfg));
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
}

TEST(Dataset, LoadsFiveRows) {
  TempDir dir;
  write_file(dir.path() / "five.tsv", "u1\ti1\t5\nu1\ti2\t3\nu2\ti1\t4\nu3\ti3\t1\nu2\ti3\t2\n");
  auto doc = base_config();
  doc["dataset"] = {{"path", "five.tsv"}};
  const auto cfg = parse_config(doc, dir.path());
  const auto data = load_dataset(cfg);
  EXPECT_EQ(data.stats.rows_read, 5u);
  EXPECT_EQ(data.urm->n_rows(), 3u);
  EXPECT_EQ(data.urm->n_cols(), 3u);
  EXPECT_EQ(data.urm->nnz(), 5u);
  EXPECT_EQ(data.users.id(2), "u3");

  doc["dataset"]["binarize_threshold"] = 3.0;
  const auto bin = load_dataset(parse_config(doc, dir.path()));
  EXPECT_EQ(bin.urm->nnz(), 3u);
  EXPECT_EQ(bin.stats.rows_dropped, 2u);
}

TEST(Dataset, ParseErrorNamesTheLine) {
  std::istringstream in("# comment\nu1\ti1\t5\nu2\ti2\tfive\n");
  RatingTriples out;
  try {
    read_triples(in, "ratings", "\t", false, ColumnMap{}, out);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos) << e.what();
  }
  std::istringstream short_row("u1\n");
  EXPECT_THROW(read_triples(short_row, "ratings", "\t", false, ColumnMap{}, out), ParseError);
}

TEST(Dataset, MultiCharacterDelimiter) {
  std::istringstream in("1::10::5::978300760\n1::20::3::978302109\r\n");
  RatingTriples out;
  ColumnMap cols;
  cols.timestamp = 3;
  read_triples(in, "ratings.dat", "::", false, cols, out);
  ASSERT_EQ(out.ratings.size(), 2u);
  EXPECT_EQ(out.ratings[1].value, 3.0);
  EXPECT_EQ(out.ratings[1].timestamp, 978302109);
  const auto f = split_fields("a::b::::c", "::");
  ASSERT_EQ(f.size(), 4u);
  EXPECT_EQ(f[2], "");
}

TEST(Dataset, MissingFile) {
  auto doc = base_config();
  doc["dataset"]["path"] = "absent.tsv";
  EXPECT_THROW(load_dataset(parse_config(doc, fs::temp_directory_path())), FileNotFound);
}

TEST(Experiment, TopPopSmokeRun) {
  TempDir dir;
  auto doc = base_config();
  doc["algorithms"] = json::array({{{"name", "TopPop"}, {"kind", "toppop"}}});
  const auto cfg = prepare(dir, doc);
  RunOptions opt;
  opt.write_files = false;
  const auto bundle = run_experiment(cfg, opt);
  ASSERT_EQ(bundle.algorithms.size(), 1u);
  ASSERT_TRUE(bundle.algorithms[0].metrics.has_value());
  EXPECT_GT(bundle.algorithms[0].metrics->at(Metric::hit_rate, 10), 0.0);
  EXPECT_TRUE(bundle.audit.has_value());
  EXPECT_TRUE(bundle.files.empty());
}

TEST(Experiment, RerunsAreByteIdenticalAndCarryTheHash) {
  TempDir dir;
  auto cfg = prepare(dir, base_config());
  RunOptions opt;
  cfg.output = (dir.path() / "a").string();
  const auto first = run_experiment(cfg, opt);
  cfg.output = (dir.path() / "b").string();
  opt.exec = Exec::serial;
  const auto second = run_experiment(cfg, opt);
  ASSERT_FALSE(first.files.empty());
  EXPECT_EQ(first.files, second.files);
  for (const auto& f : first.files) {
    const auto a = slurp(dir.path() / "a" / f);
    EXPECT_EQ(a, slurp(dir.path() / "b" / f)) << f;
    EXPECT_NE(a.find(first.config_hash), std::string::npos) << f;
  }
}

TEST(Experiment, TestSetStaysSealedBeforeEvaluation) {
  TempDir dir;
  const auto cfg = prepare(dir, base_config());
  RunOptions opt;
  opt.write_files = false;
  std::vector<std::string> stages;
  opt.stage_hook = [&](std::string_view stage, SealedTest& test) {
    stages.emplace_back(stage);
    if (stage.rfind("tune:", 0) == 0 || stage.rfind("fit:", 0) == 0 || stage == "split") {
      EXPECT_FALSE(test.is_open()) << stage;
      EXPECT_THROW(test.read("probe"), TestIsolationViolation);
    }
  };
  const auto bundle = run_experiment(cfg, opt);
  EXPECT_FALSE(stages.empty());
  for (const auto& entry : bundle.test_accesses) {
    if (entry.rfind("read:", 0) == 0) {
      EXPECT_TRUE(entry == "read:evaluate" || entry == "read:audit") << entry;
    }
  }
}

TEST(Experiment, TuneOnlyWritesBestParamsAndResumes) {
  TempDir dir;
  auto cfg = prepare(dir, base_config());
  cfg.output = (dir.path() / "t").string();
  RunOptions opt;
  opt.only_algorithm = "ItemKNN";
  opt.tune_only = true;
  const auto first = run_experiment(cfg, opt);
  EXPECT_TRUE(fs::exists(dir.path() / "t" / "best_params.json"));
  const auto log = slurp(dir.path() / "t" / "study_ItemKNN.jsonl");
  opt.resume = true;
  const auto resumed = run_experiment(cfg, opt);
  EXPECT_EQ(slurp(dir.path() / "t" / "study_ItemKNN.jsonl"), log);
  ASSERT_TRUE(resumed.algorithms[0].study.has_value());
  EXPECT_EQ(resumed.algorithms[0].params, first.algorithms[0].params);
}

TEST(Experiment, StageErrorsNameTheStage) {
  TempDir dir;
  auto doc = base_config();
  doc["split"] = {{"method", "leave-one-out"}, {"mode", "last"}};
  doc["dataset"]["columns"] = {{"user", 0}, {"item", 1}, {"rating", 2}};
  const auto cfg = prepare(dir, doc);
  RunOptions opt;
  opt.write_files = false;
  try {
    run_experiment(cfg, opt);
    FAIL() << "expected a stage error";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "split");
  }
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  const auto cfg_path = (dir.path() / "config.json").string();
  prepare(dir, base_config());
  const auto out = (dir.path() / "cli").string();
  EXPECT_EQ(run_cli("--version"), 0);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  EXPECT_EQ(run_cli("run " + (dir.path() / "missing.json").string()), 1);
  EXPECT_EQ(run_cli("run " + cfg_path + " -q --out " + out), 0);
  EXPECT_TRUE(fs::exists(fs::path(out) / "metrics.csv"));
  EXPECT_EQ(run_cli("tune " + cfg_path + " -q --algo Nope --out " + out), 1);

  write_file(dir.path() / "broken.json", "{\"schema_version\": 1, \"seed\": 1, \"dataset\": {\"path\": \"nope.tsv\"},"
                                         " \"split\": {\"method\": \"holdout\"}, \"protocol\": {\"kind\": \"full-ranking\"},"
                                         " \"cutoffs\": [5],"
                                         " \"algorithms\": [{\"name\": \"T\", \"kind\": \"toppop\"}]}");
  EXPECT_EQ(run_cli("run " + (dir.path() / "broken.json").string() + " -q --out " + out), 2);

  EXPECT_EQ(run_cli("split " + cfg_path + " -q --out " + out), 0);
  const auto train = (fs::path(out) / "train.tsv").string();
  const auto test = (fs::path(out) / "test.tsv").string();
  EXPECT_EQ(run_cli("audit " + train + " " + test + " --resamples 20"), 0);
  EXPECT_EQ(run_cli("audit " + train + " " + test + " --resamples 5"), 1);
  EXPECT_EQ(run_cli("profile " + train + " " + test + " --out " + (dir.path() / "p.csv").string()), 0);
  EXPECT_EQ(slurp(dir.path() / "p.csv").rfind("item,train_norm,test_norm", 0), 0u);
}
