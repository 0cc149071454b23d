// Acceptance runner: one criterion per invocation, one result line each.
//
//   recbase_acceptance --criterion N [--cli PATH]
//
// Exit status 0 pass, 1 fail, 77 skipped (external dataset not available).
// Datasets are looked up under $RECBASE_DATA_DIR:
//   ml-100k/u.data, ml-1m/ratings.dat, ncf/ml-1m.{train.rating,test.rating,test.negative}

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "dense_oracle.hpp"
#include "recbase/config.hpp"
#include "recbase/dataset.hpp"
#include "recbase/diagnostics.hpp"
#include "recbase/errors.hpp"
#include "recbase/experiment.hpp"
#include "recbase/hpo.hpp"
#include "recbase/recommenders.hpp"
#include "recbase/synthetic.hpp"

namespace fs = std::filesystem;
using namespace recbase;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kSkip = 77;

int verdict(int n, bool ok, const std::string& detail) {
  std::cout << "criterion " << n << ": " << (ok ? "PASS" : "FAIL") << "  " << detail << std::endl;
  return ok ? kPass : kFail;
}

int skipped(int n, const std::string& detail) {
  std::cout << "criterion " << n << ": SKIP  " << detail << std::endl;
  return kSkip;
}

std::optional<fs::path> data_file(const std::string& rel) {
  const char* root = std::getenv("RECBASE_DATA_DIR");
  if (root == nullptr) return std::nullopt;
  const fs::path p = fs::path(root) / rel;
  if (!fs::exists(p)) return std::nullopt;
  return p;
}

fs::path source_dir() { return fs::path(RECBASE_SOURCE_DIR); }

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

InteractionPtr share(const oracle::Dense& d) { return std::make_shared<const InteractionMatrix>(oracle::to_sparse(d)); }

oracle::Dense all_scores(const TrainedModel& m) {
  oracle::Dense out;
  for (Index u = 0; u < m.n_users(); ++u) out.push_back(m.score(u));
  return out;
}

oracle::Dense stack_features(const oracle::Dense& r, const oracle::Dense& f, double w) {
  auto stacked = r;
  for (const auto& row : oracle::transpose(f)) {
    std::vector<double> scaled(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) scaled[i] = w * row[i];
    stacked.push_back(scaled);
  }
  return stacked;
}

// ---------------------------------------------------------------- 1

int criterion_oracles() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 gen(2019);
  std::uniform_int_distribution<std::size_t> dim(2, 30);
  std::uniform_int_distribution<std::size_t> nfeat(1, 10);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t checks = 0;
  std::size_t failures = 0;
  double worst = 0.0;
  std::string first_failure;

  const auto check = [&](const std::string& what, const oracle::Dense& got, const oracle::Dense& want) {
    double err = 0.0;
    ++checks;
    if (!oracle::close(got, want, 1e-9, &err)) {
      ++failures;
      if (first_failure.empty()) first_failure = what;
    }
    worst = std::max(worst, err);
  };

  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t users = dim(gen);
    const std::size_t items = dim(gen);
    const auto r = oracle::random_interactions(gen, users, items, 0.1 + 0.4 * unit(gen), inst % 2 == 1);
    const auto f = oracle::random_interactions(gen, items, nfeat(gen), 0.3, false);
    const auto urm = share(r);
    const auto icm = oracle::to_sparse(f);
    const std::string tag = "instance " + std::to_string(inst);

    KnnConfig knn;
    knn.k = 1 + gen() % items;
    knn.shrink = static_cast<double>(gen() % 20);
    const int scheme = static_cast<int>(gen() % 3);
    knn.weighting = static_cast<Weighting>(scheme);
    knn.normalize = gen() % 4 != 0;

    check(tag + " itemknn", all_scores(train_item_knn(urm, knn)),
          oracle::item_scores(r, oracle::keep_topk(
                                     oracle::cosine(oracle::weight_columns(r, scheme), knn.shrink, knn.normalize),
                                     knn.k)));

    KnnConfig uknn = knn;
    uknn.k = 1 + gen() % users;
    const auto rt = oracle::transpose(r);
    check(tag + " userknn", all_scores(train_user_knn(urm, uknn)),
          oracle::user_scores(r, oracle::keep_topk(oracle::cosine(oracle::weight_columns(rt, scheme), uknn.shrink,
                                                                  uknn.normalize),
                                                   uknn.k)));

    check(tag + " cbf", all_scores(train_item_knn_cbf(urm, icm, knn)),
          oracle::item_scores(
              r, oracle::keep_topk(oracle::cosine(oracle::weight_columns(oracle::transpose(f), scheme), knn.shrink,
                                                  knn.normalize),
                                   knn.k)));

    HybridConfig hybrid{knn, 0.1 + 3.0 * unit(gen)};
    check(tag + " cfcbf", all_scores(train_item_knn_cfcbf(urm, icm, hybrid)),
          oracle::item_scores(
              r, oracle::keep_topk(oracle::cosine(oracle::weight_columns(stack_features(r, f, hybrid.feature_weight),
                                                                         scheme),
                                                  knn.shrink, knn.normalize),
                                   knn.k)));

    GraphConfig graph;
    graph.k = 1 + gen() % items;
    graph.alpha = 2.0 * unit(gen);
    check(tag + " p3alpha", all_scores(train_p3alpha(urm, graph)),
          oracle::item_scores(r, oracle::keep_topk(oracle::p3(r, graph.alpha, std::nullopt, false, false), graph.k)));

    graph.beta = 2.0 * unit(gen);
    graph.penalty = static_cast<PopularityPenalty>(gen() % 3);
    check(tag + " rp3beta", all_scores(train_rp3beta(urm, graph)),
          oracle::item_scores(
              r, oracle::keep_topk(oracle::p3(r, graph.alpha, graph.beta,
                                              graph.penalty != PopularityPenalty::source,
                                              graph.penalty != PopularityPenalty::destination),
                                   graph.k)));

    SlimConfig slim;
    slim.l1_ratio = std::exp(std::log(1e-5) * unit(gen));
    slim.reg_magnitude = std::exp(std::log(1e-3) + (std::log(0.1) - std::log(1e-3)) * unit(gen));
    slim.max_iterations = 5000;
    slim.tolerance = 1e-13;
    check(tag + " slim", all_scores(train_slim(urm, slim)),
          oracle::item_scores(r, oracle::slim(r, slim.l1_ratio, slim.reg_magnitude, true, 5000, 1e-13)));

    std::vector<double> deg(items, 0.0);
    for (std::size_t i = 0; i < items; ++i) deg[i] = static_cast<double>(oracle::count_nonzero_col(r, i));
    check(tag + " toppop", all_scores(train_top_popular(urm)), oracle::Dense(users, deg));
  }

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool ok = failures == 0 && secs < 60.0;
  std::ostringstream d;
  d << checks << " model/oracle comparisons on 200 instances, " << failures << " mismatches, max abs error "
    << worst << ", " << fmt(secs, 1) << " s";
  if (!first_failure.empty()) d << ", first mismatch: " << first_failure;
  return verdict(1, ok, d.str());
}

// ---------------------------------------------------------------- 2

int criterion_equivalences() {
  std::mt19937_64 gen(2020);
  std::uniform_int_distribution<std::size_t> dim(3, 30);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t rp3_mismatch = 0;
  std::size_t knn_mismatch = 0;
  std::size_t extras = 0;

  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t users = dim(gen);
    const std::size_t items = dim(gen);
    const auto r = oracle::random_interactions(gen, users, items, 0.1 + 0.4 * unit(gen), inst % 2 == 0);
    const auto f = oracle::random_interactions(gen, items, 1 + gen() % 10, 0.3, false);
    const auto urm = share(r);

    GraphConfig g;
    g.k = 1 + gen() % items;
    g.alpha = 2.0 * unit(gen);
    g.beta = 0.0;
    g.penalty = static_cast<PopularityPenalty>(gen() % 3);
    const auto rp3 = train_rp3beta(urm, g);
    const auto p3 = train_p3alpha(urm, g);
    bool same = rp3.weights().nnz() == p3.weights().nnz();
    for (Index t = 0; same && t < items; ++t) {
      same = std::ranges::equal(rp3.weights().row(t), p3.weights().row(t));
    }
    if (!same || all_scores(rp3) != all_scores(p3)) ++rp3_mismatch;

    KnnConfig knn;
    knn.k = 1 + gen() % items;
    knn.shrink = static_cast<double>(gen() % 10);
    knn.weighting = gen() % 2 == 0 ? Weighting::none : Weighting::tfidf;
    const auto cf = train_item_knn(urm, knn);
    const auto hybrid = train_item_knn_cfcbf(urm, oracle::to_sparse(f), HybridConfig{knn, 1e-9});
    for (Index t = 0; t < items; ++t) {
      // Neighbors with collaborative support must coincide exactly; pairs
      // linked only through features may occupy slots ItemKNN left empty.
      std::vector<Neighbor> supported;
      double min_cf = INFINITY;
      double max_extra = 0.0;
      for (const auto& nb : hybrid.weights().row(t)) {
        double co = 0.0;
        for (const auto& row : r) co += row[t] * row[nb.index];
        if (co > 0.0) {
          supported.push_back(nb);
          min_cf = std::min(min_cf, nb.value);
        } else {
          max_extra = std::max(max_extra, nb.value);
          ++extras;
        }
      }
      const auto base = cf.weights().row(t);
      const bool equal = std::ranges::equal(supported, base);
      const std::size_t n_extra = hybrid.weights().row(t).size() - supported.size();
      const bool fills_free_slots = n_extra == 0 || base.size() < knn.k;
      const bool extras_rank_last = supported.empty() || max_extra < min_cf;
      if (!equal || !fills_free_slots || !extras_rank_last) ++knn_mismatch;
    }
  }
  std::ostringstream d;
  d << "50 instances: RP3beta(beta=0) vs P3alpha mismatches " << rp3_mismatch
    << "; CFCBF(w=1e-9) vs ItemKNN neighbor-set mismatches " << knn_mismatch << " (" << extras
    << " feature-only neighbors filled free slots)";
  return verdict(2, rp3_mismatch == 0 && knn_mismatch == 0, d.str());
}

// ---------------------------------------------------------------- 3

int criterion_metrics() {
  const std::vector<std::size_t> cutoffs{5, 10, 20, 50, 100};
  std::size_t checks = 0;
  std::size_t failures = 0;
  const auto expect = [&](double got, double want) {
    ++checks;
    if (got != want) ++failures;
  };

  // Leave-one-out: one relevant item at rank r.
  for (std::size_t rank = 1; rank <= 120; ++rank) {
    std::vector<Index> ranked(120);
    std::iota(ranked.begin(), ranked.end(), Index{1000});
    ranked[rank - 1] = 7;
    const std::vector<Index> relevant{7};
    const auto v = compute_metrics(ranked, relevant, cutoffs);
    for (std::size_t c : cutoffs) {
      const bool in = rank <= c;
      expect(v.at({Metric::ndcg, c}), in ? 1.0 / std::log2(static_cast<double>(rank) + 1.0) : 0.0);
      expect(v.at({Metric::mrr, c}), in ? 1.0 / static_cast<double>(rank) : 0.0);
      expect(v.at({Metric::hit_rate, c}), in ? 1.0 : 0.0);
      expect(v.at({Metric::recall, c}), in ? 1.0 : 0.0);
      expect(v.at({Metric::precision, c}), in ? 1.0 / static_cast<double>(c) : 0.0);
      expect(v.at({Metric::map, c}), in ? 1.0 / static_cast<double>(rank) : 0.0);
    }
  }

  // Holdout: several relevant items at known ranks in a 150-long list.
  const std::vector<std::vector<std::size_t>> layouts{
      {1, 3, 7, 12, 60}, {2, 4}, {5, 10, 20, 50, 100}, {6, 8, 30, 31, 32, 33, 99, 101, 140}, {150}};
  for (const auto& ranks : layouts) {
    std::vector<Index> ranked(150);
    std::iota(ranked.begin(), ranked.end(), Index{1000});
    std::vector<Index> relevant;
    for (std::size_t k = 0; k < ranks.size(); ++k) {
      ranked[ranks[k] - 1] = static_cast<Index>(k);
      relevant.push_back(static_cast<Index>(k));
    }
    // Relevant items outside the list count toward the ideal ranking only.
    relevant.push_back(500);
    const double n_rel = static_cast<double>(relevant.size());
    const auto v = compute_metrics(ranked, relevant, cutoffs);
    for (std::size_t c : cutoffs) {
      std::size_t hits = 0;
      double dcg = 0.0;
      double ap = 0.0;
      double rr = 0.0;
      for (std::size_t rank : ranks) {
        if (rank > c) break;
        ++hits;
        dcg += 1.0 / std::log2(static_cast<double>(rank) + 1.0);
        ap += static_cast<double>(hits) / static_cast<double>(rank);
        if (rr == 0.0) rr = 1.0 / static_cast<double>(rank);
      }
      const std::size_t ideal = std::min(relevant.size(), c);
      double idcg = 0.0;
      for (std::size_t k = 1; k <= ideal; ++k) idcg += 1.0 / std::log2(static_cast<double>(k) + 1.0);
      expect(v.at({Metric::precision, c}), static_cast<double>(hits) / static_cast<double>(c));
      expect(v.at({Metric::recall, c}), static_cast<double>(hits) / n_rel);
      expect(v.at({Metric::hit_rate, c}), hits > 0 ? 1.0 : 0.0);
      expect(v.at({Metric::ndcg, c}), dcg / idcg);
      expect(v.at({Metric::map, c}), ap / static_cast<double>(ideal));
      expect(v.at({Metric::mrr, c}), rr);
    }
  }
  std::ostringstream d;
  d << checks << " exact comparisons over cutoffs {5,10,20,50,100}, " << failures << " mismatches";
  return verdict(3, failures == 0, d.str());
}

// ---------------------------------------------------------------- 4

int criterion_ml100k() {
  const auto data = data_file("ml-100k/u.data");
  if (!data) return skipped(4, "MovieLens100k not found ($RECBASE_DATA_DIR/ml-100k/u.data)");
  auto cfg = load_config(source_dir() / "configs" / "ml100k_holdout.json");
  cfg.dataset.path = data->string();
  cfg.audit.enabled = false;
  RunOptions opt;
  opt.write_files = false;
  const auto bundle = run_experiment(cfg, opt);
  double pop = NAN;
  double knn = NAN;
  for (const auto& a : bundle.algorithms) {
    if (a.name == "TopPop") pop = a.metrics->at(Metric::precision, 10);
    if (a.name == "ItemKNN") knn = a.metrics->at(Metric::precision, 10);
  }
  const bool ok = std::abs(pop - 0.1907) <= 0.015 && std::abs(knn - 0.3327) <= 0.02;
  return verdict(4, ok,
                 "PRECISION@10 TopPop " + fmt(pop) + " (target 0.1907 +-0.015), ItemKNN " + fmt(knn) +
                     " (target 0.3327 +-0.02)");
}

// ---------------------------------------------------------------- 5

int criterion_ml1m_ncf() {
  const auto train = data_file("ncf/ml-1m.train.rating");
  const auto test = data_file("ncf/ml-1m.test.rating");
  const auto neg = data_file("ncf/ml-1m.test.negative");
  const auto ratings = data_file("ml-1m/ratings.dat");
  auto cfg = load_config(source_dir() / "configs" / "ml1m_ncf.json");
  double tol = 0.01;
  std::string source = "published NCF split";
  if (train && test && neg) {
    cfg.dataset.split_import = SplitImportSpec{train->string(), test->string(), neg->string()};
  } else if (ratings) {
    // Own leave-one-out split with sampled negatives, wider tolerance.
    cfg.dataset.split_import.reset();
    cfg.dataset.path = ratings->string();
    cfg.dataset.delimiter = "::";
    cfg.split.spec.method = SplitMethod::leave_one_out;
    cfg.split.spec.mode = LeaveOneOutMode::last_by_timestamp;
    tol = 0.03;
    source = "own leave-one-out split (substitute)";
  } else {
    return skipped(5, "neither the NCF split files nor MovieLens1M found under $RECBASE_DATA_DIR");
  }
  cfg.audit.enabled = false;
  RunOptions opt;
  opt.write_files = false;
  const auto bundle = run_experiment(cfg, opt);
  double knn_hr10 = NAN;
  double slim_hr5 = NAN;
  double slim_ndcg10 = NAN;
  for (const auto& a : bundle.algorithms) {
    if (a.name == "ItemKNN") knn_hr10 = a.metrics->at(Metric::hit_rate, 10);
    if (a.name == "SLIM") {
      slim_hr5 = a.metrics->at(Metric::hit_rate, 5);
      slim_ndcg10 = a.metrics->at(Metric::ndcg, 10);
    }
  }
  const bool ok = std::abs(knn_hr10 - 0.6596) <= tol && std::abs(slim_hr5 - 0.5589) <= tol &&
                  std::abs(slim_ndcg10 - 0.4470) <= tol;
  return verdict(5, ok,
                 source + ": ItemKNN HR@10 " + fmt(knn_hr10) + " (0.6596), SLIM HR@5 " + fmt(slim_hr5) +
                     " (0.5589), SLIM NDCG@10 " + fmt(slim_ndcg10) + " (0.4470), tolerance +-" + fmt(tol, 2));
}

// ---------------------------------------------------------------- 6

// Test set drawn without replacement with probability proportional to the
// squared item count (exponential-key weighted sampling).
SplitPair squared_count_split(const InteractionMatrix& m, double test_share, std::uint64_t seed) {
  const auto deg = degree_vector(m, Axis::items);
  const auto entries = m.triplets();
  Rng rng(seed);
  std::vector<std::pair<double, std::size_t>> keys;
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const double w = static_cast<double>(deg[entries[e].col]) * static_cast<double>(deg[entries[e].col]);
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    keys.emplace_back(std::log(u) / w, e);
  }
  std::sort(keys.begin(), keys.end(), std::greater<>());
  const auto n_test = static_cast<std::size_t>(std::llround(test_share * static_cast<double>(entries.size())));
  std::vector<unsigned char> in_test(entries.size(), 0);
  for (std::size_t k = 0; k < n_test; ++k) in_test[keys[k].second] = 1;
  std::vector<Triplet> train;
  std::vector<Triplet> test;
  for (std::size_t e = 0; e < entries.size(); ++e) (in_test[e] ? test : train).push_back(entries[e]);
  SplitSpec spec;
  spec.ratio = 1.0 - test_share;
  spec.exact_count = true;
  return SplitPair{SparseMatrix::from_triplets(m.n_rows(), m.n_cols(), train),
                   SparseMatrix::from_triplets(m.n_rows(), m.n_cols(), test), seed, spec};
}

int criterion_forensics() {
  SyntheticSpec spec;
  spec.n_users = 1000;
  spec.n_items = 400;
  spec.n_interactions = 30000;
  spec.seed = 6;
  const auto pooled = synthetic_interactions(spec);

  const auto biased = audit_split(squared_count_split(pooled, 0.2, 1), 100, 11);
  std::size_t plausible = 0;
  double max_abs_z = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto rep = audit_split(split_random_holdout(pooled, 0.8, mix_seed(600, s), true), 100, mix_seed(601, s));
    if (rep.verdict == Verdict::plausible) ++plausible;
    max_abs_z = std::max(max_abs_z, std::abs(rep.z_score));
  }
  const bool synthetic_ok = biased.verdict == Verdict::anomalous && plausible >= 99;
  std::string detail = "biased split z=" + fmt(biased.z_score, 2) +
                       (biased.verdict == Verdict::anomalous ? " anomalous" : " plausible") + "; random splits " +
                       std::to_string(plausible) + "/100 plausible (max |z| " + fmt(max_abs_z, 2) + ")";

  const auto ratings = data_file("ml-1m/ratings.dat");
  if (!ratings) {
    if (!synthetic_ok) return verdict(6, false, detail);
    return skipped(6, detail + "; MovieLens1M Gini part not run ($RECBASE_DATA_DIR/ml-1m/ratings.dat missing)");
  }
  std::ifstream in(*ratings);
  RatingTriples triples;
  ColumnMap cols;
  cols.timestamp = 3;
  read_triples(in, ratings->string(), "::", false, cols, triples);
  const auto m = build_interaction_matrix(triples);
  const auto split = split_random_holdout(m, 0.8, 1);
  const auto to_double = [](const std::vector<std::size_t>& v) { return std::vector<double>(v.begin(), v.end()); };
  const double g_train = gini_index(to_double(degree_vector(split.train, Axis::items)));
  const double g_test = gini_index(to_double(degree_vector(split.test, Axis::items)));
  const bool gini_ok = std::abs(g_train - 0.79) <= 0.02 && std::abs(g_test - 0.79) <= 0.02;
  detail += "; MovieLens1M Gini train " + fmt(g_train) + " test " + fmt(g_test) + " (target 0.79 +-0.02)";
  return verdict(6, synthetic_ok && gini_ok, detail);
}

// ---------------------------------------------------------------- 7

int criterion_hpo() {
  const SearchSpace space({Dimension::real("x", 0.0, 1.0)});
  const Objective f = [](const Configuration& c) {
    const double x = as_real(c.at("x"), "x");
    return -(x - 0.3) * (x - 0.3);
  };
  std::size_t near = 0;
  std::vector<double> smbo_regret;
  std::vector<double> random_regret;
  std::vector<double> paired;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    StudyOptions opt;
    opt.n_trials = 35;
    opt.n_init = 5;
    opt.seed = seed;
    const auto smbo = run_study(f, space, opt);
    opt.mode = SearchMode::random;
    const auto random = run_study(f, space, opt);
    const double x = as_real(smbo.best_trial().config.at("x"), "x");
    if (std::abs(x - 0.3) <= 0.05) ++near;
    smbo_regret.push_back(-*smbo.best_trial().value);
    random_regret.push_back(-*random.best_trial().value);
    paired.push_back(smbo_regret.back() - random_regret.back());
  }
  const auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  };
  const double ms = median(smbo_regret);
  const double mr = median(random_regret);
  const double mp = median(paired);
  const bool ok = near >= 95 && ms < mr && mp < 0.0;
  std::ostringstream d;
  d << "best x within 0.05 of 0.3 in " << near << "/100 seeds; median regret smbo " << ms << " vs random " << mr
    << ", median paired difference " << mp;
  return verdict(7, ok, d.str());
}

// ---------------------------------------------------------------- 8

int criterion_exclusions() {
  // Netflix-scale results and neural models are out of scope; the tool
  // refuses them by name instead of silently substituting something else.
  std::size_t refused = 0;
  const char* excluded[] = {"cmn", "mcrec", "cvae", "cdl", "neumf", "spectralcf", "mult-vae"};
  for (const char* name : excluded) {
    try {
      parse_model_kind(name);
    } catch (const UnknownAlgorithm&) {
      ++refused;
    }
  }
  return verdict(8, refused == std::size(excluded),
                 "excluded by scope (Netflix-scale tables, neural models); " + std::to_string(refused) + "/" +
                     std::to_string(std::size(excluded)) + " neural model names rejected as unknown algorithms");
}

// ---------------------------------------------------------------- 9

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int criterion_determinism(const std::string& cli) {
  if (cli.empty()) return verdict(9, false, "no --cli path given");
  const fs::path dir = fs::temp_directory_path() / "recbase_acceptance_9";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    SyntheticSpec spec;
    spec.n_users = 200;
    spec.n_items = 120;
    spec.n_interactions = 4000;
    spec.with_timestamps = true;
    const auto m = synthetic_interactions(spec);
    IdMap users;
    IdMap items;
    for (std::size_t u = 0; u < m.n_rows(); ++u) users.intern("u" + std::to_string(u));
    for (std::size_t i = 0; i < m.n_cols(); ++i) items.intern("i" + std::to_string(i));
    std::ofstream out(dir / "data.tsv");
    write_triples(out, m, users, items);
    std::ofstream cfg(dir / "config.json");
    cfg << R"({
      "schema_version": 1, "seed": 9,
      "dataset": {"path": "data.tsv", "columns": {"user": 0, "item": 1, "rating": 2, "timestamp": 3}},
      "split": {"method": "leave-one-out", "mode": "last"},
      "protocol": {"kind": "sampled-negatives", "negatives": 50},
      "cutoffs": [5, 10],
      "algorithms": [
        {"name": "TopPop", "kind": "toppop"},
        {"name": "ItemKNN", "kind": "itemknn", "tune": {"n_trials": 8, "n_init": 3, "metric": "HR", "cutoff": 10}},
        {"name": "RP3beta", "kind": "rp3beta", "tune": {"n_trials": 6, "n_init": 3, "metric": "NDCG", "cutoff": 10}},
        {"name": "SLIM", "kind": "slim", "params": {"l1_ratio": 0.01, "reg_magnitude": 0.005}}
      ],
      "audit": {"resamples": 30}
    })";
  }
  for (const char* run : {"a", "b"}) {
    const std::string cmd = "\"" + cli + "\" run \"" + (dir / "config.json").string() + "\" -q --out \"" +
                            (dir / run).string() + "\" > /dev/null";
    if (std::system(cmd.c_str()) != 0) return verdict(9, false, std::string("run ") + run + " failed");
  }
  std::size_t compared = 0;
  std::vector<std::string> differing;
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    const auto name = entry.path().filename().string();
    const bool tracked = name == "metrics.csv" || name.rfind("study_", 0) == 0;
    if (!tracked) continue;
    ++compared;
    if (slurp(entry.path()) != slurp(dir / "b" / name)) differing.push_back(name);
  }
  const bool ok = compared >= 3 && differing.empty();
  std::string d = std::to_string(compared) + " files compared (metrics.csv and study logs)";
  for (const auto& n : differing) d += ", differs: " + n;
  if (ok) fs::remove_all(dir);
  return verdict(9, ok, d);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"recbase acceptance criteria"};
  int criterion = 0;
  std::string cli;
  app.add_option("--criterion", criterion, "Criterion number")->required()->check(CLI::Range(1, 9));
  app.add_option("--cli", cli, "Path of the recbase executable");
  CLI11_PARSE(app, argc, argv);
  try {
    switch (criterion) {
      case 1:
        return criterion_oracles();
      case 2:
        return criterion_equivalences();
      case 3:
        return criterion_metrics();
      case 4:
        return criterion_ml100k();
      case 5:
        return criterion_ml1m_ncf();
      case 6:
        return criterion_forensics();
      case 7:
        return criterion_hpo();
      case 8:
        return criterion_exclusions();
      case 9:
        return criterion_determinism(cli);
    }
  } catch (const std::exception& e) {
    return verdict(criterion, false, std::string("error: ") + e.what());
  }
  return kFail;
}
