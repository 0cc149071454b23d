#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "recbase/errors.hpp"
#include "recbase/gp.hpp"
#include "recbase/hpo.hpp"

using namespace recbase;

namespace {

SearchSpace mixed_space() {
  return SearchSpace({Dimension::integer("k", 5, 800), Dimension::real("shrink", 0.0, 10.0),
                      Dimension::log_real("reg", 1e-3, 1.0), Dimension::categorical("w", {"a", "b", "c"})});
}

// Smooth bowl with its optimum inside the box.
double bowl(const Configuration& c) {
  const double x = as_real(c.at("x"), "x");
  const double y = as_real(c.at("y"), "y");
  return -((x - 0.3) * (x - 0.3) + (y - 0.7) * (y - 0.7));
}

SearchSpace bowl_space() { return SearchSpace({Dimension::real("x", 0.0, 1.0), Dimension::real("y", 0.0, 1.0)}); }

}  // namespace

TEST(SearchSpaceTest, DefaultSpaces) {
  EXPECT_EQ(default_space(ModelKind::itemknn).dimensions().size(), 4u);
  EXPECT_EQ(default_space(ModelKind::slim).dimensions().size(), 2u);
  EXPECT_EQ(default_space(ModelKind::rp3beta).dimensions().size(), 3u);
  EXPECT_TRUE(default_space(ModelKind::toppop).empty());
  const auto* k = default_space(ModelKind::itemknn).find("k");
  ASSERT_NE(k, nullptr);
  EXPECT_EQ(k->kind, DimensionKind::integer_uniform);
}

TEST(SearchSpaceTest, SamplesStayInBoundsAndRoundTrip) {
  const auto space = mixed_space();
  EXPECT_EQ(space.encoded_size(), 6u);
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const auto c = space.sample(rng);
    ASSERT_TRUE(space.contains(c));
    const auto k = as_integer(c.at("k"), "k");
    EXPECT_GE(k, 5);
    EXPECT_LE(k, 800);
    const double reg = as_real(c.at("reg"), "reg");
    EXPECT_GE(reg, 1e-3);
    EXPECT_LE(reg, 1.0);
    const auto x = space.encode(c);
    for (double v : x) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    const auto back = space.decode(x);
    EXPECT_EQ(as_integer(back.at("k"), "k"), k);
    EXPECT_EQ(as_label(back.at("w"), "w"), as_label(c.at("w"), "w"));
    EXPECT_NEAR(as_real(back.at("reg"), "reg"), reg, 1e-12 * reg);
  }
}

TEST(SearchSpaceTest, LogDimensionIsUniformInLogSpace) {
  const SearchSpace space({Dimension::log_real("reg", 1e-4, 1.0)});
  Rng rng(5);
  std::size_t below = 0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    if (as_real(space.sample(rng).at("reg"), "reg") < 1e-2) ++below;
  }
  EXPECT_NEAR(static_cast<double>(below) / n, 0.5, 0.04);
}

TEST(SearchSpaceTest, OverrideAndContains) {
  auto space = mixed_space();
  space.override_dimension(Dimension::integer("k", 10, 20));
  EXPECT_EQ(space.find("k")->high, 20.0);
  EXPECT_THROW(space.override_dimension(Dimension::integer("q", 1, 2)), InvalidConfig);
  Configuration c{{"k", std::int64_t{50}}, {"shrink", 1.0}, {"reg", 0.1}, {"w", std::string("a")}};
  EXPECT_FALSE(space.contains(c));
  c["k"] = std::int64_t{15};
  EXPECT_TRUE(space.contains(c));
  c["w"] = std::string("z");
  EXPECT_FALSE(space.contains(c));
}

TEST(Study, EmptySpaceRunsOnce) {
  int calls = 0;
  StudyOptions opt;
  const auto r = run_study(
      [&](const Configuration&) {
        ++calls;
        return 0.5;
      },
      SearchSpace{}, opt);
  EXPECT_EQ(calls, 1);
  EXPECT_EQ(r.trials.size(), 1u);
  EXPECT_EQ(r.best_trial().value, 0.5);
}

TEST(Study, AllInitialTrialsEqualsRandomSearch) {
  StudyOptions smbo;
  smbo.n_trials = 12;
  smbo.n_init = 12;
  smbo.seed = 4;
  auto random = smbo;
  random.mode = SearchMode::random;
  const auto a = run_study(bowl, bowl_space(), smbo);
  const auto b = run_study(bowl, bowl_space(), random);
  for (std::size_t t = 0; t < 12; ++t) EXPECT_EQ(a.trials[t].config, b.trials[t].config);
}

TEST(Study, SameSeedSameTrials) {
  StudyOptions opt;
  opt.n_trials = 15;
  opt.seed = 11;
  const auto a = run_study(bowl, bowl_space(), opt);
  const auto b = run_study(bowl, bowl_space(), opt);
  for (std::size_t t = 0; t < 15; ++t) EXPECT_EQ(a.trials[t].config, b.trials[t].config);
}

TEST(Study, ConstantObjectiveKeepsFirstTrial) {
  StudyOptions opt;
  opt.n_trials = 10;
  const auto r = run_study([](const Configuration&) { return 1.0; }, bowl_space(), opt);
  EXPECT_EQ(r.trials.size(), 10u);
  EXPECT_EQ(*r.best, 0u);
}

TEST(Study, ResumeContinuesExactly) {
  StudyOptions opt;
  opt.n_trials = 14;
  opt.n_init = 4;
  opt.seed = 21;
  const auto full = run_study(bowl, bowl_space(), opt);

  auto partial_opt = opt;
  partial_opt.n_trials = 8;
  partial_opt.n_init = 4;
  std::stringstream log;
  partial_opt.on_trial = [&](const Trial& t) { log << trial_to_json(t).dump() << '\n'; };
  run_study(bowl, bowl_space(), partial_opt);

  auto resumed_opt = opt;
  resumed_opt.resume = read_study_log(log);
  ASSERT_EQ(resumed_opt.resume.size(), 8u);
  int calls = 0;
  const auto resumed = run_study(
      [&](const Configuration& c) {
        ++calls;
        return bowl(c);
      },
      bowl_space(), resumed_opt);
  EXPECT_EQ(calls, 6);
  for (std::size_t t = 0; t < 14; ++t) {
    EXPECT_EQ(resumed.trials[t].config, full.trials[t].config) << t;
    EXPECT_EQ(resumed.trials[t].value, full.trials[t].value) << t;
  }
}

TEST(Study, FailedTrialsAreRecordedAndSkipped) {
  StudyOptions opt;
  opt.n_trials = 8;
  opt.n_init = 3;
  std::size_t seen = 0;
  const auto r = run_study(
      [&](const Configuration& c) -> double {
        if (seen++ % 2 == 0) throw std::runtime_error("diverged");
        return bowl(c);
      },
      bowl_space(), opt);
  EXPECT_EQ(r.trials.size(), 8u);
  EXPECT_FALSE(r.trials[0].value.has_value());
  EXPECT_EQ(r.trials[0].error, "diverged");
  ASSERT_TRUE(r.best.has_value());
  EXPECT_TRUE(r.best_trial().value.has_value());

  const auto nan = run_study([](const Configuration&) { return std::nan(""); }, bowl_space(), opt);
  EXPECT_FALSE(nan.best.has_value());
  EXPECT_THROW(nan.best_trial(), Error);
}

TEST(Study, GuidedSearchBeatsItsOwnInitialDesign) {
  StudyOptions opt;
  opt.n_trials = 30;
  opt.n_init = 5;
  opt.seed = 2;
  const auto r = run_study(bowl, bowl_space(), opt);
  double init_best = -1e9;
  for (std::size_t t = 0; t < 5; ++t) init_best = std::max(init_best, *r.trials[t].value);
  EXPECT_GT(*r.best_trial().value, init_best);
  EXPECT_GT(*r.best_trial().value, -1e-3);
}

TEST(Study, RejectsBadOptions) {
  StudyOptions opt;
  opt.n_trials = 0;
  EXPECT_THROW(run_study(bowl, bowl_space(), opt), InvalidConfig);
  opt.n_trials = 3;
  opt.n_init = 4;
  EXPECT_THROW(run_study(bowl, bowl_space(), opt), InvalidConfig);
  EXPECT_EQ(parse_search_mode("random"), SearchMode::random);
  EXPECT_THROW(parse_search_mode("grid"), InvalidConfig);
}

TEST(StudyLog, RoundTripAndTornLines) {
  Trial t;
  t.number = 3;
  t.config = {{"k", std::int64_t{7}}, {"w", std::string("bm25")}, {"x", 0.1}};
  t.value = 0.25;
  const auto j = trial_to_json(t);
  EXPECT_EQ(j.at("timestamp"), 3);
  const auto back = trial_from_json(j);
  EXPECT_EQ(back.config, t.config);
  EXPECT_EQ(back.value, t.value);

  std::stringstream bad("{\"trial\": 0, \"config\": {}, \"value\": 1}\n{\"trial\": 1, \"conf");
  EXPECT_THROW(read_study_log(bad), ParseError);
}

TEST(Gp, InterpolatesTrainingPoints) {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (int i = 0; i <= 8; ++i) {
    const double v = i / 8.0;
    x.push_back({v});
    y.push_back(std::sin(6.0 * v));
  }
  GaussianProcess gp;
  gp.fit(x, y);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto p = gp.predict(x[i]);
    EXPECT_NEAR(p.mean, y[i], 1e-2);
    EXPECT_LT(p.variance, 1e-2);
  }
  EXPECT_GT(gp.predict(std::vector<double>{3.0}).variance, gp.predict(std::vector<double>{0.5}).variance);
}

TEST(Gp, ExpectedImprovement) {
  EXPECT_EQ(expected_improvement(0.0, 0.0, 1.0, 0.0), 0.0);
  EXPECT_NEAR(expected_improvement(2.0, 0.0, 1.0, 0.0), 1.0, 1e-12);
  // Zero mean gap, unit variance: sigma * pdf(0).
  EXPECT_NEAR(expected_improvement(1.0, 1.0, 1.0, 0.0), 1.0 / std::sqrt(2.0 * M_PI), 1e-12);
  EXPECT_GT(expected_improvement(1.0, 4.0, 1.0, 0.0), expected_improvement(1.0, 1.0, 1.0, 0.0));
  EXPECT_DOUBLE_EQ(matern52(0.0), 1.0);
  EXPECT_LT(matern52(2.0), matern52(1.0));
}
