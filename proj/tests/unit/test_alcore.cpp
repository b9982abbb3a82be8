#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "samosa/alcore.hpp"

using namespace samosa;

namespace {

ExperimentConfig tiny_config(const char* strategy = "samosa") {
  ExperimentConfig cfg;
  cfg.gen.num_known = 2;
  cfg.gen.num_unknown = 3;
  cfg.gen.per_class = 40;
  cfg.gen.dim = 20;
  cfg.gen.patches = 3;
  cfg.mismatch_ratio = 0.4;
  cfg.init_labeled_frac = 0.1;
  cfg.test_frac = 0.25;
  cfg.train.epochs = 5;
  cfg.train.batch_size = 8;
  cfg.width = 4;
  cfg.rounds = 3;
  cfg.budget = 10;
  cfg.strategy = QuerySpec::parse(strategy);
  cfg.seed = 17;
  return cfg;
}

std::size_t tracked(const PoolState& st) { return st.labeled.size() + st.unlabeled.size() + st.invalid.size(); }

}  // namespace

TEST(PrecisionRecall, Fixtures) {
  EXPECT_EQ(precision_recall(900, 1500, 0, 1).precision, 0.6);
  EXPECT_EQ(precision_recall(0, 40, 0, 1).precision, 0.0);
  EXPECT_EQ(precision_recall(0, 1, 3000, 20000).recall, 0.15);
  EXPECT_EQ(precision_recall(9, 12, 109, 600).precision, 0.75);
}

TEST(PrecisionRecall, Errors) {
  EXPECT_THROW(precision_recall(1, 0, 0, 1), std::invalid_argument);
  EXPECT_THROW(precision_recall(0, 1, 0, 0), std::invalid_argument);
  EXPECT_THROW(precision_recall(5, 4, 0, 1), std::invalid_argument);
  EXPECT_THROW(precision_recall(0, 4, 11, 10), std::invalid_argument);
}

TEST(PoolUpdate, SetArithmeticTrace) {
  PoolState st;
  for (std::size_t i = 0; i < 100; ++i) st.labeled.push_back({i, i % 4});
  for (std::size_t i = 100; i < 300; ++i) st.unlabeled.push_back(i);
  std::vector<LabeledId> valid;
  for (std::size_t i = 100; i < 109; ++i) valid.push_back({i, 0});
  const std::vector<std::size_t> invalid{200, 201, 202};
  st.apply_query(valid, invalid);
  EXPECT_EQ(st.labeled.size(), 109u);
  EXPECT_EQ(st.invalid.size(), 3u);
  EXPECT_EQ(st.unlabeled.size(), 188u);
  EXPECT_EQ(precision_recall(valid.size(), 12, st.labeled.size(), 400).precision, 0.75);
}

TEST(ExperimentConfig, Validation) {
  auto cfg = tiny_config();
  EXPECT_NO_THROW(cfg.validate());
  cfg.rounds = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = tiny_config();
  cfg.budget = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = tiny_config();
  cfg.gen.beta = 2.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(RunRound, BookkeepingAndMetrics) {
  const auto cfg = tiny_config();
  auto pool = build_experiment_pool(cfg);
  const std::size_t total = tracked(pool.state);
  const auto test_before = pool.state.test;
  double last_recall = 0.0;
  for (int t = 0; t < 3; ++t) {
    const std::size_t labeled_before = pool.state.labeled.size();
    const std::size_t invalid_before = pool.state.invalid.size();
    const std::size_t pool_before = pool.state.unlabeled.size();
    const auto out = run_round(pool.data, pool.state, cfg, t);
    const auto& m = out.metrics;
    EXPECT_EQ(m.round, t);
    EXPECT_EQ(out.selected.size(), std::min(cfg.budget, pool_before));
    EXPECT_EQ(out.valid.size() + out.invalid.size(), out.selected.size());
    for (const auto& v : out.valid) EXPECT_TRUE(pool.data[v.id].is_known);
    for (auto id : out.invalid) EXPECT_FALSE(pool.data[id].is_known);
    EXPECT_EQ(pool.state.labeled.size(), labeled_before + out.valid.size());
    EXPECT_EQ(pool.state.invalid.size(), invalid_before + out.invalid.size());
    EXPECT_EQ(pool.state.unlabeled.size(), pool_before - out.selected.size());
    EXPECT_EQ(tracked(pool.state), total);
    EXPECT_EQ(pool.state.test, test_before);
    EXPECT_TRUE(pool.state.disjoint());
    EXPECT_DOUBLE_EQ(m.precision, static_cast<double>(out.valid.size()) / static_cast<double>(out.selected.size()));
    EXPECT_DOUBLE_EQ(m.recall,
                     static_cast<double>(pool.state.labeled.size()) / static_cast<double>(pool.state.n_known));
    EXPECT_GE(m.recall, last_recall);
    last_recall = m.recall;
    EXPECT_GE(m.accuracy, 0.0);
    EXPECT_LE(m.accuracy, 1.0);
    EXPECT_EQ(m.queries.size(), out.selected.size());
    EXPECT_TRUE(std::isfinite(m.loss_sgd));
    EXPECT_TRUE(std::isfinite(m.loss_sam));
    for (const auto& l : pool.state.labeled) EXPECT_EQ(l.observed, pool.data[l.id].true_class);
  }
}

TEST(RunRound, TargetNeverSeesInvalidQueries) {
  const auto cfg = tiny_config();
  auto pool = build_experiment_pool(cfg);
  run_round(pool.data, pool.state, cfg, 0);
  ASSERT_FALSE(pool.state.invalid.empty());
  const auto items = target_training_set(pool.data, pool.state);
  EXPECT_EQ(items.size(), pool.state.labeled.size());
  for (const auto& it : items) {
    EXPECT_LT(it.label, pool.data.num_known);
    for (auto id : pool.state.invalid) EXPECT_NE(it.input, &pool.data[id].x);
  }
  const auto dist = distinguisher_training_set(pool.data, pool.state);
  EXPECT_EQ(dist.size(), pool.state.labeled.size() + pool.state.invalid.size());
  std::size_t unknown_labels = 0;
  for (const auto& it : dist) unknown_labels += it.label == pool.data.num_known ? 1 : 0;
  EXPECT_EQ(unknown_labels, pool.state.invalid.size());
}

TEST(RunRound, PoolExhaustion) {
  auto cfg = tiny_config("random");
  cfg.budget = 1000;
  auto pool = build_experiment_pool(cfg);
  const std::size_t before = pool.state.unlabeled.size();
  const auto out = run_round(pool.data, pool.state, cfg, 0);
  EXPECT_EQ(out.selected.size(), before);
  EXPECT_TRUE(pool.state.unlabeled.empty());
  const auto next = run_round(pool.data, pool.state, cfg, 1);
  EXPECT_TRUE(next.selected.empty());
  EXPECT_EQ(next.metrics.precision, 0.0);
}

TEST(RunRound, EmptyLabeledSetThrows) {
  const auto cfg = tiny_config();
  auto pool = build_experiment_pool(cfg);
  pool.state.labeled.clear();
  EXPECT_THROW(run_round(pool.data, pool.state, cfg, 0), std::invalid_argument);
}

TEST(RunRound, EveryStrategyRuns) {
  for (const char* name : {"samosa", "samosa-l", "samosa-b3", "samosa-r", "disagree3", "entropy", "confidence",
                           "margin", "random"}) {
    const auto cfg = tiny_config(name);
    auto pool = build_experiment_pool(cfg);
    const auto out = run_round(pool.data, pool.state, cfg, 0);
    EXPECT_EQ(out.selected.size(), cfg.budget) << name;
    EXPECT_EQ(out.scores.size(), pool.state.unlabeled.size() + cfg.budget) << name;
    std::size_t flagged = 0;
    for (const auto& r : out.scores) flagged += r.selected ? 1 : 0;
    EXPECT_EQ(flagged, cfg.budget) << name;
    const bool samis = cfg.strategy.uses_samis();
    EXPECT_EQ(std::isnan(out.metrics.loss_sgd), !samis) << name;
  }
}

TEST(RunRound, ModelsDependOnSetsNotHistory) {
  const auto cfg = tiny_config();
  auto pool = build_experiment_pool(cfg);
  PoolState a = pool.state, b = pool.state;
  std::vector<LabeledId> valid;
  std::vector<std::size_t> invalid;
  for (auto id : pool.state.unlabeled) {
    if (pool.data[id].is_known && valid.size() < 4) valid.push_back({id, pool.data[id].true_class});
    if (!pool.data[id].is_known && invalid.size() < 3) invalid.push_back(id);
  }
  a.apply_query(valid, invalid);
  std::reverse(valid.begin(), valid.end());
  std::reverse(invalid.begin(), invalid.end());
  b.apply_query(valid, invalid);
  const auto ma = train_round_models(pool.data, a, cfg, 2);
  const auto mb = train_round_models(pool.data, b, cfg, 2);
  EXPECT_EQ(ma.f_test, mb.f_test);
  EXPECT_EQ(*ma.f_sgd, *mb.f_sgd);
  EXPECT_EQ(*ma.f_sam, *mb.f_sam);
}

TEST(RunExperiment, RoundsAndDeterminism) {
  auto cfg = tiny_config();
  cfg.rounds = 1;
  EXPECT_EQ(run_experiment(cfg).rounds.size(), 1u);

  cfg.rounds = 3;
  const auto a = run_experiment(cfg), b = run_experiment(cfg);
  ASSERT_EQ(a.rounds.size(), 3u);
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_EQ(a.rounds[t].accuracy, b.rounds[t].accuracy);
    EXPECT_EQ(a.rounds[t].precision, b.rounds[t].precision);
    EXPECT_EQ(a.rounds[t].loss_sam, b.rounds[t].loss_sam);
    if (t > 0) {
      EXPECT_GE(a.rounds[t].recall, a.rounds[t - 1].recall);
    }
  }
  EXPECT_EQ(a.final_state, b.final_state);
}

TEST(RunExperiment, ObserverSeesEveryRound) {
  const auto cfg = tiny_config("entropy");
  std::vector<int> seen;
  run_experiment(cfg, [&](const Dataset&, const PoolState& st, const RoundOutcome& o) {
    seen.push_back(o.metrics.round);
    EXPECT_EQ(o.metrics.n_labeled, st.labeled.size());
  });
  EXPECT_EQ(seen, (std::vector<int>{0, 1, 2}));
}

TEST(MisclassifiedReport, HandBuilt) {
  // Known classes 0, 1 plus the unknown output.
  const Dataset data = fixtures::table_dataset({{0.98, 0.01, 0.01}, {0.2, 0.7, 0.1}, {0.4, 0.35, 0.25}}, 2);
  const ModelParams f = fixtures::identity_model(3);
  const std::vector<LabeledId> queried{{0, 1}, {1, 1}, {2, 0}};
  const auto rows = misclassified_entropy_report(data, queried, f, 2);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].id, 0u);
  EXPECT_EQ(rows[0].predicted, 0u);
  EXPECT_EQ(rows[0].observed, 1u);
  EXPECT_LT(rows[0].entropy, 0.2);
  const double h = -(0.98 * std::log(0.98) + 2 * 0.01 * std::log(0.01));
  EXPECT_NEAR(rows[0].entropy, h, 1e-9);
}

TEST(MisclassifiedReport, CorrectQueriesGiveEmptyReport) {
  const Dataset data = fixtures::table_dataset({{0.6, 0.3, 0.1}, {0.1, 0.8, 0.1}}, 2);
  const std::vector<LabeledId> queried{{0, 0}, {1, 1}};
  EXPECT_TRUE(misclassified_entropy_report(data, queried, fixtures::identity_model(3), 2).empty());
}

TEST(MisclassifiedReport, KnownClassArgmaxIgnoresUnknownOutput) {
  const Dataset data = fixtures::table_dataset({{0.3, 0.1, 0.6}}, 2);
  const std::vector<LabeledId> queried{{0, 0}};
  EXPECT_TRUE(misclassified_entropy_report(data, queried, fixtures::identity_model(3), 2).empty());
}
