#include <gtest/gtest.h>

#include <cmath>

#include "samosa/optim.hpp"

using namespace samosa;

namespace {

ModelParams scalar_params(double w, double a = 0.0) { return ModelParams(Mat64(1, 1, {w}), Mat64(1, 1, {a})); }

// L(w) = 0.5 * ||w||^2 over every parameter; ignores the batch.
LossGrad half_square(const ModelParams& p, Batch) {
  double loss = 0.0;
  const Vec64 w = p.flatten();
  for (double v : w.view()) loss += 0.5 * v * v;
  return {loss, p};
}

struct Toy {
  std::vector<PatchInput> xs;
  std::vector<BatchItem> items;
};

Toy separable_toy(Rng& rng, std::size_t n) {
  std::normal_distribution<double> noise(0.0, 0.1);
  Toy t;
  t.xs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = i % 2;
    Mat64 x(2, 3);
    for (double& v : x.flat()) v = noise(rng);
    x(0, y) += 2.0;
    t.xs.emplace_back(x);
  }
  for (std::size_t i = 0; i < n; ++i) t.items.push_back({&t.xs[i], i % 2});
  return t;
}

}  // namespace

TEST(SgdStep, PlainDescent) {
  auto p = scalar_params(1.0, 1.0);
  auto st = OptState::zeros_like(p);
  sgd_step(p, scalar_params(0.5, 0.5), st, {0.01, 0.0, 0.0});
  EXPECT_NEAR(p.first_layer()(0, 0), 0.995, 1e-15);
}

TEST(SgdStep, MomentumRecursion) {
  auto p = scalar_params(1.0);
  auto st = OptState::zeros_like(p);
  const SgdHyper h{0.01, 0.9, 0.0};
  sgd_step(p, scalar_params(1.0), st, h);
  EXPECT_NEAR(p.first_layer()(0, 0), 0.99, 1e-15);
  sgd_step(p, scalar_params(1.0), st, h);
  EXPECT_NEAR(st.velocity.first_layer()(0, 0), 1.9, 1e-15);
  EXPECT_NEAR(p.first_layer()(0, 0), 0.971, 1e-15);
}

TEST(SgdStep, WeightDecay) {
  auto p = scalar_params(2.0);
  auto st = OptState::zeros_like(p);
  sgd_step(p, scalar_params(0.0), st, {0.1, 0.0, 0.1});
  EXPECT_NEAR(p.first_layer()(0, 0), 1.98, 1e-15);
}

TEST(SgdStep, WeightDecayContractsNorm) {
  Rng rng(8);
  auto p = init_params(5, 7, 3, 1.0, rng);
  const double before = l2_norm(p.flatten().view());
  auto st = OptState::zeros_like(p);
  sgd_step(p, ModelParams::zeros(5, 7, 3), st, {0.05, 0.0, 0.2});
  EXPECT_NEAR(l2_norm(p.flatten().view()) / before, 1.0 - 0.05 * 0.2, 1e-14);
}

TEST(SgdStep, ShapeMismatchThrows) {
  auto p = scalar_params(1.0);
  auto st = OptState::zeros_like(p);
  EXPECT_THROW(sgd_step(p, ModelParams::zeros(2, 1, 1), st, {}), std::invalid_argument);
}

TEST(SamStep, OneDimensionalHandEvaluation) {
  auto p = scalar_params(1.0, 0.0);
  auto st = OptState::zeros_like(p);
  const PatchInput x(Mat64(1, 1, {1.0}));
  const std::vector<BatchItem> batch{{&x, 0}};
  const double perturbed = sam_step(p, batch, st, {0.01, 0.0, 0.0}, {0.05}, half_square);
  EXPECT_NEAR(p.first_layer()(0, 0), 0.9895, 1e-15);
  EXPECT_NEAR(perturbed, 0.5 * 1.05 * 1.05, 1e-15);
}

TEST(SamStep, StationaryPointUnchanged) {
  auto p = scalar_params(0.0, 0.0);
  auto st = OptState::zeros_like(p);
  const PatchInput x(Mat64(1, 1, {1.0}));
  const std::vector<BatchItem> batch{{&x, 0}};
  sam_step(p, batch, st, {0.01, 0.0, 0.0}, {0.05}, half_square);
  EXPECT_EQ(p, scalar_params(0.0, 0.0));
}

TEST(SamStep, ZeroRhoIsBitwiseSgd) {
  Rng rng(12);
  const auto toy = separable_toy(rng, 16);
  auto a = init_params(4, 3, 2, 0.3, rng);
  auto b = a;
  auto sa = OptState::zeros_like(a), sb = OptState::zeros_like(b);
  const SgdHyper h{0.05, 0.9, 5e-4};
  for (int step = 0; step < 20; ++step) {
    sam_step(a, toy.items, sa, h, {0.0});
    sgd_step(b, loss_and_grad(b, toy.items).grads, sb, h);
    ASSERT_EQ(a, b) << "step " << step;
  }
}

TEST(SamStep, AscentIncreasesLoss) {
  Rng rng(99);
  int increased = 0;
  const int probes = 200;
  for (int i = 0; i < probes; ++i) {
    const auto toy = separable_toy(rng, 8);
    const auto p = init_params(4, 3, 2, 0.5, rng);
    const auto lg = loss_and_grad(p, toy.items);
    const Vec64 g = lg.grads.flatten();
    const double norm = l2_norm(g.view());
    Vec64 w = p.flatten();
    for (std::size_t k = 0; k < w.size(); ++k) w[k] += 1e-4 * g[k] / norm;
    if (mean_loss(p.with_values(w), toy.items) >= lg.loss) ++increased;
  }
  EXPECT_GE(increased, static_cast<int>(0.95 * probes));
}

TEST(LrSchedule, StepDecay) {
  const LrSchedule s{0.01, 60, 0.5};
  EXPECT_DOUBLE_EQ(lr_at(s, 0), 0.01);
  EXPECT_DOUBLE_EQ(lr_at(s, 59), 0.01);
  EXPECT_DOUBLE_EQ(lr_at(s, 60), 0.005);
  EXPECT_DOUBLE_EQ(lr_at(s, 120), 0.0025);
}

TEST(Hyper, Validation) {
  EXPECT_THROW((SgdHyper{0.0, 0.9, 0.0}.validate()), std::invalid_argument);
  EXPECT_THROW((SgdHyper{0.1, 1.0, 0.0}.validate()), std::invalid_argument);
  EXPECT_THROW((SgdHyper{0.1, 0.5, -1.0}.validate()), std::invalid_argument);
  EXPECT_THROW((SamHyper{-0.1}.validate()), std::invalid_argument);
  EXPECT_THROW((LrSchedule{0.01, 0, 0.5}.validate()), std::invalid_argument);
  EXPECT_THROW((LrSchedule{0.01, 10, 0.0}.validate()), std::invalid_argument);
  EXPECT_NO_THROW(TrainConfig{}.validate());
}

TEST(Train, ZeroEpochsReturnsParams) {
  Rng rng(1);
  const auto toy = separable_toy(rng, 10);
  const auto p = init_params(4, 3, 2, 0.3, rng);
  TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_EQ(train(p, toy.items, OptimizerKind::kSgd, cfg, rng).params, p);
}

TEST(Train, SeparableToyConverges) {
  Rng rng(2);
  const auto toy = separable_toy(rng, 40);
  const auto p = init_params(8, 3, 2, 0.3, rng);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.schedule.initial_lr = 0.1;
  const auto res = train(p, toy.items, OptimizerKind::kSgd, cfg, rng);
  EXPECT_LT(res.final_loss, 0.05);
}

TEST(Train, SameSeedIsBitIdentical) {
  Rng data_rng(3);
  const auto toy = separable_toy(data_rng, 30);
  const auto p = init_params(4, 3, 2, 0.3, data_rng);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.batch_size = 7;
  for (auto kind : {OptimizerKind::kSgd, OptimizerKind::kSam}) {
    Rng r1(42), r2(42);
    const auto a = train(p, toy.items, kind, cfg, r1);
    const auto b = train(p, toy.items, kind, cfg, r2);
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.final_loss, b.final_loss);
  }
}

TEST(Train, ZeroRhoSamMatchesSgd) {
  Rng data_rng(4);
  const auto toy = separable_toy(data_rng, 25);
  const auto p = init_params(4, 3, 2, 0.3, data_rng);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.batch_size = 4;
  cfg.sam.rho = 0.0;
  Rng r1(5), r2(5);
  EXPECT_EQ(train(p, toy.items, OptimizerKind::kSgd, cfg, r1).params,
            train(p, toy.items, OptimizerKind::kSam, cfg, r2).params);
}

TEST(Train, EmptyDatasetThrows) {
  Rng rng(1);
  EXPECT_THROW(train(ModelParams::zeros(1, 1, 2), {}, OptimizerKind::kSgd, TrainConfig{}, rng), std::invalid_argument);
}
