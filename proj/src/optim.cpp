#include "samosa/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace samosa {
namespace {

// Applies f(param, other) elementwise over both layers.
template <typename F>
void zip_apply(ModelParams& params, const ModelParams& other, F&& f) {
  auto p1 = params.first_layer().flat();
  auto o1 = other.first_layer().flat();
  for (std::size_t i = 0; i < p1.size(); ++i) f(p1[i], o1[i]);
  auto p2 = params.second_layer().flat();
  auto o2 = other.second_layer().flat();
  for (std::size_t i = 0; i < p2.size(); ++i) f(p2[i], o2[i]);
}

double squared_norm(const ModelParams& p) {
  return dot(p.first_layer().flat(), p.first_layer().flat()) +
         dot(p.second_layer().flat(), p.second_layer().flat());
}

}  // namespace

void SgdHyper::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be non-negative");
}

void SamHyper::validate() const {
  if (!(rho >= 0.0)) throw std::invalid_argument("rho must be non-negative");
}

void LrSchedule::validate() const {
  if (!(initial_lr > 0.0)) throw std::invalid_argument("lr must be positive");
  if (step_size < 1) throw std::invalid_argument("lr_step must be >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("lr_gamma must lie in (0, 1]");
}

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("epochs must be non-negative");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  sgd.validate();
  sam.validate();
  schedule.validate();
}

OptState OptState::zeros_like(const ModelParams& params) {
  return {ModelParams::zeros(params.width(), params.input_dim(), params.num_classes())};
}

void sgd_step(ModelParams& params, const ModelParams& grads, OptState& state, const SgdHyper& hyper) {
  if (!params.same_shape(grads) || !params.same_shape(state.velocity)) {
    throw std::invalid_argument("sgd_step: shape mismatch");
  }
  const auto update = [&](std::span<double> w, std::span<const double> g, std::span<double> v) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = hyper.momentum * v[i] + (g[i] + hyper.weight_decay * w[i]);
      w[i] -= hyper.lr * v[i];
    }
  };
  update(params.first_layer().flat(), grads.first_layer().flat(), state.velocity.first_layer().flat());
  update(params.second_layer().flat(), grads.second_layer().flat(), state.velocity.second_layer().flat());
}

double sam_step(ModelParams& params, Batch batch, OptState& state, const SgdHyper& sgd, const SamHyper& sam,
                const LossFn& loss_fn) {
  const LossGrad first = loss_fn(params, batch);
  const double norm = std::sqrt(squared_norm(first.grads));
  ModelParams perturbed = params;
  if (norm >= 1e-12) {
    const double scale = sam.rho / norm;
    zip_apply(perturbed, first.grads, [&](double& w, double g) { w += scale * g; });
  }
  const LossGrad second = loss_fn(perturbed, batch);
  sgd_step(params, second.grads, state, sgd);
  return second.loss;
}

double lr_at(const LrSchedule& schedule, int epoch) {
  return schedule.initial_lr * std::pow(schedule.gamma, epoch / schedule.step_size);
}

TrainResult train(ModelParams params, std::span<const BatchItem> dataset, OptimizerKind kind,
                  const TrainConfig& cfg, Rng& rng) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  cfg.validate();
  OptState state = OptState::zeros_like(params);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<BatchItem> batch;
  const auto bs = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    SgdHyper hyper = cfg.sgd;
    hyper.lr = lr_at(cfg.schedule, epoch);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(dataset[order[i]]);
      if (kind == OptimizerKind::kSam) {
        sam_step(params, batch, state, hyper, cfg.sam);
      } else {
        const LossGrad lg = loss_and_grad(params, batch);
        sgd_step(params, lg.grads, state, hyper);
      }
    }
  }
  const double final_loss = mean_loss(params, dataset);
  return {std::move(params), final_loss};
}

}  // namespace samosa
