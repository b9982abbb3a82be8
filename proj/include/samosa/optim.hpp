#pragma once

#include <functional>
#include <span>

#include "samosa/model.hpp"
#include "samosa/rng.hpp"

namespace samosa {

struct SgdHyper {
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 5e-4;

  void validate() const;
  bool operator==(const SgdHyper&) const = default;
};

struct SamHyper {
  double rho = 0.05;

  void validate() const;
  bool operator==(const SamHyper&) const = default;
};

struct OptState {
  ModelParams velocity;

  static OptState zeros_like(const ModelParams& params);
};

struct LrSchedule {
  double initial_lr = 0.01;
  int step_size = 60;
  double gamma = 0.5;

  void validate() const;
  bool operator==(const LrSchedule&) const = default;
};

enum class OptimizerKind { kSgd, kSam };

/// g~ = grads + wd * params; v' = momentum * v + g~; params' = params - lr * v'.
void sgd_step(ModelParams& params, const ModelParams& grads, OptState& state, const SgdHyper& hyper);

using LossFn = std::function<LossGrad(const ModelParams&, Batch)>;

/// One SAM update: ascend to params + rho * g / ||g||_2, take the gradient
/// there, and apply sgd_step at the original params with that gradient.
/// Returns the loss at the perturbed point.
double sam_step(ModelParams& params, Batch batch, OptState& state, const SgdHyper& sgd, const SamHyper& sam,
                const LossFn& loss_fn = loss_and_grad);

/// initial_lr * gamma^floor(epoch / step_size).
double lr_at(const LrSchedule& schedule, int epoch);

struct TrainConfig {
  int epochs = 200;
  int batch_size = 32;
  SgdHyper sgd;
  SamHyper sam;
  LrSchedule schedule;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct TrainResult {
  ModelParams params;
  /// Mean cross-entropy over the full dataset after the last epoch.
  double final_loss;
};

/// Shuffled mini-batch training. Deterministic given the rng state.
/// The schedule overrides sgd.lr per epoch.
TrainResult train(ModelParams params, std::span<const BatchItem> dataset, OptimizerKind kind,
                  const TrainConfig& cfg, Rng& rng);

}  // namespace samosa
