#pragma once

// Two-layer patch network:
//   logit_c(x) = sum_j a[c][j] * (1/P) sum_p relu(w_j . x_p)
// first_layer holds the filters w_j (m x d), second_layer the read-out a (C x m).

#include <cstddef>
#include <span>
#include <vector>

#include "samosa/numerics.hpp"
#include "samosa/rng.hpp"

namespace samosa {

/// P patches of dimension d, stored as a P x d matrix.
class PatchInput {
 public:
  PatchInput() = default;
  explicit PatchInput(Mat64 patches);

  std::size_t num_patches() const { return patches_.rows(); }
  std::size_t dim() const { return patches_.cols(); }
  std::span<const double> patch(std::size_t p) const { return patches_.row(p); }
  const Mat64& matrix() const { return patches_; }

  bool operator==(const PatchInput&) const = default;

 private:
  Mat64 patches_;
};

class ModelParams {
 public:
  ModelParams() = default;
  ModelParams(Mat64 first_layer, Mat64 second_layer);

  /// All-zero parameters of the given shape.
  static ModelParams zeros(std::size_t width, std::size_t input_dim, std::size_t num_classes);

  std::size_t width() const { return first_layer_.rows(); }
  std::size_t input_dim() const { return first_layer_.cols(); }
  std::size_t num_classes() const { return second_layer_.rows(); }
  std::size_t num_values() const { return first_layer_.size() + second_layer_.size(); }

  const Mat64& first_layer() const { return first_layer_; }
  const Mat64& second_layer() const { return second_layer_; }
  Mat64& first_layer() { return first_layer_; }
  Mat64& second_layer() { return second_layer_; }

  bool same_shape(const ModelParams& o) const {
    return first_layer_.same_shape(o.first_layer_) && second_layer_.same_shape(o.second_layer_);
  }
  bool operator==(const ModelParams&) const = default;

  /// Concatenated [first_layer, second_layer] values.
  Vec64 flatten() const;
  /// Inverse of flatten for a parameter set with this shape.
  ModelParams with_values(const Vec64& flat) const;

 private:
  Mat64 first_layer_;
  Mat64 second_layer_;
};

/// first_layer ~ N(0, sigma0^2), second_layer ~ N(0, 1/m).
ModelParams init_params(std::size_t width, std::size_t input_dim, std::size_t num_classes, double sigma0,
                        Rng& rng);

struct Logits {
  Vec64 values;
};

Logits forward(const ModelParams& params, const PatchInput& x);
ProbVector predict_proba(const ModelParams& params, const PatchInput& x);
/// argmax of predict_proba, ties toward the lowest index.
std::size_t predicted_class(const ModelParams& params, const PatchInput& x);
/// Hidden representation ((1/P) sum_p relu(w_j . x_p))_j.
Vec64 embed(const ModelParams& params, const PatchInput& x);

struct BatchItem {
  const PatchInput* input;
  std::size_t label;
};
using Batch = std::span<const BatchItem>;

struct LossGrad {
  double loss;
  ModelParams grads;
};

/// Mean cross-entropy over the batch and its exact gradient.
/// Per-sample gradients are computed in parallel and reduced in batch order,
/// so the result does not depend on the thread count.
LossGrad loss_and_grad(const ModelParams& params, Batch batch);

/// Straightforward single-threaded reference for loss_and_grad.
LossGrad loss_and_grad_serial(const ModelParams& params, Batch batch);

/// Mean cross-entropy only.
double mean_loss(const ModelParams& params, Batch batch);

}  // namespace samosa
