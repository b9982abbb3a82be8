#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "samosa/model.hpp"
#include "samosa/synthdata.hpp"

namespace samosa::fixtures {

/// Identity read-out over a one-patch input: predict_proba(x) == softmax(x).
inline ModelParams identity_model(std::size_t classes) {
  Mat64 w(classes, classes);
  Mat64 a(classes, classes);
  for (std::size_t i = 0; i < classes; ++i) {
    w(i, i) = 1.0;
    a(i, i) = 1.0;
  }
  return ModelParams(w, a);
}

/// One-patch input whose identity_model prediction is exactly `probs`
/// (up to rounding). Entries must be positive.
inline PatchInput input_for_probs(const std::vector<double>& probs) {
  Mat64 x(1, probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) x(0, i) = std::log(probs[i]) + 50.0;
  return PatchInput(x);
}

/// Dataset of one-patch examples with the given probability tables.
inline Dataset table_dataset(const std::vector<std::vector<double>>& rows, std::size_t num_known) {
  Dataset d;
  d.num_known = num_known;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Example ex;
    ex.x = input_for_probs(rows[i]);
    ex.id = i;
    ex.is_known = true;
    d.examples.push_back(ex);
  }
  return d;
}

}  // namespace samosa::fixtures

namespace samosa::fixtures {

struct GradCheck {
  double max_rel_error;
};

/// Random small net and batch; compares loss_and_grad with central differences.
/// Relative error is max_i |a_i - n_i| / max_i |n_i|: central differences carry
/// ~eps * L / h of rounding noise, which swamps per-coordinate ratios on
/// near-zero gradient entries.
inline GradCheck gradient_check(Rng& rng, double h = 1e-5) {
  std::uniform_int_distribution<std::size_t> m_d(1, 8), d_d(1, 8), p_d(1, 4), c_d(2, 5), b_d(1, 8);
  const std::size_t m = m_d(rng), d = d_d(rng), p = p_d(rng), c = c_d(rng), b = b_d(rng);
  std::normal_distribution<double> n01(0.0, 1.0);
  Mat64 w(m, d), a(c, m);
  for (double& v : w.flat()) v = n01(rng);
  for (double& v : a.flat()) v = n01(rng);
  const ModelParams params(w, a);
  std::vector<PatchInput> inputs;
  for (std::size_t i = 0; i < b; ++i) {
    Mat64 x(p, d);
    for (double& v : x.flat()) v = n01(rng);
    inputs.emplace_back(x);
  }
  std::vector<BatchItem> batch;
  std::uniform_int_distribution<std::size_t> label(0, c - 1);
  for (const auto& x : inputs) batch.push_back({&x, label(rng)});

  const LossGrad lg = loss_and_grad(params, batch);
  const Vec64 analytic = lg.grads.flatten();
  const Vec64 numeric = finite_diff_grad(
      [&](const Vec64& flat) { return mean_loss(params.with_values(flat), batch); }, params.flatten(), h);
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max(scale, std::abs(numeric[i]));
  }
  return {scale > 0.0 ? diff / scale : diff};
}

}  // namespace samosa::fixtures
