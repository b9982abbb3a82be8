#include "samosa/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace samosa {
namespace {

// Samples per reduction chunk in loss_and_grad. Fixed so that the summation
// order depends on the batch only.
constexpr std::size_t kChunk = 4;

void check_input(const ModelParams& params, const PatchInput& x) {
  if (x.dim() != params.input_dim()) throw std::invalid_argument("patch dimension does not match model input_dim");
}

void check_batch(const ModelParams& params, Batch batch) {
  if (batch.empty()) throw std::invalid_argument("loss_and_grad: empty batch");
  for (const auto& item : batch) {
    check_input(params, *item.input);
    if (item.label >= params.num_classes()) throw std::invalid_argument("loss_and_grad: label out of range");
  }
}

// Pre-activations u[j * P + p] = w_j . x_p.
void preactivations(const ModelParams& params, const PatchInput& x, std::vector<double>& u) {
  const std::size_t m = params.width(), P = x.num_patches();
  u.resize(m * P);
  for (std::size_t j = 0; j < m; ++j) {
    const auto w = params.first_layer().row(j);
    for (std::size_t p = 0; p < P; ++p) u[j * P + p] = dot(w, x.patch(p));
  }
}

void hidden_from_pre(const std::vector<double>& u, std::size_t m, std::size_t P, std::vector<double>& h) {
  h.assign(m, 0.0);
  const double inv_p = 1.0 / static_cast<double>(P);
  for (std::size_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (std::size_t p = 0; p < P; ++p) s += std::max(u[j * P + p], 0.0);
    h[j] = s * inv_p;
  }
}

void logits_from_hidden(const ModelParams& params, const std::vector<double>& h, std::vector<double>& z) {
  const std::size_t C = params.num_classes();
  z.resize(C);
  for (std::size_t c = 0; c < C; ++c) z[c] = dot(params.second_layer().row(c), h);
}

double log_sum_exp(std::span<const double> z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - mx);
  return mx + std::log(s);
}

// -ln softmax(z)_y. When y is the top logit this is log1p of the other
// classes' mass, which stays accurate for losses far below machine epsilon.
double cross_entropy(std::span<const double> z, std::size_t y) {
  const double zy = z[y];
  double mx = 0.0;
  for (double v : z) mx = std::max(mx, v - zy);
  if (mx > 0.0) return log_sum_exp(z) - zy;
  double rest = 0.0;
  for (std::size_t c = 0; c < z.size(); ++c) {
    if (c != y) rest += std::exp(z[c] - zy);
  }
  return std::log1p(rest);
}

struct Scratch {
  std::vector<double> u, h, z, dz, delta;
};

// Adds one sample's loss gradient into (g_first, g_second); returns its loss.
double accumulate_sample(const ModelParams& params, const BatchItem& item, std::span<double> g_first,
                         std::span<double> g_second, Scratch& s) {
  const PatchInput& x = *item.input;
  const std::size_t m = params.width(), P = x.num_patches(), C = params.num_classes(), d = x.dim();
  preactivations(params, x, s.u);
  hidden_from_pre(s.u, m, P, s.h);
  logits_from_hidden(params, s.h, s.z);

  const double lse = log_sum_exp(s.z);
  const double loss = cross_entropy(s.z, item.label);
  s.dz.resize(C);
  double others = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    s.dz[c] = std::exp(s.z[c] - lse);
    if (c != item.label) others += s.dz[c];
  }
  // p_y - 1 written as minus the other classes' mass to avoid cancellation.
  s.dz[item.label] = -others;

  const Mat64& a = params.second_layer();
  s.delta.assign(m, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    const double dzc = s.dz[c];
    double* gs = g_second.data() + c * m;
    const auto arow = a.row(c);
    for (std::size_t j = 0; j < m; ++j) {
      gs[j] += dzc * s.h[j];
      s.delta[j] += arow[j] * dzc;
    }
  }
  const double inv_p = 1.0 / static_cast<double>(P);
  for (std::size_t j = 0; j < m; ++j) {
    const double dj = s.delta[j] * inv_p;
    if (dj == 0.0) continue;
    double* gw = g_first.data() + j * d;
    for (std::size_t p = 0; p < P; ++p) {
      if (s.u[j * P + p] <= 0.0) continue;
      const auto xp = x.patch(p);
      for (std::size_t k = 0; k < d; ++k) gw[k] += dj * xp[k];
    }
  }
  return loss;
}

}  // namespace

PatchInput::PatchInput(Mat64 patches) : patches_(std::move(patches)) {
  if (patches_.rows() < 1 || patches_.cols() < 1) throw std::invalid_argument("PatchInput: need P >= 1 and d >= 1");
}

ModelParams::ModelParams(Mat64 first_layer, Mat64 second_layer)
    : first_layer_(std::move(first_layer)), second_layer_(std::move(second_layer)) {
  if (second_layer_.cols() != first_layer_.rows()) {
    throw std::invalid_argument("ModelParams: second_layer cols must equal first_layer rows");
  }
}

ModelParams ModelParams::zeros(std::size_t width, std::size_t input_dim, std::size_t num_classes) {
  return ModelParams(Mat64(width, input_dim), Mat64(num_classes, width));
}

Vec64 ModelParams::flatten() const {
  std::vector<double> v;
  v.reserve(num_values());
  v.insert(v.end(), first_layer_.flat().begin(), first_layer_.flat().end());
  v.insert(v.end(), second_layer_.flat().begin(), second_layer_.flat().end());
  return Vec64(std::move(v));
}

ModelParams ModelParams::with_values(const Vec64& flat) const {
  if (flat.size() != num_values()) throw std::invalid_argument("ModelParams::with_values: size mismatch");
  const auto all = flat.view();
  const std::size_t n1 = first_layer_.size();
  return ModelParams(
      Mat64(first_layer_.rows(), first_layer_.cols(), std::vector<double>(all.begin(), all.begin() + n1)),
      Mat64(second_layer_.rows(), second_layer_.cols(), std::vector<double>(all.begin() + n1, all.end())));
}

ModelParams init_params(std::size_t width, std::size_t input_dim, std::size_t num_classes, double sigma0,
                        Rng& rng) {
  if (width == 0 || input_dim == 0 || num_classes == 0) throw std::invalid_argument("init_params: zero dimension");
  ModelParams params = ModelParams::zeros(width, input_dim, num_classes);
  std::normal_distribution<double> first(0.0, sigma0);
  for (double& v : params.first_layer().flat()) v = first(rng);
  std::normal_distribution<double> second(0.0, 1.0 / std::sqrt(static_cast<double>(width)));
  for (double& v : params.second_layer().flat()) v = second(rng);
  return params;
}

Vec64 embed(const ModelParams& params, const PatchInput& x) {
  check_input(params, x);
  std::vector<double> u, h;
  preactivations(params, x, u);
  hidden_from_pre(u, params.width(), x.num_patches(), h);
  return Vec64(std::move(h));
}

Logits forward(const ModelParams& params, const PatchInput& x) {
  check_input(params, x);
  std::vector<double> u, h, z;
  preactivations(params, x, u);
  hidden_from_pre(u, params.width(), x.num_patches(), h);
  logits_from_hidden(params, h, z);
  return Logits{Vec64(std::move(z))};
}

ProbVector predict_proba(const ModelParams& params, const PatchInput& x) {
  return softmax(forward(params, x).values);
}

std::size_t predicted_class(const ModelParams& params, const PatchInput& x) {
  return argmax(predict_proba(params, x).view());
}

LossGrad loss_and_grad(const ModelParams& params, Batch batch) {
  check_batch(params, batch);
  const std::size_t n1 = params.first_layer().size(), n2 = params.second_layer().size();
  const std::size_t chunks = (batch.size() + kChunk - 1) / kChunk;
  std::vector<double> partial(chunks * (n1 + n2), 0.0);
  std::vector<double> chunk_loss(chunks, 0.0);

#pragma omp parallel
  {
    Scratch scratch;
#pragma omp for schedule(static)
    for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(chunks); ++ci) {
      const std::size_t c = static_cast<std::size_t>(ci);
      std::span<double> buf(partial.data() + c * (n1 + n2), n1 + n2);
      const std::size_t end = std::min(batch.size(), (c + 1) * kChunk);
      double l = 0.0;
      for (std::size_t i = c * kChunk; i < end; ++i) {
        l += accumulate_sample(params, batch[i], buf.first(n1), buf.subspan(n1), scratch);
      }
      chunk_loss[c] = l;
    }
  }

  ModelParams grads = ModelParams::zeros(params.width(), params.input_dim(), params.num_classes());
  auto g1 = grads.first_layer().flat();
  auto g2 = grads.second_layer().flat();
  double loss = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    const double* src = partial.data() + c * (n1 + n2);
    for (std::size_t k = 0; k < n1; ++k) g1[k] += src[k];
    for (std::size_t k = 0; k < n2; ++k) g2[k] += src[n1 + k];
    loss += chunk_loss[c];
  }
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (double& v : g1) v *= inv_b;
  for (double& v : g2) v *= inv_b;
  return {loss * inv_b, std::move(grads)};
}

LossGrad loss_and_grad_serial(const ModelParams& params, Batch batch) {
  check_batch(params, batch);
  const std::size_t m = params.width(), C = params.num_classes(), d = params.input_dim();
  const Mat64& w = params.first_layer();
  const Mat64& a = params.second_layer();
  ModelParams grads = ModelParams::zeros(m, d, C);
  double loss = 0.0;
  for (const auto& item : batch) {
    const PatchInput& x = *item.input;
    const std::size_t P = x.num_patches();
    Mat64 u(m, P);
    std::vector<double> h(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t p = 0; p < P; ++p) {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) s += w(j, k) * x.matrix()(p, k);
        u(j, p) = s;
        h[j] += (s > 0.0 ? s : 0.0) / static_cast<double>(P);
      }
    }
    std::vector<double> z(C, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t j = 0; j < m; ++j) z[c] += a(c, j) * h[j];
    }
    const ProbVector prob = softmax(z);
    loss += cross_entropy(z, item.label);
    for (std::size_t c = 0; c < C; ++c) {
      const double dz = prob[c] - (c == item.label ? 1.0 : 0.0);
      for (std::size_t j = 0; j < m; ++j) {
        grads.second_layer()(c, j) += dz * h[j];
        const double dh = a(c, j) * dz / static_cast<double>(P);
        for (std::size_t p = 0; p < P; ++p) {
          if (u(j, p) <= 0.0) continue;
          for (std::size_t k = 0; k < d; ++k) grads.first_layer()(j, k) += dh * x.matrix()(p, k);
        }
      }
    }
  }
  const double b = static_cast<double>(batch.size());
  for (double& v : grads.first_layer().flat()) v /= b;
  for (double& v : grads.second_layer().flat()) v /= b;
  return {loss / b, std::move(grads)};
}

double mean_loss(const ModelParams& params, Batch batch) {
  check_batch(params, batch);
  std::vector<double> losses(batch.size());
#pragma omp parallel
  {
    std::vector<double> u, h, z;
#pragma omp for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(batch.size()); ++ii) {
      const auto& item = batch[static_cast<std::size_t>(ii)];
      preactivations(params, *item.input, u);
      hidden_from_pre(u, params.width(), item.input->num_patches(), h);
      logits_from_hidden(params, h, z);
      losses[static_cast<std::size_t>(ii)] = cross_entropy(z, item.label);
    }
  }
  double s = 0.0;
  for (double l : losses) s += l;
  return s / static_cast<double>(batch.size());
}

}  // namespace samosa
