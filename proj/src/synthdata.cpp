#include "samosa/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace samosa {
namespace {

std::size_t rounded_count(double frac, std::size_t n) {
  return static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
}

}  // namespace

std::string_view to_string(Subclass z) { return z == Subclass::kTypical ? "typical" : "atypical"; }

void GenConfig::validate() const {
  if (num_known < 2) throw std::invalid_argument("num_known must be >= 2");
  if (per_class < 1) throw std::invalid_argument("per_class must be >= 1");
  if (!(atypical_fraction > 0.0 && atypical_fraction < 1.0)) {
    throw std::invalid_argument("atypical_fraction must lie in (0, 1)");
  }
  if (patches < 1) throw std::invalid_argument("patches must be >= 1");
  if (dim < num_classes()) throw std::invalid_argument("dim must be >= number of classes");
  if (!(sigma_p >= 0.0)) throw std::invalid_argument("sigma_p must be non-negative");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (!(alpha > beta)) throw std::invalid_argument("alpha must exceed beta");
  if (!(mu_norm > 0.0)) throw std::invalid_argument("mu_norm must be positive");
}

Vec64 GenConfig::signal(std::size_t c) const {
  if (c >= num_classes()) throw std::invalid_argument("signal: invalid class");
  Vec64 mu(dim);
  mu[c] = mu_norm;
  return mu;
}

void OracleConfig::validate() const {
  if (!(flip_prob >= 0.0 && flip_prob <= 1.0)) throw std::invalid_argument("flip_prob must lie in [0, 1]");
}

Example gen_example(const GenConfig& cfg, std::size_t c, Subclass z, Rng& rng, std::size_t id) {
  if (c >= cfg.num_classes()) throw std::invalid_argument("gen_example: invalid class");
  const std::size_t P = cfg.patches, d = cfg.dim;
  std::uniform_int_distribution<std::size_t> pick(0, P - 1);
  const std::size_t signal_patch = pick(rng);
  Mat64 x(P, d);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t p = 0; p < P; ++p) {
    if (p == signal_patch) continue;
    for (double& v : x.row(p)) v = cfg.sigma_p * noise(rng);
  }
  const double scale = (z == Subclass::kTypical ? cfg.alpha : cfg.beta) * cfg.mu_norm;
  x(signal_patch, c) = scale;
  return Example{PatchInput(std::move(x)), c, z, c < cfg.num_known, id, signal_patch};
}

OpenSetPool build_openset_pool(const GenConfig& cfg_in, double mismatch_ratio, double init_labeled_frac,
                               double test_frac, Rng& rng) {
  if (!(mismatch_ratio > 0.0 && mismatch_ratio <= 1.0)) throw std::invalid_argument("mismatch_ratio must lie in (0, 1]");
  if (!(init_labeled_frac > 0.0 && init_labeled_frac < 1.0)) {
    throw std::invalid_argument("init_labeled_frac must lie in (0, 1)");
  }
  if (!(test_frac > 0.0 && test_frac < 1.0)) throw std::invalid_argument("test_frac must lie in (0, 1)");

  GenConfig cfg = cfg_in;
  const std::size_t total = cfg.num_classes();
  const auto known = static_cast<std::size_t>(std::ceil(mismatch_ratio * static_cast<double>(total) - 1e-9));
  cfg.num_known = std::clamp<std::size_t>(known, 1, total);
  cfg.num_unknown = total - cfg.num_known;
  cfg.validate();

  const std::size_t n = cfg.per_class;
  const std::size_t n_atypical = rounded_count(cfg.atypical_fraction, n);
  const std::size_t n_test = rounded_count(test_frac, n);
  const std::size_t n_seed = rounded_count(init_labeled_frac, n);
  if (n_test == 0 || n_seed == 0 || n_test + n_seed >= n) {
    throw std::invalid_argument("per_class too small for the requested init_labeled_frac/test_frac");
  }

  OpenSetPool pool;
  pool.data.num_known = cfg.num_known;
  pool.data.gen = cfg;
  pool.data.examples.reserve(total * n);
  for (std::size_t c = 0; c < total; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      const Subclass z = i < n_atypical ? Subclass::kAtypical : Subclass::kTypical;
      pool.data.examples.push_back(gen_example(cfg, c, z, rng, pool.data.examples.size()));
    }
  }

  PoolState& st = pool.state;
  for (std::size_t c = 0; c < total; ++c) {
    std::vector<std::size_t> ids(n);
    std::iota(ids.begin(), ids.end(), c * n);
    if (c >= cfg.num_known) {
      st.unlabeled.insert(st.unlabeled.end(), ids.begin(), ids.end());
      continue;
    }
    std::shuffle(ids.begin(), ids.end(), rng);
    st.test.insert(st.test.end(), ids.begin(), ids.begin() + n_test);
    for (std::size_t k = n_test; k < n_test + n_seed; ++k) st.labeled.push_back({ids[k], c});
    st.unlabeled.insert(st.unlabeled.end(), ids.begin() + n_test + n_seed, ids.end());
    st.n_known += n - n_test;
  }
  std::sort(st.test.begin(), st.test.end());
  std::sort(st.unlabeled.begin(), st.unlabeled.end());
  std::sort(st.labeled.begin(), st.labeled.end(), [](const LabeledId& a, const LabeledId& b) { return a.id < b.id; });
  return pool;
}

std::size_t oracle_label(const Example& ex, const OracleConfig& oc, std::size_t num_known, Rng& rng) {
  if (!ex.is_known) return num_known;
  std::bernoulli_distribution flip(oc.flip_prob);
  if (num_known < 2 || !flip(rng)) return ex.true_class;
  std::uniform_int_distribution<std::size_t> other(0, num_known - 2);
  const std::size_t k = other(rng);
  return k >= ex.true_class ? k + 1 : k;
}

}  // namespace samosa
