#include "samosa/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace samosa {
namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite entry");
  }
}

}  // namespace

Vec64::Vec64(std::size_t n, double fill) : data_(n, fill) { require_finite(data_, "Vec64"); }

Vec64::Vec64(std::vector<double> values) : data_(std::move(values)) { require_finite(data_, "Vec64"); }

Vec64::Vec64(std::initializer_list<double> values) : data_(values) { require_finite(data_, "Vec64"); }

Mat64::Mat64(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  require_finite(data_, "Mat64");
}

Mat64::Mat64(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) throw std::invalid_argument("Mat64: data length != rows * cols");
  require_finite(data_, "Mat64");
}

ProbVector ProbVector::from(std::vector<double> probs) {
  if (probs.empty()) throw std::invalid_argument("ProbVector: empty");
  double sum = 0.0;
  for (double x : probs) {
    if (!std::isfinite(x) || x < 0.0) throw std::invalid_argument("ProbVector: entries must be finite and >= 0");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw std::invalid_argument("ProbVector: entries do not sum to 1");
  return ProbVector(std::move(probs));
}

ProbVector softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty logits");
  require_finite(logits, "softmax");
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    z += p[i];
  }
  for (double& x : p) x /= z;
  return ProbVector(std::move(p));
}

double entropy(const ProbVector& p) {
  double h = 0.0;
  for (double x : p.view()) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return std::max(h, 0.0);
}

double entropy(std::span<const double> p) {
  return entropy(ProbVector::from(std::vector<double>(p.begin(), p.end())));
}

double l1_dist(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("l1_dist: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

std::size_t argmax(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("argmax: empty");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

double dot(std::span<const double> a, std::span<const double> b) {
  // Four partial sums; the order is fixed so results are reproducible.
  const std::size_t n = a.size();
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

Vec64 finite_diff_grad(const ScalarFn& f, const Vec64& w, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: step must be positive");
  std::vector<double> g(w.size());
  std::vector<double> probe(w.values());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double fp = f(Vec64(probe));
    probe[i] = orig - h;
    const double fm = f(Vec64(probe));
    probe[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw std::domain_error("finite_diff_grad: non-finite function value");
    }
    g[i] = (fp - fm) / (2.0 * h);
  }
  return Vec64(std::move(g));
}

}  // namespace samosa
