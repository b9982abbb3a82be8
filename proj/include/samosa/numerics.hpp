#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace samosa {

/// Dense vector of finite doubles.
class Vec64 {
 public:
  Vec64() = default;
  explicit Vec64(std::size_t n, double fill = 0.0);
  explicit Vec64(std::vector<double> values);
  Vec64(std::initializer_list<double> values);

  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  std::span<const double> view() const { return data_; }
  std::span<double> view() { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool operator==(const Vec64&) const = default;

 private:
  std::vector<double> data_;
};

/// Row-major dense matrix of finite doubles.
class Mat64 {
 public:
  Mat64() = default;
  Mat64(std::size_t rows, std::size_t cols, double fill = 0.0);
  Mat64(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> flat() const { return data_; }
  std::span<double> flat() { return data_; }

  bool same_shape(const Mat64& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }
  bool operator==(const Mat64&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// A validated probability distribution: non-negative entries summing to one.
class ProbVector {
 public:
  /// Throws std::invalid_argument unless entries are finite, non-negative and
  /// sum to 1 within 1e-6.
  static ProbVector from(std::vector<double> probs);

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  std::span<const double> view() const { return p_; }

 private:
  friend ProbVector softmax(std::span<const double> logits);
  explicit ProbVector(std::vector<double> p) : p_(std::move(p)) {}
  std::vector<double> p_;
};

/// Numerically stable softmax (max-subtracted). Throws on empty or non-finite input.
ProbVector softmax(std::span<const double> logits);
inline ProbVector softmax(const Vec64& logits) { return softmax(logits.view()); }

/// Shannon entropy in nats with 0 ln 0 = 0.
double entropy(const ProbVector& p);
/// Validating overload: throws when the entries do not sum to 1 within 1e-6.
double entropy(std::span<const double> p);

/// L1 distance. Throws on length mismatch.
double l1_dist(std::span<const double> a, std::span<const double> b);
inline double l1_dist(const ProbVector& a, const ProbVector& b) { return l1_dist(a.view(), b.view()); }

/// Index of the largest entry; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> v);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

using ScalarFn = std::function<double(const Vec64&)>;

/// Central-difference gradient oracle: (f(w + h e_i) - f(w - h e_i)) / 2h.
Vec64 finite_diff_grad(const ScalarFn& f, const Vec64& w, double h);

}  // namespace samosa
