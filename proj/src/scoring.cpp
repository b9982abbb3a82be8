#include "samosa/scoring.hpp"

#include <algorithm>
#include <stdexcept>

namespace samosa {
namespace {

void check_heads(const ModelParams& f_sgd, const ModelParams& f_sam, std::size_t num_known) {
  if (f_sgd.num_classes() != num_known + 1 || f_sam.num_classes() != num_known + 1) {
    throw std::invalid_argument("score_pool: models must have num_known + 1 outputs");
  }
}

SampleScore score_one(const Dataset& data, std::size_t id, const ModelParams& f_sgd, const ModelParams& f_sam,
                      std::size_t num_known) {
  const PatchInput& x = data[id].x;
  const ProbVector p_sgd = predict_proba(f_sgd, x);
  const ProbVector p_sam = predict_proba(f_sam, x);
  SampleScore s;
  s.id = id;
  s.score = samis_p(p_sam, p_sgd);
  s.sgd_pred = argmax(p_sgd.view());
  s.sam_pred = argmax(p_sam.view());
  s.accepted = s.sgd_pred != num_known && s.sam_pred != num_known;
  return s;
}

}  // namespace

double samis_p(const ProbVector& p_sam, const ProbVector& p_sgd) { return l1_dist(p_sam, p_sgd); }

std::vector<SampleScore> score_pool(const Dataset& data, std::span<const std::size_t> ids, const ModelParams& f_sgd,
                                    const ModelParams& f_sam, std::size_t num_known) {
  check_heads(f_sgd, f_sam, num_known);
  std::vector<SampleScore> out(ids.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(ids.size()); ++i) {
    const auto k = static_cast<std::size_t>(i);
    out[k] = score_one(data, ids[k], f_sgd, f_sam, num_known);
  }
  return out;
}

std::vector<SampleScore> score_pool_serial(const Dataset& data, std::span<const std::size_t> ids,
                                           const ModelParams& f_sgd, const ModelParams& f_sam,
                                           std::size_t num_known) {
  check_heads(f_sgd, f_sam, num_known);
  std::vector<SampleScore> out;
  out.reserve(ids.size());
  for (std::size_t id : ids) out.push_back(score_one(data, id, f_sgd, f_sam, num_known));
  return out;
}

double uncertainty(const ProbVector& p, UncertaintyKind kind) {
  switch (kind) {
    case UncertaintyKind::kEntropy:
      return entropy(p);
    case UncertaintyKind::kConfidence:
      return 1.0 - p[argmax(p.view())];
    case UncertaintyKind::kMargin: {
      if (p.size() < 2) throw std::invalid_argument("margin needs at least 2 classes");
      std::vector<double> v(p.view().begin(), p.view().end());
      std::partial_sort(v.begin(), v.begin() + 2, v.end(), std::greater<>());
      return -(v[0] - v[1]);
    }
  }
  throw std::invalid_argument("unknown uncertainty kind");
}

std::vector<IdScore> uncertainty_scores(const Dataset& data, std::span<const std::size_t> ids, const ModelParams& f,
                                        UncertaintyKind kind) {
  if (kind == UncertaintyKind::kMargin && f.num_classes() < 2) {
    throw std::invalid_argument("margin needs at least 2 classes");
  }
  std::vector<IdScore> out(ids.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(ids.size()); ++i) {
    const auto k = static_cast<std::size_t>(i);
    out[k] = {ids[k], uncertainty(predict_proba(f, data[ids[k]].x), kind)};
  }
  return out;
}

}  // namespace samosa
