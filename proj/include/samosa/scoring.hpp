#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "samosa/model.hpp"
#include "samosa/synthdata.hpp"

namespace samosa {

struct SampleScore {
  std::size_t id = 0;
  double score = 0.0;
  bool accepted = true;  // passed K+1 rejection
  std::size_t sgd_pred = 0;
  std::size_t sam_pred = 0;
};

/// SAMIS-P: || p_sam - p_sgd ||_1.
double samis_p(const ProbVector& p_sam, const ProbVector& p_sgd);

/// Scores every id in `ids` with SAMIS-P and flags rejection: a sample is
/// rejected when either model's argmax is the unknown output num_known.
/// Both models must have num_known + 1 outputs.
std::vector<SampleScore> score_pool(const Dataset& data, std::span<const std::size_t> ids, const ModelParams& f_sgd,
                                    const ModelParams& f_sam, std::size_t num_known);

/// Single-threaded reference for score_pool.
std::vector<SampleScore> score_pool_serial(const Dataset& data, std::span<const std::size_t> ids,
                                           const ModelParams& f_sgd, const ModelParams& f_sam,
                                           std::size_t num_known);

enum class UncertaintyKind { kEntropy, kConfidence, kMargin };

/// Higher = more uncertain: entropy H(p), confidence 1 - max p, and margin
/// -(p_(1) - p_(2)).
double uncertainty(const ProbVector& p, UncertaintyKind kind);

struct IdScore {
  std::size_t id;
  double score;
};

std::vector<IdScore> uncertainty_scores(const Dataset& data, std::span<const std::size_t> ids, const ModelParams& f,
                                        UncertaintyKind kind);

}  // namespace samosa
