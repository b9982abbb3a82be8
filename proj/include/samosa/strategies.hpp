#pragma once

// Query selection policies. Every selector returns min(q, pool size)
// distinct ids in selection order. Score ties break toward the smaller id.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "samosa/model.hpp"
#include "samosa/rng.hpp"
#include "samosa/scoring.hpp"
#include "samosa/synthdata.hpp"

namespace samosa {

enum class StrategyKind {
  kSamosa,
  kSamosaL,
  kSamosaBucket,
  kSamosaR,
  kDisagree3,
  kEntropy,
  kConfidence,
  kMargin,
  kRandom,
};

struct QuerySpec {
  StrategyKind kind = StrategyKind::kSamosa;
  int bucket = 10;           // 1..10, used by kSamosaBucket
  int ensemble_size = 3;     // used by kDisagree3

  /// Parses `samosa`, `samosa-l`, `samosa-b<k>`, `samosa-r`, `disagree3`,
  /// `entropy`, `confidence`, `margin`, `random`.
  static QuerySpec parse(std::string_view name);
  std::string name() const;

  /// Strategies that need the SGD/SAM K+1 distinguishers.
  bool uses_samis() const;

  bool operator==(const QuerySpec&) const = default;
};

/// Accepted samples by descending score, then rejected ones by descending score.
std::vector<std::size_t> select_samosa(std::span<const SampleScore> scores, std::size_t q);

/// Accepted samples by ascending score, then rejected ones by ascending score.
std::vector<std::size_t> select_samosa_l(std::span<const SampleScore> scores, std::size_t q);

/// Accepted samples are split into 10 contiguous rank deciles (bucket 1 holds
/// the lowest scores, bucket 10 the highest). Takes descending score within
/// the requested bucket, spills to neighbouring buckets (b+1, b-1, b+2, ...),
/// then to rejected samples by descending score.
std::vector<std::size_t> select_bucketed(std::span<const SampleScore> scores, std::size_t q, int bucket);

/// select_samosa, with every pick taken from the rejected set replaced by a
/// uniform draw (without replacement) from the rejected set.
std::vector<std::size_t> select_samosa_r(std::span<const SampleScore> scores, std::size_t q, Rng& rng);

/// Three-model disagreement with K+1 filtration. Key per sample: number of
/// distinct argmax predictions, then mean pairwise L1 distance, both
/// descending. Samples any model predicts as unknown fill the shortfall.
std::vector<std::size_t> select_disagreement(const Dataset& data, std::span<const std::size_t> ids,
                                             std::span<const ModelParams> models, std::size_t num_known,
                                             std::size_t q);

std::vector<std::size_t> select_uncertainty(const Dataset& data, std::span<const std::size_t> ids,
                                            const ModelParams& f_target, UncertaintyKind kind, std::size_t q);

std::vector<std::size_t> select_random(std::span<const std::size_t> ids, std::size_t q, Rng& rng);

}  // namespace samosa
