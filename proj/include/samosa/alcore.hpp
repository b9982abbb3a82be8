#pragma once

// Open-set active learning driver. Each round retrains every model from a
// fresh initialization, scores D_U, queries the oracle and updates the sets.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "samosa/model.hpp"
#include "samosa/optim.hpp"
#include "samosa/pool.hpp"
#include "samosa/scoring.hpp"
#include "samosa/strategies.hpp"
#include "samosa/synthdata.hpp"

namespace samosa {

struct ExperimentConfig {
  GenConfig gen;
  double mismatch_ratio = 0.4;
  double init_labeled_frac = 0.05;
  double test_frac = 0.25;
  OracleConfig oracle;
  TrainConfig train;
  std::size_t width = 16;
  double init_sigma = 0.05;
  int rounds = 8;
  std::size_t budget = 40;
  QuerySpec strategy;
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

struct QueryDiag {
  std::size_t id = 0;
  bool valid = false;
  double entropy = 0.0;  // of f_test's K-way prediction
  double samis = 0.0;    // NaN when the strategy does not train f_SGD/f_SAM
  bool test_correct = false;
};

struct RoundMetrics {
  int round = 0;
  double accuracy = 0.0;  // f_test trained on D_L before this round's query
  double precision = 0.0;
  double recall = 0.0;    // after the update
  std::size_t n_labeled = 0;
  std::size_t n_invalid = 0;
  std::size_t n_valid_queries = 0;
  std::size_t n_invalid_queries = 0;
  double loss_sgd = 0.0;
  double loss_sam = 0.0;
  double loss_test = 0.0;
  std::vector<QueryDiag> queries;
};

struct RoundModels {
  ModelParams f_test;
  double loss_test = 0.0;
  std::optional<ModelParams> f_sgd;
  std::optional<ModelParams> f_sam;
  double loss_sgd;
  double loss_sam;
  std::vector<ModelParams> ensemble;  // disagree3 only
};

/// Per-sample score row for the round dump. `score` is SAMIS-P for the
/// SAMOSA family, the uncertainty value for uncertainty baselines, NaN otherwise.
struct ScoreRow {
  std::size_t id = 0;
  double score = 0.0;
  bool accepted = true;
  bool selected = false;
};

struct RoundOutcome {
  RoundMetrics metrics;
  RoundModels models;
  std::vector<ScoreRow> scores;
  std::vector<std::size_t> selected;
  std::vector<LabeledId> valid;        // X^K with observed labels
  std::vector<std::size_t> invalid;    // X^U
};

/// D_L items with observed labels (K-way) for f_test.
std::vector<BatchItem> target_training_set(const Dataset& data, const PoolState& state);

/// D_L union D_IQ sorted by id, D_IQ samples labeled num_known.
std::vector<BatchItem> distinguisher_training_set(const Dataset& data, const PoolState& state);

/// Phase 1: trains f_test and whatever the strategy needs.
RoundModels train_round_models(const Dataset& data, const PoolState& state, const ExperimentConfig& cfg, int t);

/// Phase 2: runs the strategy on D_U. Fills `rows` when non-null.
std::vector<std::size_t> select_queries(const Dataset& data, const PoolState& state, const RoundModels& models,
                                        const ExperimentConfig& cfg, int t, std::vector<ScoreRow>* rows = nullptr);

/// Phase 3: oracle annotation, splitting selected ids by ground truth into
/// X^K (with observed labels) and X^U.
void annotate(const Dataset& data, std::span<const std::size_t> selected, const ExperimentConfig& cfg, int t,
              std::vector<LabeledId>& valid, std::vector<std::size_t>& invalid);

/// Fraction of test examples f classifies correctly.
double test_accuracy(const Dataset& data, const PoolState& state, const ModelParams& f);

/// One full round. Updates `state` in place.
RoundOutcome run_round(const Dataset& data, PoolState& state, const ExperimentConfig& cfg, int t);

struct PrecisionRecall {
  double precision;
  double recall;
};

/// precision = x_k / q, recall = labeled_known / n_known.
PrecisionRecall precision_recall(std::size_t x_k, std::size_t q, std::size_t labeled_known, std::size_t n_known);

/// Called after each round with the post-update state.
using RoundObserver = std::function<void(const Dataset&, const PoolState&, const RoundOutcome&)>;

struct ExperimentResult {
  std::vector<RoundMetrics> rounds;
  RoundModels final_models;
  PoolState final_state;
};

OpenSetPool build_experiment_pool(const ExperimentConfig& cfg);

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RoundObserver& observer = {});

struct MisclassifiedRow {
  std::size_t id;
  double entropy;  // of the full f_sgd probability vector
  std::size_t predicted;
  std::size_t observed;
  bool operator==(const MisclassifiedRow&) const = default;
};

/// Rows for queried samples whose f_sgd argmax over the known classes
/// differs from the observed label.
std::vector<MisclassifiedRow> misclassified_entropy_report(const Dataset& data, std::span<const LabeledId> queried,
                                                           const ModelParams& f_sgd, std::size_t num_known);

}  // namespace samosa
