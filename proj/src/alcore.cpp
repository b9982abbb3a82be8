#include "samosa/alcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace samosa {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Rng stream_rng(const ExperimentConfig& cfg, int t, std::uint64_t s, std::uint64_t sub = 0) {
  return Rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(t), s, sub}));
}

ModelParams fresh_params(const ExperimentConfig& cfg, std::size_t classes, Rng& rng) {
  return init_params(cfg.width, cfg.gen.dim, classes, cfg.init_sigma, rng);
}

UncertaintyKind uncertainty_kind(StrategyKind k) {
  switch (k) {
    case StrategyKind::kEntropy: return UncertaintyKind::kEntropy;
    case StrategyKind::kConfidence: return UncertaintyKind::kConfidence;
    case StrategyKind::kMargin: return UncertaintyKind::kMargin;
    default: break;
  }
  throw std::invalid_argument("not an uncertainty strategy");
}

}  // namespace

void ExperimentConfig::validate() const {
  gen.validate();
  oracle.validate();
  train.validate();
  if (!(mismatch_ratio > 0.0 && mismatch_ratio <= 1.0)) throw std::invalid_argument("mismatch_ratio must lie in (0, 1]");
  if (!(init_labeled_frac > 0.0 && init_labeled_frac < 1.0)) {
    throw std::invalid_argument("init_labeled_frac must lie in (0, 1)");
  }
  if (!(test_frac > 0.0 && test_frac < 1.0)) throw std::invalid_argument("test_frac must lie in (0, 1)");
  if (width < 1) throw std::invalid_argument("width must be >= 1");
  if (!(init_sigma > 0.0) || !std::isfinite(init_sigma)) throw std::invalid_argument("init_sigma must be positive");
  if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  if (budget < 1) throw std::invalid_argument("budget must be >= 1");
}

std::vector<BatchItem> target_training_set(const Dataset& data, const PoolState& state) {
  std::vector<BatchItem> items;
  items.reserve(state.labeled.size());
  for (const auto& l : state.labeled) items.push_back({&data[l.id].x, l.observed});
  return items;
}

std::vector<BatchItem> distinguisher_training_set(const Dataset& data, const PoolState& state) {
  std::vector<std::pair<std::size_t, std::size_t>> rows;
  rows.reserve(state.labeled.size() + state.invalid.size());
  for (const auto& l : state.labeled) rows.emplace_back(l.id, l.observed);
  for (std::size_t id : state.invalid) rows.emplace_back(id, data.num_known);
  std::sort(rows.begin(), rows.end());
  std::vector<BatchItem> items;
  items.reserve(rows.size());
  for (const auto& [id, label] : rows) items.push_back({&data[id].x, label});
  return items;
}

RoundModels train_round_models(const Dataset& data, const PoolState& state, const ExperimentConfig& cfg, int t) {
  if (state.labeled.empty()) throw std::invalid_argument("run_round: D_L is empty");
  const std::size_t k = data.num_known;
  RoundModels out;
  out.loss_sgd = kNaN;
  out.loss_sam = kNaN;

  {
    const auto items = target_training_set(data, state);
    Rng init = stream_rng(cfg, t, stream::kTarget, 0);
    Rng shuffle = stream_rng(cfg, t, stream::kTarget, 1);
    auto res = train(fresh_params(cfg, k, init), items, OptimizerKind::kSgd, cfg.train, shuffle);
    out.f_test = std::move(res.params);
    out.loss_test = res.final_loss;
  }

  if (cfg.strategy.uses_samis()) {
    const auto items = distinguisher_training_set(data, state);
    // Shared init and shuffle order: the two models differ only in the optimizer.
    Rng init = stream_rng(cfg, t, stream::kInit);
    const ModelParams start = fresh_params(cfg, k + 1, init);
    Rng shuffle_sgd = stream_rng(cfg, t, stream::kShuffle);
    Rng shuffle_sam = stream_rng(cfg, t, stream::kShuffle);
    auto sgd = train(start, items, OptimizerKind::kSgd, cfg.train, shuffle_sgd);
    auto sam = train(start, items, OptimizerKind::kSam, cfg.train, shuffle_sam);
    out.f_sgd = std::move(sgd.params);
    out.loss_sgd = sgd.final_loss;
    out.f_sam = std::move(sam.params);
    out.loss_sam = sam.final_loss;
  } else if (cfg.strategy.kind == StrategyKind::kDisagree3) {
    const auto items = distinguisher_training_set(data, state);
    for (int e = 0; e < cfg.strategy.ensemble_size; ++e) {
      Rng init = stream_rng(cfg, t, stream::kEnsemble, 2 * static_cast<std::uint64_t>(e));
      Rng shuffle = stream_rng(cfg, t, stream::kEnsemble, 2 * static_cast<std::uint64_t>(e) + 1);
      out.ensemble.push_back(train(fresh_params(cfg, k + 1, init), items, OptimizerKind::kSgd, cfg.train, shuffle).params);
    }
  }
  return out;
}

std::vector<std::size_t> select_queries(const Dataset& data, const PoolState& state, const RoundModels& models,
                                        const ExperimentConfig& cfg, int t, std::vector<ScoreRow>* rows) {
  const auto& pool = state.unlabeled;
  if (pool.empty()) {
    if (rows) rows->clear();
    return {};
  }
  const std::size_t q = cfg.budget;
  Rng rng = stream_rng(cfg, t, stream::kQuery);
  std::vector<std::size_t> selected;
  std::vector<ScoreRow> out(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) out[i] = {pool[i], kNaN, true, false};

  const QuerySpec& spec = cfg.strategy;
  if (spec.uses_samis()) {
    if (!models.f_sgd || !models.f_sam) throw std::logic_error("SAMIS strategy without trained distinguishers");
    const auto scores = score_pool(data, pool, *models.f_sgd, *models.f_sam, data.num_known);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      out[i].score = scores[i].score;
      out[i].accepted = scores[i].accepted;
    }
    switch (spec.kind) {
      case StrategyKind::kSamosa: selected = select_samosa(scores, q); break;
      case StrategyKind::kSamosaL: selected = select_samosa_l(scores, q); break;
      case StrategyKind::kSamosaBucket: selected = select_bucketed(scores, q, spec.bucket); break;
      case StrategyKind::kSamosaR: selected = select_samosa_r(scores, q, rng); break;
      default: throw std::logic_error("unhandled SAMIS strategy");
    }
  } else if (spec.kind == StrategyKind::kDisagree3) {
    selected = select_disagreement(data, pool, models.ensemble, data.num_known, q);
  } else if (spec.kind == StrategyKind::kRandom) {
    selected = select_random(pool, q, rng);
  } else {
    const auto kind = uncertainty_kind(spec.kind);
    const auto scores = uncertainty_scores(data, pool, models.f_test, kind);
    for (std::size_t i = 0; i < scores.size(); ++i) out[i].score = scores[i].score;
    selected = select_uncertainty(data, pool, models.f_test, kind, q);
  }

  if (rows) {
    std::vector<std::size_t> sorted = selected;
    std::sort(sorted.begin(), sorted.end());
    for (auto& r : out) r.selected = std::binary_search(sorted.begin(), sorted.end(), r.id);
    *rows = std::move(out);
  }
  return selected;
}

void annotate(const Dataset& data, std::span<const std::size_t> selected, const ExperimentConfig& cfg, int t,
              std::vector<LabeledId>& valid, std::vector<std::size_t>& invalid) {
  valid.clear();
  invalid.clear();
  std::vector<std::size_t> ids(selected.begin(), selected.end());
  std::sort(ids.begin(), ids.end());
  Rng rng = stream_rng(cfg, t, stream::kOracle);
  for (std::size_t id : ids) {
    const Example& ex = data[id];
    const std::size_t label = oracle_label(ex, cfg.oracle, data.num_known, rng);
    if (ex.is_known) {
      valid.push_back({id, label});
    } else {
      invalid.push_back(id);
    }
  }
}

double test_accuracy(const Dataset& data, const PoolState& state, const ModelParams& f) {
  if (state.test.empty()) throw std::invalid_argument("test split is empty");
  std::vector<int> hit(state.test.size(), 0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(state.test.size()); ++i) {
    const Example& ex = data[state.test[static_cast<std::size_t>(i)]];
    hit[static_cast<std::size_t>(i)] = predicted_class(f, ex.x) == ex.true_class ? 1 : 0;
  }
  std::size_t correct = 0;
  for (int h : hit) correct += static_cast<std::size_t>(h);
  return static_cast<double>(correct) / static_cast<double>(state.test.size());
}

PrecisionRecall precision_recall(std::size_t x_k, std::size_t q, std::size_t labeled_known, std::size_t n_known) {
  if (q < 1) throw std::invalid_argument("precision_recall: q must be >= 1");
  if (n_known < 1) throw std::invalid_argument("precision_recall: n_known must be >= 1");
  if (x_k > q) throw std::invalid_argument("precision_recall: valid query count exceeds q");
  if (labeled_known > n_known) throw std::invalid_argument("precision_recall: labeled count exceeds n_known");
  return {static_cast<double>(x_k) / static_cast<double>(q),
          static_cast<double>(labeled_known) / static_cast<double>(n_known)};
}

RoundOutcome run_round(const Dataset& data, PoolState& state, const ExperimentConfig& cfg, int t) {
  RoundOutcome out;
  out.models = train_round_models(data, state, cfg, t);
  RoundMetrics& m = out.metrics;
  m.round = t;
  m.accuracy = test_accuracy(data, state, out.models.f_test);
  m.loss_sgd = out.models.loss_sgd;
  m.loss_sam = out.models.loss_sam;
  m.loss_test = out.models.loss_test;

  out.selected = select_queries(data, state, out.models, cfg, t, &out.scores);
  annotate(data, out.selected, cfg, t, out.valid, out.invalid);
  state.apply_query(out.valid, out.invalid);

  // An exhausted pool still reports against the nominal budget.
  const std::size_t q_t = out.selected.empty() ? cfg.budget : out.selected.size();
  const auto pr = precision_recall(out.valid.size(), q_t, state.labeled.size(), state.n_known);
  m.precision = pr.precision;
  m.recall = pr.recall;
  m.n_labeled = state.labeled.size();
  m.n_invalid = state.invalid.size();
  m.n_valid_queries = out.valid.size();
  m.n_invalid_queries = out.invalid.size();

  for (std::size_t id : out.selected) {
    const Example& ex = data[id];
    const ProbVector p = predict_proba(out.models.f_test, ex.x);
    QueryDiag d;
    d.id = id;
    d.valid = ex.is_known;
    d.entropy = entropy(p);
    d.samis = kNaN;
    if (out.models.f_sgd && out.models.f_sam) {
      d.samis = samis_p(predict_proba(*out.models.f_sam, ex.x), predict_proba(*out.models.f_sgd, ex.x));
    }
    d.test_correct = ex.is_known && argmax(p.view()) == ex.true_class;
    m.queries.push_back(d);
  }
  return out;
}

OpenSetPool build_experiment_pool(const ExperimentConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, {stream::kPool}));
  return build_openset_pool(cfg.gen, cfg.mismatch_ratio, cfg.init_labeled_frac, cfg.test_frac, rng);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RoundObserver& observer) {
  OpenSetPool pool = build_experiment_pool(cfg);
  ExperimentResult res;
  for (int t = 0; t < cfg.rounds; ++t) {
    RoundOutcome outcome = run_round(pool.data, pool.state, cfg, t);
    if (observer) observer(pool.data, pool.state, outcome);
    res.rounds.push_back(outcome.metrics);
    if (t + 1 == cfg.rounds) res.final_models = std::move(outcome.models);
  }
  res.final_state = std::move(pool.state);
  return res;
}

std::vector<MisclassifiedRow> misclassified_entropy_report(const Dataset& data, std::span<const LabeledId> queried,
                                                           const ModelParams& f_sgd, std::size_t num_known) {
  if (num_known < 1 || f_sgd.num_classes() < num_known) {
    throw std::invalid_argument("misclassified_entropy_report: model has fewer outputs than known classes");
  }
  std::vector<MisclassifiedRow> rows;
  for (const auto& q : queried) {
    const ProbVector p = predict_proba(f_sgd, data[q.id].x);
    const std::size_t pred = argmax(p.view().first(num_known));
    if (pred != q.observed) rows.push_back({q.id, entropy(p), pred, q.observed});
  }
  return rows;
}

}  // namespace samosa
