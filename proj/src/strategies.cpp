#include "samosa/strategies.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <stdexcept>
#include <tuple>

namespace samosa {
namespace {

void check_budget(std::size_t q) {
  if (q < 1) throw std::invalid_argument("query budget q must be >= 1");
}

bool desc_score(const SampleScore& a, const SampleScore& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

bool asc_score(const SampleScore& a, const SampleScore& b) {
  if (a.score != b.score) return a.score < b.score;
  return a.id < b.id;
}

void split(std::span<const SampleScore> scores, std::vector<SampleScore>& accepted,
           std::vector<SampleScore>& rejected) {
  for (const auto& s : scores) (s.accepted ? accepted : rejected).push_back(s);
}

void take(const std::vector<SampleScore>& sorted, std::size_t q, std::vector<std::size_t>& out) {
  for (std::size_t i = 0; i < sorted.size() && out.size() < q; ++i) out.push_back(sorted[i].id);
}

template <typename Less>
std::vector<std::size_t> accepted_first(std::span<const SampleScore> scores, std::size_t q, Less less) {
  check_budget(q);
  std::vector<SampleScore> accepted, rejected;
  split(scores, accepted, rejected);
  std::sort(accepted.begin(), accepted.end(), less);
  std::sort(rejected.begin(), rejected.end(), less);
  std::vector<std::size_t> out;
  take(accepted, q, out);
  take(rejected, q, out);
  return out;
}

}  // namespace

QuerySpec QuerySpec::parse(std::string_view name) {
  QuerySpec spec;
  if (name == "samosa") {
    spec.kind = StrategyKind::kSamosa;
  } else if (name == "samosa-l") {
    spec.kind = StrategyKind::kSamosaL;
  } else if (name == "samosa-r") {
    spec.kind = StrategyKind::kSamosaR;
  } else if (name.starts_with("samosa-b")) {
    const std::string_view digits = name.substr(8);
    int b = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), b);
    if (digits.empty() || ec != std::errc() || ptr != digits.data() + digits.size() || b < 1 || b > 10) {
      throw std::invalid_argument("bucket index must be an integer in 1..10: " + std::string(name));
    }
    spec.kind = StrategyKind::kSamosaBucket;
    spec.bucket = b;
  } else if (name == "disagree3") {
    spec.kind = StrategyKind::kDisagree3;
  } else if (name == "entropy") {
    spec.kind = StrategyKind::kEntropy;
  } else if (name == "confidence") {
    spec.kind = StrategyKind::kConfidence;
  } else if (name == "margin") {
    spec.kind = StrategyKind::kMargin;
  } else if (name == "random") {
    spec.kind = StrategyKind::kRandom;
  } else {
    throw std::invalid_argument("unknown strategy: " + std::string(name));
  }
  return spec;
}

std::string QuerySpec::name() const {
  switch (kind) {
    case StrategyKind::kSamosa: return "samosa";
    case StrategyKind::kSamosaL: return "samosa-l";
    case StrategyKind::kSamosaBucket: return "samosa-b" + std::to_string(bucket);
    case StrategyKind::kSamosaR: return "samosa-r";
    case StrategyKind::kDisagree3: return "disagree3";
    case StrategyKind::kEntropy: return "entropy";
    case StrategyKind::kConfidence: return "confidence";
    case StrategyKind::kMargin: return "margin";
    case StrategyKind::kRandom: return "random";
  }
  return "?";
}

bool QuerySpec::uses_samis() const {
  return kind == StrategyKind::kSamosa || kind == StrategyKind::kSamosaL || kind == StrategyKind::kSamosaBucket ||
         kind == StrategyKind::kSamosaR;
}

std::vector<std::size_t> select_samosa(std::span<const SampleScore> scores, std::size_t q) {
  return accepted_first(scores, q, desc_score);
}

std::vector<std::size_t> select_samosa_l(std::span<const SampleScore> scores, std::size_t q) {
  return accepted_first(scores, q, asc_score);
}

std::vector<std::size_t> select_bucketed(std::span<const SampleScore> scores, std::size_t q, int bucket) {
  check_budget(q);
  if (bucket < 1 || bucket > 10) throw std::invalid_argument("bucket must lie in 1..10");
  std::vector<SampleScore> accepted, rejected;
  split(scores, accepted, rejected);
  std::sort(accepted.begin(), accepted.end(), asc_score);
  std::sort(rejected.begin(), rejected.end(), desc_score);

  // Bucket b covers ascending ranks [floor((b-1)N/10), floor(bN/10)).
  const std::size_t n = accepted.size();
  const auto bucket_range = [n](int b) {
    return std::pair<std::size_t, std::size_t>{static_cast<std::size_t>(b - 1) * n / 10,
                                               static_cast<std::size_t>(b) * n / 10};
  };
  std::vector<int> visit{bucket};
  for (int off = 1; off < 10; ++off) {
    if (bucket + off <= 10) visit.push_back(bucket + off);
    if (bucket - off >= 1) visit.push_back(bucket - off);
  }
  std::vector<std::size_t> out;
  for (int b : visit) {
    const auto [lo, hi] = bucket_range(b);
    for (std::size_t i = hi; i > lo && out.size() < q; --i) out.push_back(accepted[i - 1].id);
  }
  take(rejected, q, out);
  return out;
}

std::vector<std::size_t> select_samosa_r(std::span<const SampleScore> scores, std::size_t q, Rng& rng) {
  std::vector<std::size_t> picks = select_samosa(scores, q);
  std::vector<std::size_t> rejected;
  for (const auto& s : scores) {
    if (!s.accepted) rejected.push_back(s.id);
  }
  std::sort(rejected.begin(), rejected.end());
  const std::set<std::size_t> rejected_set(rejected.begin(), rejected.end());
  std::vector<std::size_t> out;
  std::size_t replace = 0;
  for (std::size_t id : picks) {
    if (rejected_set.count(id) != 0) {
      ++replace;
    } else {
      out.push_back(id);
    }
  }
  // Partial Fisher-Yates over the sorted rejected ids.
  for (std::size_t i = 0; i < replace; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, rejected.size() - 1);
    std::swap(rejected[i], rejected[pick(rng)]);
    out.push_back(rejected[i]);
  }
  return out;
}

std::vector<std::size_t> select_disagreement(const Dataset& data, std::span<const std::size_t> ids,
                                             std::span<const ModelParams> models, std::size_t num_known,
                                             std::size_t q) {
  check_budget(q);
  if (models.size() != 3) throw std::invalid_argument("disagreement needs an ensemble of exactly 3 models");
  for (const auto& m : models) {
    if (m.num_classes() != num_known + 1) throw std::invalid_argument("disagreement models need num_known + 1 outputs");
  }
  struct Keyed {
    std::size_t id;
    bool accepted;
    int distinct;
    double spread;
  };
  std::vector<Keyed> keyed(ids.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(ids.size()); ++i) {
    const auto k = static_cast<std::size_t>(i);
    const PatchInput& x = data[ids[k]].x;
    std::vector<ProbVector> probs;
    std::set<std::size_t> preds;
    bool accepted = true;
    for (const auto& m : models) {
      probs.push_back(predict_proba(m, x));
      const std::size_t pred = argmax(probs.back().view());
      preds.insert(pred);
      accepted = accepted && pred != num_known;
    }
    const double spread =
        (l1_dist(probs[0], probs[1]) + l1_dist(probs[0], probs[2]) + l1_dist(probs[1], probs[2])) / 3.0;
    keyed[k] = {ids[k], accepted, static_cast<int>(preds.size()), spread};
  }
  const auto before = [](const Keyed& a, const Keyed& b) {
    if (a.accepted != b.accepted) return a.accepted;
    return std::tie(b.distinct, b.spread, a.id) < std::tie(a.distinct, a.spread, b.id);
  };
  std::sort(keyed.begin(), keyed.end(), before);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < keyed.size() && out.size() < q; ++i) out.push_back(keyed[i].id);
  return out;
}

std::vector<std::size_t> select_uncertainty(const Dataset& data, std::span<const std::size_t> ids,
                                            const ModelParams& f_target, UncertaintyKind kind, std::size_t q) {
  check_budget(q);
  std::vector<IdScore> scores = uncertainty_scores(data, ids, f_target, kind);
  std::sort(scores.begin(), scores.end(), [](const IdScore& a, const IdScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < scores.size() && out.size() < q; ++i) out.push_back(scores[i].id);
  return out;
}

std::vector<std::size_t> select_random(std::span<const std::size_t> ids, std::size_t q, Rng& rng) {
  check_budget(q);
  std::vector<std::size_t> pool(ids.begin(), ids.end());
  std::sort(pool.begin(), pool.end());
  const std::size_t take_n = std::min(q, pool.size());
  for (std::size_t i = 0; i < take_n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(take_n);
  return pool;
}

}  // namespace samosa
