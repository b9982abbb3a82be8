#pragma once

// Synthetic signal/noise patch data. Each example carries its class signal
// in exactly one uniformly chosen patch (alpha * mu_c for the typical
// subclass, beta * mu_c for the atypical one); every other patch is
// N(0, sigma_p^2 I_d) noise. Class signals are orthogonal: mu_c = mu_norm * e_c.

#include <cstddef>
#include <string_view>
#include <vector>

#include "samosa/model.hpp"
#include "samosa/pool.hpp"
#include "samosa/rng.hpp"

namespace samosa {

enum class Subclass { kTypical, kAtypical };

std::string_view to_string(Subclass z);

struct Example {
  PatchInput x;
  std::size_t true_class = 0;
  Subclass subclass = Subclass::kTypical;
  bool is_known = false;
  std::size_t id = 0;
  std::size_t signal_patch = 0;
};

struct GenConfig {
  std::size_t num_known = 4;
  std::size_t num_unknown = 6;
  std::size_t per_class = 200;
  double atypical_fraction = 0.2;
  std::size_t patches = 4;
  std::size_t dim = 500;
  double sigma_p = 1.0;
  double alpha = 1.0;
  double beta = 0.25;
  double mu_norm = 8.0;

  std::size_t num_classes() const { return num_known + num_unknown; }
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  /// mu_norm * e_c.
  Vec64 signal(std::size_t c) const;
  bool operator==(const GenConfig&) const = default;
};

struct OracleConfig {
  double flip_prob = 0.0;

  void validate() const;
  bool operator==(const OracleConfig&) const = default;
};

/// One example of class c. is_known is c < cfg.num_known.
Example gen_example(const GenConfig& cfg, std::size_t c, Subclass z, Rng& rng, std::size_t id = 0);

/// The generated examples (indexed by id) together with the initial split.
struct Dataset {
  std::vector<Example> examples;
  std::size_t num_known = 0;
  GenConfig gen;

  const Example& operator[](std::size_t id) const { return examples[id]; }
  std::size_t size() const { return examples.size(); }
};

struct OpenSetPool {
  Dataset data;
  PoolState state;
};

/// Known classes are the first ceil(mismatch_ratio * (|K| + |U|)) classes.
/// Per known class, round(test_frac * n) examples go to the test split and
/// round(init_labeled_frac * n) seed the labeled set (with true labels); all
/// remaining examples, known or unknown, form the unlabeled pool.
OpenSetPool build_openset_pool(const GenConfig& cfg, double mismatch_ratio, double init_labeled_frac,
                               double test_frac, Rng& rng);

/// Annotation oracle. Unknown-class examples get the unknown bucket label
/// num_known; known ones are flipped to a uniformly random different known
/// class with probability flip_prob.
std::size_t oracle_label(const Example& ex, const OracleConfig& oc, std::size_t num_known, Rng& rng);

}  // namespace samosa
