#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace samosa {

struct LabeledId {
  std::size_t id;
  std::size_t observed;  // possibly flipped annotation
  bool operator==(const LabeledId&) const = default;
};

/// Index bookkeeping for one open-set active learning run. All id lists are
/// kept sorted ascending and are pairwise disjoint.
struct PoolState {
  std::vector<LabeledId> labeled;     // D_L
  std::vector<std::size_t> unlabeled; // D_U
  std::vector<std::size_t> invalid;   // D_IQ
  std::vector<std::size_t> test;      // D_test
  std::size_t n_known = 0;            // known-class examples in the whole pool

  /// Moves the queried ids out of D_U: valid ones into D_L with their
  /// observed labels, invalid ones into D_IQ. Throws if an id is not in D_U.
  void apply_query(std::span<const LabeledId> valid, std::span<const std::size_t> invalid_ids);

  bool disjoint() const;
  bool operator==(const PoolState&) const = default;
};

}  // namespace samosa
