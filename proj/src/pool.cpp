#include "samosa/pool.hpp"

#include <algorithm>
#include <stdexcept>

namespace samosa {
namespace {

void erase_sorted(std::vector<std::size_t>& ids, std::size_t id) {
  auto it = std::lower_bound(ids.begin(), ids.end(), id);
  if (it == ids.end() || *it != id) throw std::invalid_argument("apply_query: id not in unlabeled pool");
  ids.erase(it);
}

}  // namespace

void PoolState::apply_query(std::span<const LabeledId> valid, std::span<const std::size_t> invalid_ids) {
  for (const auto& v : valid) erase_sorted(unlabeled, v.id);
  for (std::size_t id : invalid_ids) erase_sorted(unlabeled, id);
  labeled.insert(labeled.end(), valid.begin(), valid.end());
  std::sort(labeled.begin(), labeled.end(), [](const LabeledId& a, const LabeledId& b) { return a.id < b.id; });
  invalid.insert(invalid.end(), invalid_ids.begin(), invalid_ids.end());
  std::sort(invalid.begin(), invalid.end());
}

bool PoolState::disjoint() const {
  std::vector<std::size_t> all(unlabeled);
  for (const auto& l : labeled) all.push_back(l.id);
  all.insert(all.end(), invalid.begin(), invalid.end());
  all.insert(all.end(), test.begin(), test.end());
  std::sort(all.begin(), all.end());
  return std::adjacent_find(all.begin(), all.end()) == all.end();
}

}  // namespace samosa
