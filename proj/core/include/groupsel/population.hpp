#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "groupsel/composition.hpp"

namespace groupsel {

struct Totals {
  std::int64_t group_count = 0;           // X*
  std::vector<std::int64_t> individuals;  // sum_i i_k X(i)

  friend bool operator==(const Totals&, const Totals&) = default;
};

// Sparse multiset of group compositions. Never holds a zero count or the
// zero composition; X* and the per-type individual totals are cached.
class Population {
 public:
  using Map = std::map<Composition, std::int64_t>;

  explicit Population(int ell = 1);

  int ell() const noexcept { return ell_; }

  void add(const Composition& i, std::int64_t count = 1);
  void remove(const Composition& i, std::int64_t count = 1);

  std::int64_t count(const Composition& i) const;
  std::int64_t group_count() const noexcept { return group_count_; }
  const std::vector<std::int64_t>& individuals() const noexcept { return individuals_; }
  std::int64_t total_individuals() const;

  bool empty() const noexcept { return groups_.empty(); }
  std::size_t distinct() const noexcept { return groups_.size(); }

  const Map& groups() const noexcept { return groups_; }
  auto begin() const { return groups_.begin(); }
  auto end() const { return groups_.end(); }

  // Totals recomputed from the map, ignoring the cache.
  Totals recompute_totals() const;

  friend bool operator==(const Population& a, const Population& b) {
    return a.ell_ == b.ell_ && a.groups_ == b.groups_;
  }

 private:
  int ell_;
  Map groups_;
  std::int64_t group_count_ = 0;
  std::vector<std::int64_t> individuals_;
};

// (X*, sum_i i X(i)).
Totals totals(const Population& pop);

}  // namespace groupsel
