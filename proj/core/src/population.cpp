#include "groupsel/population.hpp"

#include "groupsel/error.hpp"

namespace groupsel {

Population::Population(int ell)
    : ell_(Composition(ell).ell()), individuals_(static_cast<std::size_t>(ell), 0) {}

void Population::add(const Composition& i, std::int64_t count) {
  if (count < 0) fail(ErrorCode::kContract, "negative group count");
  if (count == 0) return;
  if (i.ell() != ell_) fail(ErrorCode::kContract, "composition dimension mismatch");
  if (i.is_zero()) fail(ErrorCode::kContract, "the zero composition cannot be stored");
  auto& slot = groups_[i];
  slot = checked_add(slot, count);
  group_count_ = checked_add(group_count_, count);
  for (int k = 0; k < ell_; ++k) {
    std::int64_t added = 0;
    if (__builtin_mul_overflow(i[k], count, &added)) fail(ErrorCode::kOverflow, "individual total overflow");
    individuals_[static_cast<std::size_t>(k)] =
        checked_add(individuals_[static_cast<std::size_t>(k)], added);
  }
}

void Population::remove(const Composition& i, std::int64_t count) {
  if (count < 0) fail(ErrorCode::kContract, "negative group count");
  if (count == 0) return;
  auto it = groups_.find(i);
  if (it == groups_.end() || it->second < count) {
    fail(ErrorCode::kContract, "removing more groups of " + i.to_string() + " than present");
  }
  it->second -= count;
  if (it->second == 0) groups_.erase(it);
  group_count_ -= count;
  for (int k = 0; k < ell_; ++k) individuals_[static_cast<std::size_t>(k)] -= i[k] * count;
}

std::int64_t Population::count(const Composition& i) const {
  auto it = groups_.find(i);
  return it == groups_.end() ? 0 : it->second;
}

std::int64_t Population::total_individuals() const {
  std::int64_t s = 0;
  for (auto v : individuals_) s = checked_add(s, v);
  return s;
}

Totals Population::recompute_totals() const {
  Totals t;
  t.individuals.assign(static_cast<std::size_t>(ell_), 0);
  for (const auto& [i, x] : groups_) {
    t.group_count += x;
    for (int k = 0; k < ell_; ++k) t.individuals[static_cast<std::size_t>(k)] += i[k] * x;
  }
  return t;
}

Totals totals(const Population& pop) {
  return Totals{pop.group_count(), pop.individuals()};
}

}  // namespace groupsel
