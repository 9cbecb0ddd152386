#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace groupsel {

inline constexpr int kMaxTypes = 8;

// Per-type individual counts of one group. Counts are stored inline so the
// simulator can build neighbouring compositions (i +/- e_k) without touching
// the heap.
class Composition {
 public:
  Composition() = default;
  explicit Composition(int ell);
  Composition(std::initializer_list<std::int64_t> counts);
  explicit Composition(std::span<const std::int64_t> counts);

  int ell() const noexcept { return ell_; }
  std::int64_t operator[](int k) const { return counts_[static_cast<std::size_t>(k)]; }
  void set(int k, std::int64_t value);

  std::span<const std::int64_t> counts() const {
    return {counts_.data(), static_cast<std::size_t>(ell_)};
  }

  // |i|
  std::int64_t size() const;
  bool is_zero() const;

  // Entrywise partial order i >= other.
  bool dominates(const Composition& other) const;

  // i + e_k and i - e_k; overflow/underflow is an Error(kOverflow).
  Composition plus_unit(int k) const;
  Composition minus_unit(int k) const;

  Composition operator+(const Composition& other) const;
  Composition operator-(const Composition& other) const;

  // The lattice point i/n.
  std::vector<double> scaled(double n) const;

  std::string to_string() const;  // "3" or "1;2"
  static Composition parse(const std::string& text);

  friend bool operator==(const Composition& a, const Composition& b) {
    return a.ell_ == b.ell_ && a.counts_ == b.counts_;
  }
  friend std::strong_ordering operator<=>(const Composition& a, const Composition& b) {
    if (auto c = a.ell_ <=> b.ell_; c != 0) return c;
    return a.counts_ <=> b.counts_;
  }

  std::size_t hash() const noexcept;

 private:
  int ell_ = 0;
  std::array<std::int64_t, kMaxTypes> counts_{};
};

// Componentwise floor(n u).
Composition floor_composition(std::span<const double> u, double n);

// Checked int64 addition used for all population arithmetic.
std::int64_t checked_add(std::int64_t a, std::int64_t b);

}  // namespace groupsel

template <>
struct std::hash<groupsel::Composition> {
  std::size_t operator()(const groupsel::Composition& c) const noexcept { return c.hash(); }
};
