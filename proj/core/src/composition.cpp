#include "groupsel/composition.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "groupsel/error.hpp"

namespace groupsel {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigSchema: return "config-schema";
    case ErrorCode::kBoundViolation: return "bound-violation";
    case ErrorCode::kLadderNotIncreasing: return "ladder-not-increasing";
    case ErrorCode::kInitialMass: return "initial-mass";
    case ErrorCode::kContract: return "contract-violation";
    case ErrorCode::kOverflow: return "overflow";
    case ErrorCode::kCfl: return "cfl-violation";
    case ErrorCode::kSingularDrift: return "singular-drift";
    case ErrorCode::kMassUnderflow: return "mass-underflow";
    case ErrorCode::kUnknownSelector: return "unknown-selector";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kStudyFailed: return "study-failed";
  }
  return "unknown";
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_add_overflow(a, b, &out)) {
    fail(ErrorCode::kOverflow, "64-bit count overflow");
  }
  return out;
}

Composition::Composition(int ell) : ell_(ell) {
  if (ell < 1 || ell > kMaxTypes) {
    fail(ErrorCode::kConfigSchema,
         "number of types must be in [1, " + std::to_string(kMaxTypes) + "], got " +
             std::to_string(ell));
  }
}

Composition::Composition(std::initializer_list<std::int64_t> counts)
    : Composition(std::span<const std::int64_t>(counts.begin(), counts.size())) {}

Composition::Composition(std::span<const std::int64_t> counts)
    : Composition(static_cast<int>(counts.size())) {
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] < 0) fail(ErrorCode::kContract, "negative type count");
    counts_[k] = counts[k];
  }
}

void Composition::set(int k, std::int64_t value) {
  if (k < 0 || k >= ell_) fail(ErrorCode::kContract, "type index out of range");
  if (value < 0) fail(ErrorCode::kContract, "negative type count");
  counts_[static_cast<std::size_t>(k)] = value;
}

std::int64_t Composition::size() const {
  std::int64_t s = 0;
  for (int k = 0; k < ell_; ++k) s = checked_add(s, counts_[static_cast<std::size_t>(k)]);
  return s;
}

bool Composition::is_zero() const {
  for (int k = 0; k < ell_; ++k) {
    if (counts_[static_cast<std::size_t>(k)] != 0) return false;
  }
  return true;
}

bool Composition::dominates(const Composition& other) const {
  if (other.ell_ != ell_) fail(ErrorCode::kContract, "composition dimension mismatch");
  for (int k = 0; k < ell_; ++k) {
    if (counts_[static_cast<std::size_t>(k)] < other.counts_[static_cast<std::size_t>(k)]) {
      return false;
    }
  }
  return true;
}

Composition Composition::plus_unit(int k) const {
  Composition out = *this;
  out.counts_[static_cast<std::size_t>(k)] = checked_add(counts_[static_cast<std::size_t>(k)], 1);
  return out;
}

Composition Composition::minus_unit(int k) const {
  if (counts_[static_cast<std::size_t>(k)] == 0) {
    fail(ErrorCode::kContract, "removing an individual of an absent type");
  }
  Composition out = *this;
  --out.counts_[static_cast<std::size_t>(k)];
  return out;
}

Composition Composition::operator+(const Composition& other) const {
  if (other.ell_ != ell_) fail(ErrorCode::kContract, "composition dimension mismatch");
  Composition out = *this;
  for (int k = 0; k < ell_; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    out.counts_[idx] = checked_add(counts_[idx], other.counts_[idx]);
  }
  return out;
}

Composition Composition::operator-(const Composition& other) const {
  if (!dominates(other)) fail(ErrorCode::kContract, "composition difference would be negative");
  Composition out = *this;
  for (int k = 0; k < ell_; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    out.counts_[idx] -= other.counts_[idx];
  }
  return out;
}

std::vector<double> Composition::scaled(double n) const {
  std::vector<double> u(static_cast<std::size_t>(ell_));
  for (int k = 0; k < ell_; ++k) {
    u[static_cast<std::size_t>(k)] = static_cast<double>(counts_[static_cast<std::size_t>(k)]) / n;
  }
  return u;
}

std::string Composition::to_string() const {
  std::string out;
  for (int k = 0; k < ell_; ++k) {
    if (k > 0) out += ';';
    out += std::to_string(counts_[static_cast<std::size_t>(k)]);
  }
  return out;
}

Composition Composition::parse(const std::string& text) {
  std::vector<std::int64_t> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    try {
      values.push_back(std::stoll(item));
    } catch (const std::exception&) {
      fail(ErrorCode::kConfigSchema, "malformed composition '" + text + "'");
    }
  }
  return Composition(std::span<const std::int64_t>(values));
}

std::size_t Composition::hash() const noexcept {
  // FNV-1a over the used entries.
  std::uint64_t h = 1469598103934665603ULL;
  for (int k = 0; k < ell_; ++k) {
    auto v = static_cast<std::uint64_t>(counts_[static_cast<std::size_t>(k)]);
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  }
  return static_cast<std::size_t>(h);
}

Composition floor_composition(std::span<const double> u, double n) {
  Composition out(static_cast<int>(u.size()));
  for (std::size_t k = 0; k < u.size(); ++k) {
    // Nudge so that lattice points i/n map back to i despite rounding in n*u.
    const double x = n * u[k];
    const double v = std::floor(x + 1e-9 * std::max(1.0, std::abs(x)));
    if (!(v >= 0.0) || v > 9.0e18) {
      fail(ErrorCode::kOverflow, "point outside the representable positive orthant");
    }
    out.set(static_cast<int>(k), static_cast<std::int64_t>(v));
  }
  return out;
}

}  // namespace groupsel
