#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "groupsel/composition.hpp"

namespace groupsel {

class FissionLaw;

// (n, m): n scales group sizes, m scales group numbers.
struct ScalingParams {
  std::int64_t n = 1;
  std::int64_t m = 1;

  ScalingParams() = default;
  ScalingParams(std::int64_t n_, std::int64_t m_);
};

// How the configured extinction function is turned into the per-group
// rate: measure mode divides by m, density mode by m n^ell.
enum class ExtinctionScaling { kMeasure, kDensity };

// Closed-form rate families from the registry. Each is written in the scaled
// variable u = i/n: at finite n it is evaluated at i/n, the limit at u.
// `box_exp_fission` is the exception: prod(i_k+1) e^{-|i|/n} / n^ell at the
// lattice, with limit prod(u_k) e^{-|u|}.
class RateFunction {
 public:
  struct Constant {
    double value = 0.0;
  };
  // a + b|u| + sum_k c_k u_k
  struct Affine {
    double a = 0.0;
    double b = 0.0;
    std::vector<double> per_type;
  };
  // r / (1 + exp((|u| - K) / w))
  struct Logistic {
    double r = 0.0;
    double K = 1.0;
    double w = 1.0;
  };
  struct BoxExpFission {};

  using Form = std::variant<Constant, Affine, Logistic, BoxExpFission>;

  RateFunction() : form_(Constant{0.0}) {}
  explicit RateFunction(Form form);

  static RateFunction constant(double value) { return RateFunction(Constant{value}); }
  static RateFunction affine(double a, double b, std::vector<double> per_type = {}) {
    return RateFunction(Affine{a, b, std::move(per_type)});
  }
  static RateFunction logistic(double r, double K, double w) {
    return RateFunction(Logistic{r, K, w});
  }
  static RateFunction box_exp_fission() { return RateFunction(BoxExpFission{}); }

  double at_lattice(const Composition& i, double n) const;
  double limit(std::span<const double> u) const;

  bool is_constant() const;
  bool is_zero() const;
  const Form& form() const noexcept { return form_; }
  std::string describe() const;

 private:
  Form form_;
};

// Per-type birth, death, migration rates plus group-level fission and
// extinction, bound to one (n, m) rung.
class RateSpec {
 public:
  RateSpec() = default;
  RateSpec(int ell, std::vector<RateFunction> birth, std::vector<RateFunction> death,
           std::vector<RateFunction> migration, RateFunction fission, RateFunction extinction);

  // Same functions, rebound to a different rung.
  RateSpec at(ScalingParams scale, ExtinctionScaling mode) const;

  int ell() const noexcept { return ell_; }
  ScalingParams scale() const noexcept { return scale_; }
  ExtinctionScaling mode() const noexcept { return mode_; }

  // Per-capita rates; zero whenever i_k = 0 regardless of the registry entry.
  double birth(const Composition& i, int k) const;
  double death(const Composition& i, int k) const;
  double migration(const Composition& i, int k) const;
  // Per-group rates.
  double fission(const Composition& i) const;
  // epsilon^{n,m}(i); the per-group extinction rate is this times X*.
  double extinction(const Composition& i) const;

  const std::vector<RateFunction>& birth_functions() const noexcept { return birth_; }
  const std::vector<RateFunction>& death_functions() const noexcept { return death_; }
  const std::vector<RateFunction>& migration_functions() const noexcept { return migration_; }
  const RateFunction& fission_function() const noexcept { return fission_; }
  const RateFunction& extinction_function() const noexcept { return extinction_; }

 private:
  int ell_ = 1;
  std::vector<RateFunction> birth_, death_, migration_;
  RateFunction fission_, extinction_;
  ScalingParams scale_{};
  ExtinctionScaling mode_ = ExtinctionScaling::kMeasure;
};

// Declared bounds validated at config load:
//   individual: i_k (beta^k + delta^k + mu^k)(i) / n
//   fission:    phi(i)
//   extinction: m epsilon(i)
//   pieces:     maximal number of fission offspring
struct RateBounds {
  double individual = 0.0;
  double fission = 0.0;
  double extinction = 0.0;
  std::optional<int> pieces;
};

struct BoundCheckEntry {
  std::string function;
  double sup = 0.0;
  Composition argsup;
  double bound = 0.0;
  bool pass = true;
};

struct BoundCheckReport {
  std::vector<BoundCheckEntry> entries;
  std::uint64_t points_scanned = 0;

  bool pass() const;
  // First failing entry, if any.
  const BoundCheckEntry* violation() const;
  std::string summary() const;
};

// Scans every lattice point of the box [0, upper] (the zero composition
// excluded) and compares sups against the declared bounds.
BoundCheckReport rate_bounds_check(const RateSpec& rates, const FissionLaw& law,
                                   const RateBounds& bounds, const Composition& upper);

}  // namespace groupsel
