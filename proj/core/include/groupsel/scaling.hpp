#pragma once

#include <iosfwd>
#include <map>
#include <vector>

#include "groupsel/fission.hpp"
#include "groupsel/grid.hpp"
#include "groupsel/population.hpp"
#include "groupsel/rates.hpp"

namespace groupsel {

// Finite measure made of weighted atoms on the orthant.
class EmpiricalMeasure {
 public:
  explicit EmpiricalMeasure(int ell = 1) : ell_(ell) {}

  int ell() const noexcept { return ell_; }
  std::size_t atoms() const noexcept { return weights_.size(); }
  Point location(std::size_t j) const {
    return {locations_.data() + j * static_cast<std::size_t>(ell_), static_cast<std::size_t>(ell_)};
  }
  double weight(std::size_t j) const { return weights_[j]; }
  double mass() const noexcept { return mass_; }

  void add(Point u, double w);

  // sum_j w_j f(u_j)
  double pair(const ScalarField& f) const;

  // Atoms of both measures; weights of `other` scaled by `scale`.
  EmpiricalMeasure combined(const EmpiricalMeasure& other, double scale = 1.0) const;

 private:
  int ell_;
  std::vector<double> locations_;
  std::vector<double> weights_;
  double mass_ = 0.0;
};

// Atom X(i)/m at i/n for each occupied composition.
EmpiricalMeasure empirical_measure(const Population& pop, ScalingParams s);

// CSV rows "u_1,...,u_ell,weight" with a header line.
void write_csv(std::ostream& os, const EmpiricalMeasure& measure);

// Rates of a rung evaluated at floor(n u).
class HatRates {
 public:
  explicit HatRates(RateSpec rates) : rates_(std::move(rates)) {}

  double birth(Point u, int k) const;
  double death(Point u, int k) const;
  double migration(Point u, int k) const;
  double fission(Point u) const;
  // m eps(floor(nu)) in measure mode.
  double extinction_measure(Point u) const;
  // m n^ell eps(floor(nu)), the density-mode scaling.
  double extinction_density(Point u) const;

  const RateSpec& rates() const noexcept { return rates_; }

 private:
  Composition at(Point u) const;
  RateSpec rates_;
};

HatRates hat_rates(const RateSpec& rates, ScalingParams s);

// sum_{i' <= floor(nu)} f(i'/n) eta(floor(nu), i').
double hat_eta_pairing(const FissionLaw& law, ScalingParams s, Point u, const ScalarField& f);

// Piecewise-constant density X(floor(nu))/m; occupied cells are the
// boxes [i/n, (i+1)/n).
class StepDensity {
 public:
  StepDensity(int ell, ScalingParams s) : ell_(ell), scale_(s) {}

  int ell() const noexcept { return ell_; }
  ScalingParams scale() const noexcept { return scale_; }
  const std::map<Composition, double>& heights() const noexcept { return heights_; }
  void set(const Composition& i, double height);

  double value(Point u) const;
  // X* / (m n^ell)
  double mass() const;
  // Integral of g times the density with an order-q Gauss rule per cell.
  double pair(const ScalarField& g, int order = 8) const;

  // Cell averages on a grid, from the exact overlap of each step cell with
  // each grid cell.
  DensityGrid to_grid(double upper, int cells) const;

 private:
  int ell_;
  ScalingParams scale_;
  std::map<Composition, double> heights_;
};

StepDensity density_step_function(const Population& pop, ScalingParams s);

}  // namespace groupsel
