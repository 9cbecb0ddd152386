#include "groupsel/scaling.hpp"

#include <cmath>
#include <ostream>

#include "groupsel/error.hpp"
#include "groupsel/text.hpp"

namespace groupsel {

void EmpiricalMeasure::add(Point u, double w) {
  if (static_cast<int>(u.size()) != ell_) fail(ErrorCode::kContract, "atom dimension mismatch");
  if (!(w >= 0.0)) fail(ErrorCode::kContract, "atom weight must be nonnegative");
  locations_.insert(locations_.end(), u.begin(), u.end());
  weights_.push_back(w);
  mass_ += w;
}

double EmpiricalMeasure::pair(const ScalarField& f) const {
  std::vector<double> terms(weights_.size());
  for (std::size_t j = 0; j < weights_.size(); ++j) terms[j] = weights_[j] * f(location(j));
  return pairwise_sum(terms);
}

EmpiricalMeasure EmpiricalMeasure::combined(const EmpiricalMeasure& other, double scale) const {
  EmpiricalMeasure out = *this;
  for (std::size_t j = 0; j < other.atoms(); ++j) out.add(other.location(j), scale * other.weight(j));
  return out;
}

EmpiricalMeasure empirical_measure(const Population& pop, ScalingParams s) {
  EmpiricalMeasure out(pop.ell());
  const double n = static_cast<double>(s.n);
  const double m = static_cast<double>(s.m);
  for (const auto& [i, x] : pop) {
    const auto u = i.scaled(n);
    out.add(u, static_cast<double>(x) / m);
  }
  return out;
}

void write_csv(std::ostream& os, const EmpiricalMeasure& measure) {
  for (int k = 0; k < measure.ell(); ++k) os << "u_" << (k + 1) << ",";
  os << "weight\n";
  for (std::size_t j = 0; j < measure.atoms(); ++j) {
    for (double v : measure.location(j)) os << format_number(v) << ",";
    os << format_number(measure.weight(j)) << "\n";
  }
}

Composition HatRates::at(Point u) const {
  return floor_composition(u, static_cast<double>(rates_.scale().n));
}

double HatRates::birth(Point u, int k) const { return rates_.birth(at(u), k); }
double HatRates::death(Point u, int k) const { return rates_.death(at(u), k); }
double HatRates::migration(Point u, int k) const { return rates_.migration(at(u), k); }
double HatRates::fission(Point u) const { return rates_.fission(at(u)); }

double HatRates::extinction_measure(Point u) const {
  return static_cast<double>(rates_.scale().m) * rates_.extinction(at(u));
}

double HatRates::extinction_density(Point u) const {
  return std::pow(static_cast<double>(rates_.scale().n), rates_.ell()) * extinction_measure(u);
}

HatRates hat_rates(const RateSpec& rates, ScalingParams s) {
  return HatRates(rates.at(s, rates.mode()));
}

double hat_eta_pairing(const FissionLaw& law, ScalingParams s, Point u, const ScalarField& f) {
  const double n = static_cast<double>(s.n);
  const Composition i = floor_composition(u, n);
  if (i.is_zero()) return 0.0;
  const int ell = i.ell();
  Composition ip(ell);
  std::vector<double> v(static_cast<std::size_t>(ell));
  double sum = 0.0;
  while (true) {
    if (!ip.is_zero()) {
      const double e = law.eta(i, ip);
      if (e != 0.0) {
        for (int k = 0; k < ell; ++k) v[static_cast<std::size_t>(k)] = static_cast<double>(ip[k]) / n;
        sum += f(v) * e;
      }
    }
    int k = 0;
    while (k < ell && ip[k] == i[k]) ip.set(k++, 0);
    if (k == ell) break;
    ip.set(k, ip[k] + 1);
  }
  return sum;
}

void StepDensity::set(const Composition& i, double height) {
  if (i.is_zero()) fail(ErrorCode::kContract, "the zero composition has no cell");
  if (height == 0.0) {
    heights_.erase(i);
  } else {
    heights_[i] = height;
  }
}

double StepDensity::value(Point u) const {
  for (double v : u) {
    if (!(v >= 0.0)) return 0.0;
  }
  const Composition i = floor_composition(u, static_cast<double>(scale_.n));
  auto it = heights_.find(i);
  return it == heights_.end() ? 0.0 : it->second;
}

double StepDensity::mass() const {
  double sum = 0.0;
  for (const auto& [i, h] : heights_) sum += h;
  return sum / std::pow(static_cast<double>(scale_.n), ell_);
}

double StepDensity::pair(const ScalarField& g, int order) const {
  const double n = static_cast<double>(scale_.n);
  std::vector<double> lo(static_cast<std::size_t>(ell_)), hi(static_cast<std::size_t>(ell_));
  std::vector<double> terms;
  terms.reserve(heights_.size());
  for (const auto& [i, h] : heights_) {
    for (int k = 0; k < ell_; ++k) {
      lo[static_cast<std::size_t>(k)] = static_cast<double>(i[k]) / n;
      hi[static_cast<std::size_t>(k)] = static_cast<double>(i[k] + 1) / n;
    }
    terms.push_back(h * integrate_box(g, lo, hi, order));
  }
  return pairwise_sum(terms);
}

DensityGrid StepDensity::to_grid(double upper, int cells) const {
  DensityGrid grid(ell_, upper, cells);
  const double n = static_cast<double>(scale_.n);
  const double h = grid.h();
  for (const auto& [i, height] : heights_) {
    // Overlapping grid-cell ranges per axis with their overlap lengths.
    std::vector<std::vector<std::pair<int, double>>> axes(static_cast<std::size_t>(ell_));
    for (int k = 0; k < ell_; ++k) {
      const double a = static_cast<double>(i[k]) / n;
      const double b = static_cast<double>(i[k] + 1) / n;
      const int first = std::max(0, static_cast<int>(std::floor(a / h)));
      const int last = std::min(cells - 1, static_cast<int>(std::floor(b / h)));
      for (int c = first; c <= last; ++c) {
        const double overlap = std::min(b, (c + 1) * h) - std::max(a, c * h);
        if (overlap > 0.0) axes[static_cast<std::size_t>(k)].emplace_back(c, overlap);
      }
    }
    std::vector<std::size_t> pos(static_cast<std::size_t>(ell_), 0);
    bool empty = false;
    for (const auto& a : axes) empty = empty || a.empty();
    if (empty) continue;
    while (true) {
      std::size_t cell = 0;
      double vol = 1.0;
      for (int k = 0; k < ell_; ++k) {
        const auto& [c, len] = axes[static_cast<std::size_t>(k)][pos[static_cast<std::size_t>(k)]];
        cell += static_cast<std::size_t>(c) * grid.stride(k);
        vol *= len;
      }
      grid[cell] += height * vol / grid.cell_volume();
      int k = 0;
      while (k < ell_ && ++pos[static_cast<std::size_t>(k)] == axes[static_cast<std::size_t>(k)].size()) {
        pos[static_cast<std::size_t>(k)] = 0;
        ++k;
      }
      if (k == ell_) break;
    }
  }
  return grid;
}

StepDensity density_step_function(const Population& pop, ScalingParams s) {
  StepDensity out(pop.ell(), s);
  const double m = static_cast<double>(s.m);
  for (const auto& [i, x] : pop) out.set(i, static_cast<double>(x) / m);
  return out;
}

}  // namespace groupsel
