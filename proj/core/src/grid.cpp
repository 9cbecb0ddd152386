#include "groupsel/grid.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>

#include "groupsel/error.hpp"

namespace groupsel {

namespace {

template <int N>
GaussRule make_rule() {
  using Q = boost::math::quadrature::gauss<double, N>;
  const auto& x = Q::abscissa();
  const auto& w = Q::weights();
  GaussRule rule;
  // Boost stores the nonnegative half; odd orders carry the centre node first.
  for (std::size_t j = x.size(); j-- > 0;) {
    if (x[j] == 0.0) continue;
    rule.nodes.push_back(-x[j]);
    rule.weights.push_back(w[j]);
  }
  for (std::size_t j = 0; j < x.size(); ++j) {
    rule.nodes.push_back(x[j]);
    rule.weights.push_back(w[j]);
  }
  return rule;
}

}  // namespace

const GaussRule& gauss_rule(int order) {
  static const GaussRule r2 = make_rule<2>();
  static const GaussRule r4 = make_rule<4>();
  static const GaussRule r8 = make_rule<8>();
  static const GaussRule r16 = make_rule<16>();
  static const GaussRule r32 = make_rule<32>();
  switch (order) {
    case 2: return r2;
    case 4: return r4;
    case 8: return r8;
    case 16: return r16;
    case 32: return r32;
    default: fail(ErrorCode::kContract, "unsupported Gauss-Legendre order " + std::to_string(order));
  }
}

double integrate_box(const ScalarField& f, Point lo, Point hi, int order) {
  const GaussRule& rule = gauss_rule(order);
  const std::size_t ell = lo.size();
  const std::size_t q = rule.nodes.size();
  std::size_t total = 1;
  for (std::size_t k = 0; k < ell; ++k) total *= q;
  std::vector<double> u(ell);
  double sum = 0.0;
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    double w = 1.0;
    for (std::size_t k = 0; k < ell; ++k) {
      const std::size_t j = rem % q;
      rem /= q;
      const double half = 0.5 * (hi[k] - lo[k]);
      u[k] = lo[k] + half * (1.0 + rule.nodes[j]);
      w *= half * rule.weights[j];
    }
    if (w != 0.0) sum += w * f(u);
  }
  return sum;
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 16) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

DensityGrid::DensityGrid(int ell, double upper, int cells)
    : ell_(ell), cells_(cells), upper_(upper) {
  if (ell < 1 || cells < 1 || !(upper > 0.0)) {
    fail(ErrorCode::kConfigSchema, "grid needs ell >= 1, cells >= 1 and a positive box");
  }
  h_ = upper / cells;
  volume_ = std::pow(h_, ell);
  std::size_t total = 1;
  for (int k = 0; k < ell; ++k) {
    strides_.push_back(total);
    total *= static_cast<std::size_t>(cells);
    if (total > (std::size_t{1} << 28)) fail(ErrorCode::kConfigSchema, "grid too large");
  }
  values_.assign(total, 0.0);
}

void DensityGrid::center(std::size_t c, double* u) const {
  for (int k = 0; k < ell_; ++k) u[k] = (index(c, k) + 0.5) * h_;
}

std::vector<double> DensityGrid::center(std::size_t c) const {
  std::vector<double> u(static_cast<std::size_t>(ell_));
  center(c, u.data());
  return u;
}

std::size_t DensityGrid::locate(Point u) const {
  std::size_t c = 0;
  for (int k = 0; k < ell_; ++k) {
    const double v = u[static_cast<std::size_t>(k)];
    if (!(v >= 0.0) || v >= upper_) return size();
    const auto j = std::min(static_cast<std::size_t>(v / h_), static_cast<std::size_t>(cells_ - 1));
    c += j * strides_[static_cast<std::size_t>(k)];
  }
  return c;
}

double DensityGrid::mass() const { return pairwise_sum(values_) * volume_; }

double DensityGrid::moment(int k) const {
  std::vector<double> terms(values_.size());
  for (std::size_t c = 0; c < values_.size(); ++c) terms[c] = (index(c, k) + 0.5) * h_ * values_[c];
  return pairwise_sum(terms) * volume_;
}

double DensityGrid::pair(const ScalarField& f) const {
  std::vector<double> terms(values_.size());
  std::vector<double> u(static_cast<std::size_t>(ell_));
  for (std::size_t c = 0; c < values_.size(); ++c) {
    if (values_[c] == 0.0) {
      terms[c] = 0.0;
      continue;
    }
    center(c, u.data());
    terms[c] = f(u) * values_[c];
  }
  return pairwise_sum(terms) * volume_;
}

DensityGrid DensityGrid::from_function(int ell, double upper, int cells, const ScalarField& f,
                                       int order) {
  DensityGrid grid(ell, upper, cells);
  std::vector<double> lo(static_cast<std::size_t>(ell)), hi(static_cast<std::size_t>(ell));
  for (std::size_t c = 0; c < grid.size(); ++c) {
    for (int k = 0; k < ell; ++k) {
      lo[static_cast<std::size_t>(k)] = grid.index(c, k) * grid.h();
      hi[static_cast<std::size_t>(k)] = lo[static_cast<std::size_t>(k)] + grid.h();
    }
    grid[c] = integrate_box(f, lo, hi, order) / grid.cell_volume();
  }
  return grid;
}

}  // namespace groupsel
