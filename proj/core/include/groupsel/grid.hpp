#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace groupsel {

using Point = std::span<const double>;
using ScalarField = std::function<double(Point)>;

// Gauss-Legendre rule on [-1, 1]. Supported orders: 2, 4, 8, 16, 32.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussRule& gauss_rule(int order);

// Integral of f over the box [lo, hi] by a tensor Gauss-Legendre rule.
double integrate_box(const ScalarField& f, Point lo, Point hi, int order);

// Pairwise summation: order of reduction depends only on the length.
double pairwise_sum(std::span<const double> values);

// Cell-centred density on the cube [0, upper]^ell with `cells` cells per
// axis. Cell c has multi-index (c_1, ..., c_ell), first axis fastest, and
// centre ((c_k + 1/2) h).
class DensityGrid {
 public:
  DensityGrid() = default;
  DensityGrid(int ell, double upper, int cells);

  int ell() const noexcept { return ell_; }
  int cells() const noexcept { return cells_; }
  double upper() const noexcept { return upper_; }
  double h() const noexcept { return h_; }
  double cell_volume() const noexcept { return volume_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::size_t stride(int k) const noexcept { return strides_[static_cast<std::size_t>(k)]; }

  double time() const noexcept { return t_; }
  void set_time(double t) noexcept { t_ = t; }

  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double& operator[](std::size_t c) { return values_[c]; }
  double operator[](std::size_t c) const { return values_[c]; }

  int index(std::size_t c, int k) const {
    return static_cast<int>((c / strides_[static_cast<std::size_t>(k)]) % static_cast<std::size_t>(cells_));
  }
  void center(std::size_t c, double* u) const;
  std::vector<double> center(std::size_t c) const;
  // Cell containing u, or size() when u lies outside the box.
  std::size_t locate(Point u) const;

  bool same_layout(const DensityGrid& other) const {
    return ell_ == other.ell_ && cells_ == other.cells_ && upper_ == other.upper_;
  }

  // Midpoint-rule integrals over the cells.
  double mass() const;
  double moment(int k) const;
  double pair(const ScalarField& f) const;

  // Cell averages of f, each computed with a Gauss rule of the given order.
  static DensityGrid from_function(int ell, double upper, int cells, const ScalarField& f,
                                   int order = 4);

 private:
  int ell_ = 1;
  int cells_ = 0;
  double upper_ = 0.0;
  double h_ = 0.0;
  double volume_ = 0.0;
  double t_ = 0.0;
  std::vector<std::size_t> strides_;
  std::vector<double> values_;
};

}  // namespace groupsel
