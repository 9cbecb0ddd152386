#pragma once

#include <cstddef>
#include <vector>

#include "groupsel/pde.hpp"

namespace groupsel {

// Velocity of the characteristics:
//   F^k_t(u) = u_k (beta^k - delta^k - mu^k)(u) + c^k_t
// with c_t interpolated from a drift schedule.
class CharacteristicField {
 public:
  CharacteristicField(const LimitCoefficients& coeffs, DriftSchedule schedule)
      : coeffs_(&coeffs), schedule_(std::move(schedule)) {}

  int ell() const noexcept { return coeffs_->ell; }
  void velocity(double t, const double* u, double* out) const;

 private:
  const LimitCoefficients* coeffs_;
  DriftSchedule schedule_;
};

// psi_{s,t} applied to a flat array of points (ell coordinates each) by RK4
// with step at most dt. t < s integrates the reverse-time equation. Points
// leaving [0, upper]^ell are clamped and counted in *exits.
std::vector<double> flow_points(const CharacteristicField& field, double s, double t,
                                std::vector<double> points, double dt, double upper,
                                std::size_t* exits = nullptr);

struct FlowMap {
  double s = 0.0;
  double t = 0.0;
  std::vector<double> nodes;
  std::vector<double> forward;  // psi_{s,t}(nodes)
  std::vector<double> inverse;  // psi_{s,t}^{-1}(nodes) = psi_{t,s}(nodes)
  std::size_t exits = 0;
};

FlowMap advance_flow(const CharacteristicField& field, double s, double t,
                     const std::vector<double>& nodes, double dt, double upper);

// max |a - b| over matching coordinates.
double max_defect(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace groupsel
