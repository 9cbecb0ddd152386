#include "groupsel/flow.hpp"

#include <algorithm>
#include <cmath>

#include "groupsel/error.hpp"

namespace groupsel {

void CharacteristicField::velocity(double t, const double* u, double* out) const {
  const int ell = coeffs_->ell;
  const Point p(u, static_cast<std::size_t>(ell));
  const std::vector<double> c = schedule_.at(t);
  for (int k = 0; k < ell; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    out[k] = coeffs_->growth(p, k) - coeffs_->migration_flux(p, k) + (c.empty() ? 0.0 : c[kk]);
  }
}

std::vector<double> flow_points(const CharacteristicField& field, double s, double t,
                                std::vector<double> points, double dt, double upper,
                                std::size_t* exits) {
  if (!(dt > 0.0)) fail(ErrorCode::kContract, "flow step must be positive");
  const auto ell = static_cast<std::size_t>(field.ell());
  if (points.size() % ell != 0) fail(ErrorCode::kContract, "point array length is not a multiple of ell");
  const double span = t - s;
  if (span == 0.0) return points;
  const auto steps = static_cast<std::size_t>(std::ceil(std::abs(span) / dt - 1e-9));
  const double h = span / static_cast<double>(std::max<std::size_t>(steps, 1));
  std::vector<double> k1(ell), k2(ell), k3(ell), k4(ell), y(ell);
  std::size_t out = 0;
  for (std::size_t p = 0; p < points.size(); p += ell) {
    double* u = points.data() + p;
    bool left = false;
    double time = s;
    for (std::size_t j = 0; j < std::max<std::size_t>(steps, 1); ++j) {
      field.velocity(time, u, k1.data());
      for (std::size_t k = 0; k < ell; ++k) y[k] = u[k] + 0.5 * h * k1[k];
      field.velocity(time + 0.5 * h, y.data(), k2.data());
      for (std::size_t k = 0; k < ell; ++k) y[k] = u[k] + 0.5 * h * k2[k];
      field.velocity(time + 0.5 * h, y.data(), k3.data());
      for (std::size_t k = 0; k < ell; ++k) y[k] = u[k] + h * k3[k];
      field.velocity(time + h, y.data(), k4.data());
      for (std::size_t k = 0; k < ell; ++k) {
        u[k] += h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
        if (u[k] < 0.0 || u[k] > upper) {
          u[k] = std::clamp(u[k], 0.0, upper);
          left = true;
        }
      }
      time = s + static_cast<double>(j + 1) * h;
    }
    if (left) ++out;
  }
  if (exits != nullptr) *exits += out;
  return points;
}

FlowMap advance_flow(const CharacteristicField& field, double s, double t,
                     const std::vector<double>& nodes, double dt, double upper) {
  FlowMap m;
  m.s = s;
  m.t = t;
  m.nodes = nodes;
  m.forward = flow_points(field, s, t, nodes, dt, upper, &m.exits);
  m.inverse = flow_points(field, t, s, nodes, dt, upper, &m.exits);
  return m;
}

double max_defect(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) fail(ErrorCode::kContract, "defect needs arrays of equal length");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace groupsel
