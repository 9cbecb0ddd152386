#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "groupsel/grid.hpp"
#include "groupsel/kernel.hpp"
#include "groupsel/rates.hpp"

namespace groupsel {

// Coefficients of the limit equation, evaluated through RateFunction::limit.
struct LimitCoefficients {
  int ell = 1;
  std::vector<RateFunction> birth, death, migration;
  RateFunction fission;     // phi
  RateFunction extinction;  // multiplies the total mass
  std::shared_ptr<const OffspringKernel> kernel;

  static LimitCoefficients from_rates(const RateSpec& rates,
                                      std::shared_ptr<const OffspringKernel> kernel);

  // u_k (beta^k - delta^k)(u)
  double growth(Point u, int k) const;
  // u_k mu^k(u)
  double migration_flux(Point u, int k) const;
  double phi(Point u) const { return fission.limit(u); }
  double eps(Point u) const { return extinction.limit(u); }

  bool has_growth() const;
  bool has_migration() const;
  bool has_reaction() const;
  void validate() const;
};

// Grid-wise Lipschitz estimate of u_k beta^k, u_k delta^k, u_k mu^k from
// neighbouring centres; checked against declared constants at config load.
double lipschitz_estimate(const LimitCoefficients& coeffs, const DensityGrid& grid);

// c^k = int u_k mu^k x du / int x du, by the midpoint rule.
// Zero mass is Error(kSingularDrift).
std::vector<double> nonlocal_drift(const LimitCoefficients& coeffs, const DensityGrid& x);

// F^k(u) = u_k (beta^k - delta^k - mu^k)(u) + c^k at every cell centre,
// laid out as values[cell * ell + k].
struct DriftField {
  std::vector<double> c;
  std::vector<double> values;
};
DriftField drift_field(const LimitCoefficients& coeffs, const DensityGrid& x);

// B(nu) f (u) = phi(u) int f(u') etabar(u, du') - (phi(u) + eps(u) mass) f(u)
// at the cell centres. The callable form integrates the kernel exactly (Gauss
// rule for the box kernel); the grid form uses the midpoint rule.
std::vector<double> apply_B(const LimitCoefficients& coeffs, double mass, const ScalarField& f,
                            const DensityGrid& grid);
std::vector<double> apply_B(const LimitCoefficients& coeffs, double mass,
                            const std::vector<double>& f, const DensityGrid& grid);

// Strang arrangements. kTransportOutside: A(dt/2) M(dt/2) C(dt) M(dt/2) A(dt/2);
// kReactionOutside: C(dt/2) M(dt/2) A(dt) M(dt/2) C(dt/2). A is growth
// transport, M migration transport (nonlocal drift included), C reaction.
enum class SplitOrder { kTransportOutside, kReactionOutside };

// Largest step the transport substeps admit.
double admissible_dt(const LimitCoefficients& coeffs, const DensityGrid& x,
                     SplitOrder order = SplitOrder::kTransportOutside);

struct StepReport {
  double outflux = 0.0;  // mass leaving through the far faces
};

// Advances x by dt; Error(kCfl) when dt exceeds admissible_dt.
void step_density(const LimitCoefficients& coeffs, DensityGrid& x, double dt,
                  SplitOrder order = SplitOrder::kTransportOutside, StepReport* report = nullptr);

struct MomentSample {
  double t = 0.0;
  double mass = 0.0;
  std::vector<double> moments;
  double escaped = 0.0;  // cumulative outflux
};

// Piecewise-linear schedule of the nonlocal drift c_t recorded by solve().
struct DriftSchedule {
  std::vector<double> t;
  std::vector<std::vector<double>> c;
  std::vector<double> at(double time) const;
};

struct SolveOptions {
  double horizon = 1.0;
  double dt = 1e-2;
  std::vector<double> sample_times;  // snapshots; the horizon is always kept
  double mass_floor = 1e-12;
  SplitOrder order = SplitOrder::kTransportOutside;
};

struct DensityTrajectory {
  std::vector<DensityGrid> snapshots;
  std::vector<MomentSample> moments;  // every step
  DriftSchedule drift;
  double escaped = 0.0;

  // Snapshot at time t (exact match within 1e-12), or nullptr.
  const DensityGrid* at(double t) const;
};

DensityTrajectory solve(const LimitCoefficients& coeffs, const DensityGrid& x0,
                        const SolveOptions& options);

// C^1 test function with gradient.
struct TestFunction {
  std::string name;
  ScalarField f;
  std::function<double(Point, int)> grad;
};

// Smooth compactly supported bumps and products of cosine windows spread over
// [0, upper]^ell.
std::vector<TestFunction> smooth_test_bank(int ell, double upper, int count);

struct ResidualSeries {
  std::vector<double> t;
  std::vector<double> residual;
  double max_abs = 0.0;
};

// Central-difference d/dt <f, x_t> over consecutive snapshots minus the
// right-hand side of the weak form at the middle snapshot.
ResidualSeries weak_residual(const LimitCoefficients& coeffs, const DensityTrajectory& traj,
                             const TestFunction& f);

struct MildCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
  std::size_t exits = 0;
};

// <f, x_t> against <f o psi_{0,t}, x_0> + int_0^t <B(x_s) (f o psi_{s,t}), x_s> ds,
// the time integral by the trapezoid rule over the snapshots up to t.
MildCheck mild_solution_check(const LimitCoefficients& coeffs, const DensityTrajectory& traj,
                              const ScalarField& f, double t, double flow_dt);

// d/dt (mass, int |u| x du) in closed form for constant coefficients:
//   dR = (bbar - 1) phi R - eps R^2,  dI = (beta - delta) I - eps R I.
// Refuses kernels that do not conserve the first moment and non-constant
// coefficients.
std::array<double, 2> moment_ode(const LimitCoefficients& coeffs, double mass, double moment);

// The same right-hand sides computed from a density by quadrature.
std::array<double, 2> moment_rates(const LimitCoefficients& coeffs, const DensityGrid& x);

}  // namespace groupsel
