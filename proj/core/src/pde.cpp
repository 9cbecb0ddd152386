#include "groupsel/pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "groupsel/error.hpp"
#include "groupsel/flow.hpp"
#include "groupsel/text.hpp"

namespace groupsel {

// --- coefficients ------------------------------------------------------------

LimitCoefficients LimitCoefficients::from_rates(const RateSpec& rates,
                                                std::shared_ptr<const OffspringKernel> kernel) {
  LimitCoefficients c;
  c.ell = rates.ell();
  c.birth = rates.birth_functions();
  c.death = rates.death_functions();
  c.migration = rates.migration_functions();
  c.fission = rates.fission_function();
  c.extinction = rates.extinction_function();
  c.kernel = std::move(kernel);
  c.validate();
  return c;
}

void LimitCoefficients::validate() const {
  const auto n = static_cast<std::size_t>(ell);
  if (ell < 1 || birth.size() != n || death.size() != n || migration.size() != n) {
    fail(ErrorCode::kConfigSchema, "limit coefficients need one rate function per type");
  }
  if (!kernel && !fission.is_zero()) {
    fail(ErrorCode::kConfigSchema, "a fission rate needs an offspring kernel");
  }
}

double LimitCoefficients::growth(Point u, int k) const {
  const auto kk = static_cast<std::size_t>(k);
  return u[kk] * (birth[kk].limit(u) - death[kk].limit(u));
}

double LimitCoefficients::migration_flux(Point u, int k) const {
  const auto kk = static_cast<std::size_t>(k);
  return u[kk] * migration[kk].limit(u);
}

bool LimitCoefficients::has_growth() const {
  for (int k = 0; k < ell; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    if (!(birth[kk].is_zero() && death[kk].is_zero())) {
      // Equal constants cancel.
      if (birth[kk].is_constant() && death[kk].is_constant()) {
        const double zero[kMaxTypes] = {};
        const Point p(zero, static_cast<std::size_t>(ell));
        if (birth[kk].limit(p) == death[kk].limit(p)) continue;
      }
      return true;
    }
  }
  return false;
}

bool LimitCoefficients::has_migration() const {
  for (const auto& m : migration) {
    if (!m.is_zero()) return true;
  }
  return false;
}

bool LimitCoefficients::has_reaction() const { return !fission.is_zero() || !extinction.is_zero(); }

double lipschitz_estimate(const LimitCoefficients& coeffs, const DensityGrid& grid) {
  const int ell = coeffs.ell;
  std::vector<double> u(static_cast<std::size_t>(ell)), v(static_cast<std::size_t>(ell));
  double best = 0.0;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    grid.center(c, u.data());
    for (int d = 0; d < ell; ++d) {
      if (grid.index(c, d) + 1 >= grid.cells()) continue;
      v = u;
      v[static_cast<std::size_t>(d)] += grid.h();
      for (int k = 0; k < ell; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        for (const RateFunction* g : {&coeffs.birth[kk], &coeffs.death[kk], &coeffs.migration[kk]}) {
          const double a = u[kk] * g->limit(u);
          const double b = v[kk] * g->limit(v);
          best = std::max(best, std::abs(b - a) / grid.h());
        }
      }
    }
  }
  return best;
}

std::vector<double> nonlocal_drift(const LimitCoefficients& coeffs, const DensityGrid& x) {
  const double mass = x.mass();
  if (!(mass > 0.0)) fail(ErrorCode::kSingularDrift, "nonlocal drift needs positive total mass");
  std::vector<double> c(static_cast<std::size_t>(coeffs.ell), 0.0);
  if (!coeffs.has_migration()) return c;
  std::vector<double> u(static_cast<std::size_t>(coeffs.ell));
  for (int k = 0; k < coeffs.ell; ++k) {
    c[static_cast<std::size_t>(k)] = x.pair([&](Point p) { return coeffs.migration_flux(p, k); }) / mass;
  }
  return c;
}

DriftField drift_field(const LimitCoefficients& coeffs, const DensityGrid& x) {
  DriftField out;
  out.c = nonlocal_drift(coeffs, x);
  const auto ell = static_cast<std::size_t>(coeffs.ell);
  out.values.resize(x.size() * ell);
  std::vector<double> u(ell);
  for (std::size_t c = 0; c < x.size(); ++c) {
    x.center(c, u.data());
    for (std::size_t k = 0; k < ell; ++k) {
      out.values[c * ell + k] = coeffs.growth(u, static_cast<int>(k)) -
                                coeffs.migration_flux(u, static_cast<int>(k)) + out.c[k];
    }
  }
  return out;
}

std::vector<double> apply_B(const LimitCoefficients& coeffs, double mass, const ScalarField& f,
                            const DensityGrid& grid) {
  if (mass < 0.0) fail(ErrorCode::kContract, "apply_B needs a nonnegative mass");
  std::vector<double> out(grid.size());
  std::vector<double> u(static_cast<std::size_t>(grid.ell()));
  for (std::size_t c = 0; c < grid.size(); ++c) {
    grid.center(c, u.data());
    const double phi = coeffs.phi(u);
    const double fu = f(u);
    double gain = 0.0;
    if (phi != 0.0) gain = phi * coeffs.kernel->integrate(u, f);
    out[c] = gain - (phi + coeffs.eps(u) * mass) * fu;
  }
  return out;
}

std::vector<double> apply_B(const LimitCoefficients& coeffs, double mass,
                            const std::vector<double>& f, const DensityGrid& grid) {
  if (mass < 0.0) fail(ErrorCode::kContract, "apply_B needs a nonnegative mass");
  std::vector<double> gathered(grid.size(), 0.0);
  if (!coeffs.fission.is_zero()) coeffs.kernel->gather(grid, f, gathered);
  std::vector<double> out(grid.size());
  std::vector<double> u(static_cast<std::size_t>(grid.ell()));
  for (std::size_t c = 0; c < grid.size(); ++c) {
    grid.center(c, u.data());
    const double phi = coeffs.phi(u);
    out[c] = phi * gathered[c] - (phi + coeffs.eps(u) * mass) * f[c];
  }
  return out;
}

// --- transport -------------------------------------------------------------------

namespace {

double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return std::abs(a) < std::abs(b) ? a : b;
}

// Face data for one grid: for cell c and axis k, the right face of c.
struct Faces {
  std::vector<double> growth;     // u_k (beta - delta) at the face
  std::vector<double> migration;  // u_k mu at the face
  std::vector<std::vector<double>> breakpoints;  // sorted distinct migration values per axis
  double growth_speed = 0.0;     // max over cells of sum_k |growth|
  double migration_speed = 0.0;  // sum_k (max - min) of migration values
};

Faces make_faces(const LimitCoefficients& coeffs, const DensityGrid& grid) {
  Faces f;
  const auto ell = static_cast<std::size_t>(coeffs.ell);
  f.growth.resize(grid.size() * ell);
  f.migration.resize(grid.size() * ell);
  f.breakpoints.resize(ell);
  std::vector<double> u(ell);
  const bool growth = coeffs.has_growth();
  const bool migration = coeffs.has_migration();
  for (std::size_t c = 0; c < grid.size(); ++c) {
    double speed = 0.0;
    for (std::size_t k = 0; k < ell; ++k) {
      grid.center(c, u.data());
      u[k] += 0.5 * grid.h();
      const double a = growth ? coeffs.growth(u, static_cast<int>(k)) : 0.0;
      const double m = migration ? coeffs.migration_flux(u, static_cast<int>(k)) : 0.0;
      f.growth[c * ell + k] = a;
      f.migration[c * ell + k] = m;
      speed += std::abs(a);
      if (migration) f.breakpoints[k].push_back(m);
    }
    f.growth_speed = std::max(f.growth_speed, speed);
  }
  for (auto& b : f.breakpoints) {
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    if (!b.empty()) f.migration_speed += b.back() - b.front();
  }
  return f;
}

class Transport {
 public:
  Transport(const DensityGrid& grid) : grid_(grid), ell_(static_cast<std::size_t>(grid.ell())) {
    slopes_.resize(grid.size() * ell_);
    left_.resize(grid.size() * ell_);
    right_.resize(grid.size() * ell_);
  }

  // Limited face values for state x.
  void reconstruct(const std::vector<double>& x) {
    const auto cells = grid_.cells();
    for (std::size_t c = 0; c < grid_.size(); ++c) {
      for (std::size_t k = 0; k < ell_; ++k) {
        const int j = grid_.index(c, static_cast<int>(k));
        const std::size_t s = grid_.stride(static_cast<int>(k));
        const double prev = j > 0 ? x[c - s] : x[c];
        const double next = j + 1 < cells ? x[c + s] : 0.0;
        slopes_[c * ell_ + k] = minmod(x[c] - prev, next - x[c]);
      }
    }
    for (std::size_t c = 0; c < grid_.size(); ++c) {
      for (std::size_t k = 0; k < ell_; ++k) {
        const int j = grid_.index(c, static_cast<int>(k));
        const std::size_t s = grid_.stride(static_cast<int>(k));
        left_[c * ell_ + k] = x[c] + 0.5 * slopes_[c * ell_ + k];
        right_[c * ell_ + k] = j + 1 < cells ? x[c + s] - 0.5 * slopes_[(c + s) * ell_ + k] : 0.0;
      }
    }
  }

  double flux(std::size_t face, double v) const { return v > 0.0 ? v * left_[face] : v * right_[face]; }

  // Sum of the axis-k fluxes when the velocity is c - migration.
  double migration_balance(const Faces& faces, std::size_t k, double c) const {
    double s = 0.0;
    for (std::size_t cell = 0; cell < grid_.size(); ++cell) {
      const std::size_t face = cell * ell_ + k;
      s += flux(face, c - faces.migration[face]);
    }
    return s;
  }

  // c^k making the axis-k fluxes sum to zero. The sum is nondecreasing and
  // piecewise linear in c with kinks at the face migration values.
  double balance_root(const Faces& faces, std::size_t k) const {
    const auto& b = faces.breakpoints[k];
    if (b.empty()) return 0.0;
    auto g = [&](double c) { return migration_balance(faces, k, c); };
    std::size_t lo = 0, hi = b.size() - 1;
    double g_lo = g(b[lo]);
    if (g_lo >= 0.0) return b[lo];
    double g_hi = g(b[hi]);
    if (g_hi <= 0.0) return b[hi];
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      const double gm = g(b[mid]);
      if (gm < 0.0) {
        lo = mid;
        g_lo = gm;
      } else {
        hi = mid;
        g_hi = gm;
      }
    }
    return b[lo] - g_lo * (b[hi] - b[lo]) / (g_hi - g_lo);
  }

  // out = -div(flux); returns the outflow rate through the far faces.
  double divergence(const std::vector<double>& velocity, std::vector<double>& out) const {
    const double h = grid_.h();
    const double area = grid_.cell_volume() / h;
    std::fill(out.begin(), out.end(), 0.0);
    double outflow = 0.0;
    for (std::size_t c = 0; c < grid_.size(); ++c) {
      for (std::size_t k = 0; k < ell_; ++k) {
        const std::size_t face = c * ell_ + k;
        const double v = velocity[face];
        if (v == 0.0) continue;
        const double f = flux(face, v);
        out[c] -= f / h;
        const int j = grid_.index(c, static_cast<int>(k));
        if (j + 1 < grid_.cells()) {
          out[c + grid_.stride(static_cast<int>(k))] += f / h;
        } else {
          outflow += f * area;
        }
      }
    }
    return outflow;
  }

 private:
  const DensityGrid& grid_;
  std::size_t ell_;
  std::vector<double> slopes_, left_, right_;
};

// SSP-RK2 with the velocity recomputed from the stage state.
template <class Velocity>
double rk2_transport(const DensityGrid& grid, std::vector<double>& x, double dt, Velocity&& velocity) {
  Transport tr(grid);
  std::vector<double> vel(grid.size() * static_cast<std::size_t>(grid.ell()));
  std::vector<double> rate(grid.size()), stage(grid.size());
  tr.reconstruct(x);
  velocity(tr, vel);
  const double out1 = tr.divergence(vel, rate);
  for (std::size_t c = 0; c < x.size(); ++c) stage[c] = x[c] + dt * rate[c];
  tr.reconstruct(stage);
  velocity(tr, vel);
  const double out2 = tr.divergence(vel, rate);
  for (std::size_t c = 0; c < x.size(); ++c) {
    x[c] = std::max(0.0, 0.5 * (x[c] + stage[c] + dt * rate[c]));
  }
  return 0.5 * dt * (out1 + out2);
}

double growth_step(const Faces& faces, const DensityGrid& grid, std::vector<double>& x, double dt) {
  return rk2_transport(grid, x, dt, [&](const Transport&, std::vector<double>& vel) {
    vel = faces.growth;
  });
}

double migration_step(const Faces& faces, const DensityGrid& grid, std::vector<double>& x, double dt) {
  const auto ell = static_cast<std::size_t>(grid.ell());
  return rk2_transport(grid, x, dt, [&](const Transport& tr, std::vector<double>& vel) {
    for (std::size_t k = 0; k < ell; ++k) {
      const double c = tr.balance_root(faces, k);
      for (std::size_t cell = 0; cell < grid.size(); ++cell) {
        vel[cell * ell + k] = c - faces.migration[cell * ell + k];
      }
    }
  });
}

double phi1(double z) { return std::abs(z) < 1e-8 ? 1.0 + 0.5 * z : std::expm1(z) / z; }

// Exponential midpoint step for x' = S(x) - (phi + eps R(x)) x.
void reaction_step(const LimitCoefficients& coeffs, const DensityGrid& grid, std::vector<double>& x,
                   double dt) {
  const std::size_t n = grid.size();
  std::vector<double> phi(n), eps(n), u(static_cast<std::size_t>(grid.ell()));
  for (std::size_t c = 0; c < n; ++c) {
    grid.center(c, u.data());
    phi[c] = coeffs.phi(u);
    eps[c] = coeffs.eps(u);
  }
  const bool fission = !coeffs.fission.is_zero();
  std::vector<double> parent(n), source(n, 0.0), half(n);
  auto compute_source = [&](const std::vector<double>& y) {
    if (!fission) return;
    for (std::size_t c = 0; c < n; ++c) parent[c] = y[c] * phi[c] * grid.cell_volume();
    coeffs.kernel->source(grid, parent, source);
  };
  auto mass_of = [&](const std::vector<double>& y) { return pairwise_sum(y) * grid.cell_volume(); };

  compute_source(x);
  const double r0 = mass_of(x);
  for (std::size_t c = 0; c < n; ++c) {
    const double z = -(phi[c] + eps[c] * r0) * 0.5 * dt;
    half[c] = x[c] * std::exp(z) + 0.5 * dt * phi1(z) * source[c];
  }
  const double r_mid = mass_of(half);
  compute_source(half);
  for (std::size_t c = 0; c < n; ++c) {
    const double z = -(phi[c] + eps[c] * r_mid) * dt;
    x[c] = std::max(0.0, x[c] * std::exp(z) + dt * phi1(z) * source[c]);
  }
}

double admissible_from(const Faces& faces, const DensityGrid& grid, SplitOrder order) {
  const double inf = std::numeric_limits<double>::infinity();
  const double h = grid.h();
  // Forward-Euler stages of the limited scheme stay nonnegative at Courant 1/2.
  const double a_sub = order == SplitOrder::kTransportOutside ? 0.5 : 1.0;
  const double dt_a = faces.growth_speed > 0.0 ? 0.5 * h / (faces.growth_speed * a_sub) : inf;
  const double dt_m = faces.migration_speed > 0.0 ? 0.5 * h / (faces.migration_speed * 0.5) : inf;
  return std::min(dt_a, dt_m);
}

}  // namespace

double admissible_dt(const LimitCoefficients& coeffs, const DensityGrid& x, SplitOrder order) {
  return admissible_from(make_faces(coeffs, x), x, order);
}

namespace {

void step_with_faces(const LimitCoefficients& coeffs, const Faces& faces, DensityGrid& x, double dt,
                     SplitOrder order, StepReport* report) {
  if (!(dt > 0.0)) fail(ErrorCode::kContract, "time step must be positive");
  const double limit = admissible_from(faces, x, order);
  if (dt > limit * (1.0 + 1e-12)) {
    fail(ErrorCode::kCfl, "time step " + format_number(dt) + " exceeds the admissible " +
                              format_number(limit) + " for h = " + format_number(x.h()));
  }
  auto& v = x.values();
  const bool growth = faces.growth_speed > 0.0;
  const bool migration = faces.migration_speed > 0.0;
  const bool reaction = coeffs.has_reaction();
  double out = 0.0;
  auto A = [&](double tau) {
    if (growth) out += growth_step(faces, x, v, tau);
  };
  auto M = [&](double tau) {
    if (migration) out += migration_step(faces, x, v, tau);
  };
  auto C = [&](double tau) {
    if (reaction) reaction_step(coeffs, x, v, tau);
  };
  if (order == SplitOrder::kTransportOutside) {
    A(0.5 * dt);
    M(0.5 * dt);
    C(dt);
    M(0.5 * dt);
    A(0.5 * dt);
  } else {
    C(0.5 * dt);
    M(0.5 * dt);
    A(dt);
    M(0.5 * dt);
    C(0.5 * dt);
  }
  x.set_time(x.time() + dt);
  if (report != nullptr) report->outflux = out;
}

}  // namespace

void step_density(const LimitCoefficients& coeffs, DensityGrid& x, double dt, SplitOrder order,
                  StepReport* report) {
  step_with_faces(coeffs, make_faces(coeffs, x), x, dt, order, report);
}

// --- solve -------------------------------------------------------------------------

std::vector<double> DriftSchedule::at(double time) const {
  if (t.empty()) return {};
  if (time <= t.front()) return c.front();
  if (time >= t.back()) return c.back();
  const auto it = std::upper_bound(t.begin(), t.end(), time);
  const std::size_t j = static_cast<std::size_t>(it - t.begin());
  const double w = (time - t[j - 1]) / (t[j] - t[j - 1]);
  std::vector<double> out(c[j].size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = (1.0 - w) * c[j - 1][k] + w * c[j][k];
  return out;
}

const DensityGrid* DensityTrajectory::at(double t) const {
  for (const auto& s : snapshots) {
    if (std::abs(s.time() - t) <= 1e-12 * std::max(1.0, std::abs(t))) return &s;
  }
  return nullptr;
}

DensityTrajectory solve(const LimitCoefficients& coeffs, const DensityGrid& x0,
                        const SolveOptions& options) {
  if (options.horizon < 0.0) fail(ErrorCode::kContract, "horizon must be nonnegative");
  if (!(options.dt > 0.0)) fail(ErrorCode::kContract, "time step must be positive");
  for (double v : x0.values()) {
    if (!(v >= 0.0)) fail(ErrorCode::kInitialMass, "initial density must be nonnegative");
  }
  if (!(x0.mass() > options.mass_floor)) {
    fail(ErrorCode::kMassUnderflow, "initial mass is below the configured floor");
  }
  std::vector<double> targets;
  for (double s : options.sample_times) {
    if (s >= 0.0 && s <= options.horizon) targets.push_back(s);
  }
  targets.push_back(options.horizon);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

  const Faces faces = make_faces(coeffs, x0);
  DensityTrajectory traj;
  DensityGrid x = x0;
  x.set_time(0.0);
  auto record = [&]() {
    MomentSample m;
    m.t = x.time();
    m.mass = x.mass();
    for (int k = 0; k < x.ell(); ++k) m.moments.push_back(x.moment(k));
    m.escaped = traj.escaped;
    traj.moments.push_back(std::move(m));
    traj.drift.t.push_back(x.time());
    traj.drift.c.push_back(nonlocal_drift(coeffs, x));
  };
  record();
  std::size_t next = 0;
  if (targets[next] == 0.0) {
    traj.snapshots.push_back(x);
    ++next;
  }
  while (next < targets.size()) {
    const double target = targets[next];
    double dt = std::min(options.dt, target - x.time());
    // Avoid a sliver step just before a target.
    if (target - x.time() - dt < 1e-9 * options.dt) dt = target - x.time();
    StepReport report;
    step_with_faces(coeffs, faces, x, dt, options.order, &report);
    traj.escaped += report.outflux;
    if (std::abs(x.time() - target) <= 1e-12 * std::max(1.0, target)) x.set_time(target);
    if (!(x.mass() > options.mass_floor)) {
      fail(ErrorCode::kMassUnderflow, "total mass fell below the floor " +
                                          format_number(options.mass_floor) + " at t = " +
                                          format_number(x.time()));
    }
    record();
    if (x.time() == target) {
      traj.snapshots.push_back(x);
      ++next;
    }
  }
  return traj;
}

// --- test functions ------------------------------------------------------------------

std::vector<TestFunction> smooth_test_bank(int ell, double upper, int count) {
  std::vector<TestFunction> bank;
  const double golden = 0.6180339887498949;
  for (int j = 0; j < count; ++j) {
    std::vector<double> centre(static_cast<std::size_t>(ell));
    for (int k = 0; k < ell; ++k) {
      const double frac = std::fmod(0.5 + (j + 1) * golden * (k + 1), 1.0);
      centre[static_cast<std::size_t>(k)] = upper * (0.1 + 0.8 * frac);
    }
    const double width = upper * (j % 3 == 0 ? 0.12 : (j % 3 == 1 ? 0.2 : 0.35));
    const bool cosine = j % 2 == 1;
    // 1-D profile and derivative on r in (-1, 1).
    auto profile = [cosine](double r) {
      if (std::abs(r) >= 1.0) return 0.0;
      if (cosine) {
        const double c = std::cos(0.5 * M_PI * r);
        return c * c;
      }
      const double s = 1.0 - r * r;
      return s * s;
    };
    auto dprofile = [cosine](double r) {
      if (std::abs(r) >= 1.0) return 0.0;
      if (cosine) return -0.5 * M_PI * std::sin(M_PI * r);
      return -4.0 * r * (1.0 - r * r);
    };
    TestFunction tf;
    tf.name = std::string(cosine ? "cosbump" : "quartic") + "_" + std::to_string(j);
    tf.f = [centre, width, profile](Point u) {
      double v = 1.0;
      for (std::size_t k = 0; k < centre.size(); ++k) v *= profile((u[k] - centre[k]) / width);
      return v;
    };
    tf.grad = [centre, width, profile, dprofile](Point u, int d) {
      double v = 1.0;
      for (std::size_t k = 0; k < centre.size(); ++k) {
        const double r = (u[k] - centre[k]) / width;
        v *= static_cast<int>(k) == d ? dprofile(r) / width : profile(r);
      }
      return v;
    };
    bank.push_back(std::move(tf));
  }
  return bank;
}

// --- weak and mild forms ---------------------------------------------------------------

namespace {

// <B(x) g, x> with the kernel integrated exactly; empty cells are skipped.
double paired_B(const LimitCoefficients& coeffs, const DensityGrid& x, double mass,
                const ScalarField& g) {
  std::vector<double> terms(x.size(), 0.0);
  std::vector<double> u(static_cast<std::size_t>(x.ell()));
  for (std::size_t c = 0; c < x.size(); ++c) {
    if (x[c] == 0.0) continue;
    x.center(c, u.data());
    const double phi = coeffs.phi(u);
    const double eps = coeffs.eps(u);
    if (phi == 0.0 && eps == 0.0) continue;
    double b = -(phi + eps * mass) * g(u);
    if (phi != 0.0) b += phi * coeffs.kernel->integrate(u, g);
    terms[c] = b * x[c];
  }
  return pairwise_sum(terms) * x.cell_volume();
}

}  // namespace

ResidualSeries weak_residual(const LimitCoefficients& coeffs, const DensityTrajectory& traj,
                             const TestFunction& f) {
  ResidualSeries out;
  const auto& snaps = traj.snapshots;
  for (std::size_t j = 1; j + 1 < snaps.size(); ++j) {
    const DensityGrid& x = snaps[j];
    const double dt = snaps[j + 1].time() - snaps[j - 1].time();
    const double lhs = (snaps[j + 1].pair(f.f) - snaps[j - 1].pair(f.f)) / dt;
    const DriftField drift = drift_field(coeffs, x);
    const auto ell = static_cast<std::size_t>(x.ell());
    std::vector<double> terms(x.size(), 0.0);
    std::vector<double> u(ell);
    for (std::size_t c = 0; c < x.size(); ++c) {
      if (x[c] == 0.0) continue;
      x.center(c, u.data());
      double s = 0.0;
      for (std::size_t k = 0; k < ell; ++k) s += drift.values[c * ell + k] * f.grad(u, static_cast<int>(k));
      terms[c] = s * x[c];
    }
    const double rhs = pairwise_sum(terms) * x.cell_volume() + paired_B(coeffs, x, x.mass(), f.f);
    out.t.push_back(x.time());
    out.residual.push_back(lhs - rhs);
    out.max_abs = std::max(out.max_abs, std::abs(lhs - rhs));
  }
  return out;
}

MildCheck mild_solution_check(const LimitCoefficients& coeffs, const DensityTrajectory& traj,
                              const ScalarField& f, double t, double flow_dt) {
  MildCheck out;
  const DensityGrid* xt = traj.at(t);
  if (xt == nullptr) fail(ErrorCode::kContract, "trajectory has no snapshot at t = " + format_number(t));
  out.lhs = xt->pair(f);
  std::vector<const DensityGrid*> path;
  for (const auto& s : traj.snapshots) {
    if (s.time() <= t + 1e-12) path.push_back(&s);
  }
  if (path.empty() || path.front()->time() != 0.0) {
    fail(ErrorCode::kContract, "trajectory has no snapshot at t = 0");
  }
  const CharacteristicField field(coeffs, traj.drift);
  const double upper = xt->upper();
  const auto ell = static_cast<std::size_t>(xt->ell());
  auto pulled = [&](double s) {
    return [&, s](Point u) {
      std::size_t exits = 0;
      const auto end = flow_points(field, s, t, std::vector<double>(u.begin(), u.end()), flow_dt, upper, &exits);
      out.exits += exits;
      return f(std::span<const double>(end.data(), ell));
    };
  };
  // Empty cells are skipped.
  auto weighted = [](const DensityGrid& x, const ScalarField& g) {
    std::vector<double> terms(x.size(), 0.0);
    for (std::size_t c = 0; c < x.size(); ++c) {
      if (x[c] != 0.0) terms[c] = x[c] * g(x.center(c));
    }
    return pairwise_sum(terms) * x.cell_volume();
  };
  out.rhs = weighted(*path.front(), pulled(0.0));
  std::vector<double> integrand;
  for (const auto* x : path) integrand.push_back(paired_B(coeffs, *x, x->mass(), pulled(x->time())));
  for (std::size_t j = 1; j < path.size(); ++j) {
    out.rhs += 0.5 * (path[j]->time() - path[j - 1]->time()) * (integrand[j] + integrand[j - 1]);
  }
  out.gap = std::abs(out.lhs - out.rhs);
  return out;
}

// --- moments ---------------------------------------------------------------------------

std::array<double, 2> moment_ode(const LimitCoefficients& coeffs, double mass, double moment) {
  if (coeffs.kernel && !coeffs.kernel->conservative()) {
    fail(ErrorCode::kContract, "moment closure needs a kernel that conserves the first moment");
  }
  auto constant = [](const RateFunction& r) { return r.is_constant(); };
  for (int k = 0; k < coeffs.ell; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    if (!constant(coeffs.birth[kk]) || !constant(coeffs.death[kk])) {
      fail(ErrorCode::kContract, "moment closure needs constant birth and death rates");
    }
  }
  if (!constant(coeffs.fission) || !constant(coeffs.extinction)) {
    fail(ErrorCode::kContract, "moment closure needs constant fission and extinction rates");
  }
  std::vector<double> one(static_cast<std::size_t>(coeffs.ell), 1.0);
  double net = coeffs.birth[0].limit(one) - coeffs.death[0].limit(one);
  for (int k = 1; k < coeffs.ell; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    if (coeffs.birth[kk].limit(one) - coeffs.death[kk].limit(one) != net) {
      fail(ErrorCode::kContract, "moment closure needs the same net growth for every type");
    }
  }
  const double phi = coeffs.fission.limit(one);
  const double eps = coeffs.extinction.limit(one);
  const double bbar = phi != 0.0 ? coeffs.kernel->integrate(one, [](Point) { return 1.0; }) : 0.0;
  return {(bbar - 1.0) * phi * mass - eps * mass * mass, net * moment - eps * mass * moment};
}

std::array<double, 2> moment_rates(const LimitCoefficients& coeffs, const DensityGrid& x) {
  if (coeffs.kernel && !coeffs.kernel->conservative()) {
    fail(ErrorCode::kContract, "moment identity needs a kernel that conserves the first moment");
  }
  const double mass = x.mass();
  const double gain = x.pair([&](Point u) {
    const double phi = coeffs.phi(u);
    if (phi == 0.0) return 0.0;
    return phi * (coeffs.kernel->integrate(u, [](Point) { return 1.0; }) - 1.0);
  });
  const double loss = x.pair([&](Point u) { return coeffs.eps(u); });
  const double growth = x.pair([&](Point u) {
    double s = 0.0;
    for (int k = 0; k < coeffs.ell; ++k) s += coeffs.growth(u, k);
    return s;
  });
  const double loss_moment = x.pair([&](Point u) {
    double a = 0.0;
    for (double v : u) a += v;
    return a * coeffs.eps(u);
  });
  return {gain - mass * loss, growth - mass * loss_moment};
}

}  // namespace groupsel
