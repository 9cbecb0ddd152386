#include "groupsel/kernel.hpp"

#include <algorithm>
#include <cmath>

#include "groupsel/error.hpp"

namespace groupsel {

void OffspringKernel::source(const DensityGrid& grid, const std::vector<double>& parent_mass,
                             std::vector<double>& out) const {
  out.assign(grid.size(), 0.0);
  std::vector<std::pair<std::size_t, double>> cells;
  std::vector<double> u(static_cast<std::size_t>(grid.ell()));
  for (std::size_t p = 0; p < grid.size(); ++p) {
    if (parent_mass[p] == 0.0) continue;
    grid.center(p, u.data());
    cells.clear();
    deposit(grid, u, parent_mass[p], cells);
    for (const auto& [c, w] : cells) out[c] += w;
  }
  const double inv = 1.0 / grid.cell_volume();
  for (double& v : out) v *= inv;
}

void OffspringKernel::gather(const DensityGrid& grid, const std::vector<double>& f,
                             std::vector<double>& out) const {
  out.assign(grid.size(), 0.0);
  std::vector<std::pair<std::size_t, double>> cells;
  std::vector<double> u(static_cast<std::size_t>(grid.ell()));
  for (std::size_t p = 0; p < grid.size(); ++p) {
    grid.center(p, u.data());
    cells.clear();
    deposit(grid, u, 1.0, cells);
    double s = 0.0;
    for (const auto& [c, w] : cells) s += w * f[c];
    out[p] = s;
  }
}

// --- uniform box ---------------------------------------------------------------

double UniformBoxKernel::integrate(Point u, const ScalarField& f) const {
  double vol = 1.0;
  for (double v : u) vol *= v;
  if (!(vol > 0.0)) return 0.0;
  const std::vector<double> lo(u.size(), 0.0);
  return 2.0 / vol * integrate_box(f, lo, u, order_);
}

void UniformBoxKernel::deposit(const DensityGrid& grid, Point u, double w,
                               std::vector<std::pair<std::size_t, double>>& cells) const {
  const int ell = grid.ell();
  double vol = 1.0;
  for (double v : u) vol *= v;
  if (!(vol > 0.0)) return;
  const double h = grid.h();
  std::vector<int> last(static_cast<std::size_t>(ell));
  for (int k = 0; k < ell; ++k) {
    last[static_cast<std::size_t>(k)] =
        std::min(grid.cells() - 1, static_cast<int>(std::ceil(u[static_cast<std::size_t>(k)] / h)) - 1);
  }
  std::vector<int> idx(static_cast<std::size_t>(ell), 0);
  const double scale = 2.0 * w / vol;
  while (true) {
    double overlap = 1.0;
    std::size_t cell = 0;
    for (int k = 0; k < ell; ++k) {
      const int j = idx[static_cast<std::size_t>(k)];
      overlap *= std::min(u[static_cast<std::size_t>(k)], (j + 1) * h) - j * h;
      cell += static_cast<std::size_t>(j) * grid.stride(k);
    }
    if (overlap > 0.0) cells.emplace_back(cell, scale * overlap);
    int k = 0;
    while (k < ell && idx[static_cast<std::size_t>(k)] == last[static_cast<std::size_t>(k)]) {
      idx[static_cast<std::size_t>(k)] = 0;
      ++k;
    }
    if (k == ell) break;
    ++idx[static_cast<std::size_t>(k)];
  }
}

namespace {

// Along axis k: y(j) <- h sum_{p > j} y(p) + (h/2) y(j)   (suffix = true)
//               y(j) <- h sum_{p < j} y(p) + (h/2) y(j)   (suffix = false)
void half_cumulative(const DensityGrid& grid, int k, bool suffix, std::vector<double>& y) {
  const std::size_t stride = grid.stride(k);
  const auto cells = static_cast<std::size_t>(grid.cells());
  const double h = grid.h();
  for (std::size_t base = 0; base < y.size(); ++base) {
    if (static_cast<std::size_t>(grid.index(base, k)) != 0) continue;
    double running = 0.0;
    for (std::size_t step = 0; step < cells; ++step) {
      const std::size_t j = suffix ? cells - 1 - step : step;
      const std::size_t c = base + j * stride;
      const double v = y[c];
      y[c] = h * running + 0.5 * h * v;
      running += v;
    }
  }
}

}  // namespace

void UniformBoxKernel::source(const DensityGrid& grid, const std::vector<double>& parent_mass,
                              std::vector<double>& out) const {
  out.resize(grid.size());
  std::vector<double> u(static_cast<std::size_t>(grid.ell()));
  for (std::size_t p = 0; p < grid.size(); ++p) {
    grid.center(p, u.data());
    double vol = 1.0;
    for (double v : u) vol *= v;
    out[p] = 2.0 * parent_mass[p] / vol;
  }
  for (int k = 0; k < grid.ell(); ++k) half_cumulative(grid, k, true, out);
  const double inv = 1.0 / grid.cell_volume();
  for (double& v : out) v *= inv;
}

void UniformBoxKernel::gather(const DensityGrid& grid, const std::vector<double>& f,
                              std::vector<double>& out) const {
  out = f;
  for (int k = 0; k < grid.ell(); ++k) half_cumulative(grid, k, false, out);
  std::vector<double> u(static_cast<std::size_t>(grid.ell()));
  for (std::size_t p = 0; p < grid.size(); ++p) {
    grid.center(p, u.data());
    double vol = 1.0;
    for (double v : u) vol *= v;
    out[p] *= 2.0 / vol;
  }
}

// --- point kernels -------------------------------------------------------------

void cic_deposit(const DensityGrid& grid, Point u, double w,
                 std::vector<std::pair<std::size_t, double>>& cells) {
  const int ell = grid.ell();
  const double h = grid.h();
  std::vector<int> lo(static_cast<std::size_t>(ell));
  std::vector<double> frac(static_cast<std::size_t>(ell));
  for (int k = 0; k < ell; ++k) {
    const double s = u[static_cast<std::size_t>(k)] / h - 0.5;
    int j = static_cast<int>(std::floor(s));
    double f = s - j;
    if (j < 0) {
      j = 0;
      f = 0.0;
    } else if (j >= grid.cells() - 1) {
      j = grid.cells() - 1;
      f = 0.0;
    }
    lo[static_cast<std::size_t>(k)] = j;
    frac[static_cast<std::size_t>(k)] = f;
  }
  for (int corner = 0; corner < (1 << ell); ++corner) {
    double weight = w;
    std::size_t cell = 0;
    for (int k = 0; k < ell; ++k) {
      const bool up = (corner >> k) & 1;
      const double f = frac[static_cast<std::size_t>(k)];
      weight *= up ? f : 1.0 - f;
      cell += static_cast<std::size_t>(lo[static_cast<std::size_t>(k)] + (up ? 1 : 0)) * grid.stride(k);
    }
    if (weight != 0.0) cells.emplace_back(cell, weight);
  }
}

ScaledPointsKernel::ScaledPointsKernel(std::string name, std::vector<double> fractions)
    : name_(std::move(name)), fractions_(std::move(fractions)) {
  if (fractions_.empty()) fail(ErrorCode::kConfigSchema, "point kernel needs at least one atom");
  for (double a : fractions_) {
    if (!(a >= 0.0 && a <= 1.0)) fail(ErrorCode::kConfigSchema, "point kernel fractions must lie in [0, 1]");
  }
}

bool ScaledPointsKernel::conservative() const {
  double s = 0.0;
  for (double a : fractions_) s += a;
  return std::abs(s - 1.0) < 1e-12;
}

double ScaledPointsKernel::integrate(Point u, const ScalarField& f) const {
  std::vector<double> v(u.size());
  double sum = 0.0;
  for (double a : fractions_) {
    if (a == 0.0) continue;
    for (std::size_t k = 0; k < u.size(); ++k) v[k] = a * u[k];
    sum += f(v);
  }
  return sum;
}

void ScaledPointsKernel::deposit(const DensityGrid& grid, Point u, double w,
                                 std::vector<std::pair<std::size_t, double>>& cells) const {
  std::vector<double> v(u.size());
  for (double a : fractions_) {
    if (a == 0.0) continue;
    for (std::size_t k = 0; k < u.size(); ++k) v[k] = a * u[k];
    cic_deposit(grid, v, w, cells);
  }
}

// --- tabulated -------------------------------------------------------------------

TabulatedKernel::TabulatedKernel(std::shared_ptr<const FissionLaw> law, std::int64_t n)
    : law_(std::move(law)), n_(n) {
  if (!law_) fail(ErrorCode::kConfigSchema, "tabulated kernel needs a fission law");
  if (n_ < 1) fail(ErrorCode::kConfigSchema, "tabulated kernel needs n >= 1");
}

Composition TabulatedKernel::parent(Point u) const {
  Composition i(static_cast<int>(u.size()));
  for (std::size_t k = 0; k < u.size(); ++k) {
    i.set(static_cast<int>(k), std::max<std::int64_t>(1, std::llround(static_cast<double>(n_) * u[k])));
  }
  return i;
}

const TabulatedKernel::Table& TabulatedKernel::table(const Composition& i) const {
  std::lock_guard lock(mutex_);
  auto it = cache_.find(i);
  if (it != cache_.end()) return *it->second;
  auto tab = std::make_unique<Table>();
  Composition ip(i.ell());
  while (true) {
    if (!ip.is_zero()) {
      const double e = law_->eta(i, ip);
      if (e != 0.0) tab->emplace_back(ip, e);
    }
    int k = 0;
    while (k < i.ell() && ip[k] == i[k]) ip.set(k++, 0);
    if (k == i.ell()) break;
    ip.set(k, ip[k] + 1);
  }
  return *cache_.emplace(i, std::move(tab)).first->second;
}

double TabulatedKernel::integrate(Point u, const ScalarField& f) const {
  const Composition i = parent(u);
  std::vector<double> v(u.size());
  double sum = 0.0;
  for (const auto& [ip, e] : table(i)) {
    for (std::size_t k = 0; k < u.size(); ++k) {
      v[k] = u[k] * static_cast<double>(ip[static_cast<int>(k)]) / static_cast<double>(i[static_cast<int>(k)]);
    }
    sum += e * f(v);
  }
  return sum;
}

void TabulatedKernel::deposit(const DensityGrid& grid, Point u, double w,
                              std::vector<std::pair<std::size_t, double>>& cells) const {
  const Composition i = parent(u);
  std::vector<double> v(u.size());
  for (const auto& [ip, e] : table(i)) {
    for (std::size_t k = 0; k < u.size(); ++k) {
      v[k] = u[k] * static_cast<double>(ip[static_cast<int>(k)]) / static_cast<double>(i[static_cast<int>(k)]);
    }
    cic_deposit(grid, v, w * e, cells);
  }
}

std::shared_ptr<const OffspringKernel> make_kernel(const FissionLawSpec& spec,
                                                   std::int64_t tabulate_n) {
  if (tabulate_n > 0) return std::make_shared<TabulatedKernel>(make_fission_law(spec), tabulate_n);
  if (spec.name == "uniform_binary") {
    return std::make_shared<UniformBoxKernel>();
  }
  if (spec.name == "binomial") {
    auto law = make_fission_law(spec);  // validates p
    return std::make_shared<ScaledPointsKernel>("binomial", std::vector<double>{spec.p, 1.0 - spec.p});
  }
  if (spec.name == "nonproper") {
    return std::make_shared<ScaledPointsKernel>("nonproper", std::vector<double>{1.0});
  }
  if (spec.name == "uniform_ternary") {
    return std::make_shared<ScaledPointsKernel>("uniform_ternary",
                                                std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3});
  }
  fail(ErrorCode::kConfigSchema, "no limit kernel for fission law '" + spec.name + "'");
}

KernelCheck kernel_conservation(const OffspringKernel& kernel, const RateFunction& phi,
                                const std::vector<std::vector<double>>& points) {
  KernelCheck check;
  for (const auto& u : points) {
    const double rate = phi.limit(u);
    const double total = rate * kernel.integrate(u, [](Point) { return 1.0; });
    check.mass_excess = std::max(check.mass_excess, total - kernel.pieces_bound() * rate);
    for (std::size_t k = 0; k < u.size(); ++k) {
      const double first = rate * kernel.integrate(u, [k](Point v) { return v[k]; });
      check.first_moment_error = std::max(check.first_moment_error, std::abs(first - u[k] * rate));
    }
    ++check.points;
  }
  return check;
}

}  // namespace groupsel
