#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "groupsel/fission.hpp"
#include "groupsel/grid.hpp"
#include "groupsel/rates.hpp"

namespace groupsel {

// Offspring measure per unit fission rate, etabar(u, du'). The fission
// kernel of the limit equation is phi(u) etabar(u, du').
class OffspringKernel {
 public:
  virtual ~OffspringKernel() = default;

  virtual std::string name() const = 0;
  // b: bound on etabar(u, R^ell).
  virtual int pieces_bound() const = 0;
  virtual bool analytic() const = 0;
  // int u' etabar(u, du') = u holds exactly in the limit object.
  virtual bool conservative() const = 0;

  // int f(u') etabar(u, du')
  virtual double integrate(Point u, const ScalarField& f) const = 0;

  // Cell masses of w etabar(u, .) on the grid as (cell, mass) pairs.
  virtual void deposit(const DensityGrid& grid, Point u, double w,
                       std::vector<std::pair<std::size_t, double>>& cells) const = 0;

  // Density of offspring from parents at the cell centres:
  //   out[c] = sum_p parent_mass[p] etabar(u_p, cell c) / |cell|
  virtual void source(const DensityGrid& grid, const std::vector<double>& parent_mass,
                      std::vector<double>& out) const;

  // Midpoint form of integrate for a grid function:
  //   out[p] = sum_c etabar(u_p, cell c) f[c]
  virtual void gather(const DensityGrid& grid, const std::vector<double>& f,
                      std::vector<double>& out) const;
};

// 2 / prod(u_k) on the box [0, u]: the limit of the uniform binary law.
class UniformBoxKernel final : public OffspringKernel {
 public:
  explicit UniformBoxKernel(int order = 16) : order_(order) {}
  std::string name() const override { return "uniform_binary"; }
  int pieces_bound() const override { return 2; }
  bool analytic() const override { return true; }
  bool conservative() const override { return true; }
  double integrate(Point u, const ScalarField& f) const override;
  void deposit(const DensityGrid& grid, Point u, double w,
               std::vector<std::pair<std::size_t, double>>& cells) const override;
  void source(const DensityGrid& grid, const std::vector<double>& parent_mass,
              std::vector<double>& out) const override;
  void gather(const DensityGrid& grid, const std::vector<double>& f,
              std::vector<double>& out) const override;

 private:
  int order_;
};

// Atoms at fractions of the parent: sum_j delta_{a_j u}. With fractions
// {p, 1-p} this is the large-n limit of the binomial law; with {1} it is
// nonproper fission.
class ScaledPointsKernel final : public OffspringKernel {
 public:
  ScaledPointsKernel(std::string name, std::vector<double> fractions);
  std::string name() const override { return name_; }
  int pieces_bound() const override { return static_cast<int>(fractions_.size()); }
  bool analytic() const override { return true; }
  bool conservative() const override;
  double integrate(Point u, const ScalarField& f) const override;
  void deposit(const DensityGrid& grid, Point u, double w,
               std::vector<std::pair<std::size_t, double>>& cells) const override;

 private:
  std::string name_;
  std::vector<double> fractions_;
};

// Kernel read off a FissionLaw at fixed n: the parent at u is represented by
// the composition i = max(1, round(n u_k)) per axis, and offspring i' are
// placed at u_k i'_k / i_k with weights eta(i, i'). The rescaling keeps
// int u' etabar(u, du') = u exact.
class TabulatedKernel final : public OffspringKernel {
 public:
  TabulatedKernel(std::shared_ptr<const FissionLaw> law, std::int64_t n);
  std::string name() const override { return "tabulated:" + law_->name(); }
  int pieces_bound() const override { return law_->max_pieces(); }
  bool analytic() const override { return false; }
  bool conservative() const override { return true; }
  double integrate(Point u, const ScalarField& f) const override;
  void deposit(const DensityGrid& grid, Point u, double w,
               std::vector<std::pair<std::size_t, double>>& cells) const override;

 private:
  using Table = std::vector<std::pair<Composition, double>>;
  Composition parent(Point u) const;
  const Table& table(const Composition& i) const;

  std::shared_ptr<const FissionLaw> law_;
  std::int64_t n_;
  mutable std::mutex mutex_;
  mutable std::map<Composition, std::unique_ptr<Table>> cache_;
};

// Kernel for a fission law name: uniform_binary -> UniformBoxKernel,
// binomial -> points {p, 1-p}, nonproper -> points {1}. With tabulate_n > 0
// the law is tabulated at that n instead.
std::shared_ptr<const OffspringKernel> make_kernel(const FissionLawSpec& spec,
                                                   std::int64_t tabulate_n = 0);

struct KernelCheck {
  double first_moment_error = 0.0;  // max_u max_k |int u'_k phibar du' - u_k phi(u)|
  double mass_excess = 0.0;         // max_u (int phibar du' - b phi(u))_+
  std::size_t points = 0;
};

// Conservation identities of phi(u) etabar(u, du') at the given points.
KernelCheck kernel_conservation(const OffspringKernel& kernel, const RateFunction& phi,
                                const std::vector<std::vector<double>>& points);

// Cloud-in-cell deposit of a point mass onto the cell centres; mass and first
// moment are preserved when u lies between centres.
void cic_deposit(const DensityGrid& grid, Point u, double w,
                 std::vector<std::pair<std::size_t, double>>& cells);

}  // namespace groupsel
