#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "groupsel/grid.hpp"
#include "groupsel/scaling.hpp"

namespace groupsel {

// Anything that can be integrated against a function.
using Pairing = std::function<double(const ScalarField&)>;

double pair(const EmpiricalMeasure& mu, const ScalarField& f);
double pair(const DensityGrid& x, const ScalarField& f);
double pair(const StepDensity& x, const ScalarField& f);

Pairing pairing_of(const EmpiricalMeasure& mu);
Pairing pairing_of(const DensityGrid& x);
Pairing pairing_of(const StepDensity& x);

struct Moments {
  double mass = 0.0;
  std::vector<double> first;  // int u_k
};
Moments moments(const EmpiricalMeasure& mu);
Moments moments(const DensityGrid& x);

// Functions with sup-norm <= 1 and Lipschitz constant <= 1, both by
// construction. Members, in order:
//   ramps   clamp(u_k - a, -1, 1) for a on a lattice of [0, upper] (a = 0 gives min(u_k, 1))
//   tents   max(0, r - |u - c|_inf), r in {1/4, 1/2, 1}, c on a lattice
//   cosines cos(w.u + p) / max(1, |w|) with (w, p) drawn from the seed
// The deterministic part comes first, so a smaller bank is a prefix of a
// larger one with the same seed.
class TestFunctionBank {
 public:
  struct Member {
    std::string name;
    ScalarField f;
  };

  TestFunctionBank(int ell, double upper, std::size_t size = 512, std::uint64_t seed = 2024);

  int ell() const noexcept { return ell_; }
  double upper() const noexcept { return upper_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t size() const noexcept { return members_.size(); }
  const Member& operator[](std::size_t j) const { return members_[j]; }

  std::vector<double> pairings(const Pairing& mu) const;

 private:
  int ell_;
  double upper_;
  std::uint64_t seed_;
  std::vector<Member> members_;
};

// Lower bound on the bounded-Lipschitz distance.
struct RhoEstimate {
  double value = 0.0;
  std::size_t argmax = 0;
  std::size_t bank_size = 0;
  std::uint64_t seed = 0;
};

RhoEstimate rho_w(const std::vector<double>& pairings_a, const std::vector<double>& pairings_b,
                  const TestFunctionBank& bank);
RhoEstimate rho_w(const Pairing& a, const Pairing& b, const TestFunctionBank& bank);

// Bounded square-integrable functions for pairing checks: box indicators
// and Gaussian bumps inside [0, upper]^ell.
std::vector<TestFunctionBank::Member> pairing_bank(int ell, double upper, std::size_t count = 16);

struct PairingGap {
  double t = 0.0;
  std::size_t g = 0;
  double gap = 0.0;
};

// |<g, xhat_t> - <g, target_t>| for every sample time and bank member.
std::vector<PairingGap> lp_pairing_convergence(const std::vector<double>& times,
                                               const std::vector<Pairing>& xhat,
                                               const std::vector<Pairing>& target,
                                               const std::vector<TestFunctionBank::Member>& g_bank);

}  // namespace groupsel
