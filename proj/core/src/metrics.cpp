#include "groupsel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "groupsel/error.hpp"
#include "groupsel/random.hpp"
#include "groupsel/text.hpp"

namespace groupsel {

double pair(const EmpiricalMeasure& mu, const ScalarField& f) { return mu.pair(f); }
double pair(const DensityGrid& x, const ScalarField& f) { return x.pair(f); }
double pair(const StepDensity& x, const ScalarField& f) { return x.pair(f); }

Pairing pairing_of(const EmpiricalMeasure& mu) {
  return [&mu](const ScalarField& f) { return mu.pair(f); };
}
Pairing pairing_of(const DensityGrid& x) {
  return [&x](const ScalarField& f) { return x.pair(f); };
}
Pairing pairing_of(const StepDensity& x) {
  return [&x](const ScalarField& f) { return x.pair(f); };
}

Moments moments(const EmpiricalMeasure& mu) {
  Moments m;
  m.mass = mu.mass();
  for (int k = 0; k < mu.ell(); ++k) m.first.push_back(mu.pair([k](Point u) { return u[k]; }));
  return m;
}

Moments moments(const DensityGrid& x) {
  Moments m;
  m.mass = x.mass();
  for (int k = 0; k < x.ell(); ++k) m.first.push_back(x.moment(k));
  return m;
}

// --- bank ---------------------------------------------------------------------------

namespace {

// Points of a regular lattice with `per_axis` values per axis on [lo, hi].
std::vector<std::vector<double>> lattice(int ell, double lo, double hi, int per_axis) {
  std::vector<std::vector<double>> out;
  std::size_t total = 1;
  for (int k = 0; k < ell; ++k) total *= static_cast<std::size_t>(per_axis);
  for (std::size_t j = 0; j < total; ++j) {
    std::vector<double> c(static_cast<std::size_t>(ell));
    std::size_t r = j;
    for (int k = 0; k < ell; ++k) {
      const auto i = static_cast<double>(r % static_cast<std::size_t>(per_axis));
      c[static_cast<std::size_t>(k)] = per_axis == 1 ? lo : lo + (hi - lo) * i / (per_axis - 1);
      r /= static_cast<std::size_t>(per_axis);
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

TestFunctionBank::TestFunctionBank(int ell, double upper, std::size_t size, std::uint64_t seed)
    : ell_(ell), upper_(upper), seed_(seed) {
  if (ell < 1 || ell > kMaxTypes) fail(ErrorCode::kContract, "bank dimension out of range");
  if (!(upper > 0.0)) fail(ErrorCode::kContract, "bank box must be nonempty");
  // Ramps, 9 offsets per axis.
  for (int k = 0; k < ell && members_.size() < size; ++k) {
    for (int j = 0; j <= 8 && members_.size() < size; ++j) {
      const double a = upper * j / 8.0;
      members_.push_back({"ramp_" + std::to_string(k) + "_" + format_number(a),
                          [k, a](Point u) { return std::clamp(u[static_cast<std::size_t>(k)] - a, -1.0, 1.0); }});
    }
  }
  // Tents; the lattice coarsens with the dimension to keep the count bounded.
  const int per_axis = ell == 1 ? 13 : (ell == 2 ? 7 : (ell == 3 ? 4 : 2));
  const auto centres = lattice(ell, upper / (2 * per_axis), upper - upper / (2 * per_axis), per_axis);
  for (double r : {0.25, 0.5, 1.0}) {
    for (const auto& c : centres) {
      if (members_.size() >= size) break;
      std::string name = "tent_" + format_number(r);
      for (double v : c) name += "_" + format_number(v);
      members_.push_back({std::move(name), [c, r](Point u) {
                            double d = 0.0;
                            for (std::size_t k = 0; k < c.size(); ++k) d = std::max(d, std::abs(u[k] - c[k]));
                            return std::max(0.0, r - d);
                          }});
    }
  }
  auto rng = make_rng(seed, {0x62616e6b});
  std::normal_distribution<double> normal(0.0, 2.0 * M_PI / upper);
  std::size_t j = 0;
  while (members_.size() < size) {
    std::vector<double> w(static_cast<std::size_t>(ell));
    double norm = 0.0;
    for (double& v : w) {
      v = normal(rng);
      norm += v * v;
    }
    norm = std::sqrt(norm);
    const double phase = 2.0 * M_PI * uniform01(rng);
    const double scale = 1.0 / std::max(1.0, norm);
    members_.push_back({"cos_" + std::to_string(j++), [w, phase, scale](Point u) {
                          double a = phase;
                          for (std::size_t k = 0; k < w.size(); ++k) a += w[k] * u[k];
                          return scale * std::cos(a);
                        }});
  }
}

std::vector<double> TestFunctionBank::pairings(const Pairing& mu) const {
  std::vector<double> out(members_.size());
  for (std::size_t j = 0; j < members_.size(); ++j) out[j] = mu(members_[j].f);
  return out;
}

RhoEstimate rho_w(const std::vector<double>& a, const std::vector<double>& b, const TestFunctionBank& bank) {
  if (a.size() != bank.size() || b.size() != bank.size()) {
    fail(ErrorCode::kContract, "pairing vectors do not match the bank");
  }
  RhoEstimate r;
  r.bank_size = bank.size();
  r.seed = bank.seed();
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double gap = std::abs(a[j] - b[j]);
    if (gap > r.value) {
      r.value = gap;
      r.argmax = j;
    }
  }
  return r;
}

RhoEstimate rho_w(const Pairing& a, const Pairing& b, const TestFunctionBank& bank) {
  return rho_w(bank.pairings(a), bank.pairings(b), bank);
}

std::vector<TestFunctionBank::Member> pairing_bank(int ell, double upper, std::size_t count) {
  std::vector<TestFunctionBank::Member> out;
  const double golden = 0.6180339887498949;
  for (std::size_t j = 0; j < count; ++j) {
    std::vector<double> lo(static_cast<std::size_t>(ell)), hi(lo.size()), centre(lo.size());
    for (std::size_t k = 0; k < lo.size(); ++k) {
      const double frac = std::fmod(0.3 + static_cast<double>(j + 1) * golden * static_cast<double>(k + 1), 1.0);
      centre[k] = upper * (0.1 + 0.8 * frac);
      const double half = upper * (j % 2 == 0 ? 0.1 : 0.2);
      lo[k] = std::max(0.0, centre[k] - half);
      hi[k] = std::min(upper, centre[k] + half);
    }
    if (j % 2 == 0) {
      out.push_back({"box_" + std::to_string(j), [lo, hi](Point u) {
                       for (std::size_t k = 0; k < lo.size(); ++k) {
                         if (u[k] < lo[k] || u[k] >= hi[k]) return 0.0;
                       }
                       return 1.0;
                     }});
    } else {
      const double width = upper * 0.08;
      out.push_back({"gauss_" + std::to_string(j), [centre, width](Point u) {
                       double d2 = 0.0;
                       for (std::size_t k = 0; k < centre.size(); ++k) d2 += (u[k] - centre[k]) * (u[k] - centre[k]);
                       return std::exp(-0.5 * d2 / (width * width));
                     }});
    }
  }
  return out;
}

std::vector<PairingGap> lp_pairing_convergence(const std::vector<double>& times,
                                               const std::vector<Pairing>& xhat,
                                               const std::vector<Pairing>& target,
                                               const std::vector<TestFunctionBank::Member>& g_bank) {
  if (xhat.size() != times.size() || target.size() != times.size()) {
    fail(ErrorCode::kContract, "pairing convergence needs one density per sample time");
  }
  std::vector<PairingGap> out;
  for (std::size_t i = 0; i < times.size(); ++i) {
    for (std::size_t g = 0; g < g_bank.size(); ++g) {
      out.push_back({times[i], g, std::abs(xhat[i](g_bank[g].f) - target[i](g_bank[g].f))});
    }
  }
  return out;
}

}  // namespace groupsel
