#include "groupsel/fission.hpp"

#include <cmath>

#include "groupsel/error.hpp"

namespace groupsel {

namespace {

bool in_support(const Composition& i, const Composition& ip) {
  return ip.ell() == i.ell() && !ip.is_zero() && i.dominates(ip);
}

}  // namespace

OffspringEstimate estimate_offspring(const FissionLaw& law, const Composition& i,
                                     std::uint64_t samples, Rng& rng) {
  OffspringEstimate est;
  est.samples = samples;
  std::vector<Composition> pieces;
  std::map<Composition, int> theta;
  for (std::uint64_t s = 0; s < samples; ++s) {
    law.sample(i, rng, pieces);
    theta.clear();
    for (const auto& p : pieces) ++theta[p];
    for (auto a = theta.begin(); a != theta.end(); ++a) {
      est.mean[a->first] += a->second;
      est.second[a->first] += static_cast<double>(a->second) * a->second;
      for (auto b = std::next(a); b != theta.end(); ++b) {
        est.cross[{a->first, b->first}] += static_cast<double>(a->second) * b->second;
      }
    }
  }
  const double inv = samples > 0 ? 1.0 / static_cast<double>(samples) : 0.0;
  for (auto& [k, v] : est.mean) v *= inv;
  for (auto& [k, v] : est.second) v *= inv;
  for (auto& [k, v] : est.cross) v *= inv;
  return est;
}

double FissionLaw::eta(const Composition& i, const Composition& ip) const {
  if (!in_support(i, ip)) return 0.0;
  return eta_exact(i, ip);
}

double FissionLaw::second_moment(const Composition& i, const Composition& ip) const {
  if (!in_support(i, ip)) return 0.0;
  return second_exact(i, ip);
}

double FissionLaw::cross_moment(const Composition& i, const Composition& ip,
                                const Composition& jp) const {
  if (!in_support(i, ip) || !in_support(i, jp)) return 0.0;
  if (ip == jp) return second_exact(i, ip);
  return cross_exact(i, ip, jp);
}

const OffspringEstimate& FissionLaw::cached_estimate(const Composition& i) const {
  std::lock_guard lock(cache_mutex_);
  auto it = cache_.find(i);
  if (it == cache_.end()) {
    Rng rng = make_rng(0x6574615f6d63ULL, {static_cast<std::uint64_t>(i.hash())});
    auto est = std::make_unique<OffspringEstimate>(estimate_offspring(*this, i, mc_samples_, rng));
    it = cache_.emplace(i, std::move(est)).first;
  }
  return *it->second;
}

double FissionLaw::eta_exact(const Composition& i, const Composition& ip) const {
  const auto& est = cached_estimate(i);
  auto it = est.mean.find(ip);
  return it == est.mean.end() ? 0.0 : it->second;
}

double FissionLaw::second_exact(const Composition& i, const Composition& ip) const {
  const auto& est = cached_estimate(i);
  auto it = est.second.find(ip);
  return it == est.second.end() ? 0.0 : it->second;
}

double FissionLaw::cross_exact(const Composition& i, const Composition& ip,
                               const Composition& jp) const {
  const auto& est = cached_estimate(i);
  auto key = ip < jp ? std::pair{ip, jp} : std::pair{jp, ip};
  auto it = est.cross.find(key);
  return it == est.cross.end() ? 0.0 : it->second;
}

// --- binary splits ---------------------------------------------------------

void BinarySplitLaw::sample(const Composition& i, Rng& rng,
                            std::vector<Composition>& pieces) const {
  pieces.clear();
  const Composition a = draw_split(i, rng);
  const Composition rest = i - a;
  if (!a.is_zero()) pieces.push_back(a);
  if (!rest.is_zero()) pieces.push_back(rest);
}

double BinarySplitLaw::eta_exact(const Composition& i, const Composition& ip) const {
  return split_probability(i, ip) + split_probability(i, i - ip);
}

double BinarySplitLaw::second_exact(const Composition& i, const Composition& ip) const {
  // theta(i') = 1{A = i'} + 1{A = i - i'}; the indicators coincide when 2i' = i.
  const double e = eta_exact(i, ip);
  if (ip + ip == i) return e + 2.0 * split_probability(i, ip);
  return e;
}

double BinarySplitLaw::cross_exact(const Composition& i, const Composition& ip,
                                   const Composition& jp) const {
  if (ip + jp != i) return 0.0;
  return split_probability(i, ip) + split_probability(i, jp);
}

double UniformBinaryLaw::split_probability(const Composition& i, const Composition& a) const {
  if (!i.dominates(a)) return 0.0;
  double denom = 1.0;
  for (int k = 0; k < i.ell(); ++k) denom *= static_cast<double>(i[k] + 1);
  return 1.0 / denom;
}

Composition UniformBinaryLaw::draw_split(const Composition& i, Rng& rng) const {
  Composition a(i.ell());
  for (int k = 0; k < i.ell(); ++k) {
    a.set(k, static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(i[k]) + 1)));
  }
  return a;
}

BinomialLaw::BinomialLaw(double p) : p_(p) {
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::kConfigSchema, "binomial law needs p in [0, 1]");
}

double BinomialLaw::split_probability(const Composition& i, const Composition& a) const {
  if (!i.dominates(a)) return 0.0;
  double log_p = 0.0;
  for (int k = 0; k < i.ell(); ++k) {
    const auto n = static_cast<double>(i[k]);
    const auto x = static_cast<double>(a[k]);
    if (p_ == 0.0) {
      if (x != 0.0) return 0.0;
      continue;
    }
    if (p_ == 1.0) {
      if (x != n) return 0.0;
      continue;
    }
    log_p += std::lgamma(n + 1.0) - std::lgamma(x + 1.0) - std::lgamma(n - x + 1.0) +
             x * std::log(p_) + (n - x) * std::log1p(-p_);
  }
  return std::exp(log_p);
}

Composition BinomialLaw::draw_split(const Composition& i, Rng& rng) const {
  Composition a(i.ell());
  for (int k = 0; k < i.ell(); ++k) {
    std::binomial_distribution<std::int64_t> dist(i[k], p_);
    a.set(k, dist(rng));
  }
  return a;
}

// --- other laws -------------------------------------------------------------

void NonproperLaw::sample(const Composition& i, Rng&, std::vector<Composition>& pieces) const {
  pieces.assign(1, i);
}

double NonproperLaw::eta_exact(const Composition& i, const Composition& ip) const {
  return ip == i ? 1.0 : 0.0;
}

double NonproperLaw::second_exact(const Composition& i, const Composition& ip) const {
  return ip == i ? 1.0 : 0.0;
}

double NonproperLaw::cross_exact(const Composition&, const Composition&,
                                 const Composition&) const {
  return 0.0;
}

void UniformTernaryLaw::sample(const Composition& i, Rng& rng,
                               std::vector<Composition>& pieces) const {
  Composition first(i.ell()), second(i.ell()), third(i.ell());
  for (int k = 0; k < i.ell(); ++k) {
    std::binomial_distribution<std::int64_t> d1(i[k], 1.0 / 3.0);
    const std::int64_t a = d1(rng);
    std::binomial_distribution<std::int64_t> d2(i[k] - a, 0.5);
    const std::int64_t b = d2(rng);
    first.set(k, a);
    second.set(k, b);
    third.set(k, i[k] - a - b);
  }
  pieces.clear();
  for (auto* p : {&first, &second, &third}) {
    if (!p->is_zero()) pieces.push_back(*p);
  }
}

std::shared_ptr<const FissionLaw> make_fission_law(const FissionLawSpec& spec) {
  std::shared_ptr<FissionLaw> law;
  if (spec.name == "uniform_binary") {
    law = std::make_shared<UniformBinaryLaw>();
  } else if (spec.name == "binomial") {
    law = std::make_shared<BinomialLaw>(spec.p);
  } else if (spec.name == "nonproper") {
    law = std::make_shared<NonproperLaw>();
  } else if (spec.name == "uniform_ternary") {
    law = std::make_shared<UniformTernaryLaw>();
  } else {
    fail(ErrorCode::kConfigSchema, "unknown fission law '" + spec.name + "'");
  }
  law->set_estimate_samples(spec.samples);
  return law;
}

double eta(const FissionLaw& law, const Composition& i, const Composition& ip) {
  return law.eta(i, ip);
}

void sample_partition(const FissionLaw& law, const Composition& i, Rng& rng,
                      std::vector<Composition>& pieces) {
  if (i.is_zero()) fail(ErrorCode::kContract, "fission of the zero composition");
  law.sample(i, rng, pieces);
  if (pieces.empty() || static_cast<int>(pieces.size()) > law.max_pieces()) {
    fail(ErrorCode::kContract, "fission produced " + std::to_string(pieces.size()) +
                                   " pieces, bound is " + std::to_string(law.max_pieces()));
  }
  Composition sum(i.ell());
  for (const auto& p : pieces) {
    if (p.is_zero()) fail(ErrorCode::kContract, "fission produced an empty piece");
    sum = sum + p;
  }
  if (sum != i) fail(ErrorCode::kContract, "fission of " + i.to_string() + " is not conservative");
}

}  // namespace groupsel
