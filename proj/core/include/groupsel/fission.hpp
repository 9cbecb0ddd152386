#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "groupsel/composition.hpp"
#include "groupsel/random.hpp"

namespace groupsel {

// Monte-Carlo moments of the offspring counts theta_i(i') for one parent.
struct OffspringEstimate {
  std::uint64_t samples = 0;
  // i' -> E theta(i'), E theta(i')^2
  std::map<Composition, double> mean;
  std::map<Composition, double> second;
  // (i', j') with i' < j' -> E theta(i') theta(j')
  std::map<std::pair<Composition, Composition>, double> cross;
};

OffspringEstimate estimate_offspring(const class FissionLaw& law, const Composition& i,
                                     std::uint64_t samples, Rng& rng);

// Partition law zeta_i with its expected-offspring kernel eta(i, i').
class FissionLaw {
 public:
  virtual ~FissionLaw() = default;

  virtual std::string name() const = 0;
  // b: the largest number of pieces any partition can have.
  virtual int max_pieces() const = 0;
  // Replaces `pieces` with a random partition of i. Pieces are nonzero and
  // sum to i; a single piece equal to i is a nonproper fission.
  virtual void sample(const Composition& i, Rng& rng, std::vector<Composition>& pieces) const = 0;
  // True when eta and the moments below are closed forms.
  virtual bool analytic() const = 0;

  // eta(i, i'); zero unless i' is nonzero and i' <= i. Sampled-only laws
  // answer from a cached Monte-Carlo estimate.
  double eta(const Composition& i, const Composition& ip) const;
  // E theta_i(i')^2
  double second_moment(const Composition& i, const Composition& ip) const;
  // E theta_i(i') theta_i(j')
  double cross_moment(const Composition& i, const Composition& ip, const Composition& jp) const;

  // Sample count behind eta for sampled-only laws (0 for analytic laws).
  std::uint64_t estimate_samples() const noexcept { return analytic() ? 0 : mc_samples_; }
  void set_estimate_samples(std::uint64_t samples) { mc_samples_ = samples; }

 protected:
  virtual double eta_exact(const Composition& i, const Composition& ip) const;
  virtual double second_exact(const Composition& i, const Composition& ip) const;
  virtual double cross_exact(const Composition& i, const Composition& ip,
                             const Composition& jp) const;

 private:
  const OffspringEstimate& cached_estimate(const Composition& i) const;

  std::uint64_t mc_samples_ = 100000;
  mutable std::mutex cache_mutex_;
  mutable std::unordered_map<Composition, std::unique_ptr<OffspringEstimate>> cache_;
};

// Splits into {A, i - A} for a random A on the box [0, i]; zero pieces are
// dropped, so A in {0, i} is a nonproper fission.
class BinarySplitLaw : public FissionLaw {
 public:
  int max_pieces() const override { return 2; }
  bool analytic() const override { return true; }
  void sample(const Composition& i, Rng& rng, std::vector<Composition>& pieces) const override;

  // P(A = a)
  virtual double split_probability(const Composition& i, const Composition& a) const = 0;

 protected:
  virtual Composition draw_split(const Composition& i, Rng& rng) const = 0;

  double eta_exact(const Composition& i, const Composition& ip) const override;
  double second_exact(const Composition& i, const Composition& ip) const override;
  double cross_exact(const Composition& i, const Composition& ip,
                     const Composition& jp) const override;
};

// Every box outcome equally likely: eta(i, i') = 2 / prod(i_k + 1).
class UniformBinaryLaw final : public BinarySplitLaw {
 public:
  std::string name() const override { return "uniform_binary"; }
  double split_probability(const Composition& i, const Composition& a) const override;

 protected:
  Composition draw_split(const Composition& i, Rng& rng) const override;
};

// Each individual joins the first piece independently with probability p.
class BinomialLaw final : public BinarySplitLaw {
 public:
  explicit BinomialLaw(double p);
  std::string name() const override { return "binomial"; }
  double p() const noexcept { return p_; }
  double split_probability(const Composition& i, const Composition& a) const override;

 protected:
  Composition draw_split(const Composition& i, Rng& rng) const override;

 private:
  double p_;
};

// Fission always returns the parent unchanged.
class NonproperLaw final : public FissionLaw {
 public:
  std::string name() const override { return "nonproper"; }
  int max_pieces() const override { return 1; }
  bool analytic() const override { return true; }
  void sample(const Composition& i, Rng& rng, std::vector<Composition>& pieces) const override;

 protected:
  double eta_exact(const Composition& i, const Composition& ip) const override;
  double second_exact(const Composition& i, const Composition& ip) const override;
  double cross_exact(const Composition& i, const Composition& ip,
                     const Composition& jp) const override;
};

// Each individual picks one of three pieces uniformly. No closed form is
// provided: eta comes from Monte-Carlo estimates.
class UniformTernaryLaw final : public FissionLaw {
 public:
  std::string name() const override { return "uniform_ternary"; }
  int max_pieces() const override { return 3; }
  bool analytic() const override { return false; }
  void sample(const Composition& i, Rng& rng, std::vector<Composition>& pieces) const override;
};

struct FissionLawSpec {
  std::string name = "uniform_binary";
  double p = 0.5;               // binomial only
  std::uint64_t samples = 100000;  // Monte-Carlo eta, sampled-only laws
};

// Unknown names are an Error(kConfigSchema).
std::shared_ptr<const FissionLaw> make_fission_law(const FissionLawSpec& spec);

// Free-function form of FissionLaw::eta.
double eta(const FissionLaw& law, const Composition& i, const Composition& ip);

// Draws a partition and checks conservation and the piece bound; throws
// Error(kContract) on violation. Used by the simulator on every fission.
void sample_partition(const FissionLaw& law, const Composition& i, Rng& rng,
                      std::vector<Composition>& pieces);

}  // namespace groupsel
