#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "groupsel/composition.hpp"
#include "groupsel/fenwick.hpp"
#include "groupsel/fission.hpp"
#include "groupsel/population.hpp"
#include "groupsel/random.hpp"
#include "groupsel/rates.hpp"

namespace groupsel {

struct Model {
  RateSpec rates;
  std::shared_ptr<const FissionLaw> law;
};

// --- channel table -----------------------------------------------------------

enum class ChannelKind { kBirth, kDeath, kMigration, kFission, kExtinction };

const char* to_string(ChannelKind kind);

struct Channel {
  ChannelKind kind;
  Composition i;
  int type = -1;  // individual-level channels only
  double propensity = 0.0;
};

struct ChannelTable {
  std::vector<Channel> channels;
  double total = 0.0;
};

// Propensities of every (kind, composition, type) channel: X(i) i_k beta^k(i),
// X(i) i_k delta^k(i), X(i) i_k mu^k(i), X(i) phi(i), X(i) X* epsilon(i).
// Zero-propensity channels are omitted.
ChannelTable aggregate_rates(const Population& pop, const RateSpec& rates);

// --- counters ----------------------------------------------------------------

// Event counts for one composition i together with the time integrals that
// the compensators and predictable quadratic variations are built from.
struct CompositionCounters {
  std::vector<std::int64_t> birth;        // B^k(i)
  std::vector<std::int64_t> death;        // D^k(i)
  std::vector<std::int64_t> immigration;  // M^k(i)
  std::vector<std::int64_t> emigration;   // Mbar^k(i)
  std::int64_t fissions = 0;              // Fbar(i)
  std::int64_t extinctions = 0;           // E(i)
  std::map<Composition, std::int64_t> offspring;  // F(i, i')

  double int_x = 0.0;          // int X(i) ds
  double int_x_groups = 0.0;   // int X(i) X* ds
  double int_x2_inv = 0.0;     // int X(i)^2 / X* ds
  std::vector<double> int_x_flux;  // int X(i) S^k / X* ds, S^k = sum_j X(j) j_k mu^k(j)

  explicit CompositionCounters(int ell = 1);
};

// Tracked migration pair (i, j): int X(i) X(j) / X* ds, needed by the
// immigration/emigration covariance.
struct PairIntegral {
  Composition i;
  Composition j;
  double value = 0.0;
};

struct CounterSet {
  int ell = 1;
  double t = 0.0;
  std::map<Composition, CompositionCounters> records;
  std::vector<PairIntegral> pairs;

  const CompositionCounters* find(const Composition& i) const;
};

enum class CounterFamily { kBirth, kDeath, kImmigration, kEmigration, kFission, kOffspring, kExtinction };

const char* to_string(CounterFamily family);

struct CounterSelector {
  CounterFamily family = CounterFamily::kBirth;
  Composition i;
  int type = 0;      // birth/death/immigration/emigration
  Composition child; // offspring: F(i, child)
};

enum class CovarianceKind {
  kOffspringFission,       // <N^F(i, i'), N^Fbar(i)>
  kOffspringOffspring,     // <N^F(i, i'), N^F(i, j')>
  kImmigrationEmigration,  // <N^{M,k}(i), N^{Mbar,k}(j)>
};

struct CovarianceSelector {
  CovarianceKind kind = CovarianceKind::kOffspringFission;
  Composition i;
  Composition a;  // i' (offspring kinds) or j (migration)
  Composition b;  // j' (offspring/offspring only)
  int type = 0;
};

double counter_value(const CounterSet& counters, const CounterSelector& sel);
double compensator_value(const CounterSet& counters, const Model& model, const CounterSelector& sel);
double predicted_qv_value(const CounterSet& counters, const Model& model, const CounterSelector& sel);
double predicted_covariance_value(const CounterSet& counters, const Model& model,
                                  const CovarianceSelector& sel);

// X_T rebuilt from X_0 and the counters via the balance equation, summed by
// destination composition.
Population reconstruct_population(const Population& initial, const CounterSet& counters);

// --- events ------------------------------------------------------------------

enum class EventKind { kBirth, kDeath, kMigration, kMigrationNoop, kFission, kExtinction };

const char* to_string(EventKind kind);

struct EventRecord {
  double t = 0.0;
  EventKind kind = EventKind::kBirth;
  Composition source;
  int type = -1;
  Composition destination;  // migration target group's composition
  std::vector<Composition> offspring;
};

struct EventTally {
  std::uint64_t births = 0;
  std::uint64_t deaths = 0;
  std::uint64_t migrations = 0;
  std::uint64_t migration_noops = 0;
  std::uint64_t fissions = 0;
  std::uint64_t extinctions = 0;

  std::uint64_t total() const {
    return births + deaths + migrations + migration_noops + fissions + extinctions;
  }
};

struct SimulationOptions {
  double horizon = 1.0;
  std::vector<double> sample_times;  // sorted, within [0, horizon]
  bool counters_at_samples = false;
  bool event_log = false;
  std::vector<std::pair<Composition, Composition>> tracked_pairs;
  std::uint64_t rebuild_interval = 1ULL << 16;
};

struct Snapshot {
  double t = 0.0;
  Population population;
  std::optional<CounterSet> counters;
};

struct Trajectory {
  Model model;
  Population initial;
  std::vector<Snapshot> snapshots;
  CounterSet counters;  // at the horizon
  std::vector<EventRecord> events;
  EventTally tally;
  double horizon = 0.0;
  std::optional<double> extinction_time;
};

// Exact event-driven simulation over aggregated (kind, composition, type)
// channels. Same-composition groups are exchangeable, so one channel per
// composition replaces the per-group Poisson clocks.
class Simulator {
 public:
  Simulator(Model model, const Population& initial, Rng rng,
            std::vector<std::pair<Composition, Composition>> tracked_pairs = {});

  double time() const noexcept { return t_; }
  std::int64_t group_count() const noexcept { return groups_; }
  bool extinct() const noexcept { return groups_ == 0; }
  double total_rate() const;

  Population population() const;
  ChannelTable channel_table() const;

  // One event: exponential holding time with the total rate, channel drawn
  // proportionally, balance update applied. Calling it with X* = 0 or with
  // every rate zero is a contract violation.
  EventRecord step();

  // Runs to the horizon recording snapshots at the sample times.
  Trajectory run(const SimulationOptions& options);

  // Counters with every time integral brought up to the current time.
  const CounterSet& counters();

  const EventTally& tally() const noexcept { return tally_; }

 private:
  struct Slot {
    Composition comp;
    std::int64_t count = 0;
    double per_group = 0.0;  // sum_k i_k (beta^k + delta^k + mu^k) + phi
    double extinction = 0.0;
    std::array<double, kMaxTypes> birth{};
    std::array<double, kMaxTypes> death{};
    std::array<double, kMaxTypes> migration{};
    double fission = 0.0;
    CompositionCounters* rec = nullptr;
    double last_t = 0.0, last_g = 0.0, last_h = 0.0;
    std::array<double, kMaxTypes> last_j{};
  };

  int slot_of(const Composition& i);
  void change_count(int slot, std::int64_t delta);
  void flush(Slot& s);
  void flush_pair(std::size_t p);
  void flush_all();
  void advance_to(double t);
  void refresh_weights(int slot);
  void rebuild();
  EventRecord fire(bool want_record);
  void record_snapshot(Trajectory& traj, bool with_counters);

  Model model_;
  int ell_;
  Rng rng_;
  double t_ = 0.0;
  std::int64_t groups_ = 0;
  // Global integrals: G = int X* ds, H = int 1/X* ds, J^k = int S^k / X* ds.
  double g_ = 0.0, h_ = 0.0;
  std::array<double, kMaxTypes> j_{};
  std::array<double, kMaxTypes> flux_{};  // S^k

  std::vector<Slot> slots_;
  std::vector<int> free_slots_;
  std::unordered_map<Composition, int> index_;
  Fenwick<double> event_tree_;       // count * per_group
  Fenwick<double> extinction_tree_;  // count * epsilon
  Fenwick<std::int64_t> group_tree_; // count

  Population initial_;
  CounterSet counters_;
  std::unordered_map<Composition, std::vector<std::size_t>> pair_members_;
  std::vector<double> pair_last_h_;

  EventTally tally_;
  std::uint64_t since_rebuild_ = 0;
  std::uint64_t rebuild_interval_ = 1ULL << 16;
  std::vector<Composition> pieces_;
};

Trajectory simulate(const Model& model, const Population& initial, std::uint64_t seed,
                    const SimulationOptions& options, std::uint64_t replica = 0);

// Time series (t, counter - compensator) over the snapshots that carry
// counters, followed by the horizon value.
std::vector<std::pair<double, double>> compensator_residual(const Trajectory& traj,
                                                            const CounterSelector& sel);
std::vector<std::pair<double, double>> predicted_qv(const Trajectory& traj,
                                                    const CounterSelector& sel);
std::vector<std::pair<double, double>> predicted_covariance(const Trajectory& traj,
                                                            const CovarianceSelector& sel);

}  // namespace groupsel
