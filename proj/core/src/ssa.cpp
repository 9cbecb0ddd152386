#include "groupsel/ssa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "groupsel/error.hpp"

namespace groupsel {

const char* to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::kBirth: return "birth";
    case ChannelKind::kDeath: return "death";
    case ChannelKind::kMigration: return "migration";
    case ChannelKind::kFission: return "fission";
    case ChannelKind::kExtinction: return "extinction";
  }
  return "?";
}

const char* to_string(CounterFamily family) {
  switch (family) {
    case CounterFamily::kBirth: return "birth";
    case CounterFamily::kDeath: return "death";
    case CounterFamily::kImmigration: return "immigration";
    case CounterFamily::kEmigration: return "emigration";
    case CounterFamily::kFission: return "fission";
    case CounterFamily::kOffspring: return "offspring";
    case CounterFamily::kExtinction: return "extinction";
  }
  return "?";
}

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kBirth: return "birth";
    case EventKind::kDeath: return "death";
    case EventKind::kMigration: return "migration";
    case EventKind::kMigrationNoop: return "migration-noop";
    case EventKind::kFission: return "fission";
    case EventKind::kExtinction: return "extinction";
  }
  return "?";
}

ChannelTable aggregate_rates(const Population& pop, const RateSpec& rates) {
  ChannelTable table;
  const auto total_groups = static_cast<double>(pop.group_count());
  auto push = [&](ChannelKind kind, const Composition& i, int k, double p) {
    if (p > 0.0) {
      table.channels.push_back(Channel{kind, i, k, p});
      table.total += p;
    }
  };
  for (const auto& [i, x] : pop) {
    const auto count = static_cast<double>(x);
    for (int k = 0; k < pop.ell(); ++k) {
      const auto ik = static_cast<double>(i[k]);
      push(ChannelKind::kBirth, i, k, count * ik * rates.birth(i, k));
      push(ChannelKind::kDeath, i, k, count * ik * rates.death(i, k));
      push(ChannelKind::kMigration, i, k, count * ik * rates.migration(i, k));
    }
    push(ChannelKind::kFission, i, -1, count * rates.fission(i));
    push(ChannelKind::kExtinction, i, -1, count * total_groups * rates.extinction(i));
  }
  return table;
}

CompositionCounters::CompositionCounters(int ell)
    : birth(static_cast<std::size_t>(ell), 0),
      death(static_cast<std::size_t>(ell), 0),
      immigration(static_cast<std::size_t>(ell), 0),
      emigration(static_cast<std::size_t>(ell), 0),
      int_x_flux(static_cast<std::size_t>(ell), 0.0) {}

const CompositionCounters* CounterSet::find(const Composition& i) const {
  auto it = records.find(i);
  return it == records.end() ? nullptr : &it->second;
}

// --- selectors ---------------------------------------------------------------

namespace {

void check_type(const CounterSet& counters, int type) {
  if (type < 0 || type >= counters.ell) {
    fail(ErrorCode::kUnknownSelector, "type index " + std::to_string(type) + " is not tracked");
  }
}

bool individual_family(CounterFamily f) {
  return f == CounterFamily::kBirth || f == CounterFamily::kDeath ||
         f == CounterFamily::kImmigration || f == CounterFamily::kEmigration;
}

}  // namespace

double counter_value(const CounterSet& counters, const CounterSelector& sel) {
  if (individual_family(sel.family)) check_type(counters, sel.type);
  const auto* rec = counters.find(sel.i);
  if (rec == nullptr) return 0.0;
  const auto k = static_cast<std::size_t>(sel.type);
  switch (sel.family) {
    case CounterFamily::kBirth: return static_cast<double>(rec->birth[k]);
    case CounterFamily::kDeath: return static_cast<double>(rec->death[k]);
    case CounterFamily::kImmigration: return static_cast<double>(rec->immigration[k]);
    case CounterFamily::kEmigration: return static_cast<double>(rec->emigration[k]);
    case CounterFamily::kFission: return static_cast<double>(rec->fissions);
    case CounterFamily::kExtinction: return static_cast<double>(rec->extinctions);
    case CounterFamily::kOffspring: {
      auto it = rec->offspring.find(sel.child);
      return it == rec->offspring.end() ? 0.0 : static_cast<double>(it->second);
    }
  }
  fail(ErrorCode::kUnknownSelector, "unknown counter family");
}

namespace {

double integrand_value(const CounterSet& counters, const Model& model, const CounterSelector& sel,
                       bool quadratic_variation) {
  if (individual_family(sel.family)) check_type(counters, sel.type);
  const auto* rec = counters.find(sel.i);
  if (rec == nullptr) return 0.0;
  const RateSpec& rates = model.rates;
  const int k = sel.type;
  const auto ik = individual_family(sel.family) ? static_cast<double>(sel.i[k]) : 0.0;
  switch (sel.family) {
    case CounterFamily::kBirth: return ik * rates.birth(sel.i, k) * rec->int_x;
    case CounterFamily::kDeath: return ik * rates.death(sel.i, k) * rec->int_x;
    case CounterFamily::kImmigration:
      return rec->int_x_flux[static_cast<std::size_t>(k)] -
             ik * rates.migration(sel.i, k) * rec->int_x2_inv;
    case CounterFamily::kEmigration:
      return ik * rates.migration(sel.i, k) * (rec->int_x - rec->int_x2_inv);
    case CounterFamily::kFission: return rates.fission(sel.i) * rec->int_x;
    case CounterFamily::kExtinction: return rates.extinction(sel.i) * rec->int_x_groups;
    case CounterFamily::kOffspring: {
      const double moment = quadratic_variation ? model.law->second_moment(sel.i, sel.child)
                                                : model.law->eta(sel.i, sel.child);
      return rates.fission(sel.i) * moment * rec->int_x;
    }
  }
  fail(ErrorCode::kUnknownSelector, "unknown counter family");
}

}  // namespace

double compensator_value(const CounterSet& counters, const Model& model,
                         const CounterSelector& sel) {
  return integrand_value(counters, model, sel, false);
}

double predicted_qv_value(const CounterSet& counters, const Model& model,
                          const CounterSelector& sel) {
  return integrand_value(counters, model, sel, true);
}

double predicted_covariance_value(const CounterSet& counters, const Model& model,
                                  const CovarianceSelector& sel) {
  const RateSpec& rates = model.rates;
  switch (sel.kind) {
    case CovarianceKind::kOffspringFission: {
      const auto* rec = counters.find(sel.i);
      if (rec == nullptr) return 0.0;
      return rates.fission(sel.i) * model.law->eta(sel.i, sel.a) * rec->int_x;
    }
    case CovarianceKind::kOffspringOffspring: {
      const auto* rec = counters.find(sel.i);
      if (rec == nullptr) return 0.0;
      return rates.fission(sel.i) * model.law->cross_moment(sel.i, sel.a, sel.b) * rec->int_x;
    }
    case CovarianceKind::kImmigrationEmigration: {
      check_type(counters, sel.type);
      if (sel.i == sel.a) return 0.0;
      for (const auto& p : counters.pairs) {
        if ((p.i == sel.i && p.j == sel.a) || (p.i == sel.a && p.j == sel.i)) {
          return static_cast<double>(sel.a[sel.type]) * rates.migration(sel.a, sel.type) * p.value;
        }
      }
      fail(ErrorCode::kUnknownSelector, "migration pair (" + sel.i.to_string() + ", " +
                                            sel.a.to_string() + ") is not tracked");
    }
  }
  fail(ErrorCode::kUnknownSelector, "unknown covariance selector");
}

Population reconstruct_population(const Population& initial, const CounterSet& counters) {
  const int ell = initial.ell();
  std::set<Composition> candidates;
  for (const auto& [i, x] : initial) candidates.insert(i);
  std::map<Composition, std::int64_t> produced;  // sum_{i'} F(i', i)
  for (const auto& [i, rec] : counters.records) {
    candidates.insert(i);
    for (int k = 0; k < ell; ++k) {
      candidates.insert(i.plus_unit(k));
      if (i[k] > 0) candidates.insert(i.minus_unit(k));
    }
    for (const auto& [child, f] : rec.offspring) {
      candidates.insert(child);
      produced[child] = checked_add(produced[child], f);
    }
  }
  auto counter = [&](const Composition& i, auto member, int k) -> std::int64_t {
    const auto* rec = counters.find(i);
    if (rec == nullptr) return 0;
    return (rec->*member)[static_cast<std::size_t>(k)];
  };
  Population out(ell);
  for (const auto& i : candidates) {
    if (i.is_zero()) continue;
    std::int64_t x = initial.count(i);
    for (int k = 0; k < ell; ++k) {
      x -= counter(i, &CompositionCounters::birth, k);
      x -= counter(i, &CompositionCounters::death, k);
      x -= counter(i, &CompositionCounters::immigration, k);
      x -= counter(i, &CompositionCounters::emigration, k);
      x += counter(i.plus_unit(k), &CompositionCounters::death, k);
      x += counter(i.plus_unit(k), &CompositionCounters::emigration, k);
      if (i[k] > 0) {
        x += counter(i.minus_unit(k), &CompositionCounters::birth, k);
        x += counter(i.minus_unit(k), &CompositionCounters::immigration, k);
      }
    }
    if (const auto* rec = counters.find(i)) x -= rec->fissions + rec->extinctions;
    if (auto it = produced.find(i); it != produced.end()) x += it->second;
    if (x < 0) {
      fail(ErrorCode::kContract, "balance reconstruction gives a negative count for " + i.to_string());
    }
    out.add(i, x);
  }
  return out;
}

// --- simulator -----------------------------------------------------------------

Simulator::Simulator(Model model, const Population& initial, Rng rng,
                     std::vector<std::pair<Composition, Composition>> tracked_pairs)
    : model_(std::move(model)),
      ell_(model_.rates.ell()),
      rng_(std::move(rng)),
      initial_(initial) {
  if (!model_.law) fail(ErrorCode::kConfigSchema, "model has no fission law");
  if (initial.ell() != ell_) fail(ErrorCode::kContract, "initial population dimension mismatch");
  counters_.ell = ell_;
  for (auto& [a, b] : tracked_pairs) {
    const std::size_t p = counters_.pairs.size();
    counters_.pairs.push_back(PairIntegral{a, b, 0.0});
    pair_last_h_.push_back(0.0);
    pair_members_[a].push_back(p);
    if (b != a) pair_members_[b].push_back(p);
  }
  for (const auto& [i, x] : initial) change_count(slot_of(i), x);
  rebuild();
}

int Simulator::slot_of(const Composition& i) {
  if (auto it = index_.find(i); it != index_.end()) return it->second;
  int id = 0;
  if (!free_slots_.empty()) {
    id = free_slots_.back();
    free_slots_.pop_back();
  } else {
    id = static_cast<int>(slots_.size());
    slots_.emplace_back();
    if (slots_.size() > event_tree_.size()) {
      const std::size_t cap = std::max<std::size_t>(64, 2 * event_tree_.size());
      event_tree_.resize(cap);
      extinction_tree_.resize(cap);
      group_tree_.resize(cap);
    }
  }
  Slot& s = slots_[static_cast<std::size_t>(id)];
  s = Slot{};
  s.comp = i;
  const RateSpec& r = model_.rates;
  s.per_group = 0.0;
  for (int k = 0; k < ell_; ++k) {
    const auto ik = static_cast<double>(i[k]);
    const auto kk = static_cast<std::size_t>(k);
    s.birth[kk] = ik * r.birth(i, k);
    s.death[kk] = ik * r.death(i, k);
    s.migration[kk] = ik * r.migration(i, k);
    s.per_group += s.birth[kk] + s.death[kk] + s.migration[kk];
  }
  s.fission = r.fission(i);
  s.per_group += s.fission;
  s.extinction = r.extinction(i);
  if (!(s.per_group >= 0.0) || !(s.extinction >= 0.0) || !std::isfinite(s.per_group) ||
      !std::isfinite(s.extinction)) {
    fail(ErrorCode::kBoundViolation, "negative or non-finite rate at composition " + i.to_string());
  }
  auto [rec_it, inserted] = counters_.records.try_emplace(i, ell_);
  s.rec = &rec_it->second;
  s.last_t = t_;
  s.last_g = g_;
  s.last_h = h_;
  s.last_j = j_;
  index_.emplace(i, id);
  return id;
}

void Simulator::flush(Slot& s) {
  CompositionCounters& rec = *s.rec;
  const auto x = static_cast<double>(s.count);
  if (s.count != 0) {
    rec.int_x += x * (t_ - s.last_t);
    rec.int_x_groups += x * (g_ - s.last_g);
    rec.int_x2_inv += x * x * (h_ - s.last_h);
    for (int k = 0; k < ell_; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      rec.int_x_flux[kk] += x * (j_[kk] - s.last_j[kk]);
    }
  }
  s.last_t = t_;
  s.last_g = g_;
  s.last_h = h_;
  s.last_j = j_;
}

void Simulator::flush_pair(std::size_t p) {
  PairIntegral& pair = counters_.pairs[p];
  auto count = [&](const Composition& c) -> double {
    auto it = index_.find(c);
    return it == index_.end() ? 0.0 : static_cast<double>(slots_[static_cast<std::size_t>(it->second)].count);
  };
  pair.value += count(pair.i) * count(pair.j) * (h_ - pair_last_h_[p]);
  pair_last_h_[p] = h_;
}

void Simulator::flush_all() {
  for (auto& [comp, id] : index_) flush(slots_[static_cast<std::size_t>(id)]);
  for (std::size_t p = 0; p < counters_.pairs.size(); ++p) flush_pair(p);
}

void Simulator::advance_to(double t) {
  const double dt = t - t_;
  if (groups_ > 0 && dt > 0.0) {
    const auto x = static_cast<double>(groups_);
    g_ += x * dt;
    h_ += dt / x;
    for (int k = 0; k < ell_; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      j_[kk] += flux_[kk] / x * dt;
    }
  }
  t_ = t;
}

void Simulator::refresh_weights(int slot) {
  const auto id = static_cast<std::size_t>(slot);
  const Slot& s = slots_[id];
  const auto x = static_cast<double>(s.count);
  event_tree_.set(id, x * s.per_group);
  extinction_tree_.set(id, x * s.extinction);
  group_tree_.set(id, s.count);
}

void Simulator::change_count(int slot, std::int64_t delta) {
  if (delta == 0) return;
  Slot& s = slots_[static_cast<std::size_t>(slot)];
  flush(s);
  if (auto it = pair_members_.find(s.comp); it != pair_members_.end()) {
    for (std::size_t p : it->second) flush_pair(p);
  }
  const std::int64_t next = checked_add(s.count, delta);
  if (next < 0) fail(ErrorCode::kContract, "group count went negative for " + s.comp.to_string());
  s.count = next;
  groups_ = checked_add(groups_, delta);
  for (int k = 0; k < ell_; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    flux_[kk] += static_cast<double>(delta) * s.migration[kk];
  }
  refresh_weights(slot);
  if (s.count == 0) {
    index_.erase(s.comp);
    free_slots_.push_back(slot);
  }
}

void Simulator::rebuild() {
  event_tree_.rebuild();
  extinction_tree_.rebuild();
  group_tree_.rebuild();
  flux_.fill(0.0);
  for (const auto& [comp, id] : index_) {
    const Slot& s = slots_[static_cast<std::size_t>(id)];
    for (int k = 0; k < ell_; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      flux_[kk] += static_cast<double>(s.count) * s.migration[kk];
    }
  }
  since_rebuild_ = 0;
}

double Simulator::total_rate() const {
  return event_tree_.total() + static_cast<double>(groups_) * extinction_tree_.total();
}

Population Simulator::population() const {
  Population pop(ell_);
  for (const auto& [comp, id] : index_) pop.add(comp, slots_[static_cast<std::size_t>(id)].count);
  return pop;
}

ChannelTable Simulator::channel_table() const {
  ChannelTable table;
  const auto groups = static_cast<double>(groups_);
  auto push = [&](ChannelKind kind, const Composition& i, int k, double p) {
    if (p > 0.0) {
      table.channels.push_back(Channel{kind, i, k, p});
      table.total += p;
    }
  };
  std::vector<std::pair<Composition, int>> ordered(index_.begin(), index_.end());
  std::sort(ordered.begin(), ordered.end());
  for (const auto& [comp, id] : ordered) {
    const Slot& s = slots_[static_cast<std::size_t>(id)];
    const auto x = static_cast<double>(s.count);
    for (int k = 0; k < ell_; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      push(ChannelKind::kBirth, comp, k, x * s.birth[kk]);
      push(ChannelKind::kDeath, comp, k, x * s.death[kk]);
      push(ChannelKind::kMigration, comp, k, x * s.migration[kk]);
    }
    push(ChannelKind::kFission, comp, -1, x * s.fission);
    push(ChannelKind::kExtinction, comp, -1, x * groups * s.extinction);
  }
  return table;
}

namespace {

// Fenwick search with a fallback for the rounding edge where the target
// lands on or past the last positive weight.
template <class Tree>
std::size_t pick(const Tree& tree, double target, double* residual, std::size_t used) {
  std::size_t pos = tree.find(target, residual);
  if (pos < used && tree.weight(pos) > 0.0 && *residual < tree.weight(pos)) return pos;
  for (std::size_t p = used; p-- > 0;) {
    if (tree.weight(p) > 0.0) {
      *residual = tree.weight(p) * (1.0 - 1e-12);
      return p;
    }
  }
  fail(ErrorCode::kContract, "no channel with positive propensity");
}

}  // namespace

EventRecord Simulator::fire(bool want_record) {
  EventRecord record;
  record.t = t_;
  const double along = event_tree_.total();
  const double ext = static_cast<double>(groups_) * extinction_tree_.total();
  const double r = uniform01(rng_) * (along + ext);

  if (r >= along && ext > 0.0) {
    double residual = 0.0;
    const std::size_t id = pick(extinction_tree_, (r - along) / static_cast<double>(groups_),
                                &residual, slots_.size());
    const int slot = static_cast<int>(id);
    CompositionCounters& rec = *slots_[id].rec;
    ++rec.extinctions;
    ++tally_.extinctions;
    if (want_record) {
      record.kind = EventKind::kExtinction;
      record.source = slots_[id].comp;
    }
    change_count(slot, -1);
  } else {
    double residual = 0.0;
    const std::size_t id = pick(event_tree_, std::min(r, along), &residual, slots_.size());
    const int slot = static_cast<int>(id);
    const Slot& s = slots_[id];
    const Composition source = s.comp;
    CompositionCounters& rec = *s.rec;
    // Channel within the slot: per-group residual against the cached rates.
    double x = residual / static_cast<double>(s.count);
    int kind = -1;
    int type = -1;
    for (int k = 0; k < ell_ && kind < 0; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      if (x < s.birth[kk]) {
        kind = 0;
      } else if ((x -= s.birth[kk]) < s.death[kk]) {
        kind = 1;
      } else if ((x -= s.death[kk]) < s.migration[kk]) {
        kind = 2;
      } else {
        x -= s.migration[kk];
        continue;
      }
      type = k;
    }
    if (kind < 0) {
      if (s.fission > 0.0) {
        kind = 3;
      } else {
        // Rounding pushed past the last channel: take the last positive one.
        for (int k = ell_ - 1; k >= 0 && kind < 0; --k) {
          const auto kk = static_cast<std::size_t>(k);
          if (s.migration[kk] > 0.0) kind = 2;
          else if (s.death[kk] > 0.0) kind = 1;
          else if (s.birth[kk] > 0.0) kind = 0;
          type = k;
        }
      }
    }
    if (want_record) {
      record.source = source;
      record.type = type;
    }
    switch (kind) {
      case 0: {  // birth: i -> i + e_k
        ++rec.birth[static_cast<std::size_t>(type)];
        ++tally_.births;
        record.kind = EventKind::kBirth;
        const Composition dest = source.plus_unit(type);
        change_count(slot, -1);
        change_count(slot_of(dest), +1);
        break;
      }
      case 1: {  // death: i -> i - e_k, a group whose last member dies vanishes
        ++rec.death[static_cast<std::size_t>(type)];
        ++tally_.deaths;
        record.kind = EventKind::kDeath;
        const Composition dest = source.minus_unit(type);
        change_count(slot, -1);
        if (!dest.is_zero()) change_count(slot_of(dest), +1);
        break;
      }
      case 2: {  // migration to a group drawn with probability X(j)/X*
        const auto target = static_cast<std::int64_t>(
            uniform_index(rng_, static_cast<std::uint64_t>(groups_)));
        std::int64_t rem = 0;
        const std::size_t dest_id = group_tree_.find(target, &rem);
        const Composition dest = slots_[dest_id].comp;
        if (want_record) record.destination = dest;
        if (dest == source) {
          ++tally_.migration_noops;
          record.kind = EventKind::kMigrationNoop;
          break;
        }
        ++rec.emigration[static_cast<std::size_t>(type)];
        ++slots_[dest_id].rec->immigration[static_cast<std::size_t>(type)];
        ++tally_.migrations;
        record.kind = EventKind::kMigration;
        const Composition left = source.minus_unit(type);
        const Composition joined = dest.plus_unit(type);
        change_count(slot, -1);
        if (!left.is_zero()) change_count(slot_of(left), +1);
        change_count(slot_of(dest), -1);
        change_count(slot_of(joined), +1);
        break;
      }
      case 3: {  // fission: parent replaced by the pieces of a random partition
        sample_partition(*model_.law, source, rng_, pieces_);
        ++rec.fissions;
        ++tally_.fissions;
        for (const auto& piece : pieces_) ++rec.offspring[piece];
        record.kind = EventKind::kFission;
        if (want_record) record.offspring = pieces_;
        change_count(slot, -1);
        for (const auto& piece : pieces_) change_count(slot_of(piece), +1);
        break;
      }
      default:
        fail(ErrorCode::kContract, "no channel with positive propensity");
    }
  }
  if (++since_rebuild_ >= rebuild_interval_) rebuild();
  return record;
}

EventRecord Simulator::step() {
  if (groups_ == 0) fail(ErrorCode::kContract, "step() called on an extinct population");
  const double total = total_rate();
  if (!(total > 0.0)) fail(ErrorCode::kContract, "step() called with every rate zero");
  advance_to(t_ + exponential(rng_, total));
  return fire(true);
}

const CounterSet& Simulator::counters() {
  flush_all();
  counters_.t = t_;
  return counters_;
}

void Simulator::record_snapshot(Trajectory& traj, bool with_counters) {
  Snapshot snap{t_, population(), std::nullopt};
  if (with_counters) snap.counters = counters();
  traj.snapshots.push_back(std::move(snap));
}

Trajectory Simulator::run(const SimulationOptions& options) {
  if (!(options.horizon > 0.0)) fail(ErrorCode::kContract, "horizon must be positive");
  if (!std::is_sorted(options.sample_times.begin(), options.sample_times.end())) {
    fail(ErrorCode::kContract, "sample times must be sorted");
  }
  rebuild_interval_ = std::max<std::uint64_t>(1, options.rebuild_interval);
  Trajectory traj{model_, initial_, {}, {}, {}, {}, options.horizon, std::nullopt};
  if (extinct()) traj.extinction_time = t_;
  std::size_t next_sample = 0;
  const auto& samples = options.sample_times;
  while (true) {
    const double total = total_rate();
    double t_next = std::numeric_limits<double>::infinity();
    if (groups_ > 0 && total > 0.0) t_next = t_ + exponential(rng_, total);
    const double bound = std::min(t_next, options.horizon);
    while (next_sample < samples.size() && samples[next_sample] <= bound) {
      if (samples[next_sample] >= t_) advance_to(samples[next_sample]);
      record_snapshot(traj, options.counters_at_samples);
      ++next_sample;
    }
    if (t_next > options.horizon) {
      advance_to(options.horizon);
      break;
    }
    advance_to(t_next);
    EventRecord rec = fire(options.event_log);
    if (options.event_log) traj.events.push_back(std::move(rec));
    if (extinct() && !traj.extinction_time) traj.extinction_time = t_;
  }
  traj.counters = counters();
  traj.tally = tally_;
  return traj;
}

Trajectory simulate(const Model& model, const Population& initial, std::uint64_t seed,
                    const SimulationOptions& options, std::uint64_t replica) {
  Simulator sim(model, initial, make_rng(seed, {replica, 0x73696dULL}), options.tracked_pairs);
  return sim.run(options);
}

// --- time series -----------------------------------------------------------------

namespace {

template <class F>
std::vector<std::pair<double, double>> series(const Trajectory& traj, F&& value) {
  std::vector<std::pair<double, double>> out;
  for (const auto& snap : traj.snapshots) {
    if (snap.counters && snap.t < traj.counters.t) out.emplace_back(snap.t, value(*snap.counters));
  }
  out.emplace_back(traj.counters.t, value(traj.counters));
  return out;
}

}  // namespace

std::vector<std::pair<double, double>> compensator_residual(const Trajectory& traj,
                                                            const CounterSelector& sel) {
  return series(traj, [&](const CounterSet& c) {
    return counter_value(c, sel) - compensator_value(c, traj.model, sel);
  });
}

std::vector<std::pair<double, double>> predicted_qv(const Trajectory& traj,
                                                    const CounterSelector& sel) {
  return series(traj, [&](const CounterSet& c) { return predicted_qv_value(c, traj.model, sel); });
}

std::vector<std::pair<double, double>> predicted_covariance(const Trajectory& traj,
                                                            const CovarianceSelector& sel) {
  return series(traj,
                [&](const CounterSet& c) { return predicted_covariance_value(c, traj.model, sel); });
}

}  // namespace groupsel
