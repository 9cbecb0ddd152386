#include "groupsel/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <future>
#include <mutex>
#include <thread>

#include "groupsel/error.hpp"
#include "groupsel/metrics.hpp"
#include "groupsel/scaling.hpp"

namespace groupsel {

// --- initial populations -----------------------------------------------------------------

Population sample_initial_population(const DensityGrid& x0, ScalingParams s, Rng& rng,
                                     ExtinctionScaling mode) {
  const int ell = x0.ell();
  const double mass = x0.mass();
  if (!(mass > 0.0)) fail(ErrorCode::kInitialMass, "initial density has no mass");
  const double n = static_cast<double>(s.n);
  double scale = static_cast<double>(s.m);
  if (mode == ExtinctionScaling::kDensity) scale *= std::pow(n, ell);
  const auto groups = static_cast<std::int64_t>(std::ceil(scale * mass - 1e-9));

  std::vector<double> cumulative(x0.size());
  double total = 0.0;
  bool reachable = false;  // some mass can land on a nonzero composition
  for (std::size_t c = 0; c < x0.size(); ++c) {
    const double w = std::max(0.0, x0[c]);
    total += w;
    cumulative[c] = total;
    if (w > 0.0) {
      for (int k = 0; k < ell; ++k) {
        if ((x0.index(c, k) + 1) * x0.h() * n > 1.0) reachable = true;
      }
    }
  }
  if (!reachable) {
    fail(ErrorCode::kInitialMass, "initial density puts all mass on the zero composition at n = " +
                                      std::to_string(s.n));
  }

  Population pop(ell);
  std::vector<double> u(static_cast<std::size_t>(ell));
  Composition i(ell);
  for (std::int64_t g = 0; g < groups; ++g) {
    for (int attempt = 0;; ++attempt) {
      if (attempt == 100000) fail(ErrorCode::kInitialMass, "initial density is nearly all below 1/n");
      const double r = uniform01(rng) * total;
      auto c = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), r) -
                                        cumulative.begin());
      c = std::min(c, x0.size() - 1);
      for (int k = 0; k < ell; ++k) {
        const double lo = x0.index(c, k) * x0.h();
        u[static_cast<std::size_t>(k)] = lo + x0.h() * uniform01(rng);
        i.set(k, static_cast<std::int64_t>(std::floor(n * u[static_cast<std::size_t>(k)])));
      }
      if (!i.is_zero()) break;
    }
    pop.add(i);
  }
  return pop;
}

Population sample_initial_population(const DensityGrid& x0, ScalingParams s, std::uint64_t seed,
                                     ExtinctionScaling mode) {
  auto rng = make_rng(seed, {0x696e6974});
  return sample_initial_population(x0, s, rng, mode);
}

ReplicaSeeds replica_seeds(std::uint64_t base, std::size_t rung, std::size_t replica) {
  ReplicaSeeds s;
  s.init_stream = base;
  auto sim = make_rng(base, {rung, replica, 2});
  s.sim_seed = sim();
  return s;
}

Population initial_population(const ScenarioConfig& cfg, std::size_t rung, std::size_t replica,
                              std::uint64_t seed_offset) {
  const ScalingParams s = cfg.ladder.at(rung);
  for (const auto& a : cfg.atoms) {
    if (a.scale.n == s.n && a.scale.m == s.m) {
      Population pop(cfg.ell);
      for (const auto& [i, count] : a.groups) pop.add(i, count);
      return pop;
    }
  }
  auto rng = make_rng(cfg.seed + seed_offset, {rung, replica, 1});
  return sample_initial_population(cfg.initial_grid(), s, rng, cfg.mode);
}

// --- pool ---------------------------------------------------------------------------------

std::vector<std::optional<std::string>> run_pool(std::size_t count, unsigned threads,
                                                 const std::function<void(std::size_t)>& body) {
  std::vector<std::optional<std::string>> errors(count);
  auto run_one = [&](std::size_t j) {
    try {
      body(j);
    } catch (const Error& e) {
      errors[j] = std::string(e.what());
    } catch (const std::exception& e) {
      errors[j] = std::string(e.what());
    }
  };
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
  if (workers <= 1) {
    for (std::size_t j = 0; j < count; ++j) run_one(j);
    return errors;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t j = next++; j < count; j = next++) run_one(j);
    });
  }
  for (auto& t : pool) t.join();
  return errors;
}

Quantiles quantiles(std::vector<double> values) {
  Quantiles q;
  q.count = values.size();
  if (values.empty()) return q;
  std::sort(values.begin(), values.end());
  auto at = [&](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  q.median = at(0.5);
  q.q25 = at(0.25);
  q.q75 = at(0.75);
  return q;
}

// --- study --------------------------------------------------------------------------------

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

SolveOptions solve_options(const ScenarioConfig& cfg) {
  SolveOptions opt;
  opt.horizon = cfg.horizon;
  opt.dt = cfg.pde.dt;
  opt.sample_times = cfg.snapshots;
  opt.mass_floor = cfg.pde.mass_floor;
  opt.order = cfg.pde.order;
  return opt;
}

// Sample times plus the horizon, so the last snapshot is the final state.
std::vector<double> with_horizon(const ScenarioConfig& cfg) {
  auto t = cfg.snapshots;
  if (t.empty() || t.back() < cfg.horizon) t.push_back(cfg.horizon);
  return t;
}

// What a replica contributes at one sample time.
struct Observation {
  std::vector<double> bank;  // pairings with the rho bank
  std::vector<double> g;     // pairings with the g bank
  double mass = 0.0;
  double moment = 0.0;  // int |u|
};

Observation observe(const Pairing& p, const TestFunctionBank& bank,
                    const std::vector<TestFunctionBank::Member>& g_bank) {
  Observation o;
  o.bank = bank.pairings(p);
  for (const auto& g : g_bank) o.g.push_back(p(g.f));
  o.mass = p([](Point) { return 1.0; });
  o.moment = p([](Point u) {
    double a = 0.0;
    for (double v : u) a += v;
    return a;
  });
  return o;
}

}  // namespace

ConvergenceReport run_convergence_study(const ScenarioConfig& cfg, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t base = cfg.seed + options.seed_offset;
  const DensityGrid x0 = cfg.initial_grid();
  const LimitCoefficients coeffs = cfg.coefficients();
  const TestFunctionBank bank(cfg.ell, cfg.pde.upper, cfg.bank_size, cfg.bank_seed);
  const auto g_bank = pairing_bank(cfg.ell, cfg.pde.upper, cfg.g_bank_size);

  // The PDE solve overlaps the replica batch when there is more than one worker.
  auto pde = std::async(options.threads > 1 ? std::launch::async : std::launch::deferred,
                        [&] { return solve(coeffs, x0, solve_options(cfg)); });

  const std::size_t rungs = cfg.ladder.size();
  const auto per_rung = static_cast<std::size_t>(cfg.replicas);
  const std::size_t times = cfg.snapshots.size();
  std::vector<std::vector<Observation>> observed(rungs * per_rung);
  std::vector<ReplicaResult> results(rungs * per_rung);
  const auto errors = run_pool(rungs * per_rung, options.threads, [&](std::size_t idx) {
    const std::size_t rung = idx / per_rung, rep = idx % per_rung;
    ReplicaResult& res = results[idx];
    res.rung = rung;
    res.replica = rep;
    res.seeds = replica_seeds(base, rung, rep);
    const Population pop0 = initial_population(cfg, rung, rep, options.seed_offset);
    SimulationOptions sim;
    sim.horizon = cfg.horizon;
    sim.sample_times = with_horizon(cfg);
    const Trajectory traj = simulate(cfg.model(rung), pop0, res.seeds.sim_seed, sim, 0);
    const ScalingParams s = cfg.ladder[rung];
    for (std::size_t j = 0; j < times; ++j) {
      const Snapshot& snap = traj.snapshots.at(j);
      if (cfg.mode == ExtinctionScaling::kMeasure) {
        const auto lam = empirical_measure(snap.population, s);
        observed[idx].push_back(observe(pairing_of(lam), bank, g_bank));
      } else {
        const auto xhat = density_step_function(snap.population, s);
        observed[idx].push_back(observe(pairing_of(xhat), bank, g_bank));
      }
    }
    if (observed[idx].size() != times) fail(ErrorCode::kContract, "simulation missed a sample time");
    res.final_groups = traj.snapshots.back().population.group_count();
    res.balanced = audit_conservation(traj, cfg.law_instance->max_pieces()).balanced;
    res.events = traj.tally.total();
  });

  const DensityTrajectory reference = pde.get();
  ConvergenceReport report;
  report.config_hash = cfg.hash;
  report.seed = cfg.seed;
  report.seed_offset = options.seed_offset;
  report.ladder = cfg.ladder;
  report.times = cfg.snapshots;
  report.bank_size = bank.size();
  report.bank_seed = cfg.bank_seed;
  for (const auto& g : g_bank) report.g_names.push_back(g.name);
  report.pde_moments = reference.moments;
  report.pde_escaped = reference.escaped;
  if (reference.escaped > cfg.pde.max_escaped) {
    fail(ErrorCode::kStudyFailed, "PDE mass escaping the box (" + std::to_string(reference.escaped) +
                                      ") exceeds pde.max_escaped; enlarge pde.upper");
  }
  std::vector<Observation> target;
  for (double t : cfg.snapshots) {
    const DensityGrid* x = reference.at(t);
    if (x == nullptr) fail(ErrorCode::kContract, "PDE solution missing a sample time");
    target.push_back(observe(pairing_of(*x), bank, g_bank));
  }

  report.quarantined.assign(rungs, 0);
  for (std::size_t idx = 0; idx < results.size(); ++idx) {
    ReplicaResult& res = results[idx];
    if (errors[idx]) {
      res.error = errors[idx];
      ++report.quarantined[res.rung];
      continue;
    }
    if (!res.balanced) ++report.unbalanced;
    for (std::size_t j = 0; j < times; ++j) {
      const Observation& a = observed[idx][j];
      const Observation& b = target[j];
      res.rho.push_back(rho_w(a.bank, b.bank, bank).value);
      res.mass_gap.push_back(std::abs(a.mass - b.mass));
      res.moment_gap.push_back(std::abs(a.moment - b.moment));
      std::vector<double> gaps;
      for (std::size_t g = 0; g < g_bank.size(); ++g) gaps.push_back(std::abs(a.g[g] - b.g[g]));
      res.pairing_gap.push_back(std::move(gaps));
    }
  }
  for (std::size_t r = 0; r < rungs; ++r) {
    if (static_cast<double>(report.quarantined[r]) > cfg.failure_threshold * static_cast<double>(per_rung)) {
      std::string first;
      for (const auto& res : results) {
        if (res.rung == r && res.error) {
          first = *res.error;
          break;
        }
      }
      fail(ErrorCode::kStudyFailed, std::to_string(report.quarantined[r]) + " of " + std::to_string(per_rung) +
                                        " replicas failed on rung " + std::to_string(r + 1) + ": " + first);
    }
    for (std::size_t j = 0; j < times; ++j) {
      StudyCell cell;
      cell.rung = r;
      cell.t = cfg.snapshots[j];
      std::vector<double> rho, mass, moment;
      std::vector<std::vector<double>> pairing(g_bank.size());
      for (const auto& res : results) {
        if (res.rung != r || res.error) continue;
        rho.push_back(res.rho[j]);
        mass.push_back(res.mass_gap[j]);
        moment.push_back(res.moment_gap[j]);
        for (std::size_t g = 0; g < g_bank.size(); ++g) pairing[g].push_back(res.pairing_gap[j][g]);
      }
      cell.rho = quantiles(rho);
      cell.mass_gap = quantiles(mass);
      cell.moment_gap = quantiles(moment);
      for (auto& p : pairing) cell.pairing_gap.push_back(quantiles(std::move(p)));
      report.cells.push_back(std::move(cell));
    }
  }
  report.replicas = std::move(results);
  report.runtime_seconds = seconds_since(start);
  return report;
}

// --- conservation -------------------------------------------------------------------------

ConservationAudit audit_conservation(const Trajectory& traj, int max_pieces) {
  ConservationAudit a;
  const Population& last = traj.snapshots.empty() ? traj.initial : traj.snapshots.back().population;
  a.balanced = reconstruct_population(traj.initial, traj.counters) == last;
  for (const auto& e : traj.events) {
    if (e.kind != EventKind::kFission) continue;
    ++a.fission_events;
    Composition sum(e.source.ell());
    bool ok = !e.offspring.empty() && static_cast<int>(e.offspring.size()) <= max_pieces;
    for (const auto& p : e.offspring) {
      ok = ok && !p.is_zero();
      sum = sum + p;
    }
    if (ok && sum == e.source) continue;
    ++a.violations;
    if (a.first_violation.empty()) a.first_violation = "fission of " + e.source.to_string() + " at t = " + std::to_string(e.t);
  }
  return a;
}

// --- diagnostics --------------------------------------------------------------------------

bool DiagnosticsReport::pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const DiagnosticRow& r) { return r.pass; });
}

namespace {

constexpr int kFamilies = 7;
const CounterFamily kFamilyOrder[kFamilies] = {CounterFamily::kBirth,    CounterFamily::kDeath,
                                               CounterFamily::kImmigration, CounterFamily::kEmigration,
                                               CounterFamily::kFission,  CounterFamily::kOffspring,
                                               CounterFamily::kExtinction};

// E P and E P^2 for the number of pieces P of a fission of i, from the
// law's moments; cached because every replica revisits the same parents.
class PieceMoments {
 public:
  explicit PieceMoments(const FissionLaw& law) : law_(law) {}

  std::pair<double, double> at(const Composition& i) {
    {
      std::lock_guard lock(mutex_);
      if (auto it = cache_.find(i); it != cache_.end()) return it->second;
    }
    std::vector<Composition> box;
    Composition c(i.ell());
    std::function<void(int)> walk = [&](int k) {
      if (k == i.ell()) {
        if (!c.is_zero()) box.push_back(c);
        return;
      }
      for (std::int64_t v = 0; v <= i[k]; ++v) {
        c.set(k, v);
        walk(k + 1);
      }
    };
    walk(0);
    double first = 0.0, second = 0.0;
    for (std::size_t a = 0; a < box.size(); ++a) {
      first += law_.eta(i, box[a]);
      second += law_.second_moment(i, box[a]);
      for (std::size_t b = a + 1; b < box.size(); ++b) second += 2.0 * law_.cross_moment(i, box[a], box[b]);
    }
    std::lock_guard lock(mutex_);
    return cache_.emplace(i, std::make_pair(first, second)).first->second;
  }

 private:
  const FissionLaw& law_;
  std::mutex mutex_;
  std::map<Composition, std::pair<double, double>> cache_;
};

struct ReplicaDiagnostics {
  std::array<double, kFamilies> counter{}, compensator{}, qv{};
  double covariance = 0.0;  // predicted <offspring, fission>
  bool balanced = true;
  std::uint64_t fission_events = 0;
  std::uint64_t fission_violations = 0;
  std::uint64_t events = 0;
  std::string first_violation;
};

ReplicaDiagnostics diagnose_replica(const Trajectory& traj, const Model& model, PieceMoments& pieces) {
  ReplicaDiagnostics d;
  const CounterSet& counters = traj.counters;
  const RateSpec& rates = model.rates;
  for (const auto& [i, rec] : counters.records) {
    for (int f = 0; f < kFamilies; ++f) {
      const CounterFamily family = kFamilyOrder[f];
      if (family == CounterFamily::kOffspring) {
        double produced = 0.0;
        for (const auto& [child, count] : rec.offspring) produced += static_cast<double>(count);
        const auto [first, second] = pieces.at(i);
        const double phi = rates.fission(i);
        d.counter[f] += produced;
        d.compensator[f] += phi * first * rec.int_x;
        d.qv[f] += phi * second * rec.int_x;
        d.covariance += phi * first * rec.int_x;
        continue;
      }
      const bool individual = family == CounterFamily::kBirth || family == CounterFamily::kDeath ||
                              family == CounterFamily::kImmigration || family == CounterFamily::kEmigration;
      for (int k = 0; k < (individual ? counters.ell : 1); ++k) {
        CounterSelector sel;
        sel.family = family;
        sel.i = i;
        sel.type = k;
        d.counter[f] += counter_value(counters, sel);
        d.compensator[f] += compensator_value(counters, model, sel);
        d.qv[f] += predicted_qv_value(counters, model, sel);
      }
    }
  }
  const auto audit = audit_conservation(traj, model.law->max_pieces());
  d.balanced = audit.balanced;
  d.fission_events = audit.fission_events;
  d.fission_violations = audit.violations;
  d.first_violation = audit.first_violation;
  d.events = traj.tally.total();
  return d;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double covariance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2) return 0.0;
  const double ma = mean(a), mb = mean(b);
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - ma) * (b[j] - mb);
  return s / static_cast<double>(a.size() - 1);
}

}  // namespace

DiagnosticsReport run_diagnostics(const ScenarioConfig& cfg, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t base = cfg.seed + options.seed_offset;
  const Model model = cfg.model(0);
  PieceMoments pieces(*model.law);
  const auto R = static_cast<std::size_t>(cfg.replicas);
  std::vector<ReplicaDiagnostics> per(R);
  const auto errors = run_pool(R, options.threads, [&](std::size_t rep) {
    const Population pop0 = initial_population(cfg, 0, rep, options.seed_offset);
    SimulationOptions sim;
    sim.horizon = cfg.horizon;
    sim.sample_times = {cfg.horizon};
    sim.event_log = true;
    const Trajectory traj = simulate(model, pop0, replica_seeds(base, 0, rep).sim_seed, sim, 0);
    per[rep] = diagnose_replica(traj, model, pieces);
  });

  DiagnosticsReport report;
  report.config_hash = cfg.hash;
  report.seed = cfg.seed;
  report.seed_offset = options.seed_offset;
  report.replicas = R;
  std::size_t failed = 0;
  std::string first_error;
  for (std::size_t j = 0; j < R; ++j) {
    if (errors[j]) {
      ++failed;
      if (first_error.empty()) first_error = *errors[j];
    }
  }
  if (failed > 0) {
    report.rows.push_back({"replicas", "all", static_cast<double>(failed), 0.0, 0.0, false, first_error});
  }

  std::vector<std::size_t> ok;
  for (std::size_t j = 0; j < R; ++j) {
    if (!errors[j]) ok.push_back(j);
  }
  const double count = static_cast<double>(ok.size());
  std::vector<double> off_residual, fis_residual, off_fis_pred;
  for (int f = 0; f < kFamilies; ++f) {
    std::vector<double> residual, qv;
    bool active = false;
    for (std::size_t j : ok) {
      residual.push_back(per[j].counter[f] - per[j].compensator[f]);
      qv.push_back(per[j].qv[f]);
      active = active || per[j].counter[f] != 0.0 || per[j].compensator[f] != 0.0;
    }
    const std::string family = to_string(kFamilyOrder[f]);
    if (kFamilyOrder[f] == CounterFamily::kOffspring) off_residual = residual;
    if (kFamilyOrder[f] == CounterFamily::kFission) fis_residual = residual;
    if (!active) {
      report.rows.push_back({"compensator", family, 0.0, 0.0, 0.0, true, "inactive: residual identically zero"});
      report.rows.push_back({"qv", family, 0.0, 0.0, 0.0, true, "inactive"});
      continue;
    }
    const double m = mean(residual);
    const double var = covariance(residual, residual);
    const double se = std::sqrt(var / count);
    report.rows.push_back({"compensator", family, m, 0.0, 3.0 * se, std::abs(m) <= 3.0 * se,
                           "mean(N - A) against 3 standard errors"});
    const double predicted = mean(qv);
    report.rows.push_back({"qv", family, var, predicted, 0.15 * predicted,
                           std::abs(var - predicted) <= 0.15 * predicted,
                           "replica variance against mean predicted quadratic variation"});
  }
  for (std::size_t j : ok) off_fis_pred.push_back(per[j].covariance);
  {
    const double predicted = mean(off_fis_pred);
    const double observed = covariance(off_residual, fis_residual);
    if (predicted == 0.0 && observed == 0.0) {
      report.rows.push_back({"covariance", "offspring/fission", 0.0, 0.0, 0.0, true, "inactive"});
    } else {
      report.rows.push_back({"covariance", "offspring/fission", observed, predicted, 0.2 * std::abs(predicted),
                             std::abs(observed - predicted) <= 0.2 * std::abs(predicted),
                             "sample covariance against mean predicted covariance"});
    }
  }
  std::size_t unbalanced = 0;
  std::uint64_t violations = 0;
  std::string first_violation;
  for (std::size_t j : ok) {
    unbalanced += per[j].balanced ? 0 : 1;
    violations += per[j].fission_violations;
    report.fission_events += per[j].fission_events;
    report.events += per[j].events;
    if (first_violation.empty()) first_violation = per[j].first_violation;
  }
  report.rows.push_back({"balance", "all", static_cast<double>(unbalanced), 0.0, 0.0, unbalanced == 0,
                         "replicas whose counters do not reproduce the final population"});
  report.rows.push_back({"fission", "all", static_cast<double>(violations), 0.0, 0.0, violations == 0,
                         std::to_string(report.fission_events) + " fission events checked" +
                             (first_violation.empty() ? "" : "; first: " + first_violation)});
  report.runtime_seconds = seconds_since(start);
  return report;
}

// --- simulate / solve ---------------------------------------------------------------------

std::vector<SimulationRecord> run_simulations(const ScenarioConfig& cfg, const RunOptions& options) {
  const std::uint64_t base = cfg.seed + options.seed_offset;
  const auto per_rung = static_cast<std::size_t>(cfg.replicas);
  std::vector<SimulationRecord> records(cfg.ladder.size() * per_rung);
  const auto errors = run_pool(records.size(), options.threads, [&](std::size_t idx) {
    SimulationRecord& rec = records[idx];
    rec.rung = idx / per_rung;
    rec.replica = idx % per_rung;
    rec.seeds = replica_seeds(base, rec.rung, rec.replica);
    SimulationOptions sim;
    sim.horizon = cfg.horizon;
    sim.sample_times = with_horizon(cfg);
    rec.trajectory = simulate(cfg.model(rec.rung), initial_population(cfg, rec.rung, rec.replica, options.seed_offset),
                              rec.seeds.sim_seed, sim, 0);
  });
  for (std::size_t j = 0; j < errors.size(); ++j) {
    if (errors[j]) fail(ErrorCode::kStudyFailed, "replica " + std::to_string(j) + " failed: " + *errors[j]);
  }
  return records;
}

DensityTrajectory run_solve(const ScenarioConfig& cfg) {
  return solve(cfg.coefficients(), cfg.initial_grid(), solve_options(cfg));
}

}  // namespace groupsel
