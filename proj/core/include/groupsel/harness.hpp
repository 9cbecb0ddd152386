#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "groupsel/fission.hpp"
#include "groupsel/grid.hpp"
#include "groupsel/kernel.hpp"
#include "groupsel/pde.hpp"
#include "groupsel/rates.hpp"
#include "groupsel/ssa.hpp"

namespace groupsel {

// Closed-form initial density, a product over axes of a 1-D profile:
//   cosine_bump  height (1 + cos(pi (u - center) / half_width)) / 2 on |u - center| < half_width
//   uniform      height on [lo, hi)
//   gaussian     height exp(-(u - center)^2 / (2 sd^2))
struct DensitySpec {
  std::string form = "cosine_bump";
  double center = 1.0;
  double half_width = 0.5;
  double lo = 0.0;
  double hi = 1.0;
  double sd = 0.2;
  double height = 1.0;

  double value(Point u) const;
};

// Explicit initial groups for one rung.
struct AtomList {
  ScalingParams scale;
  std::vector<std::pair<Composition, std::int64_t>> groups;
};

struct PdeSettings {
  double upper = 3.0;
  int cells = 256;
  double dt = 5e-3;
  std::string kernel = "analytic";  // or "tabulated"
  std::int64_t tabulate_n = 0;
  double mass_floor = 1e-12;
  double max_escaped = 1e-3;
  SplitOrder order = SplitOrder::kTransportOutside;
};

struct ScenarioConfig {
  std::string name;
  int ell = 1;
  RateSpec rates;  // unscaled; bound to a rung with RateSpec::at
  FissionLawSpec law;
  RateBounds bounds;
  ExtinctionScaling mode = ExtinctionScaling::kMeasure;
  std::vector<ScalingParams> ladder;
  int replicas = 1;
  std::uint64_t seed = 1;
  double horizon = 1.0;
  std::vector<double> snapshots;  // defaults to {0, T/4, T/2, 3T/4, T}
  PdeSettings pde;
  std::optional<DensitySpec> density;
  std::vector<AtomList> atoms;
  std::size_t bank_size = 512;
  std::uint64_t bank_seed = 2024;
  std::size_t g_bank_size = 16;
  double failure_threshold = 0.1;
  std::string output_dir = "out";

  std::string canonical;  // canonical JSON text of the file
  std::string hash;       // FNV-1a of `canonical`
  BoundCheckReport bound_report;

  std::shared_ptr<const FissionLaw> law_instance;  // shared by every rung

  Model model(std::size_t rung) const;
  std::shared_ptr<const OffspringKernel> kernel() const;
  LimitCoefficients coefficients() const;
  // Cell averages of the configured density on the PDE grid.
  DensityGrid initial_grid() const;
};

// Parsing plus validation. Errors: kConfigSchema, kBoundViolation,
// kLadderNotIncreasing, kInitialMass, kIo.
ScenarioConfig parse_config(const std::string& text, const std::string& origin = "<string>");
ScenarioConfig load_config(const std::filesystem::path& path);

// ceil(m mass) groups (ceil(m n^ell mass) in density mode), each at
// floor(n u) with u drawn from x0 / mass: a cell by its mass, then uniform
// inside it. Zero compositions are redrawn; a density whose mass sits
// entirely below 1/n in every axis is Error(kInitialMass).
Population sample_initial_population(const DensityGrid& x0, ScalingParams s, Rng& rng,
                                     ExtinctionScaling mode = ExtinctionScaling::kMeasure);
Population sample_initial_population(const DensityGrid& x0, ScalingParams s, std::uint64_t seed,
                                     ExtinctionScaling mode = ExtinctionScaling::kMeasure);

enum class OutputFormat { kCsv, kJson };

struct RunOptions {
  std::uint64_t seed_offset = 0;
  unsigned threads = 1;
  std::filesystem::path out_dir;  // empty: the config's output_dir
  OutputFormat format = OutputFormat::kCsv;
};

// Seeds of one replica: the initial population stream and the simulator seed.
struct ReplicaSeeds {
  std::uint64_t init_stream = 0;  // make_rng(base, {rung, replica, 1})
  std::uint64_t sim_seed = 0;     // first draw of make_rng(base, {rung, replica, 2})
};
ReplicaSeeds replica_seeds(std::uint64_t base, std::size_t rung, std::size_t replica);

// Initial population of a replica: the atom list of the rung when one is
// configured, otherwise a draw from the initial density.
Population initial_population(const ScenarioConfig& cfg, std::size_t rung, std::size_t replica,
                              std::uint64_t seed_offset);

// Runs body(j) for j in [0, count) on `threads` workers. Each index is run
// once; failures are returned per index and never stop other indices.
std::vector<std::optional<std::string>> run_pool(std::size_t count, unsigned threads,
                                                 const std::function<void(std::size_t)>& body);

struct Quantiles {
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  std::size_t count = 0;
};
Quantiles quantiles(std::vector<double> values);

// --- convergence study --------------------------------------------------------------

struct ReplicaResult {
  std::size_t rung = 0;
  std::size_t replica = 0;
  ReplicaSeeds seeds;
  std::optional<std::string> error;  // quarantined
  std::vector<double> rho;         // per sample time
  std::vector<double> mass_gap;    // |mass - pde mass|
  std::vector<double> moment_gap;  // |int |u| - pde int |u||
  std::vector<std::vector<double>> pairing_gap;  // [time][g]
  std::int64_t final_groups = 0;
  std::uint64_t events = 0;
  bool balanced = true;  // counters reproduce the final population
};

struct StudyCell {
  std::size_t rung = 0;
  double t = 0.0;
  Quantiles rho, mass_gap, moment_gap;
  std::vector<Quantiles> pairing_gap;  // per g
};

struct ConvergenceReport {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::uint64_t seed_offset = 0;
  std::vector<ScalingParams> ladder;
  std::vector<double> times;
  std::size_t bank_size = 0;
  std::uint64_t bank_seed = 0;
  std::vector<std::string> g_names;
  std::vector<ReplicaResult> replicas;
  std::vector<StudyCell> cells;  // rung-major, then time
  std::vector<std::size_t> quarantined;  // per rung
  std::size_t unbalanced = 0;            // replicas failing balance reconstruction
  std::vector<MomentSample> pde_moments;
  double pde_escaped = 0.0;
  double runtime_seconds = 0.0;

  const StudyCell& cell(std::size_t rung, std::size_t time) const {
    return cells[rung * times.size() + time];
  }
};

// Error(kStudyFailed) when more than the configured fraction of replicas of
// a rung fail, or when the PDE loses more than max_escaped through the box.
ConvergenceReport run_convergence_study(const ScenarioConfig& cfg, const RunOptions& options);

// --- conservation ---------------------------------------------------------------------

// Balance reconstruction of the final population from the initial one and
// the counters, plus a check of every logged fission: pieces nonzero, summing
// to the parent, at most b of them.
struct ConservationAudit {
  bool balanced = true;
  std::uint64_t fission_events = 0;
  std::uint64_t violations = 0;
  std::string first_violation;
};
ConservationAudit audit_conservation(const Trajectory& traj, int max_pieces);

// --- diagnostics -------------------------------------------------------------------

struct DiagnosticRow {
  std::string check;   // "compensator", "qv", "covariance", "balance", "fission"
  std::string family;
  double statistic = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  bool pass = true;
  std::string detail;
};

struct DiagnosticsReport {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::uint64_t seed_offset = 0;
  std::size_t replicas = 0;
  std::uint64_t fission_events = 0;
  std::uint64_t events = 0;
  std::vector<DiagnosticRow> rows;
  double runtime_seconds = 0.0;

  bool pass() const;
};

// Simulates cfg.replicas replicas on the first rung to the horizon and
// checks, with counters pooled over compositions per family: the mean
// compensated counter within 3 standard errors of 0; the replica variance
// within 15% of the mean predicted quadratic variation; the offspring /
// fission covariance within 20%; balance reconstruction and fission
// conservation on every replica.
DiagnosticsReport run_diagnostics(const ScenarioConfig& cfg, const RunOptions& options);

// --- simulate / solve ------------------------------------------------------------------

struct SimulationRecord {
  std::size_t rung = 0;
  std::size_t replica = 0;
  ReplicaSeeds seeds;
  Trajectory trajectory;
};

std::vector<SimulationRecord> run_simulations(const ScenarioConfig& cfg, const RunOptions& options);

DensityTrajectory run_solve(const ScenarioConfig& cfg);

// --- output -----------------------------------------------------------------------------

// Writers return the files they produced. Every file carries the config hash
// and the seed manifest; run times go to a separate timing.json.
std::vector<std::filesystem::path> write_study(const ConvergenceReport& report,
                                               const ScenarioConfig& cfg, const RunOptions& options);
std::vector<std::filesystem::path> write_diagnostics(const DiagnosticsReport& report,
                                                     const ScenarioConfig& cfg,
                                                     const RunOptions& options);
std::vector<std::filesystem::path> write_simulations(const std::vector<SimulationRecord>& records,
                                                     const ScenarioConfig& cfg,
                                                     const RunOptions& options);
std::vector<std::filesystem::path> write_solution(const DensityTrajectory& traj,
                                                  const ScenarioConfig& cfg, const RunOptions& options);

}  // namespace groupsel
