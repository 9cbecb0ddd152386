#include <chrono>
#include <ctime>
#include <fstream>

#include "groupsel/error.hpp"
#include "groupsel/harness.hpp"
#include "groupsel/text.hpp"
#include "json.hpp"

namespace groupsel {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// A table written as CSV (with '#' header lines) or as a JSON object.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<json> rows;  // each an array matching `columns`
};

std::string cell_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return format_number(v.get<double>());
  if (v.is_null()) return "";
  return v.dump();
}

json seed_manifest(const ScenarioConfig& cfg, const RunOptions& options) {
  return {{"seed", cfg.seed}, {"seed_offset", options.seed_offset}, {"base", cfg.seed + options.seed_offset}};
}

fs::path out_dir(const ScenarioConfig& cfg, const RunOptions& options) {
  fs::path dir = options.out_dir.empty() ? fs::path(cfg.output_dir) : options.out_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

std::ofstream open(const fs::path& path) {
  std::ofstream os(path);
  if (!os) fail(ErrorCode::kIo, "cannot write " + path.string());
  return os;
}

fs::path write_table(const Table& table, const fs::path& dir, const ScenarioConfig& cfg,
                     const RunOptions& options) {
  if (options.format == OutputFormat::kCsv) {
    const fs::path path = dir / (table.name + ".csv");
    auto os = open(path);
    os << "# config_hash=" << cfg.hash << "\n";
    os << "# seed=" << cfg.seed << " seed_offset=" << options.seed_offset << "\n";
    for (std::size_t c = 0; c < table.columns.size(); ++c) os << (c ? "," : "") << table.columns[c];
    os << "\n";
    for (const auto& row : table.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << cell_text(row[c]);
      os << "\n";
    }
    return path;
  }
  const fs::path path = dir / (table.name + ".json");
  json doc;
  doc["config_hash"] = cfg.hash;
  doc["seed_manifest"] = seed_manifest(cfg, options);
  json rows = json::array();
  for (const auto& row : table.rows) {
    json obj = json::object();
    for (std::size_t c = 0; c < table.columns.size(); ++c) obj[table.columns[c]] = row[c];
    rows.push_back(std::move(obj));
  }
  doc["rows"] = std::move(rows);
  auto os = open(path);
  os << doc.dump(2) << "\n";
  return path;
}

fs::path write_json(const json& doc, const fs::path& path) {
  auto os = open(path);
  os << doc.dump(2) << "\n";
  return path;
}

json manifest_base(const ScenarioConfig& cfg, const RunOptions& options, const std::string& command) {
  json m;
  m["command"] = command;
  m["config_hash"] = cfg.hash;
  m["config_name"] = cfg.name;
  m["seed_manifest"] = seed_manifest(cfg, options);
  m["threads"] = options.threads;
  m["config"] = json::parse(cfg.canonical);
  return m;
}

// Wall-clock data lives apart from the results so reruns stay byte-identical.
fs::path write_timing(const fs::path& dir, const std::string& command, double seconds, unsigned threads) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return write_json({{"command", command}, {"runtime_seconds", seconds}, {"threads", threads}, {"finished", stamp}},
                    dir / "timing.json");
}

json quantile_cells(const Quantiles& q) { return json::array({q.median, q.q25, q.q75}); }

void append(json& row, const json& more) {
  for (const auto& v : more) row.push_back(v);
}

std::vector<std::string> composition_columns(int ell, const std::string& prefix) {
  std::vector<std::string> out;
  for (int k = 1; k <= ell; ++k) out.push_back(prefix + std::to_string(k));
  return out;
}

json composition_cells(const Composition& i) {
  json out = json::array();
  for (int k = 0; k < i.ell(); ++k) out.push_back(i[k]);
  return out;
}

}  // namespace

std::vector<fs::path> write_study(const ConvergenceReport& report, const ScenarioConfig& cfg,
                                  const RunOptions& options) {
  const fs::path dir = out_dir(cfg, options);
  std::vector<fs::path> files;

  Table summary{"study",
                {"rung", "n", "m", "t", "replicas", "quarantined", "rho_median", "rho_q25", "rho_q75",
                 "mass_gap_median", "mass_gap_q25", "mass_gap_q75", "moment_gap_median", "moment_gap_q25",
                 "moment_gap_q75"},
                {}};
  Table pairing{"pairing_gaps", {"rung", "n", "m", "t", "g", "name", "median", "q25", "q75"}, {}};
  for (const auto& cell : report.cells) {
    const ScalingParams s = report.ladder[cell.rung];
    json row = {cell.rung + 1, s.n, s.m, cell.t, cell.rho.count, report.quarantined[cell.rung]};
    append(row, quantile_cells(cell.rho));
    append(row, quantile_cells(cell.mass_gap));
    append(row, quantile_cells(cell.moment_gap));
    summary.rows.push_back(std::move(row));
    for (std::size_t g = 0; g < cell.pairing_gap.size(); ++g) {
      json prow = {cell.rung + 1, s.n, s.m, cell.t, g, report.g_names[g]};
      append(prow, quantile_cells(cell.pairing_gap[g]));
      pairing.rows.push_back(std::move(prow));
    }
  }
  files.push_back(write_table(summary, dir, cfg, options));
  files.push_back(write_table(pairing, dir, cfg, options));

  Table replicas{"replicas", {"rung", "replica", "sim_seed", "t", "rho", "mass_gap", "moment_gap", "error"}, {}};
  for (const auto& r : report.replicas) {
    if (r.error) {
      replicas.rows.push_back({r.rung + 1, r.replica, r.seeds.sim_seed, nullptr, nullptr, nullptr, nullptr, *r.error});
      continue;
    }
    for (std::size_t j = 0; j < r.rho.size(); ++j) {
      replicas.rows.push_back(
          {r.rung + 1, r.replica, r.seeds.sim_seed, report.times[j], r.rho[j], r.mass_gap[j], r.moment_gap[j], ""});
    }
  }
  files.push_back(write_table(replicas, dir, cfg, options));

  Table moments{"pde_moments", {"t", "mass"}, {}};
  for (const auto& c : composition_columns(cfg.ell, "moment_")) moments.columns.push_back(c);
  moments.columns.push_back("escaped");
  for (const auto& m : report.pde_moments) {
    json row = {m.t, m.mass};
    for (double v : m.moments) row.push_back(v);
    row.push_back(m.escaped);
    moments.rows.push_back(std::move(row));
  }
  files.push_back(write_table(moments, dir, cfg, options));

  json manifest = manifest_base(cfg, options, "study");
  manifest["bank"] = {{"size", report.bank_size}, {"seed", report.bank_seed}};
  manifest["pde_escaped"] = report.pde_escaped;
  json seeds = json::array();
  for (const auto& r : report.replicas) {
    seeds.push_back({{"rung", r.rung + 1}, {"replica", r.replica}, {"sim_seed", r.seeds.sim_seed}});
  }
  manifest["replica_seeds"] = std::move(seeds);
  json names = json::array();
  for (const auto& f : files) names.push_back(f.filename().string());
  manifest["files"] = std::move(names);
  files.push_back(write_json(manifest, dir / "manifest.json"));
  files.push_back(write_timing(dir, "study", report.runtime_seconds, options.threads));
  return files;
}

std::vector<fs::path> write_diagnostics(const DiagnosticsReport& report, const ScenarioConfig& cfg,
                                        const RunOptions& options) {
  const fs::path dir = out_dir(cfg, options);
  std::vector<fs::path> files;
  Table table{"diagnostics", {"check", "family", "statistic", "reference", "tolerance", "pass", "detail"}, {}};
  for (const auto& r : report.rows) {
    table.rows.push_back({r.check, r.family, r.statistic, r.reference, r.tolerance, r.pass ? "PASS" : "FAIL", r.detail});
  }
  files.push_back(write_table(table, dir, cfg, options));
  json manifest = manifest_base(cfg, options, "diagnose");
  manifest["replicas"] = report.replicas;
  manifest["events"] = report.events;
  manifest["fission_events"] = report.fission_events;
  manifest["pass"] = report.pass();
  manifest["files"] = json::array({files.back().filename().string()});
  files.push_back(write_json(manifest, dir / "manifest.json"));
  files.push_back(write_timing(dir, "diagnose", report.runtime_seconds, options.threads));
  return files;
}

std::vector<fs::path> write_simulations(const std::vector<SimulationRecord>& records, const ScenarioConfig& cfg,
                                        const RunOptions& options) {
  const fs::path dir = out_dir(cfg, options);
  std::vector<fs::path> files;
  Table snaps{"snapshots", {"rung", "replica", "t"}, {}};
  for (const auto& c : composition_columns(cfg.ell, "i_")) snaps.columns.push_back(c);
  snaps.columns.push_back("count");
  Table counters{"counters", {"rung", "replica", "family", "k"}, {}};
  for (const auto& c : composition_columns(cfg.ell, "i_")) counters.columns.push_back(c);
  counters.columns.insert(counters.columns.end(), {"count", "int_x"});
  Table tally{"events", {"rung", "replica", "births", "deaths", "migrations", "migration_noops", "fissions",
                         "extinctions", "final_groups"}, {}};

  for (const auto& rec : records) {
    const Trajectory& traj = rec.trajectory;
    for (const auto& snap : traj.snapshots) {
      for (const auto& [i, count] : snap.population) {
        json row = {rec.rung + 1, rec.replica, snap.t};
        append(row, composition_cells(i));
        row.push_back(count);
        snaps.rows.push_back(std::move(row));
      }
    }
    for (const auto& [i, c] : traj.counters.records) {
      auto add = [&](const char* family, int k, std::int64_t value) {
        if (value == 0) return;
        json row = {rec.rung + 1, rec.replica, family, k < 0 ? json(nullptr) : json(k + 1)};
        append(row, composition_cells(i));
        row.push_back(value);
        row.push_back(c.int_x);
        counters.rows.push_back(std::move(row));
      };
      for (int k = 0; k < cfg.ell; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        add("birth", k, c.birth[kk]);
        add("death", k, c.death[kk]);
        add("immigration", k, c.immigration[kk]);
        add("emigration", k, c.emigration[kk]);
      }
      add("fission", -1, c.fissions);
      add("extinction", -1, c.extinctions);
      std::int64_t produced = 0;
      for (const auto& [child, n] : c.offspring) produced += n;
      add("offspring", -1, produced);
    }
    const EventTally& t = traj.tally;
    tally.rows.push_back({rec.rung + 1, rec.replica, t.births, t.deaths, t.migrations, t.migration_noops, t.fissions,
                          t.extinctions, traj.snapshots.empty() ? 0 : traj.snapshots.back().population.group_count()});
  }
  files.push_back(write_table(snaps, dir, cfg, options));
  files.push_back(write_table(counters, dir, cfg, options));
  files.push_back(write_table(tally, dir, cfg, options));
  json manifest = manifest_base(cfg, options, "simulate");
  json seeds = json::array();
  for (const auto& r : records) {
    seeds.push_back({{"rung", r.rung + 1}, {"replica", r.replica}, {"sim_seed", r.seeds.sim_seed}});
  }
  manifest["replica_seeds"] = std::move(seeds);
  json names = json::array();
  for (const auto& f : files) names.push_back(f.filename().string());
  manifest["files"] = std::move(names);
  files.push_back(write_json(manifest, dir / "manifest.json"));
  return files;
}

std::vector<fs::path> write_solution(const DensityTrajectory& traj, const ScenarioConfig& cfg,
                                     const RunOptions& options) {
  const fs::path dir = out_dir(cfg, options);
  std::vector<fs::path> files;
  Table density{"density", {"t"}, {}};
  for (const auto& c : composition_columns(cfg.ell, "u_")) density.columns.push_back(c);
  density.columns.push_back("x");
  for (const auto& x : traj.snapshots) {
    for (std::size_t c = 0; c < x.size(); ++c) {
      json row = {x.time()};
      for (double v : x.center(c)) row.push_back(v);
      row.push_back(x[c]);
      density.rows.push_back(std::move(row));
    }
  }
  files.push_back(write_table(density, dir, cfg, options));
  Table moments{"moments", {"t", "mass"}, {}};
  for (const auto& c : composition_columns(cfg.ell, "moment_")) moments.columns.push_back(c);
  moments.columns.push_back("escaped");
  for (const auto& c : composition_columns(cfg.ell, "drift_")) moments.columns.push_back(c);
  for (const auto& m : traj.moments) {
    json row = {m.t, m.mass};
    for (double v : m.moments) row.push_back(v);
    row.push_back(m.escaped);
    for (double v : traj.drift.t.empty() ? std::vector<double>(static_cast<std::size_t>(cfg.ell), 0.0)
                                          : traj.drift.at(m.t)) {
      row.push_back(v);
    }
    moments.rows.push_back(std::move(row));
  }
  files.push_back(write_table(moments, dir, cfg, options));
  json manifest = manifest_base(cfg, options, "solve");
  manifest["escaped"] = traj.escaped;
  json names = json::array();
  for (const auto& f : files) names.push_back(f.filename().string());
  manifest["files"] = std::move(names);
  files.push_back(write_json(manifest, dir / "manifest.json"));
  return files;
}

}  // namespace groupsel
