// groupsel: validate, simulate, solve, study and diagnose scenario configs.
// Exit status is 0 on success, the library error code on failure, and 1
// when diagnostics ran but a check failed.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "groupsel/error.hpp"
#include "groupsel/harness.hpp"
#include "groupsel/text.hpp"

using namespace groupsel;

namespace {

void print_files(const std::vector<std::filesystem::path>& files) {
  for (const auto& f : files) std::cout << "  wrote " << f.string() << "\n";
}

int validate(const ScenarioConfig& cfg) {
  std::cout << "config " << cfg.name << " ok, hash " << cfg.hash << "\n";
  std::cout << "  ell " << cfg.ell << ", " << cfg.ladder.size() << " rungs, " << cfg.replicas
            << " replicas, horizon " << format_number(cfg.horizon) << "\n";
  std::cout << "  bounds (last rung): " << cfg.bound_report.summary() << "\n";
  return 0;
}

int study(const ScenarioConfig& cfg, const RunOptions& opt) {
  const auto report = run_convergence_study(cfg, opt);
  std::printf("%-5s %-6s %-7s %-6s %-12s %-12s %-12s\n", "rung", "n", "m", "t", "rho_median", "mass_gap", "moment_gap");
  for (const auto& c : report.cells) {
    const auto s = report.ladder[c.rung];
    std::printf("%-5zu %-6lld %-7lld %-6s %-12.5g %-12.5g %-12.5g\n", c.rung + 1, static_cast<long long>(s.n),
                static_cast<long long>(s.m), format_number(c.t).c_str(), c.rho.median, c.mass_gap.median,
                c.moment_gap.median);
  }
  std::size_t quarantined = 0;
  for (auto q : report.quarantined) quarantined += q;
  if (quarantined > 0) std::cout << quarantined << " replicas quarantined\n";
  print_files(write_study(report, cfg, opt));
  return 0;
}

int diagnose(const ScenarioConfig& cfg, const RunOptions& opt) {
  const auto report = run_diagnostics(cfg, opt);
  for (const auto& r : report.rows) {
    std::printf("%-4s %-12s %-18s stat %-12.5g ref %-12.5g tol %-12.5g %s\n", r.pass ? "PASS" : "FAIL",
                r.check.c_str(), r.family.c_str(), r.statistic, r.reference, r.tolerance, r.detail.c_str());
  }
  std::cout << report.replicas << " replicas, " << report.events << " events, " << report.fission_events
            << " fissions\n";
  print_files(write_diagnostics(report, cfg, opt));
  return report.pass() ? 0 : 1;
}

int simulate_cmd(const ScenarioConfig& cfg, const RunOptions& opt) {
  const auto records = run_simulations(cfg, opt);
  std::uint64_t events = 0;
  for (const auto& r : records) events += r.trajectory.tally.total();
  std::cout << records.size() << " replicas, " << events << " events\n";
  print_files(write_simulations(records, cfg, opt));
  return 0;
}

int solve_cmd(const ScenarioConfig& cfg, const RunOptions& opt) {
  const auto traj = run_solve(cfg);
  for (const auto& x : traj.snapshots) {
    std::cout << "t " << format_number(x.time()) << "  mass " << format_number(x.mass()) << "\n";
  }
  print_files(write_solution(traj, cfg, opt));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group-structured population simulator and limit-equation solver"};
  app.require_subcommand(1);

  std::string config;
  RunOptions opt;
  std::string out_dir;
  std::string format = "csv";
  app.add_option("--seed-offset", opt.seed_offset, "Added to the config seed");
  app.add_option("--threads", opt.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", out_dir, "Output directory (default: the config's output.dir)");
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));

  const char* names[][2] = {{"validate", "Load and check a config"},
                            {"simulate", "Simulate every rung and replica"},
                            {"solve", "Solve the limit equation"},
                            {"study", "Run the convergence study"},
                            {"diagnose", "Run the martingale and conservation checks"}};
  for (const auto& [name, help] : names) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("config", config, "Scenario config (JSON)")->required();
    sub->fallthrough();
  }

  CLI11_PARSE(app, argc, argv);
  opt.out_dir = out_dir;
  opt.format = format == "json" ? OutputFormat::kJson : OutputFormat::kCsv;
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    const auto cfg = load_config(config);
    if (command == "validate") return validate(cfg);
    if (command == "simulate") return simulate_cmd(cfg, opt);
    if (command == "solve") return solve_cmd(cfg, opt);
    if (command == "study") return study(cfg, opt);
    return diagnose(cfg, opt);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
