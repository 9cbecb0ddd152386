#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "groupsel/error.hpp"
#include "groupsel/harness.hpp"
#include "groupsel/text.hpp"

namespace groupsel {

using nlohmann::json;

namespace {

[[noreturn]] void schema(const std::string& where, const std::string& what) {
  fail(ErrorCode::kConfigSchema, where + ": " + what);
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) schema(where, "expected a table");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) schema(where, "unknown key '" + key + "'");
  }
}

double number(const json& obj, const std::string& key, const std::string& where,
              std::optional<double> fallback = std::nullopt) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    schema(where, "missing '" + key + "'");
  }
  const auto& v = obj.at(key);
  if (!v.is_number()) schema(where, "'" + key + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) schema(where, "'" + key + "' must be finite");
  return d;
}

std::int64_t integer(const json& obj, const std::string& key, const std::string& where,
                     std::optional<std::int64_t> fallback = std::nullopt) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    schema(where, "missing '" + key + "'");
  }
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) schema(where, "'" + key + "' must be an integer");
  return v.get<std::int64_t>();
}

std::string string(const json& obj, const std::string& key, const std::string& where,
                   std::optional<std::string> fallback = std::nullopt) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    schema(where, "missing '" + key + "'");
  }
  const auto& v = obj.at(key);
  if (!v.is_string()) schema(where, "'" + key + "' must be a string");
  return v.get<std::string>();
}

RateFunction rate_function(const json& obj, const std::string& where) {
  const std::string form = string(obj, "form", where);
  if (form == "constant") {
    check_keys(obj, {"form", "value"}, where);
    return RateFunction::constant(number(obj, "value", where));
  }
  if (form == "affine") {
    check_keys(obj, {"form", "a", "b", "per_type"}, where);
    std::vector<double> per_type;
    if (obj.contains("per_type")) {
      if (!obj["per_type"].is_array()) schema(where, "'per_type' must be a list");
      for (const auto& v : obj["per_type"]) {
        if (!v.is_number()) schema(where, "'per_type' entries must be numbers");
        per_type.push_back(v.get<double>());
      }
    }
    return RateFunction::affine(number(obj, "a", where, 0.0), number(obj, "b", where, 0.0), per_type);
  }
  if (form == "logistic") {
    check_keys(obj, {"form", "r", "K", "w"}, where);
    return RateFunction::logistic(number(obj, "r", where), number(obj, "K", where), number(obj, "w", where));
  }
  if (form == "box_exp") {
    check_keys(obj, {"form"}, where);
    return RateFunction::box_exp_fission();
  }
  schema(where, "unknown rate form '" + form + "'");
}

std::vector<RateFunction> per_type(const json& rates, const std::string& key, int ell) {
  const std::string where = "rates." + key;
  if (!rates.contains(key)) return std::vector<RateFunction>(static_cast<std::size_t>(ell));
  const auto& v = rates.at(key);
  if (v.is_object()) return std::vector<RateFunction>(static_cast<std::size_t>(ell), rate_function(v, where));
  if (!v.is_array() || static_cast<int>(v.size()) != ell) {
    schema(where, "expected one table or a list of " + std::to_string(ell));
  }
  std::vector<RateFunction> out;
  for (std::size_t k = 0; k < v.size(); ++k) out.push_back(rate_function(v[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

DensitySpec density_spec(const json& obj) {
  const std::string where = "initial.density";
  check_keys(obj, {"form", "center", "half_width", "lo", "hi", "sd", "height"}, where);
  DensitySpec d;
  d.form = string(obj, "form", where);
  d.height = number(obj, "height", where, 1.0);
  if (d.form == "cosine_bump") {
    d.center = number(obj, "center", where);
    d.half_width = number(obj, "half_width", where);
    if (!(d.half_width > 0.0)) schema(where, "'half_width' must be positive");
  } else if (d.form == "uniform") {
    d.lo = number(obj, "lo", where);
    d.hi = number(obj, "hi", where);
    if (!(d.hi > d.lo) || d.lo < 0.0) schema(where, "need 0 <= lo < hi");
  } else if (d.form == "gaussian") {
    d.center = number(obj, "center", where);
    d.sd = number(obj, "sd", where);
    if (!(d.sd > 0.0)) schema(where, "'sd' must be positive");
  } else {
    schema(where, "unknown density form '" + d.form + "'");
  }
  if (!(d.height >= 0.0)) schema(where, "'height' must be nonnegative");
  return d;
}

Composition composition(const json& v, int ell, const std::string& where) {
  if (v.is_number_integer() && ell == 1) return Composition{v.get<std::int64_t>()};
  if (!v.is_array() || static_cast<int>(v.size()) != ell) schema(where, "composition needs " + std::to_string(ell) + " counts");
  Composition c(ell);
  for (int k = 0; k < ell; ++k) {
    if (!v[static_cast<std::size_t>(k)].is_number_integer()) schema(where, "counts must be integers");
    const auto x = v[static_cast<std::size_t>(k)].get<std::int64_t>();
    if (x < 0) schema(where, "counts must be nonnegative");
    c.set(k, x);
  }
  return c;
}

ScalingParams rung(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
    schema(where, "a rung is a pair [n, m] of integers");
  }
  const auto n = v[0].get<std::int64_t>(), m = v[1].get<std::int64_t>();
  if (n < 1 || m < 1) schema(where, "n and m must be >= 1");
  return {n, m};
}

}  // namespace

double DensitySpec::value(Point u) const {
  double v = height;
  for (double x : u) {
    if (form == "cosine_bump") {
      const double r = (x - center) / half_width;
      v *= std::abs(r) < 1.0 ? 0.5 * (1.0 + std::cos(M_PI * r)) : 0.0;
    } else if (form == "uniform") {
      v *= (x >= lo && x < hi) ? 1.0 : 0.0;
    } else {
      v *= std::exp(-0.5 * (x - center) * (x - center) / (sd * sd));
    }
  }
  return v;
}

Model ScenarioConfig::model(std::size_t r) const {
  return Model{rates.at(ladder.at(r), mode), law_instance};
}

std::shared_ptr<const OffspringKernel> ScenarioConfig::kernel() const {
  return make_kernel(law, pde.kernel == "tabulated" ? pde.tabulate_n : 0);
}

LimitCoefficients ScenarioConfig::coefficients() const { return LimitCoefficients::from_rates(rates, kernel()); }

DensityGrid ScenarioConfig::initial_grid() const {
  if (!density) fail(ErrorCode::kConfigSchema, "scenario '" + name + "' has no initial density");
  const DensitySpec d = *density;
  return DensityGrid::from_function(ell, pde.upper, pde.cells, [d](Point u) { return d.value(u); }, 4);
}

ScenarioConfig parse_config(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kConfigSchema, origin + ": " + e.what());
  }
  check_keys(doc, {"schema_version", "name", "ell", "rates", "fission_law", "bounds", "extinction_scaling",
                   "ladder", "replicas", "seed", "horizon", "snapshots", "pde", "initial", "metrics",
                   "study", "output"},
             origin);
  if (integer(doc, "schema_version", origin, 1) != 1) schema(origin, "unsupported schema_version");

  ScenarioConfig cfg;
  cfg.canonical = doc.dump();
  cfg.hash = hash_hex(fnv1a(cfg.canonical));
  cfg.name = string(doc, "name", origin, "scenario");
  const auto ell = integer(doc, "ell", origin);
  if (ell < 1 || ell > kMaxTypes) schema(origin, "ell must lie in [1, " + std::to_string(kMaxTypes) + "]");
  cfg.ell = static_cast<int>(ell);

  // Rates and fission law.
  if (!doc.contains("rates")) schema(origin, "missing 'rates'");
  const auto& rates = doc["rates"];
  check_keys(rates, {"birth", "death", "migration", "fission", "extinction"}, "rates");
  RateFunction fission, extinction;
  if (rates.contains("fission")) fission = rate_function(rates["fission"], "rates.fission");
  if (rates.contains("extinction")) extinction = rate_function(rates["extinction"], "rates.extinction");
  cfg.rates = RateSpec(cfg.ell, per_type(rates, "birth", cfg.ell), per_type(rates, "death", cfg.ell),
                       per_type(rates, "migration", cfg.ell), fission, extinction);
  if (doc.contains("fission_law")) {
    const auto& fl = doc["fission_law"];
    check_keys(fl, {"name", "p", "samples"}, "fission_law");
    cfg.law.name = string(fl, "name", "fission_law");
    cfg.law.p = number(fl, "p", "fission_law", 0.5);
    const auto samples = integer(fl, "samples", "fission_law", 100000);
    if (samples < 1) schema("fission_law", "'samples' must be positive");
    cfg.law.samples = static_cast<std::uint64_t>(samples);
  }
  cfg.law_instance = make_fission_law(cfg.law);

  const std::string scaling = string(doc, "extinction_scaling", origin, "measure");
  if (scaling == "measure") {
    cfg.mode = ExtinctionScaling::kMeasure;
  } else if (scaling == "density") {
    cfg.mode = ExtinctionScaling::kDensity;
  } else {
    schema(origin, "extinction_scaling must be 'measure' or 'density'");
  }

  // Ladder.
  if (!doc.contains("ladder") || !doc["ladder"].is_array() || doc["ladder"].empty()) {
    schema(origin, "'ladder' must be a nonempty list of [n, m]");
  }
  for (std::size_t j = 0; j < doc["ladder"].size(); ++j) {
    cfg.ladder.push_back(rung(doc["ladder"][j], "ladder[" + std::to_string(j) + "]"));
  }
  for (std::size_t j = 1; j < cfg.ladder.size(); ++j) {
    const auto& a = cfg.ladder[j - 1];
    const auto& b = cfg.ladder[j];
    if (b.n <= a.n) {
      fail(ErrorCode::kLadderNotIncreasing, "ladder not increasing in n at rung " + std::to_string(j + 1));
    }
    if (b.m <= a.m) {
      fail(ErrorCode::kLadderNotIncreasing, "ladder not increasing in m at rung " + std::to_string(j + 1));
    }
  }

  const auto replicas = integer(doc, "replicas", origin, 1);
  if (replicas < 1) schema(origin, "'replicas' must be positive");
  cfg.replicas = static_cast<int>(replicas);
  const auto seed = integer(doc, "seed", origin, 1);
  if (seed < 0) schema(origin, "'seed' must be nonnegative");
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.horizon = number(doc, "horizon", origin, 1.0);
  if (!(cfg.horizon > 0.0)) schema(origin, "'horizon' must be positive");
  if (doc.contains("snapshots")) {
    if (!doc["snapshots"].is_array() || doc["snapshots"].empty()) schema(origin, "'snapshots' must be a nonempty list");
    for (const auto& v : doc["snapshots"]) {
      if (!v.is_number()) schema(origin, "snapshot times must be numbers");
      const double t = v.get<double>();
      if (t < 0.0 || t > cfg.horizon) schema(origin, "snapshot times must lie in [0, horizon]");
      if (!cfg.snapshots.empty() && t <= cfg.snapshots.back()) schema(origin, "snapshot times must increase");
      cfg.snapshots.push_back(t);
    }
  } else {
    for (int j = 0; j <= 4; ++j) cfg.snapshots.push_back(cfg.horizon * j / 4.0);
  }

  if (doc.contains("pde")) {
    const auto& p = doc["pde"];
    check_keys(p, {"upper", "cells", "dt", "kernel", "tabulate_n", "mass_floor", "max_escaped", "order"}, "pde");
    cfg.pde.upper = number(p, "upper", "pde", cfg.pde.upper);
    cfg.pde.cells = static_cast<int>(integer(p, "cells", "pde", cfg.pde.cells));
    cfg.pde.dt = number(p, "dt", "pde", cfg.pde.dt);
    cfg.pde.kernel = string(p, "kernel", "pde", "analytic");
    cfg.pde.tabulate_n = integer(p, "tabulate_n", "pde", 0);
    cfg.pde.mass_floor = number(p, "mass_floor", "pde", cfg.pde.mass_floor);
    cfg.pde.max_escaped = number(p, "max_escaped", "pde", cfg.pde.max_escaped);
    const std::string order = string(p, "order", "pde", "transport_outside");
    if (order == "transport_outside") {
      cfg.pde.order = SplitOrder::kTransportOutside;
    } else if (order == "reaction_outside") {
      cfg.pde.order = SplitOrder::kReactionOutside;
    } else {
      schema("pde", "order must be 'transport_outside' or 'reaction_outside'");
    }
    if (!(cfg.pde.upper > 0.0) || cfg.pde.cells < 1 || !(cfg.pde.dt > 0.0)) {
      schema("pde", "upper, cells and dt must be positive");
    }
    if (cfg.pde.kernel != "analytic" && cfg.pde.kernel != "tabulated") {
      schema("pde", "kernel must be 'analytic' or 'tabulated'");
    }
    if (cfg.pde.kernel == "tabulated" && cfg.pde.tabulate_n < 1) schema("pde", "a tabulated kernel needs tabulate_n >= 1");
  }

  // Initial condition.
  if (!doc.contains("initial")) schema(origin, "missing 'initial'");
  const auto& init = doc["initial"];
  check_keys(init, {"density", "atoms"}, "initial");
  if (init.contains("density")) cfg.density = density_spec(init["density"]);
  if (init.contains("atoms")) {
    if (!init["atoms"].is_array()) schema("initial.atoms", "expected a list");
    for (std::size_t j = 0; j < init["atoms"].size(); ++j) {
      const std::string where = "initial.atoms[" + std::to_string(j) + "]";
      const auto& a = init["atoms"][j];
      check_keys(a, {"n", "m", "groups"}, where);
      AtomList list;
      list.scale = ScalingParams(integer(a, "n", where), integer(a, "m", where));
      if (!a.contains("groups") || !a["groups"].is_array()) schema(where, "'groups' must be a list");
      for (const auto& g : a["groups"]) {
        check_keys(g, {"i", "count"}, where);
        if (!g.contains("i")) schema(where, "group needs 'i'");
        const Composition c = composition(g["i"], cfg.ell, where);
        const auto count = integer(g, "count", where, 1);
        if (c.is_zero()) fail(ErrorCode::kInitialMass, where + ": zero composition");
        if (count < 1) schema(where, "'count' must be positive");
        list.groups.emplace_back(c, count);
      }
      if (list.groups.empty()) fail(ErrorCode::kInitialMass, where + ": no groups");
      cfg.atoms.push_back(std::move(list));
    }
  }
  if (!cfg.density && cfg.atoms.empty()) schema("initial", "need 'density' or 'atoms'");
  if (!cfg.density) {
    for (const auto& s : cfg.ladder) {
      bool found = false;
      for (const auto& a : cfg.atoms) found = found || (a.scale.n == s.n && a.scale.m == s.m);
      if (!found) schema("initial.atoms", "no atom list for rung (" + std::to_string(s.n) + ", " + std::to_string(s.m) + ")");
    }
  }
  if (cfg.density && !(cfg.initial_grid().mass() > 0.0)) {
    fail(ErrorCode::kInitialMass, "initial density has zero mass on the PDE grid");
  }

  if (doc.contains("metrics")) {
    const auto& m = doc["metrics"];
    check_keys(m, {"bank_size", "bank_seed", "g_bank_size"}, "metrics");
    const auto bank = integer(m, "bank_size", "metrics", 512);
    const auto g = integer(m, "g_bank_size", "metrics", 16);
    const auto bank_seed = integer(m, "bank_seed", "metrics", 2024);
    if (bank < 1 || g < 1 || bank_seed < 0) schema("metrics", "sizes must be positive and the seed nonnegative");
    cfg.bank_size = static_cast<std::size_t>(bank);
    cfg.g_bank_size = static_cast<std::size_t>(g);
    cfg.bank_seed = static_cast<std::uint64_t>(bank_seed);
  }
  if (doc.contains("study")) {
    check_keys(doc["study"], {"failure_threshold"}, "study");
    cfg.failure_threshold = number(doc["study"], "failure_threshold", "study", 0.1);
  }
  if (doc.contains("output")) {
    check_keys(doc["output"], {"dir"}, "output");
    cfg.output_dir = string(doc["output"], "dir", "output", "out");
  }

  // Declared bounds, scanned on every rung over the lattice points inside
  // the PDE box (at least the initial atoms).
  if (!doc.contains("bounds")) schema(origin, "missing 'bounds'");
  const auto& b = doc["bounds"];
  check_keys(b, {"individual", "fission", "extinction", "pieces"}, "bounds");
  cfg.bounds.individual = number(b, "individual", "bounds");
  cfg.bounds.fission = number(b, "fission", "bounds");
  cfg.bounds.extinction = number(b, "extinction", "bounds");
  if (b.contains("pieces")) cfg.bounds.pieces = static_cast<int>(integer(b, "pieces", "bounds"));
  for (std::size_t r = 0; r < cfg.ladder.size(); ++r) {
    const auto s = cfg.ladder[r];
    Composition upper(cfg.ell);
    for (int k = 0; k < cfg.ell; ++k) {
      upper.set(k, static_cast<std::int64_t>(std::ceil(cfg.pde.upper * static_cast<double>(s.n))));
    }
    for (const auto& a : cfg.atoms) {
      for (const auto& [c, count] : a.groups) {
        for (int k = 0; k < cfg.ell; ++k) upper.set(k, std::max(upper[k], c[k]));
      }
    }
    auto report = rate_bounds_check(cfg.rates.at(s, cfg.mode), *cfg.law_instance, cfg.bounds, upper);
    if (!report.pass()) {
      fail(ErrorCode::kBoundViolation, "rung (" + std::to_string(s.n) + ", " + std::to_string(s.m) +
                                           "): " + report.summary());
    }
    cfg.bound_report = std::move(report);
  }
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.filename().string());
}

}  // namespace groupsel
