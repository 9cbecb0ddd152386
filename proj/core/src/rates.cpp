#include "groupsel/rates.hpp"

#include <cmath>
#include <sstream>

#include "groupsel/error.hpp"
#include "groupsel/fission.hpp"

namespace groupsel {

ScalingParams::ScalingParams(std::int64_t n_, std::int64_t m_) : n(n_), m(m_) {
  if (n < 1 || m < 1) fail(ErrorCode::kConfigSchema, "scaling parameters n and m must be >= 1");
}

RateFunction::RateFunction(Form form) : form_(std::move(form)) {
  if (const auto* l = std::get_if<Logistic>(&form_); l != nullptr && !(l->w > 0.0)) {
    fail(ErrorCode::kConfigSchema, "logistic rate needs width w > 0");
  }
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double eval_scaled(const RateFunction::Form& form, std::span<const double> u) {
  double abs_u = 0.0;
  for (double v : u) abs_u += v;
  return std::visit(
      overloaded{
          [](const RateFunction::Constant& c) { return c.value; },
          [&](const RateFunction::Affine& a) {
            double v = a.a + a.b * abs_u;
            for (std::size_t k = 0; k < a.per_type.size() && k < u.size(); ++k) {
              v += a.per_type[k] * u[k];
            }
            return v;
          },
          [&](const RateFunction::Logistic& l) {
            return l.r / (1.0 + std::exp((abs_u - l.K) / l.w));
          },
          [&](const RateFunction::BoxExpFission&) {
            double prod = 1.0;
            for (double v : u) prod *= v;
            return prod * std::exp(-abs_u);
          },
      },
      form);
}

}  // namespace

double RateFunction::at_lattice(const Composition& i, double n) const {
  if (std::holds_alternative<BoxExpFission>(form_)) {
    double prod = 1.0;
    for (int k = 0; k < i.ell(); ++k) prod *= static_cast<double>(i[k] + 1) / n;
    return prod * std::exp(-static_cast<double>(i.size()) / n);
  }
  double u[kMaxTypes];
  for (int k = 0; k < i.ell(); ++k) u[k] = static_cast<double>(i[k]) / n;
  return eval_scaled(form_, std::span<const double>(u, static_cast<std::size_t>(i.ell())));
}

double RateFunction::limit(std::span<const double> u) const { return eval_scaled(form_, u); }

bool RateFunction::is_constant() const {
  if (std::holds_alternative<Constant>(form_)) return true;
  if (const auto* a = std::get_if<Affine>(&form_)) {
    if (a->b != 0.0) return false;
    for (double c : a->per_type) {
      if (c != 0.0) return false;
    }
    return true;
  }
  if (const auto* l = std::get_if<Logistic>(&form_)) return l->r == 0.0;
  return false;
}

bool RateFunction::is_zero() const {
  if (!is_constant()) return false;
  const double zero_point[kMaxTypes] = {};
  return limit(std::span<const double>(zero_point, 1)) == 0.0;
}

std::string RateFunction::describe() const {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const Constant& c) { os << "constant(" << c.value << ")"; },
                 [&](const Affine& a) {
                   os << "affine(a=" << a.a << ", b=" << a.b;
                   for (double c : a.per_type) os << ", " << c;
                   os << ")";
                 },
                 [&](const Logistic& l) {
                   os << "logistic(r=" << l.r << ", K=" << l.K << ", w=" << l.w << ")";
                 },
                 [&](const BoxExpFission&) { os << "box_exp_fission"; },
             },
             form_);
  return os.str();
}

RateSpec::RateSpec(int ell, std::vector<RateFunction> birth, std::vector<RateFunction> death,
                   std::vector<RateFunction> migration, RateFunction fission,
                   RateFunction extinction)
    : ell_(Composition(ell).ell()),
      birth_(std::move(birth)),
      death_(std::move(death)),
      migration_(std::move(migration)),
      fission_(std::move(fission)),
      extinction_(std::move(extinction)) {
  auto check = [&](const std::vector<RateFunction>& v, const char* what) {
    if (static_cast<int>(v.size()) != ell_) {
      fail(ErrorCode::kConfigSchema,
           std::string(what) + " needs one rate function per type (" + std::to_string(ell_) + ")");
    }
  };
  check(birth_, "birth");
  check(death_, "death");
  check(migration_, "migration");
}

RateSpec RateSpec::at(ScalingParams scale, ExtinctionScaling mode) const {
  RateSpec out = *this;
  out.scale_ = scale;
  out.mode_ = mode;
  return out;
}

double RateSpec::birth(const Composition& i, int k) const {
  if (i[k] == 0) return 0.0;
  return birth_[static_cast<std::size_t>(k)].at_lattice(i, static_cast<double>(scale_.n));
}

double RateSpec::death(const Composition& i, int k) const {
  if (i[k] == 0) return 0.0;
  return death_[static_cast<std::size_t>(k)].at_lattice(i, static_cast<double>(scale_.n));
}

double RateSpec::migration(const Composition& i, int k) const {
  if (i[k] == 0) return 0.0;
  return migration_[static_cast<std::size_t>(k)].at_lattice(i, static_cast<double>(scale_.n));
}

double RateSpec::fission(const Composition& i) const {
  return fission_.at_lattice(i, static_cast<double>(scale_.n));
}

double RateSpec::extinction(const Composition& i) const {
  const double n = static_cast<double>(scale_.n);
  double denom = static_cast<double>(scale_.m);
  if (mode_ == ExtinctionScaling::kDensity) denom *= std::pow(n, ell_);
  return extinction_.at_lattice(i, n) / denom;
}

// --- bounds ----------------------------------------------------------------

bool BoundCheckReport::pass() const { return violation() == nullptr; }

const BoundCheckEntry* BoundCheckReport::violation() const {
  for (const auto& e : entries) {
    if (!e.pass) return &e;
  }
  return nullptr;
}

std::string BoundCheckReport::summary() const {
  std::ostringstream os;
  for (const auto& e : entries) {
    os << (e.pass ? "ok   " : "FAIL ") << e.function << ": sup=" << e.sup << " at i=("
       << e.argsup.to_string() << ") bound=" << e.bound << "\n";
  }
  return os.str();
}

BoundCheckReport rate_bounds_check(const RateSpec& rates, const FissionLaw& law,
                                   const RateBounds& bounds, const Composition& upper) {
  const int ell = rates.ell();
  if (upper.ell() != ell) fail(ErrorCode::kContract, "bound box dimension mismatch");
  std::uint64_t total = 1;
  for (int k = 0; k < ell; ++k) {
    total *= static_cast<std::uint64_t>(upper[k] + 1);
    if (total > 50'000'000ULL) fail(ErrorCode::kContract, "bound-check box too large to scan");
  }

  BoundCheckReport report;
  const double n = static_cast<double>(rates.scale().n);
  const double m = static_cast<double>(rates.scale().m);
  std::vector<BoundCheckEntry> individual(static_cast<std::size_t>(ell));
  for (int k = 0; k < ell; ++k) {
    individual[static_cast<std::size_t>(k)].function =
        "individual[" + std::to_string(k + 1) + "]: i_k(beta+delta+mu)/n";
    individual[static_cast<std::size_t>(k)].bound = bounds.individual;
    individual[static_cast<std::size_t>(k)].sup = -1.0;
  }
  BoundCheckEntry fission{"fission: phi", -1.0, Composition(ell), bounds.fission, true};
  BoundCheckEntry extinction{"extinction: m*epsilon", -1.0, Composition(ell), bounds.extinction,
                             true};

  BoundCheckEntry negative{"nonnegativity: -min rate", 0.0, Composition(ell), 0.0, true};
  auto watch_sign = [&](double v, const Composition& at) {
    if (-v > negative.sup) {
      negative.sup = -v;
      negative.argsup = at;
    }
  };

  Composition i(ell);
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    std::uint64_t rem = idx;
    for (int k = 0; k < ell; ++k) {
      const auto side = static_cast<std::uint64_t>(upper[k] + 1);
      i.set(k, static_cast<std::int64_t>(rem % side));
      rem /= side;
    }
    if (i.is_zero()) continue;
    ++report.points_scanned;
    for (int k = 0; k < ell; ++k) {
      watch_sign(rates.birth(i, k), i);
      watch_sign(rates.death(i, k), i);
      watch_sign(rates.migration(i, k), i);
      const double v =
          static_cast<double>(i[k]) * (rates.birth(i, k) + rates.death(i, k) + rates.migration(i, k)) / n;
      auto& e = individual[static_cast<std::size_t>(k)];
      if (v > e.sup) {
        e.sup = v;
        e.argsup = i;
      }
    }
    watch_sign(rates.fission(i), i);
    watch_sign(rates.extinction(i), i);
    if (const double f = rates.fission(i); f > fission.sup) {
      fission.sup = f;
      fission.argsup = i;
    }
    if (const double x = m * rates.extinction(i); x > extinction.sup) {
      extinction.sup = x;
      extinction.argsup = i;
    }
  }
  for (auto& e : individual) {
    e.pass = e.sup <= e.bound;
    report.entries.push_back(e);
  }
  fission.pass = fission.sup <= fission.bound;
  extinction.pass = extinction.sup <= extinction.bound;
  report.entries.push_back(fission);
  report.entries.push_back(extinction);
  negative.pass = negative.sup <= 0.0;
  report.entries.push_back(negative);
  if (bounds.pieces) {
    BoundCheckEntry pieces{"fission pieces: b", static_cast<double>(law.max_pieces()), upper,
                           static_cast<double>(*bounds.pieces), true};
    pieces.pass = law.max_pieces() <= *bounds.pieces;
    report.entries.push_back(pieces);
  }
  for (const auto& e : report.entries) {
    if (!(e.sup == e.sup)) fail(ErrorCode::kBoundViolation, e.function + " evaluates to NaN");
  }
  return report;
}

}  // namespace groupsel
