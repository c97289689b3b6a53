#include "bgs/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "bgs/errors.hpp"

namespace bgs::coefficients {

Kind parse_kind(const std::string& name) {
  if (name == "constant") return Kind::Constant;
  if (name == "clamped_affine") return Kind::ClampedAffine;
  if (name == "tanh_blend") return Kind::TanhBlend;
  throw ConfigError("unknown coefficient kind '" + name + "'");
}

std::string kind_name(Kind kind) {
  switch (kind) {
    case Kind::Constant: return "constant";
    case Kind::ClampedAffine: return "clamped_affine";
    case Kind::TanhBlend: return "tanh_blend";
  }
  return "?";
}

Law Law::constant(double v) {
  Law l;
  l.kind = Kind::Constant;
  l.value = l.lower = l.upper = v;
  return l;
}

Law Law::clamped_affine(double offset, double slope, double lower, double upper) {
  Law l;
  l.kind = Kind::ClampedAffine;
  l.offset = offset;
  l.slope = slope;
  l.lower = lower;
  l.upper = upper;
  return l;
}

Law Law::tanh_blend(double lower, double upper) {
  Law l;
  l.kind = Kind::TanhBlend;
  l.lower = lower;
  l.upper = upper;
  return l;
}

double Law::operator()(double w) const {
  switch (kind) {
    case Kind::Constant: return value;
    case Kind::ClampedAffine: return std::clamp(offset + slope * w, lower, upper);
    case Kind::TanhBlend: return lower + (upper - lower) * 0.5 * (1.0 + std::tanh(w));
  }
  return value;
}

double Law::natural_min() const { return kind == Kind::Constant ? value : lower; }
double Law::natural_max() const { return kind == Kind::Constant ? value : upper; }

double Law::natural_lipschitz() const {
  switch (kind) {
    case Kind::Constant: return 0.0;
    case Kind::ClampedAffine: return std::abs(slope);
    case Kind::TanhBlend: return 0.5 * (upper - lower);  // sup of sech^2 is 1
  }
  return 0.0;
}

namespace {

void check_law(const Law& law, const char* what) {
  const std::string name(what);
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(law.value) || !finite(law.offset) || !finite(law.slope) || !finite(law.lower) ||
      !finite(law.upper)) {
    throw ConfigError(name + ": parameters must be finite");
  }
  if (!(law.natural_min() > 0.0)) throw ConfigError(name + ": lower bound must be positive");
  if (law.natural_min() > law.natural_max()) throw ConfigError(name + ": lower bound exceeds upper bound");
}

}  // namespace

CoefficientModel::CoefficientModel(Law viscosity, Law conductivity)
    : CoefficientModel(viscosity, conductivity, viscosity.natural_min(), viscosity.natural_max(),
                       conductivity.natural_min(), conductivity.natural_max(),
                       viscosity.natural_lipschitz(), conductivity.natural_lipschitz()) {}

CoefficientModel::CoefficientModel(Law viscosity, Law conductivity, double gamma0, double gamma1,
                                   double k0, double k1, double l1, double l2)
    : viscosity_(viscosity),
      conductivity_(conductivity),
      gamma0_(gamma0),
      gamma1_(gamma1),
      k0_(k0),
      k1_(k1),
      l1_(l1),
      l2_(l2) {
  check_law(viscosity_, "viscosity");
  check_law(conductivity_, "conductivity");
  validate();
}

void CoefficientModel::validate() const {
  if (!(gamma0_ > 0.0 && gamma0_ <= gamma1_)) throw ConfigError("need 0 < gamma0 <= gamma1");
  if (!(k0_ > 0.0 && k0_ <= k1_)) throw ConfigError("need 0 < k0 <= k1");
  if (!(l1_ >= 0.0 && l2_ >= 0.0)) throw ConfigError("Lipschitz constants must be nonnegative");
  if (gamma0_ > viscosity_.natural_min() || gamma1_ < viscosity_.natural_max()) {
    throw ConfigError("declared viscosity bounds do not enclose the law's range");
  }
  if (k0_ > conductivity_.natural_min() || k1_ < conductivity_.natural_max()) {
    throw ConfigError("declared conductivity bounds do not enclose the law's range");
  }
  if (l1_ < viscosity_.natural_lipschitz()) throw ConfigError("declared l1 below the viscosity law's Lipschitz constant");
  if (l2_ < conductivity_.natural_lipschitz()) throw ConfigError("declared l2 below the conductivity law's Lipschitz constant");
}

namespace {

Law shift_law(Law law, double delta) {
  switch (law.kind) {
    case Kind::Constant: law.value += delta; law.lower += delta; law.upper += delta; break;
    case Kind::ClampedAffine: law.offset += delta; law.lower += delta; law.upper += delta; break;
    case Kind::TanhBlend: law.lower += delta; law.upper += delta; break;
  }
  return law;
}

Law scale_law(Law law, double s) {
  law.value *= s;
  law.offset *= s;
  law.slope *= s;
  law.lower *= s;
  law.upper *= s;
  return law;
}

}  // namespace

CoefficientModel CoefficientModel::with_viscosity_shift(double delta) const {
  return {shift_law(viscosity_, delta), conductivity_, gamma0_ + delta, gamma1_ + delta, k0_, k1_, l1_, l2_};
}

CoefficientModel CoefficientModel::scaled(double gamma_factor, double k_factor) const {
  return {scale_law(viscosity_, gamma_factor), scale_law(conductivity_, k_factor),
          gamma0_ * gamma_factor, gamma1_ * gamma_factor, k0_ * k_factor, k1_ * k_factor,
          l1_ * gamma_factor, l2_ * k_factor};
}

double eval_viscosity(const CoefficientModel& model, double w) {
  if (!std::isfinite(w)) throw InputError("eval_viscosity: non-finite temperature");
  return model.viscosity()(w);
}

double eval_conductivity(const CoefficientModel& model, double w) {
  if (!std::isfinite(w)) throw InputError("eval_conductivity: non-finite temperature");
  return model.conductivity()(w);
}

AuditReport audit_bounds_and_lipschitz(const CoefficientModel& model, std::size_t samples,
                                       std::uint64_t seed) {
  AuditReport r;
  r.max_violation_bounds = -std::numeric_limits<double>::infinity();
  if (samples < 2) samples = 2;

  std::vector<double> pts(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    pts[i] = -50.0 + 100.0 * static_cast<double>(i) / static_cast<double>(samples - 1);
  }

  auto bound_violation = [&](double w) {
    const double g = eval_viscosity(model, w);
    const double k = eval_conductivity(model, w);
    return std::max({model.gamma0() - g, g - model.gamma1(), model.k0() - k, k - model.k1()});
  };
  auto quotients = [&](double a, double b) {
    if (a == b) return;
    const double dg = std::abs(eval_viscosity(model, a) - eval_viscosity(model, b)) / std::abs(a - b);
    const double dk = std::abs(eval_conductivity(model, a) - eval_conductivity(model, b)) / std::abs(a - b);
    r.empirical_l1 = std::max(r.empirical_l1, dg);
    r.empirical_l2 = std::max(r.empirical_l2, dk);
  };

  for (double w : pts) r.max_violation_bounds = std::max(r.max_violation_bounds, bound_violation(w));
  for (std::size_t i = 0; i + 1 < samples; ++i) quotients(pts[i], pts[i + 1]);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> wide(-50.0, 50.0);
  std::uniform_real_distribution<double> offset(-1e-3, 1e-3);
  for (std::size_t i = 0; i < 4 * samples; ++i) {
    const double a = wide(rng);
    const double b = (i % 2 == 0) ? wide(rng) : a + offset(rng);
    r.max_violation_bounds = std::max({r.max_violation_bounds, bound_violation(a), bound_violation(b)});
    quotients(a, b);
  }
  r.lipschitz_ok = r.empirical_l1 <= model.l1() + 1e-10 && r.empirical_l2 <= model.l2() + 1e-10;
  return r;
}

}  // namespace bgs::coefficients
