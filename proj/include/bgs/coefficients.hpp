#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace bgs::coefficients {

enum class Kind : std::uint8_t { Constant, ClampedAffine, TanhBlend };

Kind parse_kind(const std::string& name);
std::string kind_name(Kind kind);

/// One scalar law w -> value.
///   Constant:      value
///   ClampedAffine: clamp(offset + slope*w, lower, upper)
///   TanhBlend:     lower + (upper - lower) * (1 + tanh(w)) / 2
struct Law {
  Kind kind = Kind::Constant;
  double value = 1.0;
  double offset = 1.0;
  double slope = 0.0;
  double lower = 1.0;
  double upper = 1.0;

  static Law constant(double v);
  static Law clamped_affine(double offset, double slope, double lower, double upper);
  static Law tanh_blend(double lower, double upper);

  [[nodiscard]] double operator()(double w) const;
  /// Tightest bounds implied by the parameters.
  [[nodiscard]] double natural_min() const;
  [[nodiscard]] double natural_max() const;
  [[nodiscard]] double natural_lipschitz() const;
};

/// Temperature-dependent viscosity and conductivity together with their
/// declared bounds [gamma0, gamma1], [k0, k1] and Lipschitz constants l1, l2.
class CoefficientModel {
 public:
  /// Declared bounds and Lipschitz constants default to the natural ones.
  CoefficientModel(Law viscosity, Law conductivity);
  /// Explicit declarations must enclose the natural bounds and dominate the
  /// natural Lipschitz constants; throws ConfigError otherwise.
  CoefficientModel(Law viscosity, Law conductivity, double gamma0, double gamma1, double k0,
                   double k1, double l1, double l2);

  static CoefficientModel constant(double gamma, double k) {
    return {Law::constant(gamma), Law::constant(k)};
  }

  [[nodiscard]] const Law& viscosity() const { return viscosity_; }
  [[nodiscard]] const Law& conductivity() const { return conductivity_; }
  [[nodiscard]] double gamma0() const { return gamma0_; }
  [[nodiscard]] double gamma1() const { return gamma1_; }
  [[nodiscard]] double k0() const { return k0_; }
  [[nodiscard]] double k1() const { return k1_; }
  [[nodiscard]] double l1() const { return l1_; }
  [[nodiscard]] double l2() const { return l2_; }

  /// Returns a model whose viscosity is shifted by +delta (bounds follow).
  [[nodiscard]] CoefficientModel with_viscosity_shift(double delta) const;
  /// Returns a model with both laws scaled by factor (bounds follow).
  [[nodiscard]] CoefficientModel scaled(double gamma_factor, double k_factor) const;

 private:
  void validate() const;

  Law viscosity_;
  Law conductivity_;
  double gamma0_, gamma1_, k0_, k1_, l1_, l2_;
};

/// Throws InputError for non-finite w.
double eval_viscosity(const CoefficientModel& model, double w);
double eval_conductivity(const CoefficientModel& model, double w);

struct AuditReport {
  double max_violation_bounds = 0.0;  // <= 0 means no violation
  double empirical_l1 = 0.0;
  double empirical_l2 = 0.0;
  bool lipschitz_ok = true;
  [[nodiscard]] bool passed() const { return max_violation_bounds <= 0.0 && lipschitz_ok; }
};

/// Samples both laws on a uniform grid of `samples` points in [-50, 50] plus
/// fixed-seed random pairs, and reports the worst bound violation and the
/// largest difference quotients.
AuditReport audit_bounds_and_lipschitz(const CoefficientModel& model, std::size_t samples,
                                       std::uint64_t seed = 42);

}  // namespace bgs::coefficients
