#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bgs/coefficients.hpp"
#include "bgs/forms.hpp"
#include "bgs/solver.hpp"

namespace bgs::oracles {

using fem::Vec2;
using mesh::Point;

// ---------------------------------------------------------------------------
// Manufactured solution on the unit square with Gamma1 = {x = 0}:
//   psi = x^2 (1-x)^2 sin^2(pi y) e^{-t},  z = (d psi/dy, -d psi/dx)
//   w   = x sin(pi y) e^{-t}
//   P   = cos(pi x) cos(pi y) e^{-t}
// Forcings are built from these fields with fourth-order central differences.

struct FiniteDifferenceSteps {
  double inner = 1e-5;  // first derivatives of the closed-form fields
  double outer = 1e-3;  // derivative of an already differenced quantity
};

class MmsProblem {
 public:
  MmsProblem(coefficients::CoefficientModel model, double beta, Vec2 gravity, double buoyancy_sign = 1.0,
             FiniteDifferenceSteps steps = {});

  static Vec2 velocity(const Point& p, double t);
  static double vorticity(const Point& p, double t);  // closed form, -Laplacian(psi)
  static double temperature(const Point& p, double t);
  static Vec2 temperature_gradient(const Point& p, double t);  // closed form
  static double head(const Point& p, double t);
  static double stream(const Point& p, double t);

  /// dz/dt + curl(gamma(w) rot z) + rot z (e3 x z) + sign*beta*w*g - grad P.
  [[nodiscard]] Vec2 f1(const Point& p, double t) const;
  /// dw/dt - div(k(w) grad w) + z . grad w.
  [[nodiscard]] double f2(const Point& p, double t) const;
  /// Head datum on Gamma1: the trace of P.
  [[nodiscard]] double v1(const Point& p, double t) const;
  /// Flux datum on Gamma2: k(w) dw/dn with the outward normal.
  [[nodiscard]] double v2(const Point& p, double t) const;

  /// Finite-difference vorticity, as used inside f1.
  [[nodiscard]] double vorticity_fd(const Point& p, double t) const;
  [[nodiscard]] double divergence_fd(const Point& p, double t) const;

  [[nodiscard]] solver::ProblemData problem() const;
  [[nodiscard]] const coefficients::CoefficientModel& model() const { return model_; }
  [[nodiscard]] double beta() const { return beta_; }
  [[nodiscard]] Vec2 gravity() const { return gravity_; }

 private:
  coefficients::CoefficientModel model_;
  double beta_;
  Vec2 gravity_;
  double sign_;
  FiniteDifferenceSteps h_;
};

/// Outward unit normal of the unit square at a boundary point (edge interiors).
Vec2 unit_square_normal(const Point& p);

solver::ProblemData make_mms_problem(const coefficients::CoefficientModel& model, double beta, Vec2 gravity);

/// Zero forcing and boundary data; the manufactured fields at t = 0 as
/// initial data. Used for decay and contraction experiments.
solver::ProblemData make_decay_problem(const coefficients::CoefficientModel& model, double beta, Vec2 gravity);

/// Bottom-heated cavity: unit heat flux on the bottom side, zero elsewhere.
solver::ProblemData make_cavity_problem(const coefficients::CoefficientModel& model, double beta, Vec2 gravity);

// ---------------------------------------------------------------------------
// Error norms against the manufactured fields.

struct FieldErrors {
  double velocity_l2 = 0.0;
  double velocity_rot = 0.0;
  double temperature_l2 = 0.0;
  double head_l2 = 0.0;
};

FieldErrors mms_errors(const fem::FunctionSpaces& spaces, const solver::State& state, double t);

// ---------------------------------------------------------------------------

struct StudyLevel {
  std::size_t n = 0;  // cells per side
  FieldErrors errors;
  double seconds = 0.0;
};

struct StudyReport {
  std::vector<StudyLevel> levels;
  /// rates[k] compares level k and k+1: log2(e_k / e_{k+1}).
  std::vector<FieldErrors> rates;
  bool rates_met = false;
  bool strictly_decreasing = false;
  [[nodiscard]] bool passed() const { return rates_met && strictly_decreasing; }
};

struct RateTargets {
  double velocity_l2 = 2.5;
  double velocity_rot = 1.6;
  double temperature_l2 = 1.6;
  double head_l2 = 1.6;
};

struct ConvergenceOptions {
  std::size_t levels = 3;
  std::size_t coarse_n = 4;
  double dt = 1e-3;
  double t_end = 0.1;
  double beta = 1.0;
  Vec2 gravity{0.0, -1.0};
  solver::SolverConfig solver;  // dt/t_end overwritten
  RateTargets targets;
  unsigned threads = 1;
};

double rate(double coarse, double fine);

/// Throws ConfigError when fewer than three levels are requested.
StudyReport convergence_study(const coefficients::CoefficientModel& model, const ConvergenceOptions& options);

/// Errors of the nodal interpolants of the exact fields at time t (no time
/// stepping); the head is interpolated unconstrained.
StudyReport interpolation_study(std::size_t levels, std::size_t coarse_n, double t);

// ---------------------------------------------------------------------------

struct CauchyReport {
  std::vector<double> velocity;     // e_k, interpolate-up path
  std::vector<double> temperature;  // e_k, interpolate-up path
  std::vector<double> velocity_quadrature;     // e_k, fine-mesh quadrature path
  std::vector<double> temperature_quadrature;
  double max_ratio_velocity = 0.0;
  double max_ratio_temperature = 0.0;
  double ratio_limit = 0.6;
  [[nodiscard]] bool passed() const {
    return max_ratio_velocity <= ratio_limit && max_ratio_temperature <= ratio_limit;
  }
};

struct CauchyOptions {
  std::size_t levels = 3;
  std::size_t coarse_n = 4;
  double dt = 1e-2;
  double t_end = 0.1;
  mesh::SideSet gamma1_sides{mesh::Side::Left};
  solver::SolverConfig solver;
  unsigned threads = 1;
};

/// Velocity and temperature differences in L2(0,T;L2) between consecutive
/// nested levels (trapezoidal rule in time).
CauchyReport cauchy_study(const solver::ProblemData& problem, const CauchyOptions& options);

/// Prolongation of coarse fields to the once-refined spaces (nested spaces,
/// so this is exact). `fine` must come from refine_uniform of `coarse`.
fem::FieldVector prolongate(const fem::FunctionSpaces& coarse, const fem::FunctionSpaces& fine,
                            const fem::FieldVector& field);

/// ||coarse - fine||_{L2} integrated on the fine mesh, evaluating the coarse
/// field through the parent element.
double difference_on_fine(const fem::FunctionSpaces& coarse, const fem::FunctionSpaces& fine,
                          const fem::FieldVector& coarse_field, const fem::FieldVector& fine_field);

// ---------------------------------------------------------------------------

struct ContractionReport {
  std::vector<double> t;
  std::vector<double> D;      // |z1 - z2|^2 + |w1 - w2|^2
  std::vector<double> bound;  // D(0) exp(sum (M + N) dt) (1 + 1e-6)
  std::vector<double> Re_plus_Ra;
  double worst_margin = 0.0;  // min over steps of (bound - D) / bound
  bool gronwall_holds = true;
  bool monotone = true;        // D non-increasing at every step
  bool condition_every_step = true;  // Re + Ra < 1 on the baseline
  bool zero_forcing = false;
  bool final_not_above_initial = true;
  bool expect_monotone = false;
  [[nodiscard]] bool passed() const {
    bool ok = gronwall_holds;
    if (expect_monotone) ok = ok && monotone;
    if (zero_forcing && condition_every_step) ok = ok && final_not_above_initial;
    return ok;
  }
};

struct ContractionOptions {
  double delta = 1e-3;
  std::uint64_t seed = 42;
  bool zero_forcing = false;
  /// Assert monotone decay of D (meaningful for constant coefficients and
  /// zero forcing only).
  bool expect_monotone = false;
};

/// Runs a baseline and a perturbed trajectory and checks the Gronwall bound
/// with M(t) = beta|g| + l1/(2 gamma0 c1) |grad z|^2 + l2/(2 k0 c1') |grad w|^2
/// and N = beta|g|, norms taken from the baseline run.
ContractionReport contraction_study(const fem::FunctionSpaces& spaces, const solver::ProblemData& problem,
                                    const solver::SolverConfig& config, const ContractionOptions& options);

// ---------------------------------------------------------------------------

struct AuditEntry {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool passed = true;
};

struct AuditReport {
  std::vector<AuditEntry> entries;
  double c1 = 0.0;
  double c1_prime = 0.0;
  double continuity_constant = 0.0;
  double dual_norm_constant = 0.0;
  [[nodiscard]] bool passed() const;
  [[nodiscard]] const AuditEntry* find(const std::string& name) const;
};

/// Structural audit of the assembled forms on `trials` fixed-seed random
/// fields: skew-symmetry, symmetry, coercivity, continuity and dual-norm
/// bounds, linearity in the coefficient. Violations are report entries.
AuditReport check_forms(const fem::FunctionSpaces& spaces, const coefficients::CoefficientModel& model,
                        std::size_t trials, std::uint64_t seed = 42);

}  // namespace bgs::oracles
