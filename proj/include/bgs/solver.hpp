#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bgs/coefficients.hpp"
#include "bgs/forms.hpp"

namespace bgs::solver {

using fem::FieldVector;
using fem::FunctionSpaces;
using fem::Vec2;

struct ProblemData {
  coefficients::CoefficientModel coefficients = coefficients::CoefficientModel::constant(1.0, 1.0);
  double beta = 0.0;
  /// +1 puts +(beta w g, phi) on the left of the momentum equation.
  double buoyancy_sign = 1.0;
  std::function<Vec2(const mesh::Point&)> gravity = [](const mesh::Point&) { return Vec2{0.0, 0.0}; };
  double gravity_sup = 0.0;  // ||g||_inf
  fem::VectorFn f1 = [](const mesh::Point&, double) { return Vec2{0.0, 0.0}; };
  fem::ScalarFn f2 = [](const mesh::Point&, double) { return 0.0; };
  fem::ScalarFn v1 = [](const mesh::Point&, double) { return 0.0; };  // head on Gamma1
  fem::ScalarFn v2 = [](const mesh::Point&, double) { return 0.0; };  // flux datum on Gamma2
  fem::VectorFn z0 = [](const mesh::Point&, double) { return Vec2{0.0, 0.0}; };
  fem::ScalarFn w0 = [](const mesh::Point&, double) { return 0.0; };

  void set_constant_gravity(Vec2 g);
};

struct State {
  double t = 0.0;
  FieldVector z;
  FieldVector w;
  FieldVector P;
};

/// Constants entering Re(t) and Ra(t).
struct ReRaConstants {
  double c1 = 1.0;
  double c1_prime = 1.0;
  double d = 1.0;
  std::string source = "configured";
};

struct SolverConfig {
  double dt = 1e-2;
  double t_end = 1.0;
  std::size_t picard_max = 25;
  double picard_tol = 1e-10;
  bool picard_enabled = true;
  ReRaConstants constants;

  void validate() const;
  [[nodiscard]] std::size_t step_count() const;
};

struct Diagnostics {
  double t = 0.0;
  double kinetic = 0.0;        // |z|^2_{L2}
  double thermal = 0.0;        // |w|^2_{L2}
  double rot_seminorm2 = 0.0;  // |rot z|^2_{L2}
  double grad_w_norm2 = 0.0;   // |grad w|^2_{L2}
  double z_L4 = 0.0;
  double w_L4 = 0.0;
  double Re = 0.0;
  double Ra = 0.0;
  double Re_plus_Ra = 0.0;
  double div_residual = 0.0;  // Euclidean norm of D z
  std::size_t picard_iters = 0;
  // Not part of the CSV.
  double grad_z_norm2 = 0.0;  // |grad z|^2_{L2}
  bool uniqueness_condition = true;  // Re + Ra < 1
  bool picard_converged = true;
};

State initialize_state(const FunctionSpaces& spaces, const ProblemData& problem);

Diagnostics compute_diagnostics(const FunctionSpaces& spaces, const State& state,
                                const coefficients::CoefficientModel& model, const ReRaConstants& constants);

/// Holds time-independent operators and the symbolic factorizations for
/// repeated steps on one set of spaces.
class Stepper {
 public:
  Stepper(const FunctionSpaces& spaces, const ProblemData& problem, const SolverConfig& config);
  ~Stepper();
  Stepper(const Stepper&) = delete;
  Stepper& operator=(const Stepper&) = delete;

  /// Backward-Euler step with lagged nonlinearities and optional Picard
  /// refinement: temperature first, then the velocity/head saddle system.
  State step(const State& state, Diagnostics* diagnostics = nullptr);

  [[nodiscard]] const fem::SparseOperator& divergence() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

State step(const FunctionSpaces& spaces, const ProblemData& problem, const SolverConfig& config,
           const State& state, Diagnostics* diagnostics = nullptr);

struct Trajectory {
  std::vector<State> states;            // states[0] is the initial state
  std::vector<Diagnostics> diagnostics;  // diagnostics[n] belongs to states[n]
};

using StepObserver = std::function<void(std::size_t step, const State&, const Diagnostics&)>;

/// Runs ceil(t_end/dt) steps from the interpolated initial data. Set
/// keep_states=false to retain only the initial and final states.
Trajectory run(const FunctionSpaces& spaces, const ProblemData& problem, const SolverConfig& config,
               const StepObserver& observer = {}, bool keep_states = true);
/// Same, from a given initial state.
Trajectory run_from(const FunctionSpaces& spaces, const ProblemData& problem, const SolverConfig& config,
                    State initial, const StepObserver& observer = {}, bool keep_states = true);

struct EstimatedConstants {
  double c1 = 0.0;
  double c1_prime = 0.0;
  double d = 0.0;
};

/// Discrete surrogates for the coercivity constants (smallest generalized
/// eigenvalues against the H1 Gram on the constrained spaces, the velocity
/// restricted to discretely divergence-free fields) and a lower bound on the
/// L4-H1 Sobolev constant by multistart ascent. Dense; coarse meshes only.
EstimatedConstants estimate_constants(const FunctionSpaces& spaces, std::uint64_t seed = 42);

/// Orthonormal basis of the discretely divergence-free subspace of the
/// constrained velocity space, expressed in free-dof coordinates.
Eigen::MatrixXd divergence_free_basis(const FunctionSpaces& spaces);

/// Indices of the non-essential dofs of a space.
std::vector<std::size_t> free_dofs(const FunctionSpaces& spaces, fem::SpaceId id);

}  // namespace bgs::solver
