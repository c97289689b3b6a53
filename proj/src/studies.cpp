#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <string>

#include "bgs/errors.hpp"
#include "bgs/oracles.hpp"

namespace bgs::oracles {

using fem::FieldVector;
using fem::FunctionSpaces;
using fem::SpaceId;

namespace {

mesh::Mesh coarse_square(std::size_t n, mesh::SideSet gamma1 = mesh::SideSet{mesh::Side::Left}) {
  return mesh::build_rectangle_mesh(n, n, gamma1);
}

// Nested hierarchy: level 0 is n x n, each further level is one red refinement.
std::vector<FunctionSpaces> hierarchy(std::size_t levels, std::size_t coarse_n, mesh::SideSet gamma1,
                                      unsigned threads) {
  std::vector<FunctionSpaces> out;
  mesh::Mesh m = coarse_square(coarse_n, gamma1);
  for (std::size_t k = 0; k < levels; ++k) {
    if (k > 0) m = mesh::refine_uniform(m);
    out.push_back(fem::build_spaces(m, threads));
  }
  return out;
}

void fill_rates(StudyReport& r, const RateTargets& targets) {
  r.rates.clear();
  for (std::size_t k = 0; k + 1 < r.levels.size(); ++k) {
    const auto& a = r.levels[k].errors;
    const auto& b = r.levels[k + 1].errors;
    r.rates.push_back({rate(a.velocity_l2, b.velocity_l2), rate(a.velocity_rot, b.velocity_rot),
                       rate(a.temperature_l2, b.temperature_l2), rate(a.head_l2, b.head_l2)});
  }
  r.strictly_decreasing = true;
  for (std::size_t k = 0; k + 1 < r.levels.size(); ++k) {
    const auto& a = r.levels[k].errors;
    const auto& b = r.levels[k + 1].errors;
    r.strictly_decreasing = r.strictly_decreasing && b.velocity_l2 < a.velocity_l2 &&
                            b.velocity_rot < a.velocity_rot && b.temperature_l2 < a.temperature_l2 &&
                            b.head_l2 < a.head_l2;
  }
  if (r.rates.empty()) {
    r.rates_met = false;
    return;
  }
  const auto& f = r.rates.back();
  r.rates_met = f.velocity_l2 >= targets.velocity_l2 && f.velocity_rot >= targets.velocity_rot &&
                f.temperature_l2 >= targets.temperature_l2 && f.head_l2 >= targets.head_l2;
}

std::array<double, 3> barycentric(const mesh::Mesh& m, std::size_t tri, const mesh::Point& p) {
  const auto& t = m.triangles[tri];
  const mesh::Point& a = m.vertices[t[0]];
  const mesh::Point& b = m.vertices[t[1]];
  const mesh::Point& c = m.vertices[t[2]];
  const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
  const double l1 = ((p.x - a.x) * (c.y - a.y) - (c.x - a.x) * (p.y - a.y)) / det;
  const double l2 = ((b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y)) / det;
  return {1.0 - l1 - l2, l1, l2};
}

void require_nested(const FunctionSpaces& coarse, const FunctionSpaces& fine) {
  if (fine.mesh.parent.size() != fine.mesh.triangles.size() || fine.mesh.generation != coarse.mesh.generation + 1 ||
      4 * coarse.mesh.triangles.size() != fine.mesh.triangles.size()) {
    throw DimensionError("fine spaces are not a single refinement of the coarse spaces");
  }
}

double l2_norm2(const fem::SparseOperator& M, const Eigen::VectorXd& v) { return v.dot(M * v); }

double trapezoid(const std::vector<double>& values, double dt) {
  if (values.size() < 2) return 0.0;
  double s = 0.5 * (values.front() + values.back());
  for (std::size_t i = 1; i + 1 < values.size(); ++i) s += values[i];
  return s * dt;
}

}  // namespace

double rate(double coarse, double fine) { return std::log2(coarse / fine); }

StudyReport convergence_study(const coefficients::CoefficientModel& model, const ConvergenceOptions& options) {
  if (options.levels < 3) {
    throw ConfigError("convergence study needs at least 3 levels (got " + std::to_string(options.levels) + ")");
  }
  if (options.coarse_n == 0) throw ConfigError("convergence study: coarse_n must be positive");
  solver::SolverConfig cfg = options.solver;
  cfg.dt = options.dt;
  cfg.t_end = options.t_end;
  cfg.validate();
  const solver::ProblemData problem = MmsProblem(model, options.beta, options.gravity).problem();

  StudyReport report;
  mesh::Mesh m = coarse_square(options.coarse_n);
  for (std::size_t k = 0; k < options.levels; ++k) {
    if (k > 0) m = mesh::refine_uniform(m);
    const auto start = std::chrono::steady_clock::now();
    const FunctionSpaces spaces = fem::build_spaces(m, options.threads);
    solver::Trajectory traj;
    try {
      traj = solver::run(spaces, problem, cfg, {}, false);
    } catch (const DivergenceError& e) {
      throw DivergenceError("level " + std::to_string(k) + ": " + e.what());
    } catch (const SolverError& e) {
      throw SolverError("level " + std::to_string(k) + ": " + e.what());
    }
    const solver::State& final_state = traj.states.back();
    StudyLevel level;
    level.n = options.coarse_n << k;
    level.errors = mms_errors(spaces, final_state, final_state.t);
    level.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.levels.push_back(level);
  }
  fill_rates(report, options.targets);
  return report;
}

StudyReport interpolation_study(std::size_t levels, std::size_t coarse_n, double t) {
  StudyReport report;
  mesh::Mesh m = coarse_square(coarse_n);
  for (std::size_t k = 0; k < levels; ++k) {
    if (k > 0) m = mesh::refine_uniform(m);
    const auto start = std::chrono::steady_clock::now();
    const FunctionSpaces spaces = fem::build_spaces(m);
    solver::State s;
    s.t = t;
    s.z = fem::interpolate_velocity(spaces, MmsProblem::velocity, t, true);
    s.w = fem::interpolate_scalar(spaces, SpaceId::Temperature, MmsProblem::temperature, t, true);
    s.P = fem::interpolate_scalar(spaces, SpaceId::Head, MmsProblem::head, t, false);
    StudyLevel level;
    level.n = coarse_n << k;
    level.errors = mms_errors(spaces, s, t);
    level.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.levels.push_back(level);
  }
  fill_rates(report, RateTargets{});
  return report;
}

// ---------------------------------------------------------------------------

FieldVector prolongate(const FunctionSpaces& coarse, const FunctionSpaces& fine, const FieldVector& field) {
  require_nested(coarse, fine);
  fem::require_space(coarse, field, field.space, "prolongate");
  FieldVector out = FieldVector::zeros(fine, field.space);
  const bool velocity = field.space == SpaceId::Velocity;
  for (std::size_t t = 0; t < fine.mesh.triangles.size(); ++t) {
    const std::size_t parent = fine.mesh.parent[t];
    const std::size_t nodes = velocity ? 6 : 3;
    for (std::size_t a = 0; a < nodes; ++a) {
      const std::size_t node = velocity ? fine.p2_nodes[t][a] : fine.mesh.triangles[t][a];
      const mesh::Point& p = velocity ? fine.p2_coords[node] : fine.mesh.vertices[node];
      const auto lambda = barycentric(coarse.mesh, parent, p);
      if (velocity) {
        const auto s = fem::eval_velocity(coarse, field.values, parent, lambda);
        out.values[2 * node] = s.value[0];
        out.values[2 * node + 1] = s.value[1];
      } else {
        out.values[node] = fem::eval_p1(coarse, field.values, parent, lambda).value;
      }
    }
  }
  return out;
}

double difference_on_fine(const FunctionSpaces& coarse, const FunctionSpaces& fine, const FieldVector& coarse_field,
                          const FieldVector& fine_field) {
  require_nested(coarse, fine);
  fem::require_space(coarse, coarse_field, coarse_field.space, "difference_on_fine");
  fem::require_space(fine, fine_field, coarse_field.space, "difference_on_fine");
  const bool velocity = coarse_field.space == SpaceId::Velocity;
  double sum = 0.0;
  for (std::size_t t = 0; t < fine.elements.size(); ++t) {
    const auto& ed = fine.elements[t];
    const std::size_t parent = fine.mesh.parent[t];
    for (std::size_t q = 0; q < fem::kTriangleQuadPoints; ++q) {
      const auto lambda = barycentric(coarse.mesh, parent, ed.qp_point[q]);
      if (velocity) {
        const auto c = fem::eval_velocity(coarse, coarse_field.values, parent, lambda);
        const auto f = fem::velocity_at_qp(fine, fine_field.values, t, q);
        const double d0 = c.value[0] - f.value[0], d1 = c.value[1] - f.value[1];
        sum += ed.qp_weight[q] * (d0 * d0 + d1 * d1);
      } else {
        const double d = fem::eval_p1(coarse, coarse_field.values, parent, lambda).value -
                         fem::p1_at_qp(fine, fine_field.values, t, q).value;
        sum += ed.qp_weight[q] * d * d;
      }
    }
  }
  return std::sqrt(sum);
}

CauchyReport cauchy_study(const solver::ProblemData& problem, const CauchyOptions& options) {
  if (options.levels < 3) {
    throw ConfigError("cauchy study needs at least 3 levels (got " + std::to_string(options.levels) + ")");
  }
  solver::SolverConfig cfg = options.solver;
  cfg.dt = options.dt;
  cfg.t_end = options.t_end;
  cfg.validate();

  const auto spaces = hierarchy(options.levels, options.coarse_n, options.gamma1_sides, options.threads);
  std::vector<solver::Trajectory> runs;
  for (std::size_t k = 0; k < spaces.size(); ++k) {
    try {
      runs.push_back(solver::run(spaces[k], problem, cfg));
    } catch (const SolverError& e) {
      throw SolverError("level " + std::to_string(k) + ": " + e.what());
    }
  }

  CauchyReport report;
  for (std::size_t k = 0; k + 1 < spaces.size(); ++k) {
    const auto& c = spaces[k];
    const auto& f = spaces[k + 1];
    const auto Mz = fem::assemble_mass(f, SpaceId::Velocity);
    const auto Mw = fem::assemble_mass(f, SpaceId::Temperature);
    std::vector<double> vz, vw, qz, qw;
    const std::size_t steps = runs[k].states.size();
    for (std::size_t n = 0; n < steps; ++n) {
      const auto& sc = runs[k].states[n];
      const auto& sf = runs[k + 1].states[n];
      vz.push_back(l2_norm2(Mz, prolongate(c, f, sc.z).values - sf.z.values));
      vw.push_back(l2_norm2(Mw, prolongate(c, f, sc.w).values - sf.w.values));
      qz.push_back(std::pow(difference_on_fine(c, f, sc.z, sf.z), 2));
      qw.push_back(std::pow(difference_on_fine(c, f, sc.w, sf.w), 2));
    }
    report.velocity.push_back(std::sqrt(trapezoid(vz, cfg.dt)));
    report.temperature.push_back(std::sqrt(trapezoid(vw, cfg.dt)));
    report.velocity_quadrature.push_back(std::sqrt(trapezoid(qz, cfg.dt)));
    report.temperature_quadrature.push_back(std::sqrt(trapezoid(qw, cfg.dt)));
  }
  for (std::size_t k = 0; k + 1 < report.velocity.size(); ++k) {
    report.max_ratio_velocity = std::max(report.max_ratio_velocity, report.velocity[k + 1] / report.velocity[k]);
    report.max_ratio_temperature =
        std::max(report.max_ratio_temperature, report.temperature[k + 1] / report.temperature[k]);
  }
  return report;
}

// ---------------------------------------------------------------------------

ContractionReport contraction_study(const FunctionSpaces& spaces, const solver::ProblemData& problem,
                                    const solver::SolverConfig& config, const ContractionOptions& options) {
  if (!(options.delta >= 0.0) || !std::isfinite(options.delta)) {
    throw ConfigError("contraction study: delta must be finite and nonnegative");
  }
  config.validate();
  const solver::State initial = solver::initialize_state(spaces, problem);

  // Random direction with the essential constraints preserved, unit in L2.
  const auto Mz = fem::assemble_mass(spaces, SpaceId::Velocity);
  const auto Mw = fem::assemble_mass(spaces, SpaceId::Temperature);
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd dz(spaces.velocity_dofs()), dw(spaces.temperature_dofs());
  for (Eigen::Index i = 0; i < dz.size(); ++i) dz[i] = normal(rng);
  for (Eigen::Index i = 0; i < dw.size(); ++i) dw[i] = normal(rng);
  fem::apply_essential(spaces, SpaceId::Velocity, dz);
  fem::apply_essential(spaces, SpaceId::Temperature, dw);
  const double norm = std::sqrt(l2_norm2(Mz, dz) + l2_norm2(Mw, dw));
  solver::State perturbed = initial;
  perturbed.z.values += (options.delta / norm) * dz;
  perturbed.w.values += (options.delta / norm) * dw;

  const solver::Trajectory base = solver::run_from(spaces, problem, config, initial);
  const solver::Trajectory pert = solver::run_from(spaces, problem, config, perturbed);

  const auto& model = problem.coefficients;
  const auto& k = config.constants;
  const double N = problem.beta * problem.gravity_sup;
  const double az = model.l1() / (2.0 * model.gamma0() * k.c1);
  const double aw = model.l2() / (2.0 * model.k0() * k.c1_prime);

  ContractionReport r;
  r.zero_forcing = options.zero_forcing;
  r.expect_monotone = options.expect_monotone;
  r.worst_margin = 1.0;
  double exponent = 0.0;
  for (std::size_t n = 0; n < base.states.size(); ++n) {
    const auto& a = base.states[n];
    const auto& b = pert.states[n];
    const double D = l2_norm2(Mz, a.z.values - b.z.values) + l2_norm2(Mw, a.w.values - b.w.values);
    const auto& diag = base.diagnostics[n];
    if (n > 0) {
      // Right-endpoint sum: the step into t^n uses the state at t^n.
      const double M = N + az * diag.grad_z_norm2 + aw * diag.grad_w_norm2;
      exponent += (M + N) * config.dt;
    }
    r.t.push_back(a.t);
    r.D.push_back(D);
    r.Re_plus_Ra.push_back(diag.Re_plus_Ra);
    const double bound = r.D.front() * std::exp(exponent) * (1.0 + 1e-6);
    r.bound.push_back(bound);
    if (D > bound) r.gronwall_holds = false;
    if (bound > 0.0) r.worst_margin = std::min(r.worst_margin, (bound - D) / bound);
    if (n > 0 && D > r.D[n - 1]) r.monotone = false;
    if (!(diag.Re_plus_Ra < 1.0)) r.condition_every_step = false;
  }
  r.final_not_above_initial = r.D.back() <= r.D.front();
  return r;
}

}  // namespace bgs::oracles
