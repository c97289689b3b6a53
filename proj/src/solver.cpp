#include "bgs/solver.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "bgs/errors.hpp"

namespace bgs::solver {

using fem::SparseOperator;
using fem::SpaceId;
using Triplet = Eigen::Triplet<double>;

void ProblemData::set_constant_gravity(Vec2 g) {
  gravity = [g](const mesh::Point&) { return g; };
  gravity_sup = std::hypot(g[0], g[1]);
}

void SolverConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ConfigError("t_end must be positive");
  if (dt > t_end * (1.0 + 1e-12)) throw ConfigError("dt must not exceed t_end");
  if (picard_max < 1) throw ConfigError("picard_max must be at least 1");
  if (!(picard_tol > 0.0)) throw ConfigError("picard_tol must be positive");
  if (!(constants.c1 > 0.0 && constants.c1_prime > 0.0 && constants.d > 0.0)) {
    throw ConfigError("Re/Ra constants must be positive");
  }
}

std::size_t SolverConfig::step_count() const {
  return static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
}

std::vector<std::size_t> free_dofs(const FunctionSpaces& spaces, SpaceId id) {
  std::vector<std::size_t> out;
  const std::size_t n = spaces.dofs(id);
  for (std::size_t i = 0; i < n; ++i) {
    const bool fixed = (id == SpaceId::Velocity && spaces.velocity_fixed[i]) ||
                       (id == SpaceId::Temperature && spaces.temperature_fixed[i]);
    if (!fixed) out.push_back(i);
  }
  return out;
}

namespace {

// full index -> reduced index, or -1 for essential dofs
std::vector<long> reduction_map(const FunctionSpaces& spaces, SpaceId id) {
  std::vector<long> map(spaces.dofs(id), -1);
  long next = 0;
  for (std::size_t i : free_dofs(spaces, id)) map[i] = next++;
  return map;
}

long count_free(const std::vector<long>& map) {
  return static_cast<long>(std::count_if(map.begin(), map.end(), [](long v) { return v >= 0; }));
}

void append_reduced(const SparseOperator& A, const std::vector<long>& rmap, const std::vector<long>& cmap,
                    long row_offset, long col_offset, bool transpose, std::vector<Triplet>& out) {
  for (int k = 0; k < A.outerSize(); ++k) {
    for (SparseOperator::InnerIterator it(A, k); it; ++it) {
      const long r = rmap[static_cast<std::size_t>(it.row())];
      const long c = cmap[static_cast<std::size_t>(it.col())];
      if (r < 0 || c < 0) continue;
      if (transpose) {
        out.emplace_back(static_cast<int>(c + row_offset), static_cast<int>(r + col_offset), it.value());
      } else {
        out.emplace_back(static_cast<int>(r + row_offset), static_cast<int>(c + col_offset), it.value());
      }
    }
  }
}

SparseOperator reduce(const SparseOperator& A, const std::vector<long>& rmap, const std::vector<long>& cmap) {
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(A.nonZeros()));
  append_reduced(A, rmap, cmap, 0, 0, false, trips);
  SparseOperator R(count_free(rmap), count_free(cmap));
  R.setFromTriplets(trips.begin(), trips.end());
  R.makeCompressed();
  return R;
}

Eigen::VectorXd reduce(const Eigen::VectorXd& v, const std::vector<long>& map) {
  Eigen::VectorXd out(count_free(map));
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map[i] >= 0) out[map[i]] = v[static_cast<Eigen::Index>(i)];
  }
  return out;
}

Eigen::VectorXd expand(const Eigen::VectorXd& v, const std::vector<long>& map) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(map.size()));
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map[i] >= 0) out[static_cast<Eigen::Index>(i)] = v[map[i]];
  }
  return out;
}

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

using LU = Eigen::SparseLU<SparseOperator, Eigen::COLAMDOrdering<int>>;

Eigen::VectorXd solve_checked(LU& lu, bool& analyzed, const SparseOperator& A, const Eigen::VectorXd& b,
                              const char* stage) {
  if (!analyzed) {
    lu.analyzePattern(A);
    analyzed = true;
  }
  lu.factorize(A);
  if (lu.info() != Eigen::Success) {
    throw SolverError(std::string(stage) + ": factorization failed (" + lu.lastErrorMessage() + ")");
  }
  Eigen::VectorXd x = lu.solve(b);
  if (lu.info() != Eigen::Success) throw SolverError(std::string(stage) + ": solve failed");
  if (!all_finite(x)) throw DivergenceError(std::string(stage) + ": non-finite solution");
  const double bn = b.norm();
  const double res = (A * x - b).norm();
  if (res > 1e-6 * std::max(bn, 1e-300) && res > 1e-12) {
    std::ostringstream os;
    os << stage << ": singular or ill-conditioned system (relative residual " << res / std::max(bn, 1e-300) << ")";
    throw SolverError(os.str());
  }
  return x;
}

}  // namespace

State initialize_state(const FunctionSpaces& spaces, const ProblemData& problem) {
  State s;
  s.t = 0.0;
  s.z = fem::interpolate_velocity(spaces, problem.z0, 0.0, true);
  s.w = fem::interpolate_scalar(spaces, SpaceId::Temperature, problem.w0, 0.0, true);
  s.P = FieldVector::zeros(spaces, SpaceId::Head);
  return s;
}

Diagnostics compute_diagnostics(const FunctionSpaces& spaces, const State& state,
                                const coefficients::CoefficientModel& model, const ReRaConstants& k) {
  fem::require_space(spaces, state.z, SpaceId::Velocity, "compute_diagnostics");
  fem::require_space(spaces, state.w, SpaceId::Temperature, "compute_diagnostics");
  Diagnostics d;
  d.t = state.t;
  double z4 = 0.0, w4 = 0.0;
  for (std::size_t e = 0; e < spaces.elements.size(); ++e) {
    for (std::size_t q = 0; q < fem::kTriangleQuadPoints; ++q) {
      const double wq = spaces.elements[e].qp_weight[q];
      const fem::VelocitySample z = fem::velocity_at_qp(spaces, state.z.values, e, q);
      const fem::ScalarSample w = fem::p1_at_qp(spaces, state.w.values, e, q);
      const double z2 = z.value[0] * z.value[0] + z.value[1] * z.value[1];
      d.kinetic += wq * z2;
      d.thermal += wq * w.value * w.value;
      d.rot_seminorm2 += wq * z.rot() * z.rot();
      d.grad_w_norm2 += wq * (w.grad[0] * w.grad[0] + w.grad[1] * w.grad[1]);
      d.grad_z_norm2 += wq * (z.grad[0][0] * z.grad[0][0] + z.grad[0][1] * z.grad[0][1] +
                              z.grad[1][0] * z.grad[1][0] + z.grad[1][1] * z.grad[1][1]);
      z4 += wq * z2 * z2;
      w4 += wq * w.value * w.value * w.value * w.value;
    }
  }
  d.z_L4 = std::pow(z4, 0.25);
  d.w_L4 = std::pow(w4, 0.25);
  d.Re = 4.0 * k.d * d.z_L4 / (model.gamma0() * k.c1);
  d.Ra = 4.0 * k.d * k.d * d.w_L4 * d.w_L4 / (model.gamma0() * model.k0() * k.c1 * k.c1_prime);
  d.Re_plus_Ra = d.Re + d.Ra;
  d.uniqueness_condition = d.Re_plus_Ra < 1.0;
  return d;
}

// ---------------------------------------------------------------------------

struct Stepper::Impl {
  const FunctionSpaces& spaces;
  ProblemData problem;
  SolverConfig config;
  SparseOperator Mz, Mw, D, G;
  std::vector<long> vmap, tmap, hmap;
  long nvf = 0, nh = 0;
  LU lu_temperature, lu_saddle;
  bool temperature_analyzed = false, saddle_analyzed = false;

  Impl(const FunctionSpaces& s, const ProblemData& p, const SolverConfig& c)
      : spaces(s), problem(p), config(c) {
    config.validate();
    Mz = fem::assemble_mass(s, SpaceId::Velocity);
    Mw = fem::assemble_mass(s, SpaceId::Temperature);
    D = fem::assemble_divergence_constraint(s);
    G = fem::assemble_buoyancy(s, problem.buoyancy_sign * problem.beta, problem.gravity);
    vmap = reduction_map(s, SpaceId::Velocity);
    tmap = reduction_map(s, SpaceId::Temperature);
    hmap = reduction_map(s, SpaceId::Head);
    nvf = count_free(vmap);
    nh = count_free(hmap);
  }

  Eigen::VectorXd solve_temperature(const FieldVector& w_lag, const FieldVector& z_lag, const Eigen::VectorXd& rhs) {
    const double inv_dt = 1.0 / config.dt;
    SparseOperator T = inv_dt * Mw + fem::assemble_temperature_diffusion(spaces, problem.coefficients, w_lag) +
                       fem::assemble_temperature_advection(spaces, z_lag);
    const SparseOperator Tr = reduce(T, tmap, tmap);
    const Eigen::VectorXd x = solve_checked(lu_temperature, temperature_analyzed, Tr, reduce(rhs, tmap),
                                            "temperature stage");
    return expand(x, tmap);
  }

  void solve_velocity(const FieldVector& w_new, const FieldVector& z_lag, const Eigen::VectorXd& rhs_full,
                      Eigen::VectorXd& z_out, Eigen::VectorXd& p_out) {
    const double inv_dt = 1.0 / config.dt;
    SparseOperator K = inv_dt * Mz + fem::assemble_velocity_diffusion(spaces, problem.coefficients, w_new) +
                       fem::assemble_velocity_advection(spaces, z_lag);
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(K.nonZeros() + 2 * D.nonZeros()));
    append_reduced(K, vmap, vmap, 0, 0, false, trips);
    append_reduced(D, hmap, vmap, nvf, 0, false, trips);  // lower-left: D
    append_reduced(D, hmap, vmap, 0, nvf, true, trips);   // upper-right: D^T
    SparseOperator S(nvf + nh, nvf + nh);
    S.setFromTriplets(trips.begin(), trips.end());
    S.makeCompressed();

    Eigen::VectorXd b = Eigen::VectorXd::Zero(nvf + nh);
    b.head(nvf) = reduce(rhs_full, vmap);
    const Eigen::VectorXd x = solve_checked(lu_saddle, saddle_analyzed, S, b, "velocity/head saddle stage");
    z_out = expand(x.head(nvf), vmap);
    p_out = expand(x.tail(nh), hmap);
  }

  State step(const State& sn, Diagnostics* diag) {
    fem::require_space(spaces, sn.z, SpaceId::Velocity, "step");
    fem::require_space(spaces, sn.w, SpaceId::Temperature, "step");
    const double inv_dt = 1.0 / config.dt;
    const double t1 = sn.t + config.dt;

    const Eigen::VectorXd rhs_w = inv_dt * (Mw * sn.w.values) +
                                  fem::assemble_temperature_load(spaces, problem.f2, problem.v2, t1);
    const Eigen::VectorXd rhs_z0 = inv_dt * (Mz * sn.z.values) +
                                   fem::assemble_velocity_load(spaces, problem.f1, problem.v1, t1);

    State it = sn;
    it.t = t1;
    std::size_t iters = 0;
    bool converged = !config.picard_enabled;
    const std::size_t max_iters = config.picard_enabled ? config.picard_max : 1;
    for (std::size_t k = 0; k < max_iters; ++k) {
      ++iters;
      FieldVector w_new{SpaceId::Temperature, solve_temperature(it.w, it.z, rhs_w)};
      const Eigen::VectorXd rhs_z = rhs_z0 - G * w_new.values;
      FieldVector z_new{SpaceId::Velocity, {}};
      FieldVector p_new{SpaceId::Head, {}};
      solve_velocity(w_new, it.z, rhs_z, z_new.values, p_new.values);

      const double dz = (z_new.values - it.z.values).squaredNorm();
      const double dw = (w_new.values - it.w.values).squaredNorm();
      const double nrm = z_new.values.squaredNorm() + w_new.values.squaredNorm();
      it.z = std::move(z_new);
      it.w = std::move(w_new);
      it.P = std::move(p_new);
      if (!config.picard_enabled) break;
      const double incr = (dz + dw == 0.0) ? 0.0 : std::sqrt((dz + dw) / std::max(nrm, 1e-300));
      if (incr < config.picard_tol) {
        converged = true;
        break;
      }
    }
    if (diag != nullptr) {
      *diag = compute_diagnostics(spaces, it, problem.coefficients, config.constants);
      diag->div_residual = (D * it.z.values).norm();
      diag->picard_iters = iters;
      diag->picard_converged = converged;
    }
    return it;
  }
};

Stepper::Stepper(const FunctionSpaces& spaces, const ProblemData& problem, const SolverConfig& config)
    : impl_(std::make_unique<Impl>(spaces, problem, config)) {}

Stepper::~Stepper() = default;

State Stepper::step(const State& state, Diagnostics* diagnostics) { return impl_->step(state, diagnostics); }

const SparseOperator& Stepper::divergence() const { return impl_->D; }

State step(const FunctionSpaces& spaces, const ProblemData& problem, const SolverConfig& config, const State& state,
           Diagnostics* diagnostics) {
  Stepper stepper(spaces, problem, config);
  return stepper.step(state, diagnostics);
}

Trajectory run_from(const FunctionSpaces& spaces, const ProblemData& problem, const SolverConfig& config,
                    State initial, const StepObserver& observer, bool keep_states) {
  Stepper stepper(spaces, problem, config);
  Trajectory traj;
  Diagnostics d0 = compute_diagnostics(spaces, initial, problem.coefficients, config.constants);
  d0.div_residual = (stepper.divergence() * initial.z.values).norm();
  traj.diagnostics.push_back(d0);
  traj.states.push_back(std::move(initial));
  if (observer) observer(0, traj.states.back(), d0);

  const std::size_t n = config.step_count();
  for (std::size_t k = 1; k <= n; ++k) {
    Diagnostics d;
    State next;
    try {
      next = stepper.step(traj.states.back(), &d);
    } catch (const DivergenceError& e) {
      throw DivergenceError("step " + std::to_string(k) + ": " + e.what());
    } catch (const SolverError& e) {
      throw SolverError("step " + std::to_string(k) + ": " + e.what());
    }
    if (observer) observer(k, next, d);
    traj.diagnostics.push_back(d);
    if (keep_states || k == n) {
      traj.states.push_back(std::move(next));
    } else {
      traj.states.back() = std::move(next);
    }
  }
  if (!keep_states && traj.states.size() > 2) traj.states.erase(traj.states.begin() + 1, traj.states.end() - 1);
  return traj;
}

Trajectory run(const FunctionSpaces& spaces, const ProblemData& problem, const SolverConfig& config,
               const StepObserver& observer, bool keep_states) {
  return run_from(spaces, problem, config, initialize_state(spaces, problem), observer, keep_states);
}

// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXd dense_reduced(const SparseOperator& A, const std::vector<long>& rmap, const std::vector<long>& cmap) {
  return Eigen::MatrixXd(reduce(A, rmap, cmap));
}

double smallest_generalized_eigenvalue(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(A, B, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("generalized eigensolve failed");
  return es.eigenvalues()(0);
}

}  // namespace

Eigen::MatrixXd divergence_free_basis(const FunctionSpaces& spaces) {
  const auto vmap = reduction_map(spaces, SpaceId::Velocity);
  const auto hmap = reduction_map(spaces, SpaceId::Head);
  const Eigen::MatrixXd Dt = dense_reduced(fem::assemble_divergence_constraint(spaces), hmap, vmap).transpose();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Dt);
  const Eigen::Index rank = qr.rank();
  const Eigen::MatrixXd Q = qr.householderQ();
  return Q.rightCols(Dt.rows() - rank);
}

EstimatedConstants estimate_constants(const FunctionSpaces& spaces, std::uint64_t seed) {
  EstimatedConstants out;
  const auto vmap = reduction_map(spaces, SpaceId::Velocity);
  const auto tmap = reduction_map(spaces, SpaceId::Temperature);

  {
    const Eigen::MatrixXd Z = divergence_free_basis(spaces);
    if (Z.cols() == 0) throw NumericError("empty divergence-free subspace");
    const Eigen::MatrixXd A = dense_reduced(fem::assemble_rot_div(spaces), vmap, vmap);
    const Eigen::MatrixXd B = dense_reduced(fem::assemble_h1_gram(spaces, SpaceId::Velocity), vmap, vmap);
    const Eigen::MatrixXd Ar = Z.transpose() * A * Z;
    const Eigen::MatrixXd Br = Z.transpose() * B * Z;
    out.c1 = smallest_generalized_eigenvalue(0.5 * (Ar + Ar.transpose()), 0.5 * (Br + Br.transpose()));
  }
  {
    const Eigen::MatrixXd A = dense_reduced(fem::assemble_stiffness(spaces, SpaceId::Temperature), tmap, tmap);
    const Eigen::MatrixXd B = dense_reduced(fem::assemble_h1_gram(spaces, SpaceId::Temperature), tmap, tmap);
    out.c1_prime = smallest_generalized_eigenvalue(A, B);
  }

  // Sobolev constant: maximize int f^4 on the H1 unit sphere of the full P1
  // space. The normalized gradient iteration is monotone for convex functionals.
  const SparseOperator Gram = fem::assemble_h1_gram(spaces, SpaceId::Temperature);
  Eigen::SimplicialLDLT<SparseOperator> chol(Gram);
  if (chol.info() != Eigen::Success) throw NumericError("H1 Gram factorization failed");
  const auto& rule = fem::triangle_rule();
  auto quartic = [&](const Eigen::VectorXd& f, Eigen::VectorXd* grad) {
    double J = 0.0;
    if (grad != nullptr) grad->setZero(f.size());
    for (std::size_t e = 0; e < spaces.elements.size(); ++e) {
      const auto& tri = spaces.mesh.triangles[e];
      for (std::size_t q = 0; q < fem::kTriangleQuadPoints; ++q) {
        const auto& l = rule[q].lambda;
        const double v = f[static_cast<Eigen::Index>(tri[0])] * l[0] + f[static_cast<Eigen::Index>(tri[1])] * l[1] +
                         f[static_cast<Eigen::Index>(tri[2])] * l[2];
        const double wq = spaces.elements[e].qp_weight[q];
        J += wq * v * v * v * v;
        if (grad != nullptr) {
          for (int a = 0; a < 3; ++a) (*grad)[static_cast<Eigen::Index>(tri[a])] += 4.0 * wq * v * v * v * l[a];
        }
      }
    }
    return J;
  };
  auto normalize = [&](Eigen::VectorXd& f) { f /= std::sqrt(f.dot(Gram * f)); };

  const Eigen::Index n = static_cast<Eigen::Index>(spaces.temperature_dofs());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  double best = 0.0;
  for (int start = 0; start < 20; ++start) {
    Eigen::VectorXd f(n);
    if (start == 0) {
      f.setOnes();
    } else {
      for (Eigen::Index i = 0; i < n; ++i) f[i] = uni(rng);
    }
    normalize(f);
    Eigen::VectorXd g(n);
    double J = quartic(f, &g);
    for (int iter = 0; iter < 200; ++iter) {
      Eigen::VectorXd next = chol.solve(g);
      normalize(next);
      Eigen::VectorXd gn(n);
      const double Jn = quartic(next, &gn);
      if (!(Jn >= J)) break;
      f = std::move(next);
      g = std::move(gn);
      J = Jn;
    }
    best = std::max(best, std::pow(J, 0.25));
  }
  out.d = best;
  return out;
}

}  // namespace bgs::solver
