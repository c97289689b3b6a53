#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <random>

#include "bgs/oracles.hpp"

namespace bgs::oracles {

using fem::FieldVector;
using fem::FunctionSpaces;
using fem::SpaceId;

bool AuditReport::passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const AuditEntry& e) { return e.passed; });
}

const AuditEntry* AuditReport::find(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

namespace {

class Fields {
 public:
  Fields(const FunctionSpaces& spaces, std::uint64_t seed) : spaces_(spaces), rng_(seed) {}

  FieldVector random(SpaceId id, bool constrain = true) {
    FieldVector f = FieldVector::zeros(spaces_, id);
    for (Eigen::Index i = 0; i < f.values.size(); ++i) f.values[i] = normal_(rng_);
    if (constrain && id != SpaceId::Head) fem::apply_essential(spaces_, id, f.values);
    return f;
  }
  Eigen::VectorXd random_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal_(rng_);
    return v;
  }

 private:
  const FunctionSpaces& spaces_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
};

double max_abs(const fem::SparseOperator& A) {
  double m = 0.0;
  for (int k = 0; k < A.outerSize(); ++k) {
    for (fem::SparseOperator::InnerIterator it(A, k); it; ++it) m = std::max(m, std::abs(it.value()));
  }
  return m;
}

double quadratic(const fem::SparseOperator& A, const Eigen::VectorXd& x) { return x.dot(A * x); }

// |x|^T |A| |x|: the scale against which cancellation in x^T A x is judged.
double abs_quadratic(const fem::SparseOperator& A, const Eigen::VectorXd& x) {
  double s = 0.0;
  for (int k = 0; k < A.outerSize(); ++k) {
    for (fem::SparseOperator::InnerIterator it(A, k); it; ++it) {
      s += std::abs(x[it.row()]) * std::abs(it.value()) * std::abs(x[it.col()]);
    }
  }
  return s;
}

Eigen::MatrixXd restrict(const fem::SparseOperator& A, const std::vector<std::size_t>& rows,
                         const std::vector<std::size_t>& cols) {
  const Eigen::MatrixXd dense(A);
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = dense(rows[i], cols[j]);
  }
  return out;
}

Eigen::VectorXd restrict(const Eigen::VectorXd& v, const std::vector<std::size_t>& idx) {
  Eigen::VectorXd out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

Eigen::VectorXd extend(const Eigen::VectorXd& v, const std::vector<std::size_t>& idx, Eigen::Index n) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < idx.size(); ++i) out[idx[i]] = v[i];
  return out;
}

// g_k = int rot(phi_k) q with q = (e3 x z) . Y, i.e. d/du b(u, z, Y) in direction phi_k.
Eigen::VectorXd rot_load(const FunctionSpaces& spaces, const FieldVector& z, const FieldVector& Y) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(spaces.velocity_dofs());
  for (std::size_t el = 0; el < spaces.elements.size(); ++el) {
    const auto& ed = spaces.elements[el];
    for (std::size_t q = 0; q < fem::kTriangleQuadPoints; ++q) {
      const auto zs = fem::velocity_at_qp(spaces, z.values, el, q);
      const auto ys = fem::velocity_at_qp(spaces, Y.values, el, q);
      const double s = ed.qp_weight[q] * (-zs.value[1] * ys.value[0] + zs.value[0] * ys.value[1]);
      for (std::size_t a = 0; a < 6; ++a) {
        const std::size_t node = spaces.p2_nodes[el][a];
        const auto& grad = ed.p2_grad[q][a];
        g[2 * node] += -grad[1] * s;
        g[2 * node + 1] += grad[0] * s;
      }
    }
  }
  return g;
}

// int z . grad(w phi) by quadrature, independent of trilinear_c.
double product_rule_reference(const FunctionSpaces& spaces, const FieldVector& z, const FieldVector& w,
                              const FieldVector& phi) {
  double s = 0.0;
  for (std::size_t el = 0; el < spaces.elements.size(); ++el) {
    for (std::size_t q = 0; q < fem::kTriangleQuadPoints; ++q) {
      const auto zs = fem::velocity_at_qp(spaces, z.values, el, q);
      const auto ws = fem::p1_at_qp(spaces, w.values, el, q);
      const auto ps = fem::p1_at_qp(spaces, phi.values, el, q);
      const double gx = ws.grad[0] * ps.value + ws.value * ps.grad[0];
      const double gy = ws.grad[1] * ps.value + ws.value * ps.grad[1];
      s += spaces.elements[el].qp_weight[q] * (zs.value[0] * gx + zs.value[1] * gy);
    }
  }
  return s;
}

class DualNorm {
 public:
  explicit DualNorm(const FunctionSpaces& spaces)
      : spaces_(spaces),
        free_(solver::free_dofs(spaces, SpaceId::Velocity)),
        H_(fem::assemble_h1_gram(spaces, SpaceId::Velocity)),
        llt_(restrict(H_, free_, free_)) {}

  double h1_norm2(const FieldVector& z) const { return quadratic(H_, z.values); }

  // r = b(z, z, .) on the free dofs; returns |r|_* and the Riesz representer.
  double operator()(const FieldVector& z, FieldVector* riesz = nullptr) const {
    const Eigen::VectorXd r = restrict(fem::assemble_velocity_advection(spaces_, z) * z.values, free_);
    const Eigen::VectorXd y = llt_.solve(r);
    if (riesz) *riesz = FieldVector{SpaceId::Velocity, extend(y, free_, z.values.size())};
    return std::sqrt(std::max(0.0, r.dot(y)));
  }

  // Gradient of |B(z)|_*^2 in free-dof coordinates.
  Eigen::VectorXd gradient(const FieldVector& z) const {
    FieldVector Y;
    (*this)(z, &Y);
    const Eigen::VectorXd jt = rot_load(spaces_, z, Y) +
                               Eigen::VectorXd(fem::assemble_velocity_advection(spaces_, z).transpose() * Y.values);
    return 2.0 * restrict(jt, free_);
  }

  const std::vector<std::size_t>& free() const { return free_; }
  const Eigen::LLT<Eigen::MatrixXd>& gram() const { return llt_; }

 private:
  const FunctionSpaces& spaces_;
  std::vector<std::size_t> free_;
  fem::SparseOperator H_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

// sup over z of |B(z)|_* / |z|_1^2 by normalized gradient ascent on the H1 sphere.
double measure_dual_constant(const FunctionSpaces& spaces, const DualNorm& dual, Fields& fields) {
  const auto& free = dual.free();
  const Eigen::Index n = static_cast<Eigen::Index>(spaces.velocity_dofs());
  double best = 0.0;
  for (int start = 0; start < 4; ++start) {
    FieldVector z = fields.random(SpaceId::Velocity);
    z.values /= std::sqrt(dual.h1_norm2(z));
    double value = dual(z);
    double step = 0.5;
    for (int it = 0; it < 200 && step > 1e-8; ++it) {
      const Eigen::VectorXd grad = dual.gradient(z);
      const Eigen::VectorXd dir = dual.gram().solve(grad);
      const double dn = std::sqrt(std::max(0.0, dir.dot(grad)));
      if (!(dn > 0.0)) break;
      FieldVector trial{SpaceId::Velocity, z.values + extend(step * dir / dn, free, n)};
      trial.values /= std::sqrt(dual.h1_norm2(trial));
      const double v = dual(trial);
      if (v > value) {
        z = trial;
        value = v;
        step *= 1.5;
      } else {
        step *= 0.5;
      }
    }
    best = std::max(best, value);
  }
  return best;
}

// Exact sup_{v,w} |b(u,v,w)| / (|v|_1 |w|_1) on the constrained space, per unit |u|_1.
double continuity_for(const FunctionSpaces& spaces, const DualNorm& dual, const FieldVector& u) {
  const auto& free = dual.free();
  const Eigen::MatrixXd N = restrict(fem::assemble_velocity_advection(spaces, u), free, free);
  const Eigen::MatrixXd L = dual.gram().matrixL();
  const Eigen::MatrixXd X = L.triangularView<Eigen::Lower>().solve(N);
  const Eigen::MatrixXd Y = L.triangularView<Eigen::Lower>().solve(X.transpose()).transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Y);
  return svd.singularValues()[0] / std::sqrt(dual.h1_norm2(u));
}

}  // namespace

AuditReport check_forms(const FunctionSpaces& spaces, const coefficients::CoefficientModel& model,
                        std::size_t trials, std::uint64_t seed) {
  AuditReport report;
  if (trials == 0) return report;

  auto add = [&](const std::string& name, double value, double tol, bool passed) {
    report.entries.push_back({name, value, tol, passed});
  };
  auto add_max = [&](const std::string& name, double value, double tol) {
    add(name, value, tol, std::isfinite(value) && value <= tol);
  };

  Fields fields(spaces, seed);
  const auto constants = solver::estimate_constants(spaces, seed);
  report.c1 = constants.c1;
  report.c1_prime = constants.c1_prime;
  add("c1_positive", constants.c1, 0.0, constants.c1 > 0.0);
  add("c1_prime_positive", constants.c1_prime, 0.0, constants.c1_prime > 0.0);

  const auto Mz = fem::assemble_mass(spaces, SpaceId::Velocity);
  const auto Mw = fem::assemble_mass(spaces, SpaceId::Temperature);
  const auto Hz = fem::assemble_h1_gram(spaces, SpaceId::Velocity);
  const auto Hw = fem::assemble_h1_gram(spaces, SpaceId::Temperature);
  const auto RD = fem::assemble_rot_div(spaces);
  add_max("mass_velocity_asymmetry", max_abs(fem::SparseOperator(Mz - fem::SparseOperator(Mz.transpose()))), 0.0);
  add_max("mass_temperature_asymmetry", max_abs(fem::SparseOperator(Mw - fem::SparseOperator(Mw.transpose()))),
          0.0);

  const Eigen::MatrixXd divfree = solver::divergence_free_basis(spaces);
  const auto vfree = solver::free_dofs(spaces, SpaceId::Velocity);
  const auto wfree = solver::free_dofs(spaces, SpaceId::Temperature);
  const auto model2 = model.scaled(2.0, 2.0);
  const double delta = 0.25;
  const auto shifted = model.with_viscosity_shift(delta);

  double skew_n = 0.0, skew_c = 0.0, quad_n = 0.0, quad_c = 0.0;
  double b_anti = 0.0, b_diag = 0.0, c_rule = 0.0;
  double asym_a = 0.0, asym_k = 0.0, scale_a = 0.0, scale_k = 0.0, shift_a = 0.0;
  double coerc_a = 0.0, coerc_k = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const FieldVector z = fields.random(SpaceId::Velocity);
    const FieldVector w = fields.random(SpaceId::Temperature, false);

    const auto N = fem::assemble_velocity_advection(spaces, z);
    const auto C = fem::assemble_temperature_advection(spaces, z);
    const double nN = max_abs(N), nC = max_abs(C);
    if (nN > 0.0) skew_n = std::max(skew_n, max_abs(fem::SparseOperator(N + fem::SparseOperator(N.transpose()))) / nN);
    if (nC > 0.0) skew_c = std::max(skew_c, max_abs(fem::SparseOperator(C + fem::SparseOperator(C.transpose()))) / nC);
    const FieldVector x = fields.random(SpaceId::Velocity);
    const FieldVector y = fields.random(SpaceId::Temperature, false);
    quad_n = std::max(quad_n, std::abs(quadratic(N, x.values)) / abs_quadratic(N, x.values));
    quad_c = std::max(quad_c, std::abs(quadratic(C, y.values)) / abs_quadratic(C, y.values));

    const FieldVector v = fields.random(SpaceId::Velocity);
    const double b1 = fem::trilinear_b(spaces, z, x, v);
    const double b2 = fem::trilinear_b(spaces, z, v, x);
    b_anti = std::max(b_anti, std::abs(b1 + b2) / std::max(std::abs(b1), std::abs(b2)));
    const double hz = std::sqrt(quadratic(Hz, z.values)), hx = std::sqrt(quadratic(Hz, x.values));
    b_diag = std::max(b_diag, std::abs(fem::trilinear_b(spaces, z, x, x)) / (hz * hx * hx));

    const FieldVector phi = fields.random(SpaceId::Temperature, false);
    const double lhs = fem::trilinear_c(spaces, z, w, phi) + fem::trilinear_c(spaces, z, phi, w);
    const double ref = product_rule_reference(spaces, z, w, phi);
    c_rule = std::max(c_rule, std::abs(lhs - ref) / std::max(std::abs(ref), 1e-300));

    const auto A = fem::assemble_velocity_diffusion(spaces, model, w);
    const auto K = fem::assemble_temperature_diffusion(spaces, model, w);
    asym_a = std::max(asym_a, max_abs(fem::SparseOperator(A - fem::SparseOperator(A.transpose()))));
    asym_k = std::max(asym_k, max_abs(fem::SparseOperator(K - fem::SparseOperator(K.transpose()))));
    const double nA = max_abs(A), nK = max_abs(K);
    scale_a = std::max(scale_a, max_abs(fem::SparseOperator(fem::assemble_velocity_diffusion(spaces, model2, w) -
                                                            2.0 * A)) / nA);
    scale_k = std::max(scale_k, max_abs(fem::SparseOperator(fem::assemble_temperature_diffusion(spaces, model2, w) -
                                                            2.0 * K)) / nK);
    shift_a = std::max(shift_a, max_abs(fem::SparseOperator(fem::assemble_velocity_diffusion(spaces, shifted, w) -
                                                            A - delta * RD)) / nA);

    if (divfree.cols() > 0) {
      const Eigen::VectorXd xd = extend(divfree * fields.random_vector(divfree.cols()), vfree,
                                        static_cast<Eigen::Index>(spaces.velocity_dofs()));
      const double lower = model.gamma0() * constants.c1 * quadratic(Hz, xd);
      coerc_a = std::max(coerc_a, (lower - quadratic(A, xd)) / lower);
    }
    const Eigen::VectorXd xw = extend(fields.random_vector(static_cast<Eigen::Index>(wfree.size())), wfree,
                                      static_cast<Eigen::Index>(spaces.temperature_dofs()));
    const double lower_w = model.k0() * constants.c1_prime * quadratic(Hw, xw);
    coerc_k = std::max(coerc_k, (lower_w - quadratic(K, xw)) / lower_w);
  }
  add_max("velocity_advection_skew", skew_n, 1e-13);
  add_max("temperature_advection_skew", skew_c, 1e-13);
  add_max("velocity_advection_quadratic", quad_n, 1e-13);
  add_max("temperature_advection_quadratic", quad_c, 1e-13);
  add_max("trilinear_b_antisymmetry", b_anti, 1e-13);
  add_max("trilinear_b_diagonal", b_diag, 1e-13);
  add_max("trilinear_c_product_rule", c_rule, 1e-12);
  add_max("velocity_diffusion_asymmetry", asym_a, 0.0);
  add_max("temperature_diffusion_asymmetry", asym_k, 0.0);
  add_max("velocity_diffusion_scaling", scale_a, 1e-14);
  add_max("temperature_diffusion_scaling", scale_k, 1e-14);
  add_max("velocity_diffusion_shift", shift_a, 1e-13);
  add_max("velocity_coercivity_deficit", coerc_a, 1e-10);
  add_max("temperature_coercivity_deficit", coerc_k, 1e-10);

  // Continuity of b and the dual-norm bound for z -> b(z, z, .).
  const DualNorm dual(spaces);
  double cb = 0.0;
  for (int i = 0; i < 20; ++i) cb = std::max(cb, continuity_for(spaces, dual, fields.random(SpaceId::Velocity)));
  report.continuity_constant = cb;
  double worst_b = 0.0;
  for (std::size_t t = 0; t < 10 * trials; ++t) {
    const FieldVector u = fields.random(SpaceId::Velocity);
    const FieldVector v = fields.random(SpaceId::Velocity);
    const FieldVector w = fields.random(SpaceId::Velocity);
    const double ratio = std::abs(fem::trilinear_b(spaces, u, v, w)) /
                         std::sqrt(dual.h1_norm2(u) * dual.h1_norm2(v) * dual.h1_norm2(w));
    worst_b = std::max(worst_b, ratio / cb);
  }
  add_max("trilinear_b_continuity", worst_b, 1.0);

  const double C = measure_dual_constant(spaces, dual, fields);
  report.dual_norm_constant = C;
  double worst_dual = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const FieldVector z = fields.random(SpaceId::Velocity);
    worst_dual = std::max(worst_dual, dual(z) / (dual.h1_norm2(z) * C));
  }
  add_max("dual_norm_bound", worst_dual, 1.0);
  return report;
}

}  // namespace bgs::oracles
