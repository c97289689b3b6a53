#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <random>

#include "bgs/errors.hpp"
#include "bgs/forms.hpp"
#include "bgs/oracles.hpp"
#include "bgs/solver.hpp"

using namespace bgs;
using fem::FieldVector;
using fem::SpaceId;
using mesh::Point;
using mesh::Side;

namespace {

fem::FunctionSpaces square(std::size_t n, mesh::SideSet g1 = {Side::Left}, unsigned threads = 1) {
  return fem::build_spaces(mesh::build_rectangle_mesh(n, n, g1), threads);
}

std::size_t p2_node_at(const fem::FunctionSpaces& s, double x, double y) {
  for (std::size_t i = 0; i < s.p2_coords.size(); ++i) {
    if (std::abs(s.p2_coords[i].x - x) < 1e-14 && std::abs(s.p2_coords[i].y - y) < 1e-14) return i;
  }
  FAIL("no node at " << x << "," << y);
  return 0;
}

FieldVector random_field(const fem::FunctionSpaces& s, SpaceId id, std::mt19937_64& rng, bool constrain = false) {
  std::normal_distribution<double> n;
  FieldVector f = FieldVector::zeros(s, id);
  for (Eigen::Index i = 0; i < f.values.size(); ++i) f.values[i] = n(rng);
  if (constrain) fem::apply_essential(s, id, f.values);
  return f;
}

double max_abs(const fem::SparseOperator& A) {
  return A.nonZeros() == 0 ? 0.0 : Eigen::MatrixXd(A).cwiseAbs().maxCoeff();
}

bool identical(const fem::SparseOperator& A, const fem::SparseOperator& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols() || A.nonZeros() != B.nonZeros()) return false;
  for (Eigen::Index k = 0; k < A.nonZeros(); ++k) {
    if (A.valuePtr()[k] != B.valuePtr()[k] || A.innerIndexPtr()[k] != B.innerIndexPtr()[k]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("quadrature tables") {
  double s = 0.0;
  for (const auto& q : fem::triangle_rule()) {
    CHECK(q.weight > 0.0);
    CHECK(q.lambda[0] + q.lambda[1] + q.lambda[2] == doctest::Approx(1.0).epsilon(1e-15));
    s += q.weight;
  }
  CHECK(std::abs(s - 1.0) < 1e-15);
  // Degree 5: int over the reference triangle of x^a y^b = a! b! / (a+b+2)!, times 2 for unit measure.
  auto fact = [](int n) { return std::tgamma(n + 1.0); };
  for (int a = 0; a <= 5; ++a) {
    for (int b = 0; a + b <= 5; ++b) {
      double q = 0.0;
      for (const auto& p : fem::triangle_rule()) q += p.weight * std::pow(p.lambda[1], a) * std::pow(p.lambda[2], b);
      CHECK(std::abs(q - 2.0 * fact(a) * fact(b) / fact(a + b + 2)) < 1e-15);
    }
  }
  double e = 0.0;
  for (const auto& q : fem::edge_rule()) {
    CHECK(q.weight > 0.0);
    e += q.weight;
  }
  CHECK(std::abs(e - 1.0) < 1e-15);
  for (int k = 0; k <= 5; ++k) {
    double q = 0.0;
    for (const auto& p : fem::edge_rule()) q += p.weight * std::pow(p.s, k);
    CHECK(std::abs(q - 1.0 / (k + 1)) < 1e-15);
  }
}

TEST_CASE("dof counts and essential sets") {
  const auto s = square(3);
  CHECK(s.p2_node_count() == 16 + 33);  // vertices + edges (3*4*2 + 3*3 diagonals)
  CHECK(s.velocity_dofs() == 2 * 49);
  CHECK(s.head_dofs() == 16);
  CHECK(s.temperature_dofs() == 16);
  for (std::size_t i = 1; i < s.velocity_essential.size(); ++i) {
    CHECK(s.velocity_essential[i - 1] < s.velocity_essential[i]);
  }
  for (std::size_t d : s.velocity_essential) CHECK(d < s.velocity_dofs());

  // Interior of the left side: only the tangential (y) component is fixed.
  const std::size_t mid_left = p2_node_at(s, 0.0, 0.5);
  CHECK(s.velocity_fixed[2 * mid_left] == 0);
  CHECK(s.velocity_fixed[2 * mid_left + 1] == 1);
  // Corners shared with Gamma2 take the full constraint.
  for (double y : {0.0, 1.0}) {
    const std::size_t c = p2_node_at(s, 0.0, y);
    CHECK(s.velocity_fixed[2 * c] == 1);
    CHECK(s.velocity_fixed[2 * c + 1] == 1);
  }
  const std::size_t right = p2_node_at(s, 1.0, 0.5);
  CHECK(s.velocity_fixed[2 * right] == 1);
  CHECK(s.velocity_fixed[2 * right + 1] == 1);
  // Temperature is fixed exactly on the Gamma1 vertices.
  std::size_t fixed = 0;
  for (std::size_t v = 0; v < s.vertex_count(); ++v) {
    CHECK((s.temperature_fixed[v] != 0) == (s.mesh.vertices[v].x == 0.0));
    fixed += s.temperature_fixed[v] != 0;
  }
  CHECK(fixed == s.temperature_essential.size());

  // A top Gamma1 side fixes the x component.
  const auto t = square(2, {Side::Top});
  const std::size_t top = p2_node_at(t, 0.25, 1.0);
  CHECK(t.velocity_fixed[2 * top] == 1);
  CHECK(t.velocity_fixed[2 * top + 1] == 0);
}

TEST_CASE("P2 mass matrix matches the exact reference values") {
  // Exact integrals on a triangle of area A are A/180 times
  // [6 -1 -1 0 -4 0; ...; edge diagonal 32, edge-edge 16].
  const auto s = square(1);
  const auto M = fem::assemble_mass(s, SpaceId::Velocity);
  const double A = 0.5;
  const std::size_t v10 = p2_node_at(s, 1.0, 0.0);
  const std::size_t e_bottom = p2_node_at(s, 0.5, 0.0);
  const std::size_t e_right = p2_node_at(s, 1.0, 0.5);
  const std::size_t v00 = p2_node_at(s, 0.0, 0.0);
  const std::size_t e_diag = p2_node_at(s, 0.5, 0.5);
  for (int c = 0; c < 2; ++c) {
    CHECK(M.coeff(2 * v10 + c, 2 * v10 + c) == doctest::Approx(6 * A / 180).epsilon(1e-14));
    CHECK(M.coeff(2 * e_bottom + c, 2 * e_bottom + c) == doctest::Approx(32 * A / 180).epsilon(1e-14));
    CHECK(M.coeff(2 * e_bottom + c, 2 * e_right + c) == doctest::Approx(16 * A / 180).epsilon(1e-14));
    CHECK(std::abs(M.coeff(2 * v10 + c, 2 * e_bottom + c)) < 1e-16);
    CHECK(M.coeff(2 * v10 + c, 2 * e_diag + c) == doctest::Approx(-4 * A / 180).epsilon(1e-14));
    CHECK(M.coeff(2 * v10 + c, 2 * v00 + c) == doctest::Approx(-1 * A / 180).epsilon(1e-14));
    CHECK(M.coeff(2 * v10 + c, 2 * v10 + 1 - c) == 0.0);
  }
  // Whole-domain integral of the unit field.
  Eigen::VectorXd one = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.velocity_dofs()));
  for (std::size_t n = 0; n < s.p2_node_count(); ++n) one[2 * n] = 1.0;
  CHECK(std::abs(one.dot(M * one) - 1.0) < 1e-14);
}

TEST_CASE("temperature mass matrix") {
  const auto s = square(4);
  const auto M = fem::assemble_mass(s, SpaceId::Temperature);
  CHECK(std::abs(Eigen::MatrixXd(M).sum() - 1.0) < 1e-12);
  std::mt19937_64 rng(42);
  for (int k = 0; k < 20; ++k) {
    const auto x = random_field(s, SpaceId::Temperature, rng);
    CHECK(x.values.dot(M * x.values) > 0.0);
  }
  CHECK(max_abs(fem::SparseOperator(M - fem::SparseOperator(M.transpose()))) == 0.0);
}

TEST_CASE("diffusion matrices") {
  const auto s = square(3);
  std::mt19937_64 rng(7);
  const auto w1 = random_field(s, SpaceId::Temperature, rng);
  const auto w2 = random_field(s, SpaceId::Temperature, rng);
  const auto unit = coefficients::CoefficientModel::constant(1.0, 1.0);
  const auto A1 = fem::assemble_velocity_diffusion(s, unit, w1);
  const auto A2 = fem::assemble_velocity_diffusion(s, unit, w2);
  CHECK(max_abs(fem::SparseOperator(A1 - A2)) <= 1e-14 * max_abs(A1));
  CHECK(max_abs(fem::SparseOperator(A1 - fem::assemble_rot_div(s))) <= 1e-14 * max_abs(A1));

  const coefficients::CoefficientModel blend(coefficients::Law::tanh_blend(0.5, 2.0),
                                             coefficients::Law::tanh_blend(0.5, 2.0));
  const auto A = fem::assemble_velocity_diffusion(s, blend, w1);
  const auto A2x = fem::assemble_velocity_diffusion(s, blend.scaled(2.0, 1.0), w1);
  CHECK(max_abs(fem::SparseOperator(A2x - 2.0 * A)) <= 1e-14 * max_abs(A));
  const auto K = fem::assemble_temperature_diffusion(s, blend, w1);
  const auto K2x = fem::assemble_temperature_diffusion(s, blend.scaled(1.0, 2.0), w1);
  CHECK(max_abs(fem::SparseOperator(K2x - 2.0 * K)) <= 1e-14 * max_abs(K));

  const auto Ku = fem::assemble_temperature_diffusion(s, unit, w1);
  CHECK(max_abs(fem::SparseOperator(Ku - fem::assemble_stiffness(s, SpaceId::Temperature))) <= 1e-14);
  const Eigen::VectorXd rows = Eigen::MatrixXd(Ku).rowwise().sum();
  CHECK(rows.cwiseAbs().maxCoeff() < 1e-12);

  CHECK(max_abs(fem::SparseOperator(A - fem::SparseOperator(A.transpose()))) == 0.0);
  CHECK(max_abs(fem::SparseOperator(K - fem::SparseOperator(K.transpose()))) == 0.0);

  // Positive definite on the constrained temperature space.
  const auto free = solver::free_dofs(s, SpaceId::Temperature);
  const Eigen::MatrixXd Kd(K);
  Eigen::MatrixXd Kf(free.size(), free.size());
  for (std::size_t i = 0; i < free.size(); ++i)
    for (std::size_t j = 0; j < free.size(); ++j) Kf(i, j) = Kd(free[i], free[j]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Kf);
  CHECK(es.eigenvalues()(0) > 0.0);

  CHECK_THROWS_AS(fem::assemble_velocity_diffusion(s, blend, FieldVector::zeros(s, SpaceId::Velocity)),
                  DimensionError);
  CHECK_THROWS_AS(fem::assemble_temperature_diffusion(s, blend, FieldVector::zeros(square(2), SpaceId::Temperature)),
                  DimensionError);
}

TEST_CASE("divergence constraint") {
  const auto s = square(1);
  const auto D = fem::assemble_divergence_constraint(s);
  CHECK(D.rows() == static_cast<Eigen::Index>(s.head_dofs()));
  CHECK(D.cols() == static_cast<Eigen::Index>(s.velocity_dofs()));
  // Exact values on the triangle (0,0),(1,0),(1,1) for the vertex (1,0),
  // which belongs to that triangle only.
  std::size_t v10 = 0;
  for (std::size_t v = 0; v < s.vertex_count(); ++v) {
    if (s.mesh.vertices[v].x == 1.0 && s.mesh.vertices[v].y == 0.0) v10 = v;
  }
  const struct {
    double x, y;
    double dx, dy;
  } expected[] = {{1.0, 0.0, 1.0 / 6, -1.0 / 6}, {0.5, 0.0, -1.0 / 6, -1.0 / 6}, {1.0, 0.5, 1.0 / 6, 1.0 / 6}};
  for (const auto& e : expected) {
    const std::size_t n = p2_node_at(s, e.x, e.y);
    CHECK(D.coeff(v10, 2 * n) == doctest::Approx(e.dx).epsilon(1e-14));
    CHECK(D.coeff(v10, 2 * n + 1) == doctest::Approx(e.dy).epsilon(1e-14));
  }

  const auto s4 = square(4);
  const auto D4 = fem::assemble_divergence_constraint(s4);
  const auto translation = fem::interpolate_velocity(s4, [](const Point&, double) { return fem::Vec2{0.3, -1.1}; },
                                                     0.0, false);
  CHECK((D4 * translation.values).cwiseAbs().maxCoeff() < 1e-12);
  const auto strain = fem::interpolate_velocity(s4, [](const Point& p, double) { return fem::Vec2{p.x, -p.y}; },
                                                0.0, false);
  CHECK((D4 * strain.values).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("velocity advection is skew") {
  const auto s = square(3);
  CHECK(max_abs(fem::assemble_velocity_advection(s, FieldVector::zeros(s, SpaceId::Velocity))) == 0.0);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const auto z = random_field(s, SpaceId::Velocity, rng);
    const auto N = fem::assemble_velocity_advection(s, z);
    CHECK(max_abs(fem::SparseOperator(N + fem::SparseOperator(N.transpose()))) <= 1e-14 * max_abs(N));
    const auto x = random_field(s, SpaceId::Velocity, rng);
    CHECK(std::abs(x.values.dot(N * x.values)) <= 1e-13 * x.values.squaredNorm() * max_abs(N));
    const auto v = random_field(s, SpaceId::Velocity, rng);
    const double b1 = fem::trilinear_b(s, z, x, v), b2 = fem::trilinear_b(s, z, v, x);
    CHECK(std::abs(b1 + b2) <= 1e-13 * std::abs(b1));
    CHECK(std::abs(fem::trilinear_b(s, z, x, x)) <= 1e-13 * std::abs(b1));
    // The matrix and the trilinear form agree: b(z, x, v) = v^T N(z) x.
    CHECK(std::abs(v.values.dot(N * x.values) - b1) <= 1e-12 * std::abs(b1));
  }
  const auto x = random_field(s, SpaceId::Velocity, rng);
  CHECK(fem::trilinear_b(s, FieldVector::zeros(s, SpaceId::Velocity), x, x) == 0.0);
  CHECK_THROWS_AS(fem::assemble_velocity_advection(s, FieldVector::zeros(s, SpaceId::Temperature)), DimensionError);
}

TEST_CASE("temperature advection") {
  const auto s = square(3);
  CHECK(max_abs(fem::assemble_temperature_advection(s, FieldVector::zeros(s, SpaceId::Velocity))) == 0.0);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 20; ++k) {
    const auto z = random_field(s, SpaceId::Velocity, rng);
    const auto C = fem::assemble_temperature_advection(s, z);
    CHECK(max_abs(fem::SparseOperator(C + fem::SparseOperator(C.transpose()))) <= 1e-14 * max_abs(C));
    const auto x = random_field(s, SpaceId::Temperature, rng);
    CHECK(std::abs(x.values.dot(C * x.values)) <= 1e-13 * x.values.squaredNorm() * max_abs(C));
    // Plain form against the trilinear evaluation.
    const auto Cu = fem::assemble_temperature_advection_unsymmetrized(s, z);
    const auto phi = random_field(s, SpaceId::Temperature, rng);
    const double c = fem::trilinear_c(s, z, x, phi);
    CHECK(std::abs(phi.values.dot(Cu * x.values) - c) <= 1e-12 * std::abs(c));
  }
  // For an exactly divergence-free quadratic field and test functions vanishing
  // on the boundary the two forms coincide: int z . grad(x^2) = 0.
  const auto z = fem::interpolate_velocity(
      s, [](const Point& p, double) { return fem::Vec2{-2 * p.x + 3 * p.y * p.y + p.x, -(3 * p.x * p.x - p.y)}; }, 0.0,
      false);
  const auto D = fem::assemble_divergence_constraint(s);
  REQUIRE(fem::assemble_mass(s, SpaceId::Head).rows() > 0);
  CHECK((D * z.values).cwiseAbs().maxCoeff() < 1e-13);
  const auto C = fem::assemble_temperature_advection(s, z);
  const auto Cu = fem::assemble_temperature_advection_unsymmetrized(s, z);
  for (int k = 0; k < 10; ++k) {
    auto x = random_field(s, SpaceId::Temperature, rng);
    for (std::size_t v = 0; v < s.vertex_count(); ++v) {
      const auto& p = s.mesh.vertices[v];
      if (p.x == 0.0 || p.x == 1.0 || p.y == 0.0 || p.y == 1.0) x.values[v] = 0.0;
    }
    CHECK(std::abs(x.values.dot(Cu * x.values) - x.values.dot(C * x.values)) <=
          1e-13 * x.values.squaredNorm() * max_abs(Cu));
  }
}

TEST_CASE("product rule for c") {
  const auto s = square(2);
  std::mt19937_64 rng(11);
  for (int k = 0; k < 10; ++k) {
    const auto z = random_field(s, SpaceId::Velocity, rng);
    const auto w = random_field(s, SpaceId::Temperature, rng);
    const auto phi = random_field(s, SpaceId::Temperature, rng);
    // int z . grad(w phi) with w phi handled as a product of P1 fields.
    double ref = 0.0;
    for (std::size_t e = 0; e < s.elements.size(); ++e) {
      for (std::size_t q = 0; q < fem::kTriangleQuadPoints; ++q) {
        const auto zs = fem::velocity_at_qp(s, z.values, e, q);
        const auto ws = fem::p1_at_qp(s, w.values, e, q);
        const auto ps = fem::p1_at_qp(s, phi.values, e, q);
        ref += s.elements[e].qp_weight[q] * (zs.value[0] * (ws.grad[0] * ps.value + ws.value * ps.grad[0]) +
                                             zs.value[1] * (ws.grad[1] * ps.value + ws.value * ps.grad[1]));
      }
    }
    CHECK(std::abs(fem::trilinear_c(s, z, w, phi) + fem::trilinear_c(s, z, phi, w) - ref) <= 1e-12 * std::abs(ref));
  }
}

TEST_CASE("buoyancy coupling") {
  const auto s = square(3);
  CHECK(max_abs(fem::assemble_buoyancy(s, 0.0, [](const Point&) { return fem::Vec2{0, -1}; })) == 0.0);
  CHECK(max_abs(fem::assemble_buoyancy(s, 1.0, [](const Point&) { return fem::Vec2{0, 0}; })) == 0.0);
  const auto G = fem::assemble_buoyancy(s, 1.0, [](const Point&) { return fem::Vec2{0, -1}; });
  const auto one = fem::interpolate_scalar(s, SpaceId::Temperature, [](const Point&, double) { return 1.0; }, 0.0,
                                           false);
  const Eigen::VectorXd Gw = G * one.values;
  // -int phi_{i,2} from the velocity mass matrix applied to the unit y field.
  const auto M = fem::assemble_mass(s, SpaceId::Velocity);
  Eigen::VectorXd ey = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.velocity_dofs()));
  for (std::size_t n = 0; n < s.p2_node_count(); ++n) ey[2 * n + 1] = 1.0;
  const Eigen::VectorXd ref = -(M * ey);
  CHECK((Gw - ref).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(std::abs(Gw.sum() + 1.0) < 1e-14);
}

TEST_CASE("velocity load") {
  const auto s = square(4);
  const fem::VectorFn zero_f = [](const Point&, double) { return fem::Vec2{0, 0}; };
  const fem::ScalarFn zero_s = [](const Point&, double) { return 0.0; };
  const fem::ScalarFn one_s = [](const Point&, double) { return 1.0; };
  CHECK(fem::assemble_velocity_load(s, zero_f, zero_s, 0.0).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::VectorXd b = fem::assemble_velocity_load(s, zero_f, one_s, 0.0);
  // Tangential components on the left side and every interior dof see nothing.
  for (std::size_t n = 0; n < s.p2_node_count(); ++n) {
    CHECK(b[2 * n + 1] == 0.0);
    if (s.p2_coords[n].x != 0.0) CHECK(b[2 * n] == 0.0);
  }
  // Pairing with the interpolant of (1, 0): int_{Gamma1} phi . n = -|Gamma1|.
  const auto ex = fem::interpolate_velocity(s, [](const Point&, double) { return fem::Vec2{1, 0}; }, 0.0, false);
  CHECK(std::abs(b.dot(ex.values) + 1.0) < 1e-14);

  const fem::VectorFn bad = [](const Point& p, double) {
    return fem::Vec2{p.x > 0.5 ? std::numeric_limits<double>::quiet_NaN() : 0.0, 0.0};
  };
  CHECK_THROWS_AS(fem::assemble_velocity_load(s, bad, zero_s, 0.0), InputError);
}

TEST_CASE("temperature load") {
  const auto s = square(4, {Side::Left, Side::Top});
  const fem::ScalarFn zero = [](const Point&, double) { return 0.0; };
  const fem::ScalarFn one = [](const Point&, double) { return 1.0; };
  CHECK(fem::assemble_temperature_load(s, zero, zero, 0.0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(std::abs(fem::assemble_temperature_load(s, one, zero, 0.0).sum() - 1.0) < 1e-12);
  CHECK(std::abs(fem::assemble_temperature_load(s, zero, one, 0.0).sum() - 2.0) < 1e-12);
  const fem::ScalarFn inf = [](const Point&, double) { return std::numeric_limits<double>::infinity(); };
  CHECK_THROWS_AS(fem::assemble_temperature_load(s, zero, inf, 0.0), InputError);
}

TEST_CASE("interpolation") {
  const auto s = square(2);
  const auto q = fem::interpolate_velocity(
      s, [](const Point& p, double) { return fem::Vec2{p.x * p.y + 2 * p.y * p.y, p.x * p.x - p.y}; }, 0.0, false);
  for (std::size_t e = 0; e < s.elements.size(); ++e) {
    for (std::size_t k = 0; k < fem::kTriangleQuadPoints; ++k) {
      const auto& p = s.elements[e].qp_point[k];
      const auto v = fem::velocity_at_qp(s, q.values, e, k);
      CHECK(std::abs(v.value[0] - (p.x * p.y + 2 * p.y * p.y)) < 1e-13);
      CHECK(std::abs(v.value[1] - (p.x * p.x - p.y)) < 1e-13);
    }
  }
  const auto w = fem::interpolate_scalar(
      s, SpaceId::Temperature, [](const Point& p, double) { return p.x * std::sin(M_PI * p.y); }, 0.0, true);
  for (std::size_t v = 0; v < s.vertex_count(); ++v) {
    if (s.mesh.vertices[v].x == 0.0) CHECK(w.values[v] == 0.0);
  }
}

TEST_CASE("assembly does not depend on the worker count") {
  const auto s1 = square(6, {Side::Left}, 1);
  const auto s4 = square(6, {Side::Left}, 4);
  std::mt19937_64 rng(9);
  const auto z = random_field(s1, SpaceId::Velocity, rng);
  const auto w = random_field(s1, SpaceId::Temperature, rng);
  const coefficients::CoefficientModel m(coefficients::Law::tanh_blend(0.5, 2.0),
                                         coefficients::Law::tanh_blend(0.5, 2.0));
  CHECK(identical(fem::assemble_velocity_diffusion(s1, m, w), fem::assemble_velocity_diffusion(s4, m, w)));
  CHECK(identical(fem::assemble_temperature_diffusion(s1, m, w), fem::assemble_temperature_diffusion(s4, m, w)));
  CHECK(identical(fem::assemble_velocity_advection(s1, z), fem::assemble_velocity_advection(s4, z)));
  CHECK(identical(fem::assemble_temperature_advection(s1, z), fem::assemble_temperature_advection(s4, z)));
  CHECK(identical(fem::assemble_mass(s1, SpaceId::Velocity), fem::assemble_mass(s4, SpaceId::Velocity)));
}
