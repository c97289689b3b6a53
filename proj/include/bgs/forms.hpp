#pragma once

// Discrete spaces and the bilinear/trilinear forms of the Boussinesq weak
// formulation in rotational form:
//
//   velocity  z : continuous P2 vector fields, z = 0 on Gamma2, z_tau = 0 on Gamma1
//   head      P : continuous P1 scalars (Bernoulli head, natural on Gamma1)
//   temperature w : continuous P1 scalars, w = 0 on Gamma1
//
// Velocity dof numbering is node-interleaved: dof = 2*node + component, with
// P2 nodes ordered vertices first, then unique edges (lexicographic).

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "bgs/coefficients.hpp"
#include "bgs/mesh.hpp"

namespace bgs::fem {

using Vec2 = std::array<double, 2>;
using ScalarFn = std::function<double(const mesh::Point&, double)>;
using VectorFn = std::function<Vec2(const mesh::Point&, double)>;
using SparseOperator = Eigen::SparseMatrix<double>;

enum class SpaceId { Velocity, Head, Temperature };

inline constexpr std::size_t kTriangleQuadPoints = 7;
inline constexpr std::size_t kEdgeQuadPoints = 3;

/// Degree-5 rule on the reference triangle; barycentric points, weights sum to 1.
struct TriangleQuadPoint {
  std::array<double, 3> lambda;
  double weight;
};
const std::array<TriangleQuadPoint, kTriangleQuadPoints>& triangle_rule();

/// Gauss-Legendre on [0,1] (degree 5); weights sum to 1.
struct EdgeQuadPoint {
  double s;
  double weight;
};
const std::array<EdgeQuadPoint, kEdgeQuadPoints>& edge_rule();

/// P2 shape values and gradients at barycentric coordinates, local order
/// (v0, v1, v2, e01, e12, e20).
void p2_shape(const std::array<double, 3>& lambda, const std::array<Vec2, 3>& grad_lambda,
              std::array<double, 6>& value, std::array<Vec2, 6>& grad);

struct ElementData {
  double area = 0.0;
  std::array<Vec2, 3> grad_lambda{};
  std::array<mesh::Point, kTriangleQuadPoints> qp_point{};
  std::array<double, kTriangleQuadPoints> qp_weight{};  // includes the area
  std::array<std::array<double, 6>, kTriangleQuadPoints> p2_value{};
  std::array<std::array<Vec2, 6>, kTriangleQuadPoints> p2_grad{};
};

struct BoundaryFace {
  std::array<std::size_t, 3> p2_node{};  // start vertex, end vertex, midpoint node
  mesh::BoundaryTag tag = mesh::BoundaryTag::Gamma2;
  mesh::Point start, end;
  Vec2 normal{};  // outward unit normal
  double length = 0.0;
};

struct FunctionSpaces {
  mesh::Mesh mesh;
  std::vector<std::array<std::size_t, 2>> edges;
  std::vector<std::array<std::size_t, 6>> p2_nodes;  // per triangle
  std::vector<mesh::Point> p2_coords;
  std::vector<ElementData> elements;
  std::vector<BoundaryFace> faces;

  std::vector<std::size_t> velocity_essential;     // sorted, unique
  std::vector<std::size_t> temperature_essential;  // sorted, unique
  std::vector<char> velocity_fixed;
  std::vector<char> temperature_fixed;
  unsigned threads = 1;

  [[nodiscard]] std::size_t vertex_count() const { return mesh.vertices.size(); }
  [[nodiscard]] std::size_t p2_node_count() const { return p2_coords.size(); }
  [[nodiscard]] std::size_t velocity_dofs() const { return 2 * p2_coords.size(); }
  [[nodiscard]] std::size_t head_dofs() const { return mesh.vertices.size(); }
  [[nodiscard]] std::size_t temperature_dofs() const { return mesh.vertices.size(); }
  [[nodiscard]] std::size_t dofs(SpaceId id) const;
};

/// Builds dof maps, element caches and essential-dof sets. `threads` selects
/// the worker count for element-parallel assembly; results do not depend on it.
FunctionSpaces build_spaces(const mesh::Mesh& mesh, unsigned threads = 1);

struct FieldVector {
  SpaceId space = SpaceId::Temperature;
  Eigen::VectorXd values;

  static FieldVector zeros(const FunctionSpaces& spaces, SpaceId id);
};

void require_space(const FunctionSpaces& spaces, const FieldVector& f, SpaceId id, const char* where);

// ---------------------------------------------------------------------------
// Pointwise evaluation inside an element at barycentric coordinates.

struct VelocitySample {
  Vec2 value{};
  std::array<Vec2, 2> grad{};  // grad[c] = gradient of component c
  [[nodiscard]] double rot() const { return grad[1][0] - grad[0][1]; }
  [[nodiscard]] double div() const { return grad[0][0] + grad[1][1]; }
};

struct ScalarSample {
  double value = 0.0;
  Vec2 grad{};
};

VelocitySample eval_velocity(const FunctionSpaces& spaces, const Eigen::VectorXd& z, std::size_t elem,
                             const std::array<double, 3>& lambda);
ScalarSample eval_p1(const FunctionSpaces& spaces, const Eigen::VectorXd& w, std::size_t elem,
                     const std::array<double, 3>& lambda);
/// Same evaluations at the cached quadrature point `q` of element `elem`.
VelocitySample velocity_at_qp(const FunctionSpaces& spaces, const Eigen::VectorXd& z, std::size_t elem, std::size_t q);
ScalarSample p1_at_qp(const FunctionSpaces& spaces, const Eigen::VectorXd& w, std::size_t elem, std::size_t q);

// ---------------------------------------------------------------------------
// Interpolation.

/// Nodal P2 interpolant with essential velocity dofs set to zero.
FieldVector interpolate_velocity(const FunctionSpaces& spaces, const VectorFn& f, double t, bool constrain = true);
/// Nodal P1 interpolant. For the temperature space, Gamma1 values are zeroed
/// when `constrain` is set.
FieldVector interpolate_scalar(const FunctionSpaces& spaces, SpaceId id, const ScalarFn& f, double t,
                               bool constrain = true);

// ---------------------------------------------------------------------------
// Assembly.

/// L2 Gram matrix of the velocity, head or temperature space.
SparseOperator assemble_mass(const FunctionSpaces& spaces, SpaceId which);
/// Unit-coefficient gradient stiffness (vector Laplacian for the velocity).
SparseOperator assemble_stiffness(const FunctionSpaces& spaces, SpaceId which);
/// H1 Gram = mass + stiffness.
SparseOperator assemble_h1_gram(const FunctionSpaces& spaces, SpaceId which);

/// int gamma(w_h) (rot phi_j rot phi_i + div phi_j div phi_i).
SparseOperator assemble_velocity_diffusion(const FunctionSpaces& spaces,
                                           const coefficients::CoefficientModel& model,
                                           const FieldVector& w_h);
/// Unit-coefficient rot-rot + div-div matrix.
SparseOperator assemble_rot_div(const FunctionSpaces& spaces);

/// int k(w_h) grad mu_j . grad mu_i.
SparseOperator assemble_temperature_diffusion(const FunctionSpaces& spaces,
                                              const coefficients::CoefficientModel& model,
                                              const FieldVector& w_h);

/// D[k, j] = int q_k div phi_j (head rows, velocity columns).
SparseOperator assemble_divergence_constraint(const FunctionSpaces& spaces);

/// N(z)[i, j] = int rot(z) (e3 x phi_j) . phi_i; skew-symmetric entry-wise.
SparseOperator assemble_velocity_advection(const FunctionSpaces& spaces, const FieldVector& z_h);

/// C[i, j] = 1/2 int (z.grad mu_j) mu_i - 1/2 int (z.grad mu_i) mu_j.
SparseOperator assemble_temperature_advection(const FunctionSpaces& spaces, const FieldVector& z_h);
/// Plain convective form int (z.grad mu_j) mu_i.
SparseOperator assemble_temperature_advection_unsymmetrized(const FunctionSpaces& spaces, const FieldVector& z_h);

/// G[i, j] = int beta (g . phi_i) mu_j (velocity rows, temperature columns).
SparseOperator assemble_buoyancy(const FunctionSpaces& spaces, double beta,
                                 const std::function<Vec2(const mesh::Point&)>& g);

/// int f1 . phi_i + int_{Gamma1} v1 (phi_i . n) ds.
Eigen::VectorXd assemble_velocity_load(const FunctionSpaces& spaces, const VectorFn& f1, const ScalarFn& v1, double t);
/// int f2 mu_i + int_{Gamma2} v2 mu_i ds.
Eigen::VectorXd assemble_temperature_load(const FunctionSpaces& spaces, const ScalarFn& f2, const ScalarFn& v2, double t);

/// b(u, v, w) = int rot(u) (e3 x v) . w.
double trilinear_b(const FunctionSpaces& spaces, const FieldVector& u, const FieldVector& v, const FieldVector& w);
/// c(z, w, phi) = int (z . grad w) phi.
double trilinear_c(const FunctionSpaces& spaces, const FieldVector& z, const FieldVector& w, const FieldVector& phi);

/// Zeroes the essential dofs of a velocity or temperature coefficient vector.
void apply_essential(const FunctionSpaces& spaces, SpaceId id, Eigen::VectorXd& values);

}  // namespace bgs::fem
