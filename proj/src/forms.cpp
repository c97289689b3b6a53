#include "bgs/forms.hpp"

#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "assembly_detail.hpp"
#include "bgs/errors.hpp"

namespace bgs::fem {

using detail::element_locals;
using Triplet = Eigen::Triplet<double>;

const std::array<TriangleQuadPoint, kTriangleQuadPoints>& triangle_rule() {
  static const std::array<TriangleQuadPoint, kTriangleQuadPoints> rule = [] {
    const double r15 = std::sqrt(15.0);
    const double a1 = (6.0 - r15) / 21.0, b1 = 1.0 - 2.0 * a1, w1 = (155.0 - r15) / 1200.0;
    const double a2 = (6.0 + r15) / 21.0, b2 = 1.0 - 2.0 * a2, w2 = (155.0 + r15) / 1200.0;
    return std::array<TriangleQuadPoint, kTriangleQuadPoints>{{
        {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 9.0 / 40.0},
        {{b1, a1, a1}, w1},
        {{a1, b1, a1}, w1},
        {{a1, a1, b1}, w1},
        {{b2, a2, a2}, w2},
        {{a2, b2, a2}, w2},
        {{a2, a2, b2}, w2},
    }};
  }();
  return rule;
}

const std::array<EdgeQuadPoint, kEdgeQuadPoints>& edge_rule() {
  static const std::array<EdgeQuadPoint, kEdgeQuadPoints> rule = [] {
    const double d = 0.5 * std::sqrt(0.6);
    return std::array<EdgeQuadPoint, kEdgeQuadPoints>{{
        {0.5 - d, 5.0 / 18.0},
        {0.5, 8.0 / 18.0},
        {0.5 + d, 5.0 / 18.0},
    }};
  }();
  return rule;
}

void p2_shape(const std::array<double, 3>& l, const std::array<Vec2, 3>& gl, std::array<double, 6>& value,
              std::array<Vec2, 6>& grad) {
  for (int a = 0; a < 3; ++a) {
    value[a] = l[a] * (2.0 * l[a] - 1.0);
    const double f = 4.0 * l[a] - 1.0;
    grad[a] = {f * gl[a][0], f * gl[a][1]};
  }
  static constexpr int kEdge[3][2] = {{0, 1}, {1, 2}, {2, 0}};
  for (int k = 0; k < 3; ++k) {
    const int a = kEdge[k][0], b = kEdge[k][1];
    value[3 + k] = 4.0 * l[a] * l[b];
    grad[3 + k] = {4.0 * (l[b] * gl[a][0] + l[a] * gl[b][0]), 4.0 * (l[b] * gl[a][1] + l[a] * gl[b][1])};
  }
}

std::size_t FunctionSpaces::dofs(SpaceId id) const {
  switch (id) {
    case SpaceId::Velocity: return velocity_dofs();
    case SpaceId::Head: return head_dofs();
    case SpaceId::Temperature: return temperature_dofs();
  }
  return 0;
}

FunctionSpaces build_spaces(const mesh::Mesh& m, unsigned threads) {
  FunctionSpaces s;
  s.mesh = m;
  s.threads = std::max(1U, threads);
  s.edges = mesh::unique_edges(m);
  const std::size_t nv = m.vertices.size();

  auto edge_id = [&](std::size_t a, std::size_t b) {
    const std::array<std::size_t, 2> key{std::min(a, b), std::max(a, b)};
    auto it = std::lower_bound(s.edges.begin(), s.edges.end(), key);
    return static_cast<std::size_t>(it - s.edges.begin());
  };

  s.p2_coords = m.vertices;
  for (const auto& e : s.edges) {
    const auto& p = m.vertices[e[0]];
    const auto& q = m.vertices[e[1]];
    s.p2_coords.push_back({0.5 * (p.x + q.x), 0.5 * (p.y + q.y)});
  }

  const auto& rule = triangle_rule();
  s.p2_nodes.resize(m.triangles.size());
  s.elements.resize(m.triangles.size());
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto [a, b, c] = m.triangles[t];
    s.p2_nodes[t] = {a, b, c, nv + edge_id(a, b), nv + edge_id(b, c), nv + edge_id(c, a)};

    ElementData& ed = s.elements[t];
    const auto& p0 = m.vertices[a];
    const auto& p1 = m.vertices[b];
    const auto& p2 = m.vertices[c];
    const double det = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
    if (!(det > 0.0)) throw ConfigError("build_spaces: triangle with non-positive area");
    ed.area = 0.5 * det;
    ed.grad_lambda = {Vec2{(p1.y - p2.y) / det, (p2.x - p1.x) / det},
                      Vec2{(p2.y - p0.y) / det, (p0.x - p2.x) / det},
                      Vec2{(p0.y - p1.y) / det, (p1.x - p0.x) / det}};
    for (std::size_t q = 0; q < kTriangleQuadPoints; ++q) {
      const auto& l = rule[q].lambda;
      ed.qp_point[q] = {l[0] * p0.x + l[1] * p1.x + l[2] * p2.x, l[0] * p0.y + l[1] * p1.y + l[2] * p2.y};
      ed.qp_weight[q] = rule[q].weight * ed.area;
      p2_shape(l, ed.grad_lambda, ed.p2_value[q], ed.p2_grad[q]);
    }
  }

  s.velocity_fixed.assign(2 * s.p2_coords.size(), 0);
  s.temperature_fixed.assign(nv, 0);
  for (const mesh::BoundaryEdge& be : m.boundary_edges) {
    BoundaryFace f;
    f.p2_node = {be.v[0], be.v[1], nv + edge_id(be.v[0], be.v[1])};
    f.tag = be.tag;
    f.start = m.vertices[be.v[0]];
    f.end = m.vertices[be.v[1]];
    const double dx = f.end.x - f.start.x, dy = f.end.y - f.start.y;
    f.length = std::hypot(dx, dy);
    f.normal = {dy / f.length, -dx / f.length};
    s.faces.push_back(f);

    if (be.tag == mesh::BoundaryTag::Gamma2) {
      for (std::size_t node : f.p2_node) s.velocity_fixed[2 * node] = s.velocity_fixed[2 * node + 1] = 1;
    } else {
      const double tx = std::abs(dx) / f.length, ty = std::abs(dy) / f.length;
      if (std::min(tx, ty) > 1e-12) throw ConfigError("tangential constraint requires axis-aligned Gamma1 edges");
      const std::size_t comp = tx > ty ? 0 : 1;
      for (std::size_t node : f.p2_node) s.velocity_fixed[2 * node + comp] = 1;
      s.temperature_fixed[be.v[0]] = s.temperature_fixed[be.v[1]] = 1;
    }
  }
  for (std::size_t i = 0; i < s.velocity_fixed.size(); ++i) {
    if (s.velocity_fixed[i]) s.velocity_essential.push_back(i);
  }
  for (std::size_t i = 0; i < nv; ++i) {
    if (s.temperature_fixed[i]) s.temperature_essential.push_back(i);
  }
  return s;
}

FieldVector FieldVector::zeros(const FunctionSpaces& spaces, SpaceId id) {
  return {id, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spaces.dofs(id)))};
}

namespace {

const char* space_name(SpaceId id) {
  switch (id) {
    case SpaceId::Velocity: return "velocity";
    case SpaceId::Head: return "head";
    case SpaceId::Temperature: return "temperature";
  }
  return "?";
}

}  // namespace

void require_space(const FunctionSpaces& spaces, const FieldVector& f, SpaceId id, const char* where) {
  if (f.space != id || static_cast<std::size_t>(f.values.size()) != spaces.dofs(id)) {
    std::ostringstream os;
    os << where << ": expected a " << space_name(id) << " field of length " << spaces.dofs(id) << ", got "
       << space_name(f.space) << " of length " << f.values.size();
    throw DimensionError(os.str());
  }
}

// ---------------------------------------------------------------------------

VelocitySample eval_velocity(const FunctionSpaces& s, const Eigen::VectorXd& z, std::size_t e,
                             const std::array<double, 3>& lambda) {
  std::array<double, 6> v{};
  std::array<Vec2, 6> g{};
  p2_shape(lambda, s.elements[e].grad_lambda, v, g);
  VelocitySample out;
  for (int a = 0; a < 6; ++a) {
    const std::size_t node = s.p2_nodes[e][a];
    for (int c = 0; c < 2; ++c) {
      const double coef = z[static_cast<Eigen::Index>(2 * node + c)];
      out.value[c] += coef * v[a];
      out.grad[c][0] += coef * g[a][0];
      out.grad[c][1] += coef * g[a][1];
    }
  }
  return out;
}

VelocitySample velocity_at_qp(const FunctionSpaces& s, const Eigen::VectorXd& z, std::size_t e, std::size_t q) {
  const auto& v = s.elements[e].p2_value[q];
  const auto& g = s.elements[e].p2_grad[q];
  VelocitySample out;
  for (int a = 0; a < 6; ++a) {
    const std::size_t node = s.p2_nodes[e][a];
    for (int c = 0; c < 2; ++c) {
      const double coef = z[static_cast<Eigen::Index>(2 * node + c)];
      out.value[c] += coef * v[a];
      out.grad[c][0] += coef * g[a][0];
      out.grad[c][1] += coef * g[a][1];
    }
  }
  return out;
}

ScalarSample eval_p1(const FunctionSpaces& s, const Eigen::VectorXd& w, std::size_t e,
                     const std::array<double, 3>& lambda) {
  ScalarSample out;
  const auto& tri = s.mesh.triangles[e];
  const auto& gl = s.elements[e].grad_lambda;
  for (int a = 0; a < 3; ++a) {
    const double coef = w[static_cast<Eigen::Index>(tri[a])];
    out.value += coef * lambda[a];
    out.grad[0] += coef * gl[a][0];
    out.grad[1] += coef * gl[a][1];
  }
  return out;
}

ScalarSample p1_at_qp(const FunctionSpaces& s, const Eigen::VectorXd& w, std::size_t e, std::size_t q) {
  return eval_p1(s, w, e, triangle_rule()[q].lambda);
}

// ---------------------------------------------------------------------------

FieldVector interpolate_velocity(const FunctionSpaces& s, const VectorFn& f, double t, bool constrain) {
  FieldVector out = FieldVector::zeros(s, SpaceId::Velocity);
  for (std::size_t n = 0; n < s.p2_coords.size(); ++n) {
    const Vec2 v = f(s.p2_coords[n], t);
    if (!std::isfinite(v[0]) || !std::isfinite(v[1])) {
      std::ostringstream os;
      os << "non-finite velocity value at (" << s.p2_coords[n].x << ", " << s.p2_coords[n].y << ")";
      throw InputError(os.str());
    }
    out.values[static_cast<Eigen::Index>(2 * n)] = v[0];
    out.values[static_cast<Eigen::Index>(2 * n + 1)] = v[1];
  }
  if (constrain) apply_essential(s, SpaceId::Velocity, out.values);
  return out;
}

FieldVector interpolate_scalar(const FunctionSpaces& s, SpaceId id, const ScalarFn& f, double t, bool constrain) {
  if (id == SpaceId::Velocity) throw DimensionError("interpolate_scalar: velocity space is vector-valued");
  FieldVector out = FieldVector::zeros(s, id);
  for (std::size_t n = 0; n < s.vertex_count(); ++n) {
    const double v = f(s.mesh.vertices[n], t);
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "non-finite scalar value at (" << s.mesh.vertices[n].x << ", " << s.mesh.vertices[n].y << ")";
      throw InputError(os.str());
    }
    out.values[static_cast<Eigen::Index>(n)] = v;
  }
  if (constrain && id == SpaceId::Temperature) apply_essential(s, id, out.values);
  return out;
}

void apply_essential(const FunctionSpaces& s, SpaceId id, Eigen::VectorXd& values) {
  if (id == SpaceId::Velocity) {
    for (std::size_t i : s.velocity_essential) values[static_cast<Eigen::Index>(i)] = 0.0;
  } else if (id == SpaceId::Temperature) {
    for (std::size_t i : s.temperature_essential) values[static_cast<Eigen::Index>(i)] = 0.0;
  }
}

// ---------------------------------------------------------------------------
// Local kernels. Velocity local index l = 2*a + c (a: P2 node, c: component).

namespace {

using VelLocal = std::array<double, 144>;
using P1Local = std::array<double, 9>;
using DivLocal = std::array<double, 36>;  // 3 head x 12 velocity
using BuoyLocal = std::array<double, 36>;  // 12 velocity x 3 temperature

std::size_t vel_dof(const FunctionSpaces& s, std::size_t e, std::size_t l) {
  return 2 * s.p2_nodes[e][l / 2] + (l % 2);
}

template <std::size_t R, std::size_t C, class RowMap, class ColMap>
SparseOperator scatter(const FunctionSpaces& s, const std::vector<std::array<double, R * C>>& locals,
                       std::size_t rows, std::size_t cols, RowMap row_map, ColMap col_map) {
  std::vector<Triplet> trips;
  trips.reserve(locals.size() * R * C);
  for (std::size_t e = 0; e < locals.size(); ++e) {
    for (std::size_t i = 0; i < R; ++i) {
      const auto gi = static_cast<int>(row_map(s, e, i));
      for (std::size_t j = 0; j < C; ++j) {
        trips.emplace_back(gi, static_cast<int>(col_map(s, e, j)), locals[e][i * C + j]);
      }
    }
  }
  SparseOperator A(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();
  return A;
}

auto vel_map = [](const FunctionSpaces& s, std::size_t e, std::size_t l) { return vel_dof(s, e, l); };
auto p1_map = [](const FunctionSpaces& s, std::size_t e, std::size_t l) { return s.mesh.triangles[e][l]; };

SparseOperator vel_square(const FunctionSpaces& s, const std::vector<VelLocal>& locals) {
  return scatter<12, 12>(s, locals, s.velocity_dofs(), s.velocity_dofs(), vel_map, vel_map);
}

SparseOperator p1_square(const FunctionSpaces& s, const std::vector<P1Local>& locals) {
  return scatter<3, 3>(s, locals, s.vertex_count(), s.vertex_count(), p1_map, p1_map);
}

double w_at_qp(const FunctionSpaces& s, const Eigen::VectorXd& w, std::size_t e, std::size_t q) {
  const auto& tri = s.mesh.triangles[e];
  const auto& l = triangle_rule()[q].lambda;
  return w[static_cast<Eigen::Index>(tri[0])] * l[0] + w[static_cast<Eigen::Index>(tri[1])] * l[1] +
         w[static_cast<Eigen::Index>(tri[2])] * l[2];
}

// Symmetric 12x12 kernel: coef(q) * (rot phi_j rot phi_i + div phi_j div phi_i).
template <class Coef>
VelLocal rot_div_local(const FunctionSpaces& s, std::size_t e, Coef coef) {
  VelLocal loc{};
  const ElementData& ed = s.elements[e];
  for (std::size_t q = 0; q < kTriangleQuadPoints; ++q) {
    const double wq = ed.qp_weight[q] * coef(q);
    std::array<double, 12> rot{}, div{};
    for (int a = 0; a < 6; ++a) {
      const Vec2& g = ed.p2_grad[q][a];
      rot[2 * a] = -g[1];
      rot[2 * a + 1] = g[0];
      div[2 * a] = g[0];
      div[2 * a + 1] = g[1];
    }
    for (int i = 0; i < 12; ++i) {
      for (int j = i; j < 12; ++j) loc[i * 12 + j] += wq * (rot[i] * rot[j] + div[i] * div[j]);
    }
  }
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < i; ++j) loc[i * 12 + j] = loc[j * 12 + i];
  }
  return loc;
}

template <class Coef>
P1Local p1_stiffness_local(const FunctionSpaces& s, std::size_t e, Coef coef) {
  P1Local loc{};
  const ElementData& ed = s.elements[e];
  double cw = 0.0;
  for (std::size_t q = 0; q < kTriangleQuadPoints; ++q) cw += ed.qp_weight[q] * coef(q);
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      loc[i * 3 + j] = cw * (ed.grad_lambda[i][0] * ed.grad_lambda[j][0] + ed.grad_lambda[i][1] * ed.grad_lambda[j][1]);
    }
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < i; ++j) loc[i * 3 + j] = loc[j * 3 + i];
  }
  return loc;
}

}  // namespace

SparseOperator assemble_mass(const FunctionSpaces& s, SpaceId which) {
  if (which == SpaceId::Velocity) {
    auto locals = element_locals<VelLocal>(s, [&](std::size_t e, VelLocal& loc) {
      loc.fill(0.0);
      const ElementData& ed = s.elements[e];
      std::array<double, 36> m{};
      for (std::size_t q = 0; q < kTriangleQuadPoints; ++q) {
        for (int a = 0; a < 6; ++a) {
          for (int b = a; b < 6; ++b) m[a * 6 + b] += ed.qp_weight[q] * ed.p2_value[q][a] * ed.p2_value[q][b];
        }
      }
      for (int a = 0; a < 6; ++a) {
        for (int b = 0; b < 6; ++b) {
          const double v = a <= b ? m[a * 6 + b] : m[b * 6 + a];
          for (int c = 0; c < 2; ++c) loc[(2 * a + c) * 12 + (2 * b + c)] = v;
        }
      }
    });
    return vel_square(s, locals);
  }
  auto locals = element_locals<P1Local>(s, [&](std::size_t e, P1Local& loc) {
    const double area = s.elements[e].area;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) loc[i * 3 + j] = area * (i == j ? 2.0 : 1.0) / 12.0;
    }
  });
  return p1_square(s, locals);
}

SparseOperator assemble_stiffness(const FunctionSpaces& s, SpaceId which) {
  if (which == SpaceId::Velocity) {
    auto locals = element_locals<VelLocal>(s, [&](std::size_t e, VelLocal& loc) {
      loc.fill(0.0);
      const ElementData& ed = s.elements[e];
      std::array<double, 36> k{};
      for (std::size_t q = 0; q < kTriangleQuadPoints; ++q) {
        for (int a = 0; a < 6; ++a) {
          for (int b = a; b < 6; ++b) {
            const Vec2& ga = ed.p2_grad[q][a];
            const Vec2& gb = ed.p2_grad[q][b];
            k[a * 6 + b] += ed.qp_weight[q] * (ga[0] * gb[0] + ga[1] * gb[1]);
          }
        }
      }
      for (int a = 0; a < 6; ++a) {
        for (int b = 0; b < 6; ++b) {
          const double v = a <= b ? k[a * 6 + b] : k[b * 6 + a];
          for (int c = 0; c < 2; ++c) loc[(2 * a + c) * 12 + (2 * b + c)] = v;
        }
      }
    });
    return vel_square(s, locals);
  }
  auto locals = element_locals<P1Local>(s, [&](std::size_t e, P1Local& loc) {
    loc = p1_stiffness_local(s, e, [](std::size_t) { return 1.0; });
  });
  return p1_square(s, locals);
}

SparseOperator assemble_h1_gram(const FunctionSpaces& s, SpaceId which) {
  SparseOperator G = assemble_mass(s, which) + assemble_stiffness(s, which);
  G.makeCompressed();
  return G;
}

SparseOperator assemble_velocity_diffusion(const FunctionSpaces& s, const coefficients::CoefficientModel& model,
                                           const FieldVector& w_h) {
  require_space(s, w_h, SpaceId::Temperature, "assemble_velocity_diffusion");
  auto locals = element_locals<VelLocal>(s, [&](std::size_t e, VelLocal& loc) {
    loc = rot_div_local(s, e, [&](std::size_t q) {
      return coefficients::eval_viscosity(model, w_at_qp(s, w_h.values, e, q));
    });
  });
  return vel_square(s, locals);
}

SparseOperator assemble_rot_div(const FunctionSpaces& s) {
  auto locals = element_locals<VelLocal>(s, [&](std::size_t e, VelLocal& loc) {
    loc = rot_div_local(s, e, [](std::size_t) { return 1.0; });
  });
  return vel_square(s, locals);
}

SparseOperator assemble_temperature_diffusion(const FunctionSpaces& s, const coefficients::CoefficientModel& model,
                                              const FieldVector& w_h) {
  require_space(s, w_h, SpaceId::Temperature, "assemble_temperature_diffusion");
  auto locals = element_locals<P1Local>(s, [&](std::size_t e, P1Local& loc) {
    loc = p1_stiffness_local(s, e, [&](std::size_t q) {
      return coefficients::eval_conductivity(model, w_at_qp(s, w_h.values, e, q));
    });
  });
  return p1_square(s, locals);
}

SparseOperator assemble_divergence_constraint(const FunctionSpaces& s) {
  auto locals = element_locals<DivLocal>(s, [&](std::size_t e, DivLocal& loc) {
    loc.fill(0.0);
    const ElementData& ed = s.elements[e];
    const auto& rule = triangle_rule();
    for (std::size_t q = 0; q < kTriangleQuadPoints; ++q) {
      for (int k = 0; k < 3; ++k) {
        const double wq = ed.qp_weight[q] * rule[q].lambda[k];
        for (int a = 0; a < 6; ++a) {
          loc[k * 12 + 2 * a] += wq * ed.p2_grad[q][a][0];
          loc[k * 12 + 2 * a + 1] += wq * ed.p2_grad[q][a][1];
        }
      }
    }
  });
  return scatter<3, 12>(s, locals, s.head_dofs(), s.velocity_dofs(), p1_map, vel_map);
}

SparseOperator assemble_velocity_advection(const FunctionSpaces& s, const FieldVector& z_h) {
  require_space(s, z_h, SpaceId::Velocity, "assemble_velocity_advection");
  auto locals = element_locals<VelLocal>(s, [&](std::size_t e, VelLocal& loc) {
    loc.fill(0.0);
    const ElementData& ed = s.elements[e];
    std::array<double, 36> m{};
    for (std::size_t q = 0; q < kTriangleQuadPoints; ++q) {
      const double wq = ed.qp_weight[q] * velocity_at_qp(s, z_h.values, e, q).rot();
      for (int a = 0; a < 6; ++a) {
        for (int b = a; b < 6; ++b) m[a * 6 + b] += wq * ed.p2_value[q][a] * ed.p2_value[q][b];
      }
    }
    // (e3 x e_0) . e_1 = +1, (e3 x e_1) . e_0 = -1.
    for (int a = 0; a < 6; ++a) {
      for (int b = 0; b < 6; ++b) {
        const double v = a <= b ? m[a * 6 + b] : m[b * 6 + a];
        loc[(2 * a + 1) * 12 + (2 * b)] = v;
        loc[(2 * a) * 12 + (2 * b + 1)] = -v;
      }
    }
  });
  return vel_square(s, locals);
}

namespace {

// K[i][j] = int (z . grad mu_j) mu_i on one element.
P1Local convective_local(const FunctionSpaces& s, const Eigen::VectorXd& z, std::size_t e) {
  P1Local k{};
  const ElementData& ed = s.elements[e];
  const auto& rule = triangle_rule();
  for (std::size_t q = 0; q < kTriangleQuadPoints; ++q) {
    const Vec2 zq = velocity_at_qp(s, z, e, q).value;
    for (int j = 0; j < 3; ++j) {
      const double adv = zq[0] * ed.grad_lambda[j][0] + zq[1] * ed.grad_lambda[j][1];
      for (int i = 0; i < 3; ++i) k[i * 3 + j] += ed.qp_weight[q] * adv * rule[q].lambda[i];
    }
  }
  return k;
}

}  // namespace

SparseOperator assemble_temperature_advection(const FunctionSpaces& s, const FieldVector& z_h) {
  require_space(s, z_h, SpaceId::Velocity, "assemble_temperature_advection");
  auto locals = element_locals<P1Local>(s, [&](std::size_t e, P1Local& loc) {
    const P1Local k = convective_local(s, z_h.values, e);
    for (int i = 0; i < 3; ++i) {
      loc[i * 3 + i] = 0.0;
      for (int j = i + 1; j < 3; ++j) {
        const double v = 0.5 * (k[i * 3 + j] - k[j * 3 + i]);
        loc[i * 3 + j] = v;
        loc[j * 3 + i] = -v;
      }
    }
  });
  return p1_square(s, locals);
}

SparseOperator assemble_temperature_advection_unsymmetrized(const FunctionSpaces& s, const FieldVector& z_h) {
  require_space(s, z_h, SpaceId::Velocity, "assemble_temperature_advection_unsymmetrized");
  auto locals = element_locals<P1Local>(s, [&](std::size_t e, P1Local& loc) {
    loc = convective_local(s, z_h.values, e);
  });
  return p1_square(s, locals);
}

SparseOperator assemble_buoyancy(const FunctionSpaces& s, double beta,
                                 const std::function<Vec2(const mesh::Point&)>& g) {
  auto locals = element_locals<BuoyLocal>(s, [&](std::size_t e, BuoyLocal& loc) {
    loc.fill(0.0);
    if (beta == 0.0) return;
    const ElementData& ed = s.elements[e];
    const auto& rule = triangle_rule();
    for (std::size_t q = 0; q < kTriangleQuadPoints; ++q) {
      const Vec2 gq = g(ed.qp_point[q]);
      for (int a = 0; a < 6; ++a) {
        for (int c = 0; c < 2; ++c) {
          const double row = ed.qp_weight[q] * beta * gq[c] * ed.p2_value[q][a];
          for (int j = 0; j < 3; ++j) loc[(2 * a + c) * 3 + j] += row * rule[q].lambda[j];
        }
      }
    }
  });
  return scatter<12, 3>(s, locals, s.velocity_dofs(), s.temperature_dofs(), vel_map, p1_map);
}

namespace {

[[noreturn]] void non_finite(const char* what, const mesh::Point& p, double t) {
  std::ostringstream os;
  os.precision(17);
  os << "non-finite " << what << " at (" << p.x << ", " << p.y << "), t=" << t;
  throw InputError(os.str());
}

}  // namespace

Eigen::VectorXd assemble_velocity_load(const FunctionSpaces& s, const VectorFn& f1, const ScalarFn& v1, double t) {
  using Local = std::array<double, 12>;
  auto locals = element_locals<Local>(s, [&](std::size_t e, Local& loc) {
    loc.fill(0.0);
    const ElementData& ed = s.elements[e];
    for (std::size_t q = 0; q < kTriangleQuadPoints; ++q) {
      const Vec2 f = f1(ed.qp_point[q], t);
      if (!std::isfinite(f[0]) || !std::isfinite(f[1])) non_finite("f1", ed.qp_point[q], t);
      for (int a = 0; a < 6; ++a) {
        loc[2 * a] += ed.qp_weight[q] * f[0] * ed.p2_value[q][a];
        loc[2 * a + 1] += ed.qp_weight[q] * f[1] * ed.p2_value[q][a];
      }
    }
  });
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.velocity_dofs()));
  for (std::size_t e = 0; e < locals.size(); ++e) {
    for (std::size_t l = 0; l < 12; ++l) b[static_cast<Eigen::Index>(vel_dof(s, e, l))] += locals[e][l];
  }
  for (const BoundaryFace& f : s.faces) {
    if (f.tag != mesh::BoundaryTag::Gamma1) continue;
    for (const EdgeQuadPoint& eq : edge_rule()) {
      const double sp = eq.s;
      const mesh::Point p{f.start.x + sp * (f.end.x - f.start.x), f.start.y + sp * (f.end.y - f.start.y)};
      const double v = v1(p, t);
      if (!std::isfinite(v)) non_finite("v1", p, t);
      const std::array<double, 3> shape{(1.0 - sp) * (1.0 - 2.0 * sp), sp * (2.0 * sp - 1.0), 4.0 * sp * (1.0 - sp)};
      const double w = eq.weight * f.length * v;
      for (int k = 0; k < 3; ++k) {
        for (int c = 0; c < 2; ++c) b[static_cast<Eigen::Index>(2 * f.p2_node[k] + c)] += w * shape[k] * f.normal[c];
      }
    }
  }
  return b;
}

Eigen::VectorXd assemble_temperature_load(const FunctionSpaces& s, const ScalarFn& f2, const ScalarFn& v2, double t) {
  using Local = std::array<double, 3>;
  const auto& rule = triangle_rule();
  auto locals = element_locals<Local>(s, [&](std::size_t e, Local& loc) {
    loc.fill(0.0);
    const ElementData& ed = s.elements[e];
    for (std::size_t q = 0; q < kTriangleQuadPoints; ++q) {
      const double f = f2(ed.qp_point[q], t);
      if (!std::isfinite(f)) non_finite("f2", ed.qp_point[q], t);
      for (int i = 0; i < 3; ++i) loc[i] += ed.qp_weight[q] * f * rule[q].lambda[i];
    }
  });
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.temperature_dofs()));
  for (std::size_t e = 0; e < locals.size(); ++e) {
    for (std::size_t i = 0; i < 3; ++i) b[static_cast<Eigen::Index>(s.mesh.triangles[e][i])] += locals[e][i];
  }
  for (const BoundaryFace& f : s.faces) {
    if (f.tag != mesh::BoundaryTag::Gamma2) continue;
    for (const EdgeQuadPoint& eq : edge_rule()) {
      const double sp = eq.s;
      const mesh::Point p{f.start.x + sp * (f.end.x - f.start.x), f.start.y + sp * (f.end.y - f.start.y)};
      const double v = v2(p, t);
      if (!std::isfinite(v)) non_finite("v2", p, t);
      const double w = eq.weight * f.length * v;
      b[static_cast<Eigen::Index>(f.p2_node[0])] += w * (1.0 - sp);
      b[static_cast<Eigen::Index>(f.p2_node[1])] += w * sp;
    }
  }
  return b;
}

double trilinear_b(const FunctionSpaces& s, const FieldVector& u, const FieldVector& v, const FieldVector& w) {
  require_space(s, u, SpaceId::Velocity, "trilinear_b(u)");
  require_space(s, v, SpaceId::Velocity, "trilinear_b(v)");
  require_space(s, w, SpaceId::Velocity, "trilinear_b(w)");
  double sum = 0.0;
  for (std::size_t e = 0; e < s.elements.size(); ++e) {
    for (std::size_t q = 0; q < kTriangleQuadPoints; ++q) {
      const double om = velocity_at_qp(s, u.values, e, q).rot();
      const Vec2 vv = velocity_at_qp(s, v.values, e, q).value;
      const Vec2 ww = velocity_at_qp(s, w.values, e, q).value;
      sum += s.elements[e].qp_weight[q] * om * (-vv[1] * ww[0] + vv[0] * ww[1]);
    }
  }
  return sum;
}

double trilinear_c(const FunctionSpaces& s, const FieldVector& z, const FieldVector& w, const FieldVector& phi) {
  require_space(s, z, SpaceId::Velocity, "trilinear_c(z)");
  require_space(s, w, SpaceId::Temperature, "trilinear_c(w)");
  require_space(s, phi, SpaceId::Temperature, "trilinear_c(phi)");
  double sum = 0.0;
  for (std::size_t e = 0; e < s.elements.size(); ++e) {
    for (std::size_t q = 0; q < kTriangleQuadPoints; ++q) {
      const Vec2 zq = velocity_at_qp(s, z.values, e, q).value;
      const ScalarSample wq = p1_at_qp(s, w.values, e, q);
      const double pq = p1_at_qp(s, phi.values, e, q).value;
      sum += s.elements[e].qp_weight[q] * (zq[0] * wq.grad[0] + zq[1] * wq.grad[1]) * pq;
    }
  }
  return sum;
}

}  // namespace bgs::fem
