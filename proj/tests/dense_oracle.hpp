#pragma once

// Brute-force reference for one semi-implicit step: dense matrices built
// from scratch (own basis functions, own quadrature tables, own dof
// constraints found from coordinates), dense LU solves. Only the mesh,
// node coordinates and problem callbacks are shared with the library.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "bgs/forms.hpp"
#include "bgs/solver.hpp"

namespace dense_oracle {

using bgs::mesh::Point;

struct Result {
  Eigen::VectorXd z, w, P;
};

inline bool near(double a, double b) { return std::abs(a - b) < 1e-12; }

inline std::size_t find_node(const std::vector<Point>& nodes, const Point& p) {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (near(nodes[i].x, p.x) && near(nodes[i].y, p.y)) return i;
  }
  throw std::logic_error("oracle: node not found");
}

// Sides: 0 left, 1 right, 2 bottom, 3 top; -1 interior.
inline int side_of(const Point& a, const Point& b) {
  if (near(a.x, 0) && near(b.x, 0)) return 0;
  if (near(a.x, 1) && near(b.x, 1)) return 1;
  if (near(a.y, 0) && near(b.y, 0)) return 2;
  if (near(a.y, 1) && near(b.y, 1)) return 3;
  return -1;
}

inline bool on_side(const Point& p, int s) {
  switch (s) {
    case 0: return near(p.x, 0);
    case 1: return near(p.x, 1);
    case 2: return near(p.y, 0);
    default: return near(p.y, 1);
  }
}

struct Qp {
  double l0, l1, l2, w;
};

inline std::vector<Qp> seven_point() {
  const double r = std::sqrt(15.0);
  const double a1 = (6.0 - r) / 21.0, w1 = (155.0 - r) / 1200.0;
  const double a2 = (6.0 + r) / 21.0, w2 = (155.0 + r) / 1200.0;
  return {{1.0 / 3, 1.0 / 3, 1.0 / 3, 9.0 / 40},
          {a1, a1, 1 - 2 * a1, w1}, {a1, 1 - 2 * a1, a1, w1}, {1 - 2 * a1, a1, a1, w1},
          {a2, a2, 1 - 2 * a2, w2}, {a2, 1 - 2 * a2, a2, w2}, {1 - 2 * a2, a2, a2, w2}};
}

/// Single step from (z, w) at time t with lagged nonlinearities (no Picard).
/// gamma1_sides is a bitmask over the side numbering above.
inline Result step(const bgs::fem::FunctionSpaces& spaces, const bgs::solver::ProblemData& pd,
                   const Eigen::VectorXd& zn, const Eigen::VectorXd& wn, double t, double dt, unsigned gamma1_mask) {
  const auto& mesh = spaces.mesh;
  const auto& verts = mesh.vertices;
  const auto& nodes2 = spaces.p2_coords;
  const int nv = static_cast<int>(verts.size());
  const int n2 = static_cast<int>(nodes2.size());
  const int nz = 2 * n2;
  const double t1 = t + dt;
  auto gamma1 = [&](int s) { return s >= 0 && ((gamma1_mask >> s) & 1U); };

  Eigen::MatrixXd Mz = Eigen::MatrixXd::Zero(nz, nz), A = Mz, N = Mz;
  Eigen::MatrixXd Mw = Eigen::MatrixXd::Zero(nv, nv), K = Mw, C = Mw;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(nv, nz), G = Eigen::MatrixXd::Zero(nz, nv);
  Eigen::VectorXd F1 = Eigen::VectorXd::Zero(nz), F2 = Eigen::VectorXd::Zero(nv);

  const auto rule = seven_point();
  for (const auto& tri : mesh.triangles) {
    const Point p[3] = {verts[tri[0]], verts[tri[1]], verts[tri[2]]};
    const double area2 = (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y);
    const double area = 0.5 * area2;
    double gl[3][2];
    for (int i = 0; i < 3; ++i) {
      const Point& pj = p[(i + 1) % 3];
      const Point& pk = p[(i + 2) % 3];
      gl[i][0] = (pj.y - pk.y) / area2;
      gl[i][1] = (pk.x - pj.x) / area2;
    }
    const Point local2[6] = {p[0], p[1], p[2], {(p[0].x + p[1].x) / 2, (p[0].y + p[1].y) / 2},
                             {(p[1].x + p[2].x) / 2, (p[1].y + p[2].y) / 2},
                             {(p[2].x + p[0].x) / 2, (p[2].y + p[0].y) / 2}};
    int g2[6], g1[3];
    for (int a = 0; a < 6; ++a) g2[a] = static_cast<int>(find_node(nodes2, local2[a]));
    for (int a = 0; a < 3; ++a) g1[a] = static_cast<int>(find_node(verts, p[a]));

    for (const Qp& q : rule) {
      const double L[3] = {q.l0, q.l1, q.l2};
      const double wq = q.w * area;
      const Point x{L[0] * p[0].x + L[1] * p[1].x + L[2] * p[2].x, L[0] * p[0].y + L[1] * p[1].y + L[2] * p[2].y};
      double Nv[6], Ng[6][2];
      const int pairs[3][2] = {{0, 1}, {1, 2}, {2, 0}};
      for (int i = 0; i < 3; ++i) {
        Nv[i] = L[i] * (2 * L[i] - 1);
        for (int d = 0; d < 2; ++d) Ng[i][d] = (4 * L[i] - 1) * gl[i][d];
        const int a = pairs[i][0], b = pairs[i][1];
        Nv[3 + i] = 4 * L[a] * L[b];
        for (int d = 0; d < 2; ++d) Ng[3 + i][d] = 4 * (L[a] * gl[b][d] + L[b] * gl[a][d]);
      }
      // Lagged fields.
      double zq[2] = {0, 0}, dz[2][2] = {{0, 0}, {0, 0}};
      for (int a = 0; a < 6; ++a) {
        for (int c = 0; c < 2; ++c) {
          const double v = zn[2 * g2[a] + c];
          zq[c] += v * Nv[a];
          for (int d = 0; d < 2; ++d) dz[c][d] += v * Ng[a][d];
        }
      }
      const double omega = dz[1][0] - dz[0][1];
      double wq_lag = 0;
      for (int a = 0; a < 3; ++a) wq_lag += wn[g1[a]] * L[a];
      const double kappa = pd.coefficients.conductivity()(wq_lag);
      const auto f1 = pd.f1(x, t1);
      const double f2 = pd.f2(x, t1);
      const auto g = pd.gravity(x);

      for (int a = 0; a < 3; ++a) {
        F2[g1[a]] += wq * f2 * L[a];
        for (int b = 0; b < 3; ++b) {
          Mw(g1[a], g1[b]) += wq * L[a] * L[b];
          K(g1[a], g1[b]) += wq * kappa * (gl[a][0] * gl[b][0] + gl[a][1] * gl[b][1]);
          const double adv_ab = (zq[0] * gl[b][0] + zq[1] * gl[b][1]) * L[a];
          const double adv_ba = (zq[0] * gl[a][0] + zq[1] * gl[a][1]) * L[b];
          C(g1[a], g1[b]) += wq * 0.5 * (adv_ab - adv_ba);
        }
      }
      for (int a = 0; a < 6; ++a) {
        for (int c = 0; c < 2; ++c) {
          const int i = 2 * g2[a] + c;
          F1[i] += wq * f1[c] * Nv[a];
          for (int k = 0; k < 3; ++k) {
            D(g1[k], i) += wq * L[k] * Ng[a][c];
            G(i, g1[k]) += wq * pd.buoyancy_sign * pd.beta * g[c] * Nv[a] * L[k];
          }
          for (int b = 0; b < 6; ++b) Mz(i, 2 * g2[b] + c) += wq * Nv[a] * Nv[b];
        }
        // omega (e3 x phi_j) . phi_i with e3 x (u1, u2) = (-u2, u1).
        for (int b = 0; b < 6; ++b) {
          N(2 * g2[a] + 1, 2 * g2[b]) += wq * omega * Nv[a] * Nv[b];
          N(2 * g2[a], 2 * g2[b] + 1) -= wq * omega * Nv[a] * Nv[b];
        }
      }
    }
  }

  // Boundary loads.
  const double gs[3] = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
  const double gw[3] = {5.0 / 18, 8.0 / 18, 5.0 / 18};
  const double normals[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
  for (const auto& tri : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      const Point a = verts[tri[e]], b = verts[tri[(e + 1) % 3]];
      const int s = side_of(a, b);
      if (s < 0) continue;
      const double len = std::hypot(b.x - a.x, b.y - a.y);
      const Point m{(a.x + b.x) / 2, (a.y + b.y) / 2};
      const int ia = static_cast<int>(find_node(nodes2, a)), ib = static_cast<int>(find_node(nodes2, b));
      const int im = static_cast<int>(find_node(nodes2, m));
      const int va = static_cast<int>(find_node(verts, a)), vb = static_cast<int>(find_node(verts, b));
      for (int q = 0; q < 3; ++q) {
        const double u = gs[q];
        const Point x{a.x + u * (b.x - a.x), a.y + u * (b.y - a.y)};
        const double wq = gw[q] * len;
        if (gamma1(s)) {
          const double v1 = pd.v1(x, t1);
          const double shape[3] = {(1 - u) * (1 - 2 * u), u * (2 * u - 1), 4 * u * (1 - u)};
          const int ids[3] = {ia, ib, im};
          for (int k = 0; k < 3; ++k) {
            for (int c = 0; c < 2; ++c) F1[2 * ids[k] + c] += wq * v1 * shape[k] * normals[s][c];
          }
        } else {
          const double v2 = pd.v2(x, t1);
          F2[va] += wq * v2 * (1 - u);
          F2[vb] += wq * v2 * u;
        }
      }
    }
  }

  // Constraints from coordinates.
  std::vector<int> zfree, wfree;
  for (int n = 0; n < n2; ++n) {
    bool fix[2] = {false, false};
    for (int s = 0; s < 4; ++s) {
      if (!on_side(nodes2[n], s)) continue;
      if (gamma1(s)) {
        fix[s <= 1 ? 1 : 0] = true;  // tangential component
      } else {
        fix[0] = fix[1] = true;
      }
    }
    for (int c = 0; c < 2; ++c) {
      if (!fix[c]) zfree.push_back(2 * n + c);
    }
  }
  for (int v = 0; v < nv; ++v) {
    bool fixed = false;
    for (int s = 0; s < 4; ++s) fixed = fixed || (gamma1(s) && on_side(verts[v], s));
    if (!fixed) wfree.push_back(v);
  }

  // Stage 1: temperature.
  const Eigen::MatrixXd T = Mw / dt + K + C;
  const Eigen::VectorXd rw = Mw * wn / dt + F2;
  const int mw = static_cast<int>(wfree.size());
  Eigen::MatrixXd Tf(mw, mw);
  Eigen::VectorXd bw(mw);
  for (int i = 0; i < mw; ++i) {
    bw[i] = rw[wfree[i]];
    for (int j = 0; j < mw; ++j) Tf(i, j) = T(wfree[i], wfree[j]);
  }
  const Eigen::VectorXd wf = Tf.fullPivLu().solve(bw);
  Result r;
  r.w = Eigen::VectorXd::Zero(nv);
  for (int i = 0; i < mw; ++i) r.w[wfree[i]] = wf[i];

  // Viscosity at the new temperature.
  for (const auto& tri : mesh.triangles) {
    const Point p[3] = {verts[tri[0]], verts[tri[1]], verts[tri[2]]};
    const double area2 = (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y);
    double gl[3][2];
    for (int i = 0; i < 3; ++i) {
      const Point& pj = p[(i + 1) % 3];
      const Point& pk = p[(i + 2) % 3];
      gl[i][0] = (pj.y - pk.y) / area2;
      gl[i][1] = (pk.x - pj.x) / area2;
    }
    const Point local2[6] = {p[0], p[1], p[2], {(p[0].x + p[1].x) / 2, (p[0].y + p[1].y) / 2},
                             {(p[1].x + p[2].x) / 2, (p[1].y + p[2].y) / 2},
                             {(p[2].x + p[0].x) / 2, (p[2].y + p[0].y) / 2}};
    int g2[6], g1[3];
    for (int a = 0; a < 6; ++a) g2[a] = static_cast<int>(find_node(nodes2, local2[a]));
    for (int a = 0; a < 3; ++a) g1[a] = static_cast<int>(find_node(verts, p[a]));
    for (const Qp& q : rule) {
      const double L[3] = {q.l0, q.l1, q.l2};
      const double wq = q.w * 0.5 * area2;
      double Ng[6][2];
      const int pairs[3][2] = {{0, 1}, {1, 2}, {2, 0}};
      for (int i = 0; i < 3; ++i) {
        for (int d = 0; d < 2; ++d) Ng[i][d] = (4 * L[i] - 1) * gl[i][d];
        const int a = pairs[i][0], b = pairs[i][1];
        for (int d = 0; d < 2; ++d) Ng[3 + i][d] = 4 * (L[a] * gl[b][d] + L[b] * gl[a][d]);
      }
      double wnew = 0;
      for (int a = 0; a < 3; ++a) wnew += r.w[g1[a]] * L[a];
      const double gam = pd.coefficients.viscosity()(wnew);
      for (int a = 0; a < 6; ++a) {
        const double rot_a[2] = {-Ng[a][1], Ng[a][0]};
        for (int b = 0; b < 6; ++b) {
          const double rot_b[2] = {-Ng[b][1], Ng[b][0]};
          for (int c = 0; c < 2; ++c) {
            for (int e = 0; e < 2; ++e) {
              A(2 * g2[a] + c, 2 * g2[b] + e) += wq * gam * (rot_a[c] * rot_b[e] + Ng[a][c] * Ng[b][e]);
            }
          }
        }
      }
    }
  }

  // Stage 2: velocity/head saddle.
  const Eigen::MatrixXd Kz = Mz / dt + A + N;
  const Eigen::VectorXd rz = Mz * zn / dt + F1 - G * r.w;
  const int mz = static_cast<int>(zfree.size());
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(mz + nv, mz + nv);
  Eigen::VectorXd bz = Eigen::VectorXd::Zero(mz + nv);
  for (int i = 0; i < mz; ++i) {
    bz[i] = rz[zfree[i]];
    for (int j = 0; j < mz; ++j) S(i, j) = Kz(zfree[i], zfree[j]);
    for (int k = 0; k < nv; ++k) {
      S(mz + k, i) = D(k, zfree[i]);
      S(i, mz + k) = D(k, zfree[i]);
    }
  }
  const Eigen::VectorXd x = S.fullPivLu().solve(bz);
  r.z = Eigen::VectorXd::Zero(nz);
  for (int i = 0; i < mz; ++i) r.z[zfree[i]] = x[i];
  r.P = x.tail(nv);
  return r;
}

}  // namespace dense_oracle
