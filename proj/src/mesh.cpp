#include "bgs/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "bgs/errors.hpp"

namespace bgs::mesh {

Side parse_side(const std::string& name) {
  if (name == "left") return Side::Left;
  if (name == "right") return Side::Right;
  if (name == "bottom") return Side::Bottom;
  if (name == "top") return Side::Top;
  throw ConfigError("unknown side '" + name + "' (expected left, right, bottom or top)");
}

std::string side_name(Side side) {
  switch (side) {
    case Side::Left: return "left";
    case Side::Right: return "right";
    case Side::Bottom: return "bottom";
    case Side::Top: return "top";
  }
  return "?";
}

double signed_area(const Mesh& mesh, std::size_t tri) {
  const auto& t = mesh.triangles[tri];
  const Point& a = mesh.vertices[t[0]];
  const Point& b = mesh.vertices[t[1]];
  const Point& c = mesh.vertices[t[2]];
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

Mesh build_rectangle_mesh(std::size_t nx, std::size_t ny, SideSet gamma1_sides) {
  if (nx == 0 || ny == 0) throw ConfigError("mesh needs nx, ny >= 1");
  if (gamma1_sides.empty() || gamma1_sides.full()) {
    throw ConfigError("gamma1_sides must be a nonempty proper subset of {left,right,bottom,top}");
  }

  Mesh m;
  m.gamma1_sides = gamma1_sides;
  const std::size_t npx = nx + 1;
  auto vid = [npx](std::size_t i, std::size_t j) { return j * npx + i; };

  m.vertices.reserve(npx * (ny + 1));
  for (std::size_t j = 0; j <= ny; ++j) {
    for (std::size_t i = 0; i <= nx; ++i) {
      m.vertices.push_back({static_cast<double>(i) / static_cast<double>(nx),
                            static_cast<double>(j) / static_cast<double>(ny)});
    }
  }

  m.triangles.reserve(2 * nx * ny);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t v00 = vid(i, j), v10 = vid(i + 1, j);
      const std::size_t v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      m.triangles.push_back({v00, v10, v11});
      m.triangles.push_back({v00, v11, v01});
    }
  }

  auto tag_of = [&](Side s) {
    return gamma1_sides.contains(s) ? BoundaryTag::Gamma1 : BoundaryTag::Gamma2;
  };
  // Counterclockwise walk: bottom, right, top, left.
  for (std::size_t i = 0; i < nx; ++i) m.boundary_edges.push_back({{vid(i, 0), vid(i + 1, 0)}, tag_of(Side::Bottom), Side::Bottom});
  for (std::size_t j = 0; j < ny; ++j) m.boundary_edges.push_back({{vid(nx, j), vid(nx, j + 1)}, tag_of(Side::Right), Side::Right});
  for (std::size_t i = nx; i > 0; --i) m.boundary_edges.push_back({{vid(i, ny), vid(i - 1, ny)}, tag_of(Side::Top), Side::Top});
  for (std::size_t j = ny; j > 0; --j) m.boundary_edges.push_back({{vid(0, j), vid(0, j - 1)}, tag_of(Side::Left), Side::Left});
  return m;
}

Mesh refine_uniform(const Mesh& mesh) {
  Mesh fine;
  fine.gamma1_sides = mesh.gamma1_sides;
  fine.generation = mesh.generation + 1;
  fine.vertices = mesh.vertices;

  std::map<std::array<std::size_t, 2>, std::size_t> midpoint;
  auto mid = [&](std::size_t a, std::size_t b) {
    std::array<std::size_t, 2> key{std::min(a, b), std::max(a, b)};
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const Point& pa = mesh.vertices[a];
    const Point& pb = mesh.vertices[b];
    fine.vertices.push_back({0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)});
    const std::size_t id = fine.vertices.size() - 1;
    midpoint.emplace(key, id);
    return id;
  };

  fine.triangles.reserve(4 * mesh.triangles.size());
  fine.parent.reserve(4 * mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto [a, b, c] = mesh.triangles[t];
    const std::size_t ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
    fine.triangles.push_back({a, ab, ca});
    fine.triangles.push_back({ab, b, bc});
    fine.triangles.push_back({ca, bc, c});
    fine.triangles.push_back({ab, bc, ca});
    for (int k = 0; k < 4; ++k) fine.parent.push_back(t);
  }

  fine.boundary_edges.reserve(2 * mesh.boundary_edges.size());
  for (const BoundaryEdge& e : mesh.boundary_edges) {
    const std::size_t m = mid(e.v[0], e.v[1]);
    fine.boundary_edges.push_back({{e.v[0], m}, e.tag, e.side});
    fine.boundary_edges.push_back({{m, e.v[1]}, e.tag, e.side});
  }
  return fine;
}

std::vector<std::array<std::size_t, 2>> unique_edges(const Mesh& mesh) {
  std::vector<std::array<std::size_t, 2>> edges;
  edges.reserve(3 * mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const std::size_t a = t[k], b = t[(k + 1) % 3];
      edges.push_back({std::min(a, b), std::max(a, b)});
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

std::vector<std::string> check_invariants(const Mesh& mesh) {
  std::vector<std::string> issues;
  auto report = [&](const std::string& s) { issues.push_back(s); };

  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (std::size_t v : mesh.triangles[t]) {
      if (v >= mesh.vertices.size()) report("triangle " + std::to_string(t) + " references missing vertex");
    }
    if (!(signed_area(mesh, t) > 0.0)) report("triangle " + std::to_string(t) + " has non-positive area");
  }
  if (!issues.empty()) return issues;

  // Edge usage counts: boundary edges once, interior edges twice.
  std::map<std::array<std::size_t, 2>, int> use;
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const std::size_t a = t[k], b = t[(k + 1) % 3];
      ++use[{std::min(a, b), std::max(a, b)}];
    }
  }
  std::map<std::array<std::size_t, 2>, int> tagged;
  bool has1 = false, has2 = false;
  for (const BoundaryEdge& e : mesh.boundary_edges) {
    ++tagged[{std::min(e.v[0], e.v[1]), std::max(e.v[0], e.v[1])}];
    has1 = has1 || e.tag == BoundaryTag::Gamma1;
    has2 = has2 || e.tag == BoundaryTag::Gamma2;
  }
  for (const auto& [edge, count] : use) {
    if (count > 2) report("edge used by more than two triangles (non-conforming)");
    const bool is_tagged = tagged.count(edge) != 0;
    if (count == 1 && !is_tagged) report("boundary edge without a tag");
    if (count == 2 && is_tagged) report("interior edge carries a boundary tag");
  }
  for (const auto& [edge, count] : tagged) {
    if (count != 1) report("boundary edge tagged more than once");
    if (use.count(edge) == 0) report("tagged edge does not belong to any triangle");
  }
  if (!has1 || !has2) report("both Gamma1 and Gamma2 must be nonempty");

  // Hanging nodes would show up as vertices lying inside another edge; in a
  // conforming mesh every interior edge is shared, so Euler's formula
  // V - E + F = 1 for a triangulated disk is a sufficient global check.
  const long long V = static_cast<long long>(mesh.vertices.size());
  const long long E = static_cast<long long>(use.size());
  const long long F = static_cast<long long>(mesh.triangles.size());
  if (V - E + F != 1) report("Euler characteristic V-E+F != 1");

  // Duplicate vertices.
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const Point& p : mesh.vertices) {
    xmin = std::min(xmin, p.x); xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y); ymax = std::max(ymax, p.y);
  }
  const double tol = 1e-12 * std::hypot(xmax - xmin, ymax - ymin);
  std::vector<std::size_t> order(mesh.vertices.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return mesh.vertices[a].x < mesh.vertices[b].x;
  });
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const Point& p = mesh.vertices[order[i]];
      const Point& q = mesh.vertices[order[j]];
      if (q.x - p.x > tol) break;
      if (std::hypot(q.x - p.x, q.y - p.y) <= tol) {
        report("duplicate vertices " + std::to_string(order[i]) + " and " + std::to_string(order[j]));
      }
    }
  }
  return issues;
}

}  // namespace bgs::mesh
