#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace bgs::mesh {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

enum class Side : std::uint8_t { Left = 0, Right = 1, Bottom = 2, Top = 3 };

/// Gamma1 carries the head datum and the Dirichlet temperature; Gamma2 is
/// no-slip with a prescribed heat flux.
enum class BoundaryTag : std::uint8_t { Gamma1, Gamma2 };

/// Small bitmask over the four rectangle sides.
class SideSet {
 public:
  SideSet() = default;
  SideSet(std::initializer_list<Side> sides) {
    for (Side s : sides) insert(s);
  }

  void insert(Side s) { bits_ |= bit(s); }
  [[nodiscard]] bool contains(Side s) const { return (bits_ & bit(s)) != 0; }
  [[nodiscard]] bool empty() const { return bits_ == 0; }
  [[nodiscard]] bool full() const { return bits_ == 0xF; }
  [[nodiscard]] std::uint8_t bits() const { return bits_; }

  friend bool operator==(SideSet a, SideSet b) { return a.bits_ == b.bits_; }

 private:
  static std::uint8_t bit(Side s) { return static_cast<std::uint8_t>(1U << static_cast<unsigned>(s)); }
  std::uint8_t bits_ = 0;
};

Side parse_side(const std::string& name);
std::string side_name(Side side);

/// Boundary edge oriented counterclockwise around the domain, so the
/// outward normal is the edge direction rotated by -90 degrees.
struct BoundaryEdge {
  std::array<std::size_t, 2> v{};
  BoundaryTag tag = BoundaryTag::Gamma2;
  Side side = Side::Left;
};

struct Mesh {
  std::vector<Point> vertices;
  std::vector<std::array<std::size_t, 3>> triangles;  // counterclockwise
  std::vector<BoundaryEdge> boundary_edges;
  std::size_t generation = 0;
  /// Parent triangle in the previous generation (empty for generation 0).
  std::vector<std::size_t> parent;
  SideSet gamma1_sides;
};

double signed_area(const Mesh& mesh, std::size_t tri);

/// Unit square split into nx*ny cells, each cut along the (i,j)-(i+1,j+1)
/// diagonal. Throws ConfigError when gamma1_sides is empty or covers all sides.
Mesh build_rectangle_mesh(std::size_t nx, std::size_t ny, SideSet gamma1_sides);

/// Red refinement: every triangle is split into four by its edge midpoints.
/// Children of triangle t occupy indices 4t..4t+3; boundary tags are inherited.
Mesh refine_uniform(const Mesh& mesh);

/// Unique undirected edges (sorted vertex pairs) in lexicographic order.
std::vector<std::array<std::size_t, 2>> unique_edges(const Mesh& mesh);

/// Checks every structural invariant; returns a list of violations (empty
/// when the mesh is valid).
std::vector<std::string> check_invariants(const Mesh& mesh);

}  // namespace bgs::mesh
