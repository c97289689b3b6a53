#pragma once

// JSON run configuration. Every section is optional; missing keys keep the
// defaults below. Unknown keys and out-of-range values are collected and
// reported together in a single ConfigError.

#include <cstddef>
#include <filesystem>
#include <string>

#include "bgs/coefficients.hpp"
#include "bgs/mesh.hpp"
#include "bgs/solver.hpp"

namespace bgs::config {

enum class DataKind { Mms, Zero, CavityConvection };

struct MeshConfig {
  std::size_t nx = 4;
  std::size_t ny = 4;
  mesh::SideSet gamma1_sides{mesh::Side::Left};
  std::size_t refinements = 0;
};

struct PhysicsConfig {
  double beta = 0.0;
  fem::Vec2 gravity{0.0, -1.0};
  double buoyancy_sign = 1.0;
};

struct OutputConfig {
  std::string directory = "output";
  std::size_t vtk_every = 0;  // 0 disables snapshots
  std::string csv_name = "diagnostics.csv";
};

/// Parameters of the oracle subcommands.
struct StudyConfig {
  std::size_t levels = 3;
  double delta = 1e-3;
  std::size_t trials = 100;
  bool expect_monotone = false;
};

struct RunConfig {
  MeshConfig mesh;
  coefficients::CoefficientModel coefficients = coefficients::CoefficientModel::constant(1.0, 1.0);
  PhysicsConfig physics;
  DataKind data = DataKind::Zero;
  solver::SolverConfig solver;  // dt and t_end come from the "time" section
  bool estimate_constants = false;
  OutputConfig output;
  StudyConfig study;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

std::string data_name(DataKind kind);

/// Rectangle mesh refined `refinements` times.
mesh::Mesh build_mesh(const RunConfig& config);
solver::ProblemData build_problem(const RunConfig& config);

}  // namespace bgs::config
