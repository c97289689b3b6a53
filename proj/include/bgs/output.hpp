#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "bgs/forms.hpp"
#include "bgs/solver.hpp"

namespace bgs::output {

inline constexpr const char* kDiagnosticsHeader =
    "t,kinetic,thermal,rot_seminorm2,grad_w_norm2,z_L4,w_L4,Re,Ra,Re_plus_Ra,div_residual,picard_iters";

/// Shortest-exact formatting is not used: every value gets 17 significant
/// digits so equal doubles always give equal bytes.
std::string format_double(double v);

std::string diagnostics_row(const solver::Diagnostics& d);

class CsvWriter {
 public:
  /// Opens `path` for writing and emits the header line; throws std::runtime_error on I/O failure.
  CsvWriter(const std::filesystem::path& path, const std::string& header);
  void row(const std::vector<std::string>& cells);
  void line(const std::string& text);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

/// Legacy ASCII VTK 3.0 unstructured grid on the mesh vertices with point
/// data "velocity" (z-padded), "temperature" and "head".
void write_vtk(const std::filesystem::path& path, const fem::FunctionSpaces& spaces, const solver::State& state);

std::string vtk_name(std::size_t step);

}  // namespace bgs::output
