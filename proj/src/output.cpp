#include "bgs/output.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace bgs::output {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string diagnostics_row(const solver::Diagnostics& d) {
  std::string s;
  for (double v : {d.t, d.kinetic, d.thermal, d.rot_seminorm2, d.grad_w_norm2, d.z_L4, d.w_L4, d.Re, d.Ra,
                   d.Re_plus_Ra, d.div_residual}) {
    s += format_double(v);
    s += ',';
  }
  s += std::to_string(d.picard_iters);
  return s;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::string& header) : path_(path) {
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  line(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) s += ',';
    s += cells[i];
  }
  line(s);
}

void CsvWriter::line(const std::string& text) {
  out_ << text << '\n';
  if (!out_) throw std::runtime_error("write failed on '" + path_.string() + "'");
}

void CsvWriter::close() {
  out_.close();
  if (out_.fail()) throw std::runtime_error("close failed on '" + path_.string() + "'");
}

std::string vtk_name(std::size_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fields_%06zu.vtk", step);
  return buf;
}

void write_vtk(const std::filesystem::path& path, const fem::FunctionSpaces& spaces, const solver::State& state) {
  fem::require_space(spaces, state.z, fem::SpaceId::Velocity, "write_vtk");
  fem::require_space(spaces, state.w, fem::SpaceId::Temperature, "write_vtk");
  fem::require_space(spaces, state.P, fem::SpaceId::Head, "write_vtk");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  const auto& m = spaces.mesh;
  const std::size_t nv = m.vertices.size(), nt = m.triangles.size();

  out << "# vtk DataFile Version 3.0\n";
  out << "bgs t=" << format_double(state.t) << "\n";
  out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << nv << " double\n";
  for (const auto& p : m.vertices) out << format_double(p.x) << ' ' << format_double(p.y) << " 0\n";
  out << "CELLS " << nt << ' ' << 4 * nt << '\n';
  for (const auto& t : m.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << nt << '\n';
  for (std::size_t i = 0; i < nt; ++i) out << "5\n";

  // P2 nodes are numbered vertices first, so vertex v carries velocity dofs 2v, 2v+1.
  out << "POINT_DATA " << nv << '\n';
  out << "VECTORS velocity double\n";
  for (std::size_t v = 0; v < nv; ++v) {
    out << format_double(state.z.values[2 * v]) << ' ' << format_double(state.z.values[2 * v + 1]) << " 0\n";
  }
  out << "SCALARS temperature double 1\nLOOKUP_TABLE default\n";
  for (std::size_t v = 0; v < nv; ++v) out << format_double(state.w.values[v]) << '\n';
  out << "SCALARS head double 1\nLOOKUP_TABLE default\n";
  for (std::size_t v = 0; v < nv; ++v) out << format_double(state.P.values[v]) << '\n';
  if (!out) throw std::runtime_error("write failed on '" + path.string() + "'");
}

}  // namespace bgs::output
