#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bgs/config.hpp"
#include "bgs/errors.hpp"
#include "bgs/output.hpp"

#ifndef BGS_CLI_PATH
#error "BGS_CLI_PATH must point at the bgs executable"
#endif

using namespace bgs;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("bgs_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

int invoke(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + BGS_CLI_PATH + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string run_config(const fs::path& out, const std::string& extra = "") {
  return R"({"mesh": {"nx": 4, "ny": 4, "gamma1_sides": ["left"]},
    "coefficients": {"viscosity": {"kind": "tanh_blend", "lower": 0.5, "upper": 2.0},
                     "conductivity": {"kind": "clamped_affine", "offset": 1.0, "slope": 0.5, "lower": 0.5, "upper": 2.0}},
    "physics": {"beta": 1.0, "gravity": "constant_down"},
    "data": {"problem": "mms"},
    "time": {"dt": 0.02, "t_end": 0.1},
    "output": {"directory": ")" + out.string() + R"(", "vtk_every": 2})" + extra + "}";
}

}  // namespace

TEST_CASE("configuration defaults") {
  const auto c = config::parse_config("{}");
  CHECK(c.mesh.nx == 4);
  CHECK(c.mesh.gamma1_sides == mesh::SideSet{mesh::Side::Left});
  CHECK(c.data == config::DataKind::Zero);
  CHECK(!c.estimate_constants);
  CHECK(c.output.csv_name == "diagnostics.csv");
  CHECK(c.study.levels == 3);
  CHECK(c.coefficients.gamma0() == 1.0);
}

TEST_CASE("configuration values") {
  const auto c = config::parse_config(R"({
    "mesh": {"nx": 3, "ny": 5, "gamma1_sides": ["left", "top"], "refinements": 1},
    "physics": {"beta": 2.0, "gravity": [0.5, -1.0], "buoyancy_sign": -1},
    "data": {"problem": "cavity_convection"},
    "time": {"dt": 0.01, "t_end": 0.5},
    "solver": {"picard_max": 7, "picard_tol": 1e-9, "picard_enabled": false, "constants": "estimate"},
    "study": {"levels": 4, "delta": 0.01, "trials": 3, "expect_monotone": true}})");
  CHECK(c.mesh.ny == 5);
  CHECK(c.mesh.gamma1_sides.contains(mesh::Side::Top));
  CHECK(c.physics.gravity[0] == 0.5);
  CHECK(c.physics.buoyancy_sign == -1.0);
  CHECK(c.data == config::DataKind::CavityConvection);
  CHECK(c.solver.picard_max == 7);
  CHECK(!c.solver.picard_enabled);
  CHECK(c.estimate_constants);
  CHECK(c.study.expect_monotone);
  const auto m = config::build_mesh(c);
  CHECK(m.triangles.size() == 4 * 2 * 15);

  const auto g = config::parse_config(R"({"physics": {"gravity": "constant_down"}})");
  CHECK(g.physics.gravity[0] == 0.0);
  CHECK(g.physics.gravity[1] == -1.0);

  const auto k = config::parse_config(R"({"solver": {"constants": {"c1": 0.5, "c1_prime": 0.25, "d": 2}}})");
  CHECK(k.solver.constants.d == 2.0);
  CHECK(!k.estimate_constants);
}

TEST_CASE("configuration errors are collected") {
  CHECK_THROWS_AS(config::parse_config("{"), ConfigError);
  CHECK_THROWS_AS(config::parse_config(R"({"mesh": {"nxx": 2}})"), ConfigError);
  CHECK_THROWS_AS(config::parse_config(R"({"bogus": 1})"), ConfigError);
  CHECK_THROWS_AS(config::parse_config(R"({"mesh": {"gamma1_sides": []}})"), ConfigError);
  CHECK_THROWS_AS(config::parse_config(R"({"mesh": {"gamma1_sides": ["left", "right", "top", "bottom"]}})"),
                  ConfigError);
  CHECK_THROWS_AS(config::parse_config(R"({"data": {"problem": "mms"}, "mesh": {"gamma1_sides": ["top"]}})"),
                  ConfigError);
  CHECK_THROWS_AS(config::parse_config(R"({"coefficients": {"viscosity": {"kind": "constant", "value": 0}}})"),
                  ConfigError);
  CHECK_THROWS_AS(config::parse_config(R"({"solver": {"constants": "guess"}})"), ConfigError);
  try {
    config::parse_config(R"({"mesh": {"nx": 0}, "time": {"dt": -1}, "data": {"problem": "x"}})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("3 problems") != std::string::npos);
    CHECK(msg.find("mesh") != std::string::npos);
    CHECK(msg.find("time") != std::string::npos);
    CHECK(msg.find("data.problem") != std::string::npos);
  }
}

TEST_CASE("number formatting round-trips") {
  for (double v : {0.0, 1.0, -2.5, 0.1 + 0.2, 1e-300, 6.02214076e23, M_PI}) {
    CHECK(std::stod(output::format_double(v)) == v);
  }
  CHECK(output::format_double(0.0) == "0");
  CHECK(output::vtk_name(12) == "fields_000012.vtk");
  solver::Diagnostics d;
  d.picard_iters = 3;
  const std::string row = output::diagnostics_row(d);
  CHECK(std::count(row.begin(), row.end(), ',') == 11);
  CHECK(row.substr(row.size() - 2) == ",3");
}

TEST_CASE("VTK output") {
  const auto dir = scratch("vtk");
  const auto s = fem::build_spaces(mesh::build_rectangle_mesh(2, 1, {mesh::Side::Left}));
  solver::State st;
  st.z = fem::FieldVector::zeros(s, fem::SpaceId::Velocity);
  st.w = fem::FieldVector::zeros(s, fem::SpaceId::Temperature);
  st.P = fem::FieldVector::zeros(s, fem::SpaceId::Head);
  output::write_vtk(dir / "a.vtk", s, st);
  const std::string text = slurp(dir / "a.vtk");
  CHECK(text.rfind("# vtk DataFile Version 3.0\n", 0) == 0);
  CHECK(text.find("ASCII\nDATASET UNSTRUCTURED_GRID\n") != std::string::npos);
  CHECK(text.find("POINTS 6 double") != std::string::npos);
  CHECK(text.find("CELLS 4 16") != std::string::npos);
  CHECK(text.find("CELL_TYPES 4") != std::string::npos);
  CHECK(text.find("POINT_DATA 6") != std::string::npos);
  CHECK(text.find("VECTORS velocity double") != std::string::npos);
  CHECK(text.find("SCALARS temperature double 1") != std::string::npos);
  CHECK(text.find("SCALARS head double 1") != std::string::npos);
}

TEST_CASE("command line exit codes") {
  const auto dir = scratch("codes");
  write(dir / "bad.json", R"({"mesh": {"nx": -1}, "bogus": 2})");
  write(dir / "broken.json", "{");
  write(dir / "one_level.json", R"({"data": {"problem": "mms"}, "study": {"levels": 1}})");
  write(dir / "singular.json", R"({"mesh": {"nx": 1, "ny": 1}, "data": {"problem": "mms"},
      "time": {"dt": 0.1, "t_end": 0.1}, "output": {"directory": ")" +
                                   (dir / "out").string() + R"("}})");
  write(dir / "ok.json", R"({"time": {"dt": 0.1, "t_end": 0.2}, "output": {"directory": ")" +
                             (dir / "ok").string() + R"("}})");
  CHECK(invoke("") == 2);
  CHECK(invoke("nonsense") == 2);
  CHECK(invoke("run") == 2);
  CHECK(invoke("run --config " + (dir / "missing.json").string()) == 2);
  CHECK(invoke("run --config " + (dir / "bad.json").string()) == 2);
  CHECK(invoke("run --config " + (dir / "broken.json").string()) == 2);
  CHECK(invoke("mms --config " + (dir / "one_level.json").string()) == 2);
  CHECK(invoke("run --config " + (dir / "singular.json").string()) == 3);
  CHECK(invoke("run --config " + (dir / "ok.json").string(), "BGS_THREADS=0") == 2);
  CHECK(invoke("run --config " + (dir / "ok.json").string()) == 0);
  CHECK(fs::exists(dir / "ok" / "diagnostics.csv"));
  CHECK(fs::exists(dir / "ok" / "constants.csv"));
  const std::string csv = slurp(dir / "ok" / "diagnostics.csv");
  CHECK(csv.rfind(std::string(output::kDiagnosticsHeader) + "\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header, t=0, two steps
  CHECK(invoke("check-forms") == 0);
}

TEST_CASE("runs are byte-for-byte reproducible") {
  const auto dir = scratch("determinism");
  for (const char* tag : {"a", "b", "c"}) {
    write(dir / (std::string(tag) + ".json"), run_config(dir / tag));
  }
  REQUIRE(invoke("run --config " + (dir / "a.json").string(), "BGS_THREADS=1") == 0);
  REQUIRE(invoke("run --config " + (dir / "b.json").string(), "BGS_THREADS=1") == 0);
  REQUIRE(invoke("run --config " + (dir / "c.json").string(), "BGS_THREADS=4") == 0);
  for (const char* f : {"diagnostics.csv", "constants.csv", "fields_000000.vtk", "fields_000002.vtk",
                        "fields_000004.vtk"}) {
    const std::string a = slurp(dir / "a" / f);
    CAPTURE(f);
    CHECK(!a.empty());
    CHECK(a == slurp(dir / "b" / f));
    CHECK(a == slurp(dir / "c" / f));
  }
}
