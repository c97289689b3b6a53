// Command-line driver: run, mms, cauchy, contract, check-forms, estimate-constants.

#include <CLI11.hpp>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "bgs/config.hpp"
#include "bgs/errors.hpp"
#include "bgs/oracles.hpp"
#include "bgs/output.hpp"

namespace fs = std::filesystem;
using namespace bgs;

namespace {

enum Exit : int { kOk = 0, kConfig = 2, kSolver = 3, kVerification = 4 };

struct VerificationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

unsigned threads_from_env() {
  const char* env = std::getenv("BGS_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1 || v > 256) {
    throw ConfigError(std::string("BGS_THREADS must be an integer in [1, 256], got '") + env + "'");
  }
  return static_cast<unsigned>(v);
}

fs::path prepare_dir(const config::RunConfig& cfg) {
  fs::path dir = cfg.output.directory;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

std::string F(double v) { return output::format_double(v); }

void resolve_constants(const config::RunConfig& cfg, const fem::FunctionSpaces& spaces, std::uint64_t seed,
                       solver::SolverConfig& solver_cfg) {
  if (!cfg.estimate_constants) return;
  const auto est = solver::estimate_constants(spaces, seed);
  solver_cfg.constants = {est.c1, est.c1_prime, est.d, "estimated"};
  std::cout << "estimated constants: c1=" << F(est.c1) << " c1_prime=" << F(est.c1_prime) << " d=" << F(est.d)
            << '\n';
}

int cmd_run(const config::RunConfig& cfg, std::uint64_t seed, unsigned threads) {
  const auto spaces = fem::build_spaces(config::build_mesh(cfg), threads);
  const auto problem = config::build_problem(cfg);
  solver::SolverConfig scfg = cfg.solver;
  resolve_constants(cfg, spaces, seed, scfg);
  const fs::path dir = prepare_dir(cfg);

  output::CsvWriter constants(dir / "constants.csv", "source,c1,c1_prime,d");
  constants.row({scfg.constants.source, F(scfg.constants.c1), F(scfg.constants.c1_prime), F(scfg.constants.d)});
  constants.close();

  output::CsvWriter csv(dir / cfg.output.csv_name, output::kDiagnosticsHeader);
  std::size_t unconverged = 0;
  auto observe = [&](std::size_t n, const solver::State& s, const solver::Diagnostics& d) {
    csv.line(output::diagnostics_row(d));
    unconverged += !d.picard_converged;
    if (cfg.output.vtk_every > 0 && n % cfg.output.vtk_every == 0) {
      output::write_vtk(dir / output::vtk_name(n), spaces, s);
    }
  };
  const auto traj = solver::run(spaces, problem, scfg, observe, false);
  csv.close();
  if (unconverged > 0) {
    std::cerr << "WARNING: Picard iteration did not reach picard_tol in " << unconverged << " step(s)\n";
  }
  const auto& last = traj.diagnostics.back();
  std::cout << "run: " << traj.diagnostics.size() - 1 << " steps, t=" << F(last.t) << ", kinetic=" << F(last.kinetic)
            << ", thermal=" << F(last.thermal) << ", Re+Ra=" << F(last.Re_plus_Ra) << '\n';
  return kOk;
}

int cmd_mms(const config::RunConfig& cfg, unsigned threads) {
  if (cfg.mesh.nx != cfg.mesh.ny) throw ConfigError("mms study needs a square coarse mesh (nx == ny)");
  oracles::ConvergenceOptions o;
  o.levels = cfg.study.levels;
  o.coarse_n = cfg.mesh.nx << cfg.mesh.refinements;
  o.dt = cfg.solver.dt;
  o.t_end = cfg.solver.t_end;
  o.beta = cfg.physics.beta;
  o.gravity = cfg.physics.gravity;
  o.solver = cfg.solver;
  o.threads = threads;
  const auto r = oracles::convergence_study(cfg.coefficients, o);

  const fs::path dir = prepare_dir(cfg);
  output::CsvWriter csv(dir / "report_mms.csv",
                        "level,n,velocity_l2,velocity_rot,temperature_l2,head_l2,rate_velocity_l2,rate_velocity_rot,"
                        "rate_temperature_l2,rate_head_l2,seconds");
  for (std::size_t k = 0; k < r.levels.size(); ++k) {
    const auto& e = r.levels[k].errors;
    std::vector<std::string> row{std::to_string(k), std::to_string(r.levels[k].n), F(e.velocity_l2),
                                 F(e.velocity_rot), F(e.temperature_l2), F(e.head_l2)};
    if (k == 0) {
      row.insert(row.end(), {"", "", "", ""});
    } else {
      const auto& q = r.rates[k - 1];
      row.insert(row.end(), {F(q.velocity_l2), F(q.velocity_rot), F(q.temperature_l2), F(q.head_l2)});
    }
    row.push_back(F(r.levels[k].seconds));
    csv.row(row);
    std::cout << "level " << k << " n=" << r.levels[k].n << " eu=" << F(e.velocity_l2) << " erot=" << F(e.velocity_rot)
              << " ew=" << F(e.temperature_l2) << " eP=" << F(e.head_l2) << '\n';
  }
  csv.close();
  const auto& f = r.rates.back();
  std::cout << "finest-pair rates: velocity_l2=" << F(f.velocity_l2) << " velocity_rot=" << F(f.velocity_rot)
            << " temperature_l2=" << F(f.temperature_l2) << " head_l2=" << F(f.head_l2) << '\n';
  if (!r.strictly_decreasing) throw VerificationFailure("mms: errors not strictly decreasing across levels");
  if (!r.rates_met) throw VerificationFailure("mms: finest-pair rates below targets (2.5, 1.6, 1.6, 1.6)");
  return kOk;
}

int cmd_cauchy(const config::RunConfig& cfg, unsigned threads) {
  if (cfg.mesh.nx != cfg.mesh.ny) throw ConfigError("cauchy study needs a square coarse mesh (nx == ny)");
  oracles::CauchyOptions o;
  o.levels = cfg.study.levels;
  o.coarse_n = cfg.mesh.nx << cfg.mesh.refinements;
  o.dt = cfg.solver.dt;
  o.t_end = cfg.solver.t_end;
  o.gamma1_sides = cfg.mesh.gamma1_sides;
  o.solver = cfg.solver;
  o.threads = threads;
  const auto r = oracles::cauchy_study(config::build_problem(cfg), o);

  const fs::path dir = prepare_dir(cfg);
  output::CsvWriter csv(dir / "report_cauchy.csv",
                        "pair,velocity,temperature,velocity_quadrature,temperature_quadrature");
  for (std::size_t k = 0; k < r.velocity.size(); ++k) {
    csv.row({std::to_string(k), F(r.velocity[k]), F(r.temperature[k]), F(r.velocity_quadrature[k]),
             F(r.temperature_quadrature[k])});
    std::cout << "pair " << k << ": velocity " << F(r.velocity[k]) << ", temperature " << F(r.temperature[k]) << '\n';
  }
  csv.close();
  std::cout << "max ratios: velocity " << F(r.max_ratio_velocity) << ", temperature " << F(r.max_ratio_temperature)
            << '\n';
  if (!r.passed()) throw VerificationFailure("cauchy: successive difference ratio above 0.6");
  return kOk;
}

int cmd_contract(const config::RunConfig& cfg, std::uint64_t seed, unsigned threads) {
  const auto spaces = fem::build_spaces(config::build_mesh(cfg), threads);
  solver::SolverConfig scfg = cfg.solver;
  resolve_constants(cfg, spaces, seed, scfg);
  oracles::ContractionOptions o;
  o.delta = cfg.study.delta;
  o.seed = seed;
  o.zero_forcing = cfg.data == config::DataKind::Zero;
  o.expect_monotone = cfg.study.expect_monotone;
  const auto r = oracles::contraction_study(spaces, config::build_problem(cfg), scfg, o);

  const fs::path dir = prepare_dir(cfg);
  // The comment line states how D and M are measured.
  output::CsvWriter csv(dir / "report_contract.csv",
                        "# D = |z1-z2|^2_L2 + |w1-w2|^2_L2; bound = D(0) exp(sum_{k=1..n} (M(t_k) + N) dt) (1 + 1e-6); "
                        "M = beta|g| + l1/(2 gamma0 c1) |grad z|^2_L2 + l2/(2 k0 c1') |grad w|^2_L2 of the baseline; "
                        "N = beta|g|\nstep,t,D,bound,Re_plus_Ra");
  for (std::size_t n = 0; n < r.D.size(); ++n) {
    csv.row({std::to_string(n), F(r.t[n]), F(r.D[n]), F(r.bound[n]), F(r.Re_plus_Ra[n])});
  }
  csv.close();
  std::cout << "contract: D(0)=" << F(r.D.front()) << " D(end)=" << F(r.D.back())
            << " worst relative margin=" << F(r.worst_margin) << " monotone=" << (r.monotone ? "yes" : "no")
            << " Re+Ra<1 every step=" << (r.condition_every_step ? "yes" : "no") << '\n';
  if (!r.gronwall_holds) throw VerificationFailure("contract: Gronwall bound violated");
  if (r.expect_monotone && !r.monotone) throw VerificationFailure("contract: D increased at some step");
  if (!r.passed()) throw VerificationFailure("contract: D(t_end) > D(0) under zero forcing with Re+Ra < 1");
  return kOk;
}

int cmd_check_forms(const config::RunConfig& cfg, std::uint64_t seed, unsigned threads) {
  const auto spaces = fem::build_spaces(config::build_mesh(cfg), threads);
  const auto r = oracles::check_forms(spaces, cfg.coefficients, cfg.study.trials, seed);
  const fs::path dir = prepare_dir(cfg);
  output::CsvWriter csv(dir / "report_check-forms.csv", "name,value,tolerance,passed");
  for (const auto& e : r.entries) {
    csv.row({e.name, F(e.value), F(e.tolerance), e.passed ? "1" : "0"});
    std::cout << (e.passed ? "ok   " : "FAIL ") << e.name << " = " << F(e.value) << " (tol " << F(e.tolerance)
              << ")\n";
  }
  csv.close();
  if (!r.passed()) {
    std::string failed;
    for (const auto& e : r.entries) {
      if (!e.passed) failed += (failed.empty() ? "" : ", ") + e.name;
    }
    throw VerificationFailure("check-forms: " + failed);
  }
  return kOk;
}

int cmd_estimate(const config::RunConfig& cfg, std::uint64_t seed, unsigned threads) {
  const auto spaces = fem::build_spaces(config::build_mesh(cfg), threads);
  const auto est = solver::estimate_constants(spaces, seed);
  const fs::path dir = prepare_dir(cfg);
  output::CsvWriter csv(dir / "report_estimate-constants.csv", "c1,c1_prime,d");
  csv.row({F(est.c1), F(est.c1_prime), F(est.d)});
  csv.close();
  std::cout << "c1=" << F(est.c1) << " c1_prime=" << F(est.c1_prime) << " d=" << F(est.d) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite element solver and verification harness for the generalized Boussinesq system"};
  app.require_subcommand(1);
  std::string config_path;
  std::uint64_t seed = 42;
  app.add_option("--seed", seed, "seed for oracle randomness")->capture_default_str();

  for (const auto& [name, help, needs] : std::initializer_list<std::tuple<const char*, const char*, bool>>{
           {"run", "time integration with CSV diagnostics and VTK snapshots", true},
           {"mms", "manufactured-solution convergence study", true},
           {"cauchy", "refinement Cauchy study", true},
           {"contract", "two-trajectory contraction study", true},
           {"check-forms", "audit of the assembled forms", false},
           {"estimate-constants", "discrete coercivity and Sobolev constants", true}}) {
    CLI::App* sub = app.add_subcommand(name, help);
    auto* opt = sub->add_option("--config", config_path, "JSON configuration file");
    if (needs) opt->required();
    sub->add_option("--seed", seed, "seed for oracle randomness");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "ERROR: usage: " << one_line(e.what()) << '\n';
    return kConfig;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  try {
    const unsigned threads = threads_from_env();
    const config::RunConfig cfg = config_path.empty() ? config::RunConfig{} : config::load_config(config_path);
    if (name == "run") return cmd_run(cfg, seed, threads);
    if (name == "mms") return cmd_mms(cfg, threads);
    if (name == "cauchy") return cmd_cauchy(cfg, threads);
    if (name == "contract") return cmd_contract(cfg, seed, threads);
    if (name == "check-forms") return cmd_check_forms(cfg, seed, threads);
    if (name == "estimate-constants") return cmd_estimate(cfg, seed, threads);
  } catch (const ConfigError& e) {
    std::cerr << "ERROR: config: " << one_line(e.what()) << '\n';
    return kConfig;
  } catch (const VerificationFailure& e) {
    std::cerr << "ERROR: verification: " << one_line(e.what()) << '\n';
    return kVerification;
  } catch (const SolverError& e) {
    std::cerr << "ERROR: solver: " << one_line(e.what()) << '\n';
    return kSolver;
  } catch (const std::exception& e) {
    std::cerr << "ERROR: " << name << ": " << one_line(e.what()) << '\n';
    return kSolver;
  }
  return kOk;
}
