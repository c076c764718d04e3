#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lbb/infsup.hpp"
#include "lbb/macroelement.hpp"
#include "lbb/scenarios.hpp"
#include "lbb/stokes.hpp"
#include "lbb/unstructure.hpp"

#ifndef LBB_DEFAULT_CONFIG
#define LBB_DEFAULT_CONFIG "config/thresholds.ini"
#endif

namespace fs = std::filesystem;
using namespace lbb;

namespace {

Axis parse_axis(const std::string& s) {
  if (s == "x") return Axis::x;
  if (s == "y") return Axis::y;
  throw CLI::ValidationError("--axis", "expected x or y");
}

std::vector<FECombo> parse_combos(const std::vector<std::string>& names) {
  std::vector<FECombo> out;
  for (const auto& n : names) out.push_back(FECombo::parse(n));
  return out;
}

void emit(const CsvTable& t, const fs::path& out_dir, const std::string& file) {
  fs::create_directories(out_dir);
  t.save(out_dir / file);
  std::cout << t.str();
  std::cerr << "wrote " << (out_dir / file).string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Macro-element stability analysis and Stokes solver for enriched P1/P2 elements"};
  app.require_subcommand(1);

  std::string out_dir = "out";
  std::uint64_t seed = 42;
  double eps = 1e-10, r = 0.15;
  std::string axis = "y";
  std::vector<std::string> combos;
  std::string mesh_path;
  int levels = 0;

  // gen
  auto* gen = app.add_subcommand("gen", "generate a mesh");
  std::string kind, gen_out;
  int nx = 8, ny = 0, layers = 4;
  double amplitude = 0.0;
  gen->add_option("kind", kind, "structured | zigzag | perturbed | unstructured | quad | quad-macro | tet | extruded")
      ->required();
  gen->add_option("output", gen_out, "output .msh (or .vtk) path")->required();
  gen->add_option("--nx", nx, "intervals in x (or per edge)");
  gen->add_option("--ny", ny, "intervals in y (default nx)");
  gen->add_option("--amplitude", amplitude, "perturbation amplitude (perturbed)");
  gen->add_option("--layers", layers, "extrusion layers");
  gen->add_option("--seed", seed, "random seed");
  gen->add_option("--r", r, "unstructuring factor (unstructured)");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "per-macro structure and regularity report");
  bool oracle = false;
  analyze->add_option("--mesh", mesh_path)->required();
  analyze->add_option("--combo", combos, "FE combos, e.g. p1b-p1:p1")->required();
  analyze->add_flag("--oracle", oracle, "append numeric local nullspace dimensions");
  analyze->add_option("--out-dir", out_dir);

  // unstructure
  auto* unstr = app.add_subcommand("unstructure", "vertex post-processing into a uniformly unstructured mesh");
  std::string in_path, out_path;
  bool verify_only = false;
  unstr->add_option("input", in_path)->required();
  unstr->add_option("output", out_path);
  unstr->add_option("--axis", axis, "x or y");
  unstr->add_option("--r", r, "unstructuring factor in (0, 1)");
  unstr->add_flag("--verify-only", verify_only, "only report uniformity");

  // solve-cavity
  auto* cav = app.add_subcommand("solve-cavity", "lid-driven cavity solve");
  std::string lid = "dirichlet";
  cav->add_option("--mesh", mesh_path)->required();
  cav->add_option("--combo", combos)->required();
  cav->add_option("--lid", lid, "dirichlet | neumann");
  cav->add_option("--eps", eps, "pressure penalization");
  cav->add_option("--out-dir", out_dir);

  // convergence
  auto* conv = app.add_subcommand("convergence", "manufactured-solution error orders");
  std::string family = "unstructured";
  conv->add_option("--combo", combos)->required();
  conv->add_option("--levels", levels, "levels starting at 8x8 (default 4)");
  conv->add_option("--family", family, "unstructured | structured | zigzag");
  conv->add_option("--seed", seed);
  conv->add_option("--eps", eps);
  conv->add_option("--r", r);
  conv->add_option("--out-dir", out_dir);

  // infsup
  auto* inf = app.add_subcommand("infsup", "discrete inf-sup constant");
  int k = 5;
  inf->add_option("--mesh", mesh_path)->required();
  inf->add_option("--combo", combos)->required();
  inf->add_option("--k", k, "eigenvalues to report");
  inf->add_option("--seed", seed);

  // run
  auto* run = app.add_subcommand("run", "run a named scenario");
  std::string scenario, config = LBB_DEFAULT_CONFIG;
  bool check = false, no_vtk = false;
  run->add_option("scenario", scenario, "test1 ... test9, q2q1q1, or all")->required();
  run->add_flag("--check", check, "exit nonzero on threshold violations");
  run->add_option("--config", config, "thresholds file");
  run->add_option("--out-dir", out_dir);
  run->add_option("--seed", seed);
  run->add_option("--levels", levels);
  run->add_option("--eps", eps);
  run->add_option("--r", r);
  run->add_flag("--no-vtk", no_vtk, "skip VTK output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      if (ny <= 0) ny = nx;
      Mesh m;
      if (kind == "structured") m = gen_structured_tri(nx, ny);
      else if (kind == "zigzag") m = gen_zigzag(nx, ny);
      else if (kind == "perturbed") m = gen_perturbed(gen_structured_tri(nx, ny), amplitude, seed);
      else if (kind == "unstructured")
        m = apply_algorithm1(gen_perturbed(gen_structured_tri(nx, ny), 0.3 / nx, seed), {r, Axis::y});
      else if (kind == "quad") m = gen_structured_quad(nx, ny);
      else if (kind == "quad-macro") m = gen_quad_macro({1.0, 1.0}, {1.0, 1.0});
      else if (kind == "tet") m = gen_structured_tet(nx);
      else if (kind == "extruded") m = gen_extruded_tet(gen_structured_tri(nx, ny), layers, 1.0);
      else throw CLI::ValidationError("kind", "unknown mesh kind " + kind);
      if (fs::path(gen_out).extension() == ".vtk") save_vtk(m, {}, gen_out);
      else save_msh(m, gen_out);
      std::cout << "seed " << seed << ": " << m.num_vertices() << " vertices, " << m.num_cells() << " cells, h = "
                << fmt_num(metrics(m).h) << "\n";
      return 0;
    }
    if (*analyze) {
      const Mesh m = load_msh(mesh_path);
      std::vector<std::string> warnings;
      const auto cs = parse_combos(combos);
      const auto t = oracle ? oracle_report(m, cs, &warnings) : structure_report(m, build_macroelements(m, &warnings), cs);
      for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
      emit(t, out_dir, "analyze.csv");
      return 0;
    }
    if (*unstr) {
      const Mesh m = load_msh(in_path);
      UnstructureConfig cfg{r, parse_axis(axis)};
      cfg.h = metrics(m).h;
      if (verify_only) {
        const auto rep = verify_uniform(m, cfg);
        std::cout << "uniform: " << (rep.pass ? "pass" : "fail") << ", offending macros: " << rep.offending.size()
                  << ", min second offset / h: " << fmt_num(rep.min_second_offset) << "\n";
        return rep.pass ? 0 : 1;
      }
      if (out_path.empty()) throw CLI::ValidationError("output", "output path required");
      UnstructureLog lg;
      const Mesh out = apply_algorithm1(m, cfg, &lg);
      for (const auto& w : lg.warnings) std::cerr << "warning: " << w << "\n";
      save_msh(out, out_path);
      const auto rep = verify_uniform(out, cfg);
      std::cout << "passes: " << lg.passes << ", moves: " << lg.moves << ", min second offset / h: "
                << fmt_num(rep.min_second_offset) << "\n";
      return 0;
    }
    if (*cav) {
      const Mesh m = load_msh(mesh_path);
      const auto variant = lid == "neumann" ? LidVariant::neumann_lid : LidVariant::dirichlet_lid;
      fs::create_directories(out_dir);
      CsvTable t{{"combo", "int_p", "residual", "p_min", "p_max"}, {}};
      for (const auto& c : parse_combos(combos)) {
        const auto sys = cavity_problem(m, c, variant);
        const auto sol = solve_penalized(sys, eps);
        save_vtk(m, vertex_fields(m, sys, sol), fs::path(out_dir) / ("cavity_" + c.name() + ".vtk"));
        t.add_row({c.name(), fmt_num(sol.pressure_integral), fmt_num(sol.residual), fmt_num(sol.pressure.minCoeff()),
                   fmt_num(sol.pressure.maxCoeff())});
      }
      emit(t, out_dir, "cavity.csv");
      return 0;
    }
    if (*conv) {
      if (levels <= 0) levels = 4;
      std::vector<Mesh> meshes;
      std::vector<int> ns;
      for (int l = 0; l < levels; ++l) {
        const int n = 8 << l;
        if (family == "structured") meshes.push_back(gen_structured_tri(n, n));
        else if (family == "zigzag") meshes.push_back(gen_zigzag(n, n));
        else meshes.push_back(apply_algorithm1(gen_perturbed(gen_structured_tri(n, n), 0.3 / n, seed), {r, Axis::y}));
        ns.push_back(n);
      }
      std::cout << "# seed " << seed << ", family " << family << "\n";
      for (const auto& c : parse_combos(combos))
        emit(convergence_study(c, meshes, ns, trig_solution(), eps).table(), out_dir, "convergence_" + c.name() + ".csv");
      return 0;
    }
    if (*inf) {
      const Mesh m = load_msh(mesh_path);
      std::cout << "# seed " << seed << "\ncombo,beta,converged,iterations,spectrum\n";
      for (const auto& c : parse_combos(combos)) {
        const auto res = infsup_constant(m, c, {.k = k, .seed = seed});
        std::cout << c.name() << "," << fmt_num(res.beta) << "," << res.converged << "," << res.iterations << ",";
        for (std::size_t i = 0; i < res.spectrum.size(); ++i) std::cout << (i ? " " : "") << fmt_num(res.spectrum[i]);
        std::cout << "\n";
      }
      return 0;
    }
    if (*run) {
      ScenarioOptions opt;
      opt.out_dir = out_dir;
      opt.seed = seed;
      opt.eps = eps;
      opt.r = r;
      opt.levels = levels;
      opt.write_vtk = !no_vtk;
      const auto names = scenario == "all" ? scenario_names() : std::vector<std::string>{scenario};
      const auto th = check ? Thresholds::load(config) : Thresholds{};
      int failures = 0;
      for (const auto& name : names) {
        const auto res = run_scenario(name, opt, std::cout);
        if (!check) continue;
        const auto v = th.check(res);
        for (const auto& msg : v) std::cout << "  VIOLATION " << msg << "\n";
        std::cout << "  check: " << (v.empty() ? "ok" : "failed") << "\n";
        failures += !v.empty();
      }
      return failures ? 2 : 0;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
