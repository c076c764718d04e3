#include "lbb/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "lbb/fixtures.hpp"
#include "lbb/infsup.hpp"
#include "lbb/macroelement.hpp"
#include "lbb/unstructure.hpp"

namespace lbb {

void ScenarioResult::set(const std::string& key, double value) {
  for (auto& [k, v] : metrics)
    if (k == key) {
      v = value;
      return;
    }
  metrics.emplace_back(key, value);
}

double ScenarioResult::get(const std::string& key) const {
  for (const auto& [k, v] : metrics)
    if (k == key) return v;
  throw std::out_of_range("no metric " + key + " in scenario " + name);
}

bool ScenarioResult::has(const std::string& key) const {
  return std::any_of(metrics.begin(), metrics.end(), [&](const auto& kv) { return kv.first == key; });
}

std::vector<Field> vertex_fields(const Mesh& mesh, const StokesSystem& sys, const Solution& sol) {
  const std::size_t nv = mesh.num_vertices();
  const char* names[] = {"u", "v", "w"};
  std::vector<Field> out;
  for (std::size_t k = 0; k < sol.velocity.size(); ++k) {
    const auto& c = sol.velocity[k];
    out.push_back({names[k], std::vector<double>(c.data(), c.data() + nv)});
  }
  if (sys.pres.space != Space::P0)
    out.push_back({"p", std::vector<double>(sol.pressure.data(), sol.pressure.data() + nv)});
  else
    out.push_back({"p", std::vector<double>(sol.pressure.data(), sol.pressure.data() + sol.pressure.size()), true});
  return out;
}

CsvTable oracle_report(const Mesh& mesh, const std::vector<FECombo>& combos, std::vector<std::string>* warnings) {
  const auto macros = build_macroelements(mesh, warnings);
  CsvTable t = structure_report(mesh, macros, combos);
  for (const auto& c : combos) {
    t.header.push_back("dim_" + c.name());
    t.header.push_back("agree_" + c.name());
  }
  for (std::size_t i = 0; i < macros.size(); ++i) {
    for (const auto& c : combos) {
      const int dim = local_nullspace(macros[i], c).dim;
      const bool singular = mesh.dim == 3 ? predict_regularity_3d(macros[i], c).predicted == Verdict::singular
                                          : predict_regularity(macros[i], c).predicted == Verdict::singular;
      t.rows[i].push_back(std::to_string(dim));
      t.rows[i].push_back(singular == (dim > 0) ? "1" : "0");
    }
  }
  return t;
}

namespace {

struct Context {
  const ScenarioOptions& opt;
  std::ostream& log;
  ScenarioResult& res;

  std::filesystem::path path(const std::string& file) const { return opt.out_dir / file; }
  void csv(const CsvTable& t, const std::string& file) {
    t.save(path(file));
    res.artifacts.push_back(path(file).string());
  }
  void vtk(const Mesh& m, const std::vector<Field>& f, const std::string& file) {
    if (!opt.write_vtk) return;
    save_vtk(m, f, path(file));
    res.artifacts.push_back(path(file).string());
  }
  void metric(const std::string& key, double v) {
    res.set(key, v);
    log << "  " << key << " = " << fmt_num(v) << "\n";
  }
};

Mesh unstructured_square(int n, std::uint64_t seed, double r) {
  const Mesh base = gen_perturbed(gen_structured_tri(n, n), 0.3 / n, seed);
  return apply_algorithm1(base, {r, Axis::y});
}

std::string slug(const FECombo& c) { return c.name(); }

double p_range(const Solution& s) { return s.pressure.maxCoeff() - s.pressure.minCoeff(); }

// cavity solve with VTK output, returns the solution
Solution cavity(Context& ctx, const Mesh& m, const FECombo& c, LidVariant lid, const std::string& tag) {
  const auto sys = cavity_problem(m, c, lid);
  const auto sol = solve_penalized(sys, ctx.opt.eps);
  ctx.vtk(m, vertex_fields(m, sys, sol), tag + ".vtk");
  return sol;
}

void test1(Context& ctx) {
  const Mesh m = gen_zigzag(15, 15);
  ctx.metric("h", metrics(m).h);
  CsvTable t{{"combo", "int_p", "residual", "p_min", "p_max"}, {}};
  double worst = 0.0;
  for (const char* name : {"P1b-P1b-P1", "P1b-P1-P1", "P1-P1b-P1"}) {
    const auto c = FECombo::parse(name);
    const auto sol = cavity(ctx, m, c, LidVariant::dirichlet_lid, "test1_" + slug(c));
    t.add_row({c.name(), fmt_num(sol.pressure_integral), fmt_num(sol.residual), fmt_num(sol.pressure.minCoeff()),
               fmt_num(sol.pressure.maxCoeff())});
    ctx.metric("int_p_" + c.name(), sol.pressure_integral);
    worst = std::max(worst, std::abs(sol.pressure_integral));
  }
  ctx.metric("abs_int_p", worst);
  ctx.csv(t, "test1_cavity.csv");
}

// cavity on a structured and an unstructured mesh, plus beta on both
void structured_vs_unstructured(Context& ctx, const std::string& prefix, const FECombo& c, LidVariant lid) {
  const int n = 20;
  const std::pair<std::string, Mesh> meshes[] = {{"structured", gen_structured_tri(n, n)},
                                                 {"unstructured", unstructured_square(n, ctx.opt.seed, ctx.opt.r)}};
  CsvTable t{{"mesh", "cells", "beta", "p_range", "int_p"}, {}};
  for (const auto& [label, m] : meshes) {
    const auto sol = cavity(ctx, m, c, lid, prefix + "_" + label);
    const double beta = infsup_constant(m, c, {.seed = ctx.opt.seed}).beta;
    t.add_row({label, std::to_string(m.num_cells()), fmt_num(beta), fmt_num(p_range(sol)),
               fmt_num(sol.pressure_integral)});
    ctx.metric("beta_" + label, beta);
    ctx.metric("p_range_" + label, p_range(sol));
  }
  ctx.csv(t, prefix + "_cavity.csv");
}

void convergence(Context& ctx, const std::string& prefix, const FECombo& c) {
  const int levels = ctx.opt.levels > 0 ? ctx.opt.levels : 4;
  std::vector<Mesh> meshes;
  std::vector<int> ns;
  for (int l = 0; l < levels; ++l) {
    const int n = 8 << l;
    meshes.push_back(unstructured_square(n, ctx.opt.seed, ctx.opt.r));
    ns.push_back(n);
  }
  const auto rep = convergence_study(c, meshes, ns, trig_solution(), ctx.opt.eps);
  ctx.csv(rep.table(), prefix + "_convergence.csv");
  const std::size_t last = rep.levels.size() - 1;
  const std::pair<std::string, double LevelErrors::*> cols[] = {
      {"L2_u", &LevelErrors::l2_u}, {"H1_u", &LevelErrors::h1_u}, {"L2_v", &LevelErrors::l2_v},
      {"H1_v", &LevelErrors::h1_v}, {"L2_p", &LevelErrors::l2_p}};
  for (const auto& [label, field] : cols) ctx.metric("order_" + label, rep.order(last, field));
}

void test4(Context& ctx) {
  const auto c = FECombo::parse("P1b-P1-P1");
  const Mesh before = gen_structured_tri(16, 16);
  UnstructureConfig cfg{ctx.opt.r, Axis::y};
  cfg.h = metrics(before).h;
  UnstructureLog lg;
  const Mesh after = apply_algorithm1(before, cfg, &lg);
  for (const auto& w : lg.warnings) ctx.log << "  warning: " << w << "\n";
  const auto rep = verify_uniform(after, cfg);
  ctx.metric("verify_pass", rep.pass ? 1.0 : 0.0);
  ctx.metric("min_second_offset", rep.min_second_offset);
  ctx.metric("passes", lg.passes);
  ctx.metric("scaled_back_moves", static_cast<double>(lg.warnings.size()));
  const InfSupOptions io{.seed = ctx.opt.seed};
  ctx.metric("beta_before", infsup_constant(before, c, io).beta);
  ctx.metric("beta_after", infsup_constant(after, c, io).beta);
  save_msh(after, ctx.path("test4_unstructured.msh"));
  ctx.res.artifacts.push_back(ctx.path("test4_unstructured.msh").string());
  cavity(ctx, before, c, LidVariant::dirichlet_lid, "test4_structured");
  cavity(ctx, after, c, LidVariant::dirichlet_lid, "test4_unstructured");
}

// randomized star fixtures for every supported 3D combo
void fixture_suite(Context& ctx, int per_combo, CsvTable& t) {
  std::mt19937_64 rng(ctx.opt.seed);
  int agree = 0, total = 0;
  for (const char* name : {"P1-P1-P1b-P1", "P1b-P1-P1-P1", "P1-P1b-P1-P1", "P1b-P1b-P1-P1", "P1b-P1-P1b-P1",
                           "P1-P1b-P1b-P1"}) {
    const auto c = FECombo::parse(name);
    int bubble = -1, plain = -1, nb = 0;
    for (int k = 0; k < 3; ++k) {
      if (c.velocity[k] == Space::P1b) {
        bubble = k;
        ++nb;
      } else {
        plain = k;
      }
    }
    for (int i = 0; i < per_combo; ++i) {
      TetStarSpec spec;
      std::string kind;
      if (nb == 1) {
        const auto k = static_cast<StarKind>(i % 6);
        spec = random_star_spec(k, rng, static_cast<Axis>(bubble));
        kind = to_string(k);
      } else if (i % 2) {
        spec = split_star_spec(static_cast<Axis>(plain), rng);
        kind = "split";
      } else {
        const auto k = static_cast<StarKind>(i % 6);
        spec = random_star_spec(k, rng, static_cast<Axis>(plain));
        kind = to_string(k);
      }
      const auto m = tet_star(spec, rng);
      const auto v = predict_regularity_3d(m, c);
      const int dim = local_nullspace(m, c).dim;
      const bool ok = (v.predicted == Verdict::singular) == (dim > 0);
      agree += ok;
      ++total;
      t.add_row({c.name(), kind, to_string(v.reason), to_string(v.predicted), std::to_string(dim), ok ? "1" : "0"});
    }
  }
  ctx.metric("fixtures", total);
  ctx.metric("fixture_agreement", static_cast<double>(agree) / total);
}

std::vector<FECombo> combos_3d() {
  return {FECombo::parse("P1b-P1b-P1-P1"), FECombo::parse("P1b-P1-P1-P1"), FECombo::parse("P1-P1-P1b-P1")};
}

void test5(Context& ctx) {
  CsvTable t{{"combo", "fixture", "reason", "predicted", "dim", "agree"}, {}};
  fixture_suite(ctx, 12, t);
  ctx.csv(t, "test5_fixtures.csv");
  const Mesh m = gen_structured_tet(4);
  ctx.csv(oracle_report(m, combos_3d(), nullptr), "test5_structured_tet.csv");
}

void test6(Context& ctx) {
  const Mesh base = unstructured_square(6, ctx.opt.seed, ctx.opt.r);
  const Mesh m = gen_extruded_tet(base, 4, 1.0);
  const auto macros = build_macroelements(m);
  int z = 0;
  for (const auto& mac : macros) z += classify_3d(mac).z_structured;
  ctx.metric("macros", static_cast<double>(macros.size()));
  ctx.metric("z_structured_fraction", macros.empty() ? 0.0 : static_cast<double>(z) / macros.size());
  const auto t = oracle_report(m, combos_3d(), nullptr);
  ctx.csv(t, "test6_extruded.csv");
  const auto combos = combos_3d();
  for (std::size_t k = 0; k < combos.size(); ++k) {
    const auto col = std::find(t.header.begin(), t.header.end(), "verdict_" + combos[k].name()) - t.header.begin();
    int singular = 0;
    for (const auto& row : t.rows) singular += row[col] == "singular";
    ctx.metric("singular_macros_" + combos[k].name(), singular);
  }
}

void test7(Context& ctx) {
  const auto c = FECombo::parse("P2-P1-P1");
  const int ns[] = {3, 7, 15, 31, 63};
  const double amp[] = {0.4, 0.2, 0.1, 0.05, 0.0};
  CsvTable t{{"level", "n", "amplitude", "beta", "converged"}, {}};
  std::vector<double> beta;
  for (int l = 0; l < 5; ++l) {
    const Mesh z = gen_zigzag(ns[l], ns[l]);
    const Mesh m = amp[l] > 0 ? gen_perturbed(z, amp[l] / ns[l], ctx.opt.seed + l) : z;
    const auto r = infsup_constant(m, c, {.seed = ctx.opt.seed});
    beta.push_back(r.beta);
    t.add_row({std::to_string(l + 1), std::to_string(ns[l]), fmt_num(amp[l] / ns[l]), fmt_num(r.beta),
               r.converged ? "1" : "0"});
    ctx.metric("beta_" + std::to_string(l + 1), r.beta);
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < beta.size(); ++i) decreasing = decreasing && beta[i] < beta[i - 1];
  ctx.metric("strictly_decreasing", decreasing ? 1.0 : 0.0);
  ctx.metric("beta_ratio", beta.back() / beta.front());
  ctx.csv(t, "test7_infsup.csv");
}

void q2q1q1(Context& ctx) {
  const auto c = FECombo::parse("Q2-Q1-Q1");
  const Mesh macro_mesh = gen_quad_macro({1.0, 0.7}, {0.6, 1.1});
  const auto m = macro_at(macro_mesh, 4);
  const auto ns = local_nullspace(m, c);
  const auto p = analytic_singular_pressure(m, c);
  ctx.metric("nullspace_dim", ns.dim);
  ctx.metric("residual", p ? relative_residual(local_operator(m, c), *p) : 1.0);
  const Mesh grid = gen_structured_quad(15, 15);
  CsvTable t{{"combo", "beta", "p_range"}, {}};
  for (const char* name : {"Q2-Q2-Q1", "Q2-Q1-Q1"}) {
    const auto cc = FECombo::parse(name);
    const auto sol = cavity(ctx, grid, cc, LidVariant::dirichlet_lid, std::string("q2q1q1_") + name);
    const double beta = infsup_constant(grid, cc, {.seed = ctx.opt.seed}).beta;
    t.add_row({cc.name(), fmt_num(beta), fmt_num(p_range(sol))});
    ctx.metric("beta_" + cc.name(), beta);
  }
  ctx.csv(t, "q2q1q1_cavity.csv");
}

const std::map<std::string, std::pair<std::string, std::function<void(Context&)>>>& registry() {
  static const std::map<std::string, std::pair<std::string, std::function<void(Context&)>>> r = {
      {"test1", {"P1b/P1 cavity on the x-structured zigzag mesh", test1}},
      {"test2",
       {"P1b-P1-P1 Neumann-lid cavity, structured vs unstructured",
        [](Context& c) {
          structured_vs_unstructured(c, "test2", FECombo::parse("P1b-P1-P1"), LidVariant::neumann_lid);
        }}},
      {"test3",
       {"P1b-P1-P1 error orders on the unstructured family",
        [](Context& c) { convergence(c, "test3", FECombo::parse("P1b-P1-P1")); }}},
      {"test4", {"vertex post-processing of a 16x16 structured mesh", test4}},
      {"test5", {"3D star fixtures and structured tet mesh report", test5}},
      {"test6", {"z-structured extruded mesh report", test6}},
      {"test7", {"P2-P1-P1 inf-sup constants on a family converging to the zigzag", test7}},
      {"test8",
       {"P2-P1-P1 error orders on the unstructured family",
        [](Context& c) { convergence(c, "test8", FECombo::parse("P2-P1-P1")); }}},
      {"test9",
       {"P2-P1-P1 cavity, structured vs unstructured",
        [](Context& c) {
          structured_vs_unstructured(c, "test9", FECombo::parse("P2-P1-P1"), LidVariant::dirichlet_lid);
        }}},
      {"q2q1q1", {"Q2-Q1-Q1 quad macro and cavity", q2q1q1}},
  };
  return r;
}

}  // namespace

std::vector<std::string> scenario_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : registry()) out.push_back(k);
  return out;
}

ScenarioResult run_scenario(const std::string& name, const ScenarioOptions& opt, std::ostream& log) {
  const auto it = registry().find(name);
  if (it == registry().end()) throw std::invalid_argument("unknown scenario: " + name);
  std::filesystem::create_directories(opt.out_dir);
  ScenarioResult res;
  res.name = name;
  log << "scenario " << name << ": " << it->second.first << " (seed " << opt.seed << ")\n";
  Context ctx{opt, log, res};
  it->second.second(ctx);
  CsvTable summary{{"metric", "value"}, {{"seed", std::to_string(opt.seed)}}};
  for (const auto& [k, v] : res.metrics) summary.add_row({k, fmt_num(v)});
  ctx.csv(summary, name + "_summary.csv");
  return res;
}

Thresholds Thresholds::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read thresholds file " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse(os.str());
}

Thresholds Thresholds::parse(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream is(text);
  boost::property_tree::read_ini(is, tree);
  Thresholds t;
  for (const auto& [section, body] : tree) {
    std::vector<Bound> bounds;
    for (const auto& [key, value] : body) {
      const bool is_min = key.rfind("min_", 0) == 0;
      if (!is_min && key.rfind("max_", 0) != 0)
        throw std::invalid_argument("threshold key must start with min_ or max_: " + key);
      bounds.push_back({key.substr(4), is_min, value.get_value<double>()});
    }
    t.sections_.emplace_back(section, std::move(bounds));
  }
  return t;
}

std::vector<std::string> Thresholds::check(const ScenarioResult& result) const {
  std::vector<std::string> out;
  for (const auto& [section, bounds] : sections_) {
    if (section != result.name) continue;
    for (const auto& b : bounds) {
      if (!result.has(b.metric)) {
        out.push_back(b.metric + ": missing");
        continue;
      }
      const double v = result.get(b.metric);
      const bool ok = b.is_min ? v >= b.value : v <= b.value;
      if (!ok)
        out.push_back(b.metric + " = " + fmt_num(v) + (b.is_min ? " < min " : " > max ") + fmt_num(b.value));
    }
  }
  return out;
}

}  // namespace lbb
