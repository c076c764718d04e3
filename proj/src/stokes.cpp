#include "lbb/stokes.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include <Eigen/SparseLU>

namespace lbb {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

int assembly_degree(CellKind kind) { return kind == CellKind::tetrahedron ? 7 : 5; }

// Basis tables at quadrature points, indexed [qp][local dof].
struct Tabulated {
  std::vector<std::vector<double>> val;
  std::vector<std::vector<Eigen::Vector3d>> grad;
};

Tabulated tabulate(Space s, CellKind kind, const QuadratureRule& q) {
  Tabulated t;
  for (const auto& x : q.points) {
    auto b = eval_basis(s, kind, x);
    t.val.push_back(std::move(b.values));
    t.grad.push_back(std::move(b.grads));
  }
  return t;
}

SpMat selection(const std::vector<int>& rows, int ncols) {
  SpMat S(static_cast<int>(rows.size()), ncols);
  Triplets t;
  for (std::size_t i = 0; i < rows.size(); ++i) t.emplace_back(static_cast<int>(i), rows[i], 1.0);
  S.setFromTriplets(t.begin(), t.end());
  return S;
}

bool on_segment(const Point& p, const Point& a, const Point& b) {
  const double ex = b[0] - a[0], ey = b[1] - a[1];
  const double len2 = ex * ex + ey * ey;
  const double cr = (p[0] - a[0]) * ey - (p[1] - a[1]) * ex;
  if (std::abs(cr) > 1e-10 * len2) return false;
  const double t = ((p[0] - a[0]) * ex + (p[1] - a[1]) * ey) / len2;
  return t > -1e-10 && t < 1.0 + 1e-10;
}

}  // namespace

std::vector<int> StokesSystem::free_velocity() const {
  std::vector<int> out;
  for (int i = 0; i < num_velocity(); ++i)
    if (!constrained[i]) out.push_back(i);
  return out;
}

StokesSystem assemble(const Mesh& mesh, const FECombo& combo) {
  if (combo.dim() != mesh.dim)
    throw std::invalid_argument("combo " + combo.name() + " has " + std::to_string(combo.dim()) +
                                " velocity components but the mesh is " + std::to_string(mesh.dim) + "D");
  for (auto s : combo.velocity)
    if (!supports(s, mesh.kind) || s == Space::P0)
      throw std::invalid_argument("velocity space " + to_string(s) + " unsupported on " + to_string(mesh.kind));
  if (!supports(combo.pressure, mesh.kind))
    throw std::invalid_argument("pressure space " + to_string(combo.pressure) + " unsupported on " +
                                to_string(mesh.kind));

  StokesSystem sys;
  sys.combo = combo;
  sys.offset = {0};
  for (auto s : combo.velocity) {
    sys.vel.push_back(build_dofmap(mesh, s));
    sys.offset.push_back(sys.offset.back() + sys.vel.back().ndofs);
  }
  sys.pres = build_dofmap(mesh, combo.pressure);
  const int nu = sys.num_velocity(), np = sys.num_pressure();
  const int dim = mesh.dim;

  const auto q = quadrature(mesh.kind, assembly_degree(mesh.kind));
  std::vector<Tabulated> vt;
  for (auto s : combo.velocity) vt.push_back(tabulate(s, mesh.kind, q));
  const auto pt = tabulate(combo.pressure, mesh.kind, q);

  Triplets ta, tb, tm;
  std::vector<Eigen::Vector3d> g;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto map = cell_map(mesh, c);
    const int* pd = sys.pres.dofs(c);
    const int npl = sys.pres.per_cell;
    for (std::size_t k = 0; k < q.weights.size(); ++k) {
      const double w = q.weights[k] * map.measure;
      for (int i = 0; i < npl; ++i)
        for (int j = 0; j < npl; ++j) tm.emplace_back(pd[i], pd[j], w * pt.val[k][i] * pt.val[k][j]);
      for (int comp = 0; comp < dim; ++comp) {
        const auto& dm = sys.vel[comp];
        const int* vd = dm.dofs(c);
        const int off = sys.offset[comp];
        g.resize(dm.per_cell);
        for (int j = 0; j < dm.per_cell; ++j) g[j] = map.grad(vt[comp].grad[k][j]);
        for (int i = 0; i < dm.per_cell; ++i)
          for (int j = 0; j < dm.per_cell; ++j) ta.emplace_back(off + vd[i], off + vd[j], w * g[i].dot(g[j]));
        for (int i = 0; i < npl; ++i)
          for (int j = 0; j < dm.per_cell; ++j) tb.emplace_back(pd[i], off + vd[j], w * pt.val[k][i] * g[j][comp]);
      }
    }
  }
  sys.A.resize(nu, nu);
  sys.A.setFromTriplets(ta.begin(), ta.end());
  sys.B.resize(np, nu);
  sys.B.setFromTriplets(tb.begin(), tb.end());
  sys.Mp.resize(np, np);
  sys.Mp.setFromTriplets(tm.begin(), tm.end());
  sys.A.prune(0.0);
  sys.B.prune(0.0);

  sys.rhs = Eigen::VectorXd::Zero(nu);
  sys.bc_values = Eigen::VectorXd::Zero(nu);
  sys.constrained.assign(nu, false);
  for (int comp = 0; comp < dim; ++comp)
    for (int d : sys.vel[comp].boundary) sys.constrained[sys.offset[comp] + d] = true;
  return sys;
}

void add_body_force(StokesSystem& sys, const Mesh& mesh, const VectorField& f) {
  const auto q = quadrature(mesh.kind, 7);
  std::vector<Tabulated> vt;
  for (auto s : sys.combo.velocity) vt.push_back(tabulate(s, mesh.kind, q));
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto map = cell_map(mesh, c);
    for (std::size_t k = 0; k < q.weights.size(); ++k) {
      const Eigen::Vector3d x = map.to_physical(q.points[k]);
      const Eigen::Vector3d fx = f({x[0], x[1], x[2]});
      const double w = q.weights[k] * map.measure;
      for (int comp = 0; comp < mesh.dim; ++comp) {
        const auto& dm = sys.vel[comp];
        const int* vd = dm.dofs(c);
        for (int i = 0; i < dm.per_cell; ++i) sys.rhs[sys.offset[comp] + vd[i]] += w * fx[comp] * vt[comp].val[k][i];
      }
    }
  }
}

StokesSystem cavity_problem(const Mesh& mesh, const FECombo& combo, LidVariant variant) {
  if (mesh.dim != 2) throw std::invalid_argument("cavity_problem: 2D meshes only");
  StokesSystem sys = assemble(mesh, combo);

  std::vector<const BoundaryFacet*> top;
  std::set<int> side_vertices;
  for (const auto& f : mesh.boundary_facets) {
    if (f.tag == kTagTop)
      top.push_back(&f);
    else if (f.tag == kTagLeft || f.tag == kTagRight || f.tag == kTagBottom)
      side_vertices.insert({f.v[0], f.v[1]});
  }
  if (top.empty() || side_vertices.empty())
    throw MeshError("cavity_problem: mesh lacks tagged top/side boundary facets");

  std::map<std::array<int, 2>, int> edge_owner;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    for (const auto& e : cell_local_edges(mesh.kind)) {
      const int a = mesh.cells[c][e[0]], b = mesh.cells[c][e[1]];
      edge_owner[{std::min(a, b), std::max(a, b)}] = static_cast<int>(c);
    }

  const auto& udm = sys.vel[0];
  const int uoff = sys.offset[0];
  const auto line = quadrature_line(7);

  for (const auto* f : top) {
    const int a = f->v[0], b = f->v[1];
    const int c = edge_owner.at({std::min(a, b), std::max(a, b)});
    const int* d = udm.dofs(c);
    const Point& pa = mesh.vertices[a];
    const Point& pb = mesh.vertices[b];
    for (int i = 0; i < udm.per_cell; ++i) {
      const int dof = d[i];
      if (!udm.on_boundary[dof] || !on_segment(udm.coords[dof], pa, pb)) continue;
      const bool corner = dof < static_cast<int>(mesh.num_vertices()) && side_vertices.count(dof) &&
                          udm.space != Space::P0;
      if (corner) continue;
      if (variant == LidVariant::dirichlet_lid) {
        sys.bc_values[uoff + dof] = 1.0;
      } else {
        sys.constrained[uoff + dof] = false;
      }
    }
    if (variant == LidVariant::neumann_lid) {
      const auto map = cell_map(mesh, c);
      const Eigen::Matrix3d Jinv = map.J.inverse();
      const double len = std::hypot(pb[0] - pa[0], pb[1] - pa[1]);
      for (std::size_t k = 0; k < line.weights.size(); ++k) {
        const double t = line.points[k][0], w = line.weights[k];
        const Eigen::Vector3d x(pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1]), 0.0);
        const auto basis = eval_basis(udm.space, mesh.kind, Jinv * (x - map.origin));
        for (int i = 0; i < udm.per_cell; ++i)
          if (!sys.constrained[uoff + d[i]]) sys.rhs[uoff + d[i]] += w * len * basis.values[i];
      }
    }
  }
  return sys;
}

ReducedOperators reduced_operators(const StokesSystem& sys) {
  ReducedOperators r;
  r.free = sys.free_velocity();
  const SpMat S = selection(r.free, sys.num_velocity());
  r.A = S * sys.A * S.transpose();
  r.B = sys.B * S.transpose();
  r.Mp = sys.Mp;
  return r;
}

SpMat saddle_matrix(const StokesSystem& sys, double eps) {
  const auto r = reduced_operators(sys);
  const int nf = static_cast<int>(r.free.size());
  const int np = sys.num_pressure();
  Triplets t;
  t.reserve(r.A.nonZeros() + 2 * r.B.nonZeros() + r.Mp.nonZeros());
  for (int k = 0; k < r.A.outerSize(); ++k)
    for (SpMat::InnerIterator it(r.A, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  for (int k = 0; k < r.B.outerSize(); ++k)
    for (SpMat::InnerIterator it(r.B, k); it; ++it) {
      t.emplace_back(nf + it.row(), it.col(), -it.value());
      t.emplace_back(it.col(), nf + it.row(), -it.value());
    }
  for (int k = 0; k < r.Mp.outerSize(); ++k)
    for (SpMat::InnerIterator it(r.Mp, k); it; ++it) t.emplace_back(nf + it.row(), nf + it.col(), -eps * it.value());
  SpMat K(nf + np, nf + np);
  K.setFromTriplets(t.begin(), t.end());
  return K;
}

Solution solve_penalized(const StokesSystem& sys, double eps) {
  if (!(eps > 0)) throw std::invalid_argument("solve_penalized: eps must be positive");
  const int nu = sys.num_velocity(), np = sys.num_pressure();
  const auto free = sys.free_velocity();
  const int nf = static_cast<int>(free.size());
  std::vector<int> fixed;
  for (int i = 0; i < nu; ++i)
    if (sys.constrained[i]) fixed.push_back(i);
  Eigen::VectorXd g(fixed.size());
  for (std::size_t i = 0; i < fixed.size(); ++i) g[i] = sys.bc_values[fixed[i]];
  const SpMat Sf = selection(free, nu), Sc = selection(fixed, nu);

  Eigen::VectorXd b(nf + np);
  b.head(nf) = Sf * sys.rhs - Sf * sys.A * (Sc.transpose() * g);
  b.tail(np) = sys.B * (Sc.transpose() * g);

  SpMat K = saddle_matrix(sys, eps);
  K.makeCompressed();
  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(K);
  lu.factorize(K);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("saddle factorization failed: " + lu.lastErrorMessage() +
                             " (an exact spurious mode alone cannot cause this for eps > 0; check assembly)");
  Eigen::VectorXd x = lu.solve(b);
  for (int it = 0; it < 2; ++it) {
    const Eigen::VectorXd r = b - K * x;
    x += lu.solve(r);
  }

  Solution sol;
  const double bnorm = b.norm();
  sol.residual = (b - K * x).norm() / (bnorm > 0 ? bnorm : 1.0);
  Eigen::VectorXd w = Sc.transpose() * g;
  w += Sf.transpose() * x.head(nf);
  sol.pressure = x.tail(np);
  for (std::size_t k = 0; k + 1 < sys.offset.size(); ++k)
    sol.velocity.push_back(w.segment(sys.offset[k], sys.offset[k + 1] - sys.offset[k]));
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(np);
  sol.pressure_integral = ones.dot(sys.Mp * sol.pressure);
  const Eigen::VectorXd Bw = sys.B * w;
  const Eigen::VectorXd Mpp = eps * (sys.Mp * sol.pressure);
  sol.divergence_residual = (Bw + Mpp).norm() / (Bw.norm() + Mpp.norm() + 1e-300);
  return sol;
}

ExactSolution trig_solution() {
  const double k = 2.0 * std::numbers::pi;
  ExactSolution ex;
  ex.u = [k](const Point& x) { return std::sin(k * x[1]) * (std::cos(k * x[0]) - 1.0); };
  ex.v = [k](const Point& x) { return -std::sin(k * x[0]) * (std::cos(k * x[1]) - 1.0); };
  ex.p = [k](const Point& x) { return k * (std::cos(k * x[1]) - std::cos(k * x[0])); };
  ex.grad_u = [k](const Point& x) {
    return Eigen::Vector3d(-k * std::sin(k * x[1]) * std::sin(k * x[0]),
                           k * std::cos(k * x[1]) * (std::cos(k * x[0]) - 1.0), 0.0);
  };
  ex.grad_v = [k](const Point& x) {
    return Eigen::Vector3d(-k * std::cos(k * x[0]) * (std::cos(k * x[1]) - 1.0),
                           k * std::sin(k * x[0]) * std::sin(k * x[1]), 0.0);
  };
  ex.f = [k](const Point& x) {
    const double sx = std::sin(k * x[0]), cx = std::cos(k * x[0]);
    const double sy = std::sin(k * x[1]), cy = std::cos(k * x[1]);
    return Eigen::Vector3d(k * k * sy * (2.0 * cx - 1.0) + k * k * sx, -k * k * sx * (2.0 * cy - 1.0) - k * k * sy,
                           0.0);
  };
  return ex;
}

LevelErrors compute_errors(const Mesh& mesh, const StokesSystem& sys, const Solution& sol, const ExactSolution& ex,
                           int quad_degree) {
  const auto q = quadrature(mesh.kind, quad_degree);
  const auto tu = tabulate(sys.combo.velocity[0], mesh.kind, q);
  const auto tv = tabulate(sys.combo.velocity[1], mesh.kind, q);
  const auto tp = tabulate(sys.combo.pressure, mesh.kind, q);
  double eu = 0, gu = 0, ev = 0, gv = 0, ep = 0, ep_int = 0, area = 0;
  LevelErrors out;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto map = cell_map(mesh, c);
    const int* du = sys.vel[0].dofs(c);
    const int* dv = sys.vel[1].dofs(c);
    const int* dp = sys.pres.dofs(c);
    for (std::size_t k = 0; k < q.weights.size(); ++k) {
      const double w = q.weights[k] * map.measure;
      const Eigen::Vector3d xe = map.to_physical(q.points[k]);
      const Point x{xe[0], xe[1], xe[2]};
      double uh = 0, vh = 0, ph = 0;
      Eigen::Vector3d guh = Eigen::Vector3d::Zero(), gvh = Eigen::Vector3d::Zero();
      for (int i = 0; i < sys.vel[0].per_cell; ++i) {
        uh += sol.velocity[0][du[i]] * tu.val[k][i];
        guh += sol.velocity[0][du[i]] * tu.grad[k][i];
      }
      for (int i = 0; i < sys.vel[1].per_cell; ++i) {
        vh += sol.velocity[1][dv[i]] * tv.val[k][i];
        gvh += sol.velocity[1][dv[i]] * tv.grad[k][i];
      }
      for (int i = 0; i < sys.pres.per_cell; ++i) ph += sol.pressure[dp[i]] * tp.val[k][i];
      guh = map.grad(guh);
      gvh = map.grad(gvh);
      eu += w * std::pow(ex.u(x) - uh, 2);
      ev += w * std::pow(ex.v(x) - vh, 2);
      gu += w * (ex.grad_u(x) - guh).squaredNorm();
      gv += w * (ex.grad_v(x) - gvh).squaredNorm();
      const double e = ex.p(x) - ph;
      ep += w * e * e;
      ep_int += w * e;
      area += w;
    }
  }
  out.l2_u = std::sqrt(eu);
  out.h1_u = std::sqrt(gu);
  out.l2_v = std::sqrt(ev);
  out.h1_v = std::sqrt(gv);
  out.l2_p = std::sqrt(std::max(0.0, ep - ep_int * ep_int / area));
  out.h_max = metrics(mesh).h;
  out.pressure_integral = sol.pressure_integral;
  return out;
}

double ErrorReport::order(std::size_t k, double LevelErrors::*field) const {
  if (k == 0 || k >= levels.size()) throw std::out_of_range("ErrorReport::order: level index");
  const auto& a = levels[k - 1];
  const auto& b = levels[k];
  return std::log(b.*field / a.*field) / std::log(b.h / a.h);
}

CsvTable ErrorReport::table() const {
  CsvTable t;
  t.header = {"n",        "h",        "h_max",      "eL2_u",      "eH1_u",      "eL2_v",      "eH1_v",
              "eL2_p",    "int_p",    "order_L2_u", "order_H1_u", "order_L2_v", "order_H1_v", "order_L2_p"};
  const std::array<double LevelErrors::*, 5> cols{&LevelErrors::l2_u, &LevelErrors::h1_u, &LevelErrors::l2_v,
                                                  &LevelErrors::h1_v, &LevelErrors::l2_p};
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const auto& l = levels[k];
    std::vector<std::string> row{std::to_string(l.n), fmt_num(l.h),    fmt_num(l.h_max), fmt_num(l.l2_u),
                                 fmt_num(l.h1_u),     fmt_num(l.l2_v), fmt_num(l.h1_v),  fmt_num(l.l2_p),
                                 fmt_num(l.pressure_integral)};
    for (auto c : cols) row.push_back(k == 0 ? "" : fmt_num(order(k, c)));
    t.add_row(row);
  }
  return t;
}

ErrorReport convergence_study(const FECombo& combo, const std::vector<Mesh>& meshes, const std::vector<int>& n_values,
                              const ExactSolution& ex, double eps) {
  if (meshes.size() != n_values.size()) throw std::invalid_argument("convergence_study: size mismatch");
  ErrorReport rep;
  rep.combo = combo;
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    StokesSystem sys = assemble(meshes[i], combo);
    add_body_force(sys, meshes[i], ex.f);
    const Solution sol = solve_penalized(sys, eps);
    LevelErrors e = compute_errors(meshes[i], sys, sol, ex);
    e.n = n_values[i];
    e.h = 1.0 / n_values[i];
    rep.levels.push_back(e);
  }
  return rep;
}

}  // namespace lbb
