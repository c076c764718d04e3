#include "lbb/fespace.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include <boost/math/special_functions/legendre.hpp>

namespace lbb {

namespace {

std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

bool is_simplex(CellKind k) { return k != CellKind::quadrilateral; }
int simplex_dim(CellKind k) { return k == CellKind::tetrahedron ? 3 : 2; }

// barycentric coordinates and their reference gradients
void barycentric(CellKind kind, const Eigen::Vector3d& x, std::array<double, 4>& lam,
                 std::array<Eigen::Vector3d, 4>& dlam) {
  const int n = simplex_dim(kind);
  lam[0] = 1.0;
  dlam[0] = Eigen::Vector3d::Zero();
  for (int i = 0; i < n; ++i) {
    lam[0] -= x[i];
    lam[i + 1] = x[i];
    dlam[i + 1] = Eigen::Vector3d::Unit(i);
    dlam[0][i] = -1.0;
  }
}

constexpr std::array<std::array<double, 2>, 4> kQuadCorners{{{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}};
constexpr std::array<std::array<double, 2>, 9> kQ2Nodes{
    {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}, {0, -1}, {1, 0}, {0, 1}, {-1, 0}, {0, 0}}};

// 1D quadratic Lagrange basis on nodes -1, 0, 1
double lag2(double node, double t) {
  if (node < -0.5) return 0.5 * t * (t - 1.0);
  if (node > 0.5) return 0.5 * t * (t + 1.0);
  return 1.0 - t * t;
}
double dlag2(double node, double t) {
  if (node < -0.5) return t - 0.5;
  if (node > 0.5) return t + 0.5;
  return -2.0 * t;
}

std::vector<std::pair<double, double>> gauss_legendre(int n) {
  // nodes and weights on [-1, 1]
  std::vector<std::pair<double, double>> out;
  for (double x : boost::math::legendre_p_zeros<double>(n)) {
    const double dp = boost::math::legendre_p_prime(n, x);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    out.emplace_back(x, w);
    if (x != 0.0) out.emplace_back(-x, w);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Collapsed Gauss-Legendre product rule on the unit simplex (weights
// positive, normalized to sum 1).
QuadratureRule collapsed_gauss(int dim, int degree) {
  const int n = (degree + dim) / 2 + 1;
  const auto gl = gauss_legendre(n);
  QuadratureRule rule;
  rule.exact_degree = degree;
  const double scale = dim == 2 ? 2.0 : 6.0;
  for (const auto& [a, wa] : gl) {
    const double u = 0.5 * (a + 1.0);
    for (const auto& [b, wb] : gl) {
      const double v = 0.5 * (b + 1.0);
      if (dim == 2) {
        rule.points.emplace_back(u, v * (1.0 - u), 0.0);
        rule.weights.push_back(scale * 0.25 * wa * wb * (1.0 - u));
        continue;
      }
      for (const auto& [c, wc] : gl) {
        const double w = 0.5 * (c + 1.0);
        rule.points.emplace_back(u, v * (1.0 - u), w * (1.0 - u) * (1.0 - v));
        rule.weights.push_back(scale * 0.125 * wa * wb * wc * (1.0 - u) * (1.0 - u) * (1.0 - v));
      }
    }
  }
  return rule;
}

}  // namespace

std::string to_string(Space s) {
  switch (s) {
    case Space::P0: return "P0";
    case Space::P1: return "P1";
    case Space::P1b: return "P1b";
    case Space::P2: return "P2";
    case Space::Q1: return "Q1";
    case Space::Q2: return "Q2";
  }
  return "?";
}

Space parse_space(const std::string& text) {
  const std::string s = lower(text);
  if (s == "p0") return Space::P0;
  if (s == "p1") return Space::P1;
  if (s == "p1b") return Space::P1b;
  if (s == "p2") return Space::P2;
  if (s == "q1") return Space::Q1;
  if (s == "q2") return Space::Q2;
  throw std::invalid_argument("unknown space '" + text + "'");
}

bool supports(Space s, CellKind kind) {
  if (s == Space::P0) return true;
  const bool quad_space = s == Space::Q1 || s == Space::Q2;
  return quad_space == (kind == CellKind::quadrilateral);
}

std::string FECombo::name() const {
  std::string out;
  for (auto s : velocity) out += to_string(s) + "-";
  return out + to_string(pressure);
}

FECombo FECombo::parse(const std::string& text) {
  auto split = [](const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) parts.push_back(item);
    return parts;
  };
  FECombo c;
  const auto colon = text.find(':');
  std::vector<std::string> vel;
  if (colon != std::string::npos) {
    vel = split(text.substr(0, colon), '-');
    c.pressure = parse_space(text.substr(colon + 1));
  } else {
    vel = split(text, '-');
    if (vel.size() < 2) throw std::invalid_argument("combo '" + text + "' needs velocity and pressure spaces");
    c.pressure = parse_space(vel.back());
    vel.pop_back();
  }
  if (vel.size() != 2 && vel.size() != 3)
    throw std::invalid_argument("combo '" + text + "' must list 2 or 3 velocity spaces");
  for (const auto& v : vel) c.velocity.push_back(parse_space(v));
  return c;
}

int local_dofs(Space s, CellKind kind) {
  if (!supports(s, kind)) throw std::invalid_argument(to_string(s) + " is not defined on " + to_string(kind));
  const int nv = kind == CellKind::triangle ? 3 : 4;
  switch (s) {
    case Space::P0: return 1;
    case Space::P1: return nv;
    case Space::P1b: return nv + 1;
    case Space::P2: return nv + static_cast<int>(cell_local_edges(kind).size());
    case Space::Q1: return 4;
    case Space::Q2: return 9;
  }
  return 0;
}

BasisEval eval_basis(Space s, CellKind kind, const Eigen::Vector3d& x) {
  const int n = local_dofs(s, kind);
  BasisEval out;
  out.values.assign(n, 0.0);
  out.grads.assign(n, Eigen::Vector3d::Zero());
  if (s == Space::P0) {
    out.values[0] = 1.0;
    return out;
  }
  if (is_simplex(kind)) {
    std::array<double, 4> lam{};
    std::array<Eigen::Vector3d, 4> dl;
    barycentric(kind, x, lam, dl);
    const int nv = simplex_dim(kind) + 1;
    if (s == Space::P1 || s == Space::P1b) {
      for (int i = 0; i < nv; ++i) {
        out.values[i] = lam[i];
        out.grads[i] = dl[i];
      }
      if (s == Space::P1b) {
        const double c = nv == 3 ? 27.0 : 256.0;
        double prod = c;
        for (int i = 0; i < nv; ++i) prod *= lam[i];
        Eigen::Vector3d g = Eigen::Vector3d::Zero();
        for (int i = 0; i < nv; ++i) {
          double others = c;
          for (int j = 0; j < nv; ++j)
            if (j != i) others *= lam[j];
          g += others * dl[i];
        }
        out.values[nv] = prod;
        out.grads[nv] = g;
      }
    } else {  // P2
      for (int i = 0; i < nv; ++i) {
        out.values[i] = lam[i] * (2.0 * lam[i] - 1.0);
        out.grads[i] = (4.0 * lam[i] - 1.0) * dl[i];
      }
      const auto edges = cell_local_edges(kind);
      for (std::size_t e = 0; e < edges.size(); ++e) {
        const int a = edges[e][0], b = edges[e][1];
        out.values[nv + e] = 4.0 * lam[a] * lam[b];
        out.grads[nv + e] = 4.0 * (lam[a] * dl[b] + lam[b] * dl[a]);
      }
    }
    return out;
  }
  if (s == Space::Q1) {
    for (int i = 0; i < 4; ++i) {
      const double xi = kQuadCorners[i][0], eta = kQuadCorners[i][1];
      out.values[i] = 0.25 * (1 + xi * x[0]) * (1 + eta * x[1]);
      out.grads[i] = Eigen::Vector3d(0.25 * xi * (1 + eta * x[1]), 0.25 * eta * (1 + xi * x[0]), 0.0);
    }
  } else {  // Q2
    for (int i = 0; i < 9; ++i) {
      const double a = kQ2Nodes[i][0], b = kQ2Nodes[i][1];
      out.values[i] = lag2(a, x[0]) * lag2(b, x[1]);
      out.grads[i] = Eigen::Vector3d(dlag2(a, x[0]) * lag2(b, x[1]), lag2(a, x[0]) * dlag2(b, x[1]), 0.0);
    }
  }
  return out;
}

std::vector<Eigen::Vector3d> dof_nodes(Space s, CellKind kind) {
  std::vector<Eigen::Vector3d> nodes;
  if (kind == CellKind::quadrilateral) {
    if (s == Space::P0) return {Eigen::Vector3d::Zero()};
    const int n = s == Space::Q1 ? 4 : 9;
    for (int i = 0; i < n; ++i) nodes.emplace_back(kQ2Nodes[i][0], kQ2Nodes[i][1], 0.0);
    return nodes;
  }
  const int d = simplex_dim(kind);
  std::vector<Eigen::Vector3d> verts{Eigen::Vector3d::Zero()};
  for (int i = 0; i < d; ++i) verts.push_back(Eigen::Vector3d::Unit(i));
  Eigen::Vector3d bary = Eigen::Vector3d::Zero();
  for (const auto& v : verts) bary += v / (d + 1);
  switch (s) {
    case Space::P0: return {bary};
    case Space::P1: return verts;
    case Space::P1b:
      verts.push_back(bary);
      return verts;
    case Space::P2:
      for (const auto& e : cell_local_edges(kind)) verts.push_back(0.5 * (verts[e[0]] + verts[e[1]]));
      return verts;
    default: throw std::invalid_argument(to_string(s) + " is not defined on " + to_string(kind));
  }
}

QuadratureRule quadrature(CellKind kind, int degree) {
  if (degree < 1 || degree > 25) throw std::invalid_argument("unsupported quadrature degree " + std::to_string(degree));
  QuadratureRule r;
  if (kind == CellKind::triangle) {
    if (degree == 1) {
      r.points = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
      r.weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
      r.exact_degree = 1;
    } else if (degree == 2) {
      r.points = {{0.5, 0, 0}, {0.5, 0.5, 0}, {0, 0.5, 0}};
      r.weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
      r.exact_degree = 2;
    } else if (degree <= 5) {
      const double sq = std::sqrt(15.0);
      r.points.emplace_back(1.0 / 3, 1.0 / 3, 0);
      r.weights.push_back(9.0 / 40);
      for (int sign : {-1, 1}) {
        const double a = (6.0 + sign * sq) / 21.0;
        const double b = (9.0 - 2.0 * sign * sq) / 21.0;
        const double w = (155.0 + sign * sq) / 1200.0;
        r.points.emplace_back(a, a, 0);
        r.points.emplace_back(a, b, 0);
        r.points.emplace_back(b, a, 0);
        r.weights.insert(r.weights.end(), 3, w);
      }
      r.exact_degree = 5;
    } else {
      r = collapsed_gauss(2, degree);
    }
  } else if (kind == CellKind::tetrahedron) {
    if (degree == 1) {
      r.points = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
      r.weights = {0.25, 0.25, 0.25, 0.25};
      r.exact_degree = 1;
    } else {
      r = collapsed_gauss(3, degree);
    }
  } else {
    if (degree == 1) {
      for (const auto& c : kQuadCorners) r.points.emplace_back(c[0], c[1], 0);
      r.weights.assign(4, 0.25);
      r.exact_degree = 1;
    } else {
      const int n = (degree + 2) / 2;
      const auto gl = gauss_legendre(n);
      for (const auto& [xj, wj] : gl)
        for (const auto& [xi, wi] : gl) {
          r.points.emplace_back(xi, xj, 0);
          r.weights.push_back(0.25 * wi * wj);
        }
      r.exact_degree = 2 * n - 1;
    }
  }
  return r;
}

QuadratureRule quadrature_line(int degree) {
  if (degree < 1 || degree > 25) throw std::invalid_argument("unsupported quadrature degree " + std::to_string(degree));
  const int n = (degree + 2) / 2;
  QuadratureRule r;
  for (const auto& [x, w] : gauss_legendre(n)) {
    r.points.emplace_back(0.5 * (x + 1.0), 0.0, 0.0);
    r.weights.push_back(0.5 * w);
  }
  r.exact_degree = 2 * n - 1;
  return r;
}

CellMap cell_map(const Mesh& mesh, std::size_t c) {
  CellMap m;
  m.dim = mesh.dim;
  const auto& cell = mesh.cells[c];
  auto P = [&](int i) {
    const auto& p = mesh.vertices[cell[i]];
    return Eigen::Vector3d(p[0], p[1], p[2]);
  };
  m.J.setIdentity();
  if (mesh.kind == CellKind::quadrilateral) {
    const Eigen::Vector3d x0 = P(0), x1 = P(1), x2 = P(2), x3 = P(3);
    if ((x2 - x1 - x3 + x0).norm() > 1e-10 * (x2 - x0).norm())
      throw MeshError("quadrilateral cell " + std::to_string(c) + " is not a parallelogram");
    m.origin = 0.5 * (x0 + x2);
    m.J.col(0) = 0.5 * (x1 - x0);
    m.J.col(1) = 0.5 * (x3 - x0);
    m.J(2, 2) = 1.0;
    m.measure = 4.0 * std::abs(m.J.determinant());
  } else {
    m.origin = P(0);
    for (int i = 0; i < mesh.dim; ++i) m.J.col(i) = P(i + 1) - P(0);
    if (mesh.dim == 2) m.J(2, 2) = 1.0;
    m.measure = std::abs(m.J.determinant()) / (mesh.dim == 2 ? 2.0 : 6.0);
  }
  m.JinvT = m.J.inverse().transpose();
  return m;
}

DofMap build_dofmap(const Mesh& mesh, Space s) {
  DofMap dm;
  dm.space = s;
  dm.kind = mesh.kind;
  dm.per_cell = local_dofs(s, mesh.kind);
  const int nv = static_cast<int>(mesh.num_vertices());
  const int nc = static_cast<int>(mesh.num_cells());
  const bool has_vertices = s != Space::P0;
  const bool has_edges = s == Space::P2 || s == Space::Q2;
  const bool has_interior = s == Space::P1b || s == Space::Q2 || s == Space::P0;

  std::vector<std::array<int, 2>> edges;
  if (has_edges) edges = mesh_edges(mesh);
  auto edge_index = [&](int a, int b) {
    const std::array<int, 2> key{std::min(a, b), std::max(a, b)};
    return static_cast<int>(std::lower_bound(edges.begin(), edges.end(), key) - edges.begin());
  };
  const int edge_offset = has_vertices ? nv : 0;
  const int cell_offset = edge_offset + static_cast<int>(edges.size());
  dm.ndofs = cell_offset + (has_interior ? nc : 0);
  dm.coords.resize(dm.ndofs);
  dm.on_boundary.assign(dm.ndofs, false);

  if (has_vertices)
    for (int v = 0; v < nv; ++v) dm.coords[v] = mesh.vertices[v];
  for (std::size_t e = 0; e < edges.size(); ++e)
    for (int k = 0; k < 3; ++k)
      dm.coords[edge_offset + e][k] = 0.5 * (mesh.vertices[edges[e][0]][k] + mesh.vertices[edges[e][1]][k]);
  if (has_interior)
    for (int c = 0; c < nc; ++c) dm.coords[cell_offset + c] = mesh.centroid(c);

  const auto le = cell_local_edges(mesh.kind);
  const int nvc = mesh.verts_per_cell();
  dm.cell_dofs.resize(static_cast<std::size_t>(nc) * dm.per_cell);
  for (int c = 0; c < nc; ++c) {
    int* d = dm.cell_dofs.data() + static_cast<std::size_t>(c) * dm.per_cell;
    int k = 0;
    if (has_vertices)
      for (int i = 0; i < nvc; ++i) d[k++] = mesh.cells[c][i];
    if (has_edges)
      for (const auto& e : le) d[k++] = edge_offset + edge_index(mesh.cells[c][e[0]], mesh.cells[c][e[1]]);
    if (has_interior) d[k++] = cell_offset + c;
  }

  if (has_vertices) {
    const auto bnd = topological_boundary(mesh);
    for (const auto& f : bnd) {
      const int nf = mesh.dim;
      for (int i = 0; i < nf; ++i) dm.on_boundary[f[i]] = true;
      if (has_edges)
        for (int i = 0; i < nf; ++i)
          for (int j = i + 1; j < nf; ++j) dm.on_boundary[edge_offset + edge_index(f[i], f[j])] = true;
    }
  }
  for (int i = 0; i < dm.ndofs; ++i)
    if (dm.on_boundary[i]) dm.boundary.push_back(i);
  return dm;
}

Eigen::VectorXd interpolate(const Mesh& mesh, const DofMap& dm, const std::function<double(const Point&)>& f) {
  Eigen::VectorXd coef(dm.ndofs);
  for (int i = 0; i < dm.ndofs; ++i) coef[i] = f(dm.coords[i]);
  if (dm.space == Space::P1b) {
    const int nv = mesh.verts_per_cell();
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
      const int* d = dm.dofs(c);
      double mean = 0.0;
      for (int i = 0; i < nv; ++i) mean += coef[d[i]] / nv;
      coef[d[nv]] -= mean;
    }
  }
  return coef;
}

std::pair<double, Eigen::Vector3d> eval_function(const Mesh& mesh, const DofMap& dm, const Eigen::VectorXd& coef,
                                                 std::size_t cell, const Eigen::Vector3d& ref) {
  const auto basis = eval_basis(dm.space, mesh.kind, ref);
  const auto map = cell_map(mesh, cell);
  const int* d = dm.dofs(cell);
  double v = 0.0;
  Eigen::Vector3d g = Eigen::Vector3d::Zero();
  for (int i = 0; i < dm.per_cell; ++i) {
    v += coef[d[i]] * basis.values[i];
    g += coef[d[i]] * basis.grads[i];
  }
  return {v, map.grad(g)};
}

}  // namespace lbb
