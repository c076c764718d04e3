#include "lbb/macroelement.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <stdexcept>

namespace lbb {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
  int count() {
    int n = 0;
    for (std::size_t i = 0; i < parent.size(); ++i) n += find(static_cast<int>(i)) == static_cast<int>(i);
    return n;
  }
};

double angle_of(const Point& c, const Point& p) {
  double a = std::atan2(p[1] - c[1], p[0] - c[0]);
  if (a < 0) a += kTwoPi;
  if (a >= kTwoPi) a -= kTwoPi;
  return a;
}

MacroElement macro_from_star(const Mesh& mesh, int v, const std::vector<int>& star) {
  MacroElement m;
  m.center = v;
  std::set<int> ring;
  for (int c : star)
    for (int i = 0; i < mesh.verts_per_cell(); ++i)
      if (mesh.cells[c][i] != v) ring.insert(mesh.cells[c][i]);
  m.ring_vertices.assign(ring.begin(), ring.end());
  const Point& q0 = mesh.vertices[v];

  if (mesh.dim == 2) {
    std::vector<std::pair<double, int>> order;
    for (int r : m.ring_vertices) order.emplace_back(angle_of(q0, mesh.vertices[r]), r);
    std::sort(order.begin(), order.end());
    m.ring_vertices.clear();
    for (const auto& [a, r] : order) {
      m.angles.push_back(a);
      m.ring_vertices.push_back(r);
    }
    const int n = m.n_v();
    if (mesh.kind == CellKind::triangle) {
      for (int i = 0; i < n; ++i) {
        const int a = m.ring_vertices[i], b = m.ring_vertices[(i + 1) % n];
        int found = -1;
        for (int c : star) {
          const auto& cell = mesh.cells[c];
          const bool has_a = cell[0] == a || cell[1] == a || cell[2] == a;
          const bool has_b = cell[0] == b || cell[1] == b || cell[2] == b;
          if (has_a && has_b) found = c;
        }
        if (found < 0) throw MeshError("vertex " + std::to_string(v) + " has a non-cyclic star");
        m.cells.push_back(found);
      }
    } else {
      std::vector<std::pair<double, int>> co;
      for (int c : star) co.emplace_back(angle_of(q0, mesh.centroid(c)), c);
      std::sort(co.begin(), co.end());
      for (const auto& [a, c] : co) m.cells.push_back(c);
    }
  } else {
    m.cells = star;
  }
  for (int c : m.cells) m.areas.push_back(mesh.measure(c));

  std::map<int, int> local{{v, 0}};
  m.patch.dim = mesh.dim;
  m.patch.kind = mesh.kind;
  m.patch.vertices.push_back(q0);
  for (int r : m.ring_vertices) {
    local[r] = static_cast<int>(m.patch.vertices.size());
    m.patch.vertices.push_back(mesh.vertices[r]);
  }
  for (int c : m.cells) {
    std::array<int, 4> cell{-1, -1, -1, -1};
    for (int i = 0; i < mesh.verts_per_cell(); ++i) cell[i] = local.at(mesh.cells[c][i]);
    m.patch.cells.push_back(cell);
  }
  m.patch.finalize();
  return m;
}

// horizontal components for a given vertical axis
std::array<int, 2> horizontal(Axis vertical) {
  switch (vertical) {
    case Axis::x: return {1, 2};
    case Axis::y: return {2, 0};
    case Axis::z: return {0, 1};
  }
  return {0, 1};
}

// interior faces of a 3D patch: (face vertices, cell a, cell b)
struct InteriorFace {
  std::array<int, 3> v;
  int a, b;
};

std::vector<InteriorFace> interior_faces(const Mesh& patch) {
  std::map<std::array<int, 3>, std::vector<int>> owners;
  static const int lf[4][3] = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};
  for (std::size_t c = 0; c < patch.num_cells(); ++c)
    for (const auto& f : lf) {
      std::array<int, 3> k{patch.cells[c][f[0]], patch.cells[c][f[1]], patch.cells[c][f[2]]};
      std::sort(k.begin(), k.end());
      owners[k].push_back(static_cast<int>(c));
    }
  std::vector<InteriorFace> out;
  for (const auto& [k, cs] : owners)
    if (cs.size() == 2) out.push_back({k, cs[0], cs[1]});
  return out;
}

bool split_by_plane(const MacroElement& m, const std::vector<InteriorFace>& faces, int axis, double tol) {
  const auto& p = m.patch.vertices;
  const double h = m.diameter();
  UnionFind uf(static_cast<int>(m.patch.num_cells()));
  for (const auto& f : faces) {
    bool in_plane = true;
    for (int v : f.v)
      if (std::abs(p[v][axis] - p[0][axis]) > tol * h) in_plane = false;
    if (!in_plane) uf.unite(f.a, f.b);
  }
  return uf.count() > 1;
}

}  // namespace

double MacroElement::diameter() const {
  double d = 0.0;
  const auto& p = patch.vertices;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j)
      d = std::max(d, std::sqrt(std::pow(p[i][0] - p[j][0], 2) + std::pow(p[i][1] - p[j][1], 2) +
                                std::pow(p[i][2] - p[j][2], 2)));
  return d;
}

std::vector<MacroElement> build_macroelements(const Mesh& mesh, std::vector<std::string>* warnings) {
  const auto boundary = boundary_vertex_mask(mesh);
  std::vector<std::vector<int>> v2c(mesh.num_vertices());
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    for (int i = 0; i < mesh.verts_per_cell(); ++i) v2c[mesh.cells[c][i]].push_back(static_cast<int>(c));
  std::vector<MacroElement> out;
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
    if (!boundary[v] && !v2c[v].empty()) out.push_back(macro_from_star(mesh, static_cast<int>(v), v2c[v]));
  if (warnings) {
    if (out.empty()) warnings->push_back("mesh has no interior vertices; no macro-element partition exists");
    std::vector<int> uncovered;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
      bool any = false;
      for (int i = 0; i < mesh.verts_per_cell(); ++i) any |= !boundary[mesh.cells[c][i]];
      if (!any) uncovered.push_back(static_cast<int>(c));
    }
    if (!uncovered.empty()) {
      std::string msg = "cells without an interior vertex (mesh not coverable by vertex stars):";
      for (int c : uncovered) msg += " " + std::to_string(c);
      warnings->push_back(msg);
    }
  }
  return out;
}

MacroElement make_macro_2d(const Point& center, const std::vector<Point>& ring) {
  if (ring.size() < 3) throw std::invalid_argument("make_macro_2d: need at least 3 ring points");
  std::vector<std::pair<double, Point>> order;
  for (const auto& p : ring) order.emplace_back(angle_of(center, p), p);
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  const int n = static_cast<int>(ring.size());
  for (int i = 0; i < n; ++i) {
    double gap = order[(i + 1) % n].first - order[i].first;
    if (i == n - 1) gap += kTwoPi;
    if (gap >= std::numbers::pi) throw std::invalid_argument("make_macro_2d: angular gap >= pi");
  }
  Mesh mesh;
  mesh.vertices.push_back(center);
  for (const auto& [a, p] : order) mesh.vertices.push_back(p);
  for (int i = 0; i < n; ++i) mesh.cells.push_back({0, i + 1, (i + 1) % n + 1, -1});
  mesh.finalize();
  return macro_at(mesh, 0);
}

MacroElement macro_at(const Mesh& mesh, int center) {
  std::vector<int> star;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    for (int i = 0; i < mesh.verts_per_cell(); ++i)
      if (mesh.cells[c][i] == center) star.push_back(static_cast<int>(c));
  if (star.empty()) throw std::invalid_argument("macro_at: vertex has no cells");
  if (boundary_vertex_mask(mesh)[center]) throw std::invalid_argument("macro_at: vertex is on the boundary");
  return macro_from_star(mesh, center, star);
}

StructureFlags classify_2d(const MacroElement& m, double tol) {
  if (m.patch.dim != 2) throw std::invalid_argument("classify_2d: 2D macro required");
  StructureFlags f;
  const double h = m.diameter();
  const auto& q0 = m.patch.vertices[0];
  std::vector<double> sines, cosines;
  for (int i = 0; i < m.n_v(); ++i) {
    const auto& q = m.patch.vertices[i + 1];
    const double dx = q[0] - q0[0], dy = q[1] - q0[1];
    const double r = std::hypot(dx, dy);
    f.aligned_count_y += std::abs(dy) <= tol * h;
    f.aligned_count_x += std::abs(dx) <= tol * h;
    sines.push_back(std::abs(dy) / r);
    cosines.push_back(std::abs(dx) / r);
  }
  std::sort(sines.begin(), sines.end());
  std::sort(cosines.begin(), cosines.end());
  f.min_sin = sines.size() > 1 ? sines[1] : sines[0];
  f.min_cos = cosines.size() > 1 ? cosines[1] : cosines[0];
  f.y_structured = f.aligned_count_y >= 2;
  f.x_structured = f.aligned_count_x >= 2;
  return f;
}

double s_condition(const MacroElement& m, Axis axis) {
  if (m.patch.kind != CellKind::triangle) throw std::invalid_argument("s_condition: triangle macro required");
  const int n = m.n_v();
  const auto& q0 = m.patch.vertices[0];
  double s = 0.0;
  for (int k = 0; k < n; ++k) {
    const auto& q = m.patch.vertices[k + 1];
    const double dx = q[0] - q0[0], dy = q[1] - q0[1];
    const double r = std::hypot(dx, dy);
    const double num = axis == Axis::y ? dx : dy;
    const double den = axis == Axis::y ? dy : dx;
    if (std::abs(den) < 1e-14 * r) throw std::domain_error("s_condition: ring vertex aligned with the center");
    // edge center->ring[k] is shared by cells k-1 and k
    const double inv = 1.0 / m.areas[(k + n - 1) % n] + 1.0 / m.areas[k];
    s += (k % 2 ? 1.0 : -1.0) * (num / den) * inv;
  }
  return s;
}

double s_scale(const MacroElement& m) {
  double s = 0.0;
  for (double a : m.areas) s += 1.0 / a;
  return s;
}

std::string to_string(Verdict v) { return v == Verdict::regular ? "regular" : "singular"; }

std::string to_string(Reason r) {
  switch (r) {
    case Reason::two_aligned: return "two-aligned";
    case Reason::one_aligned: return "one-aligned";
    case Reason::no_aligned: return "no-aligned";
    case Reason::odd_nv: return "odd-nV";
    case Reason::even_nv_s_nonzero: return "even-nV-S-nonzero";
    case Reason::even_nv_s_zero: return "even-nV-S-zero";
    case Reason::x_split_3d: return "3D-x-split";
    case Reason::no_split_3d: return "3D-no-split";
    case Reason::semiplane_case1: return "3D-semiplane-case-1";
    case Reason::semiplane_case2: return "3D-semiplane-case-2";
    case Reason::semiplane_case2_aligned: return "3D-semiplane-case-2-aligned";
    case Reason::semiplane_case3: return "3D-semiplane-case-3";
  }
  return "?";
}

RegularityVerdict predict_regularity(const MacroElement& m, const FECombo& combo, double tol, double alignment_tol) {
  if (combo.dim() != 2 || combo.pressure != Space::P1 || m.patch.kind != CellKind::triangle)
    throw std::invalid_argument("predict_regularity: unsupported combo " + combo.name());
  const Space u = combo.velocity[0], v = combo.velocity[1];
  Axis axis;
  bool p2;
  if (u == Space::P1b && v == Space::P1) {
    axis = Axis::y;
    p2 = false;
  } else if (u == Space::P1 && v == Space::P1b) {
    axis = Axis::x;
    p2 = false;
  } else if (u == Space::P2 && v == Space::P1) {
    axis = Axis::y;
    p2 = true;
  } else if (u == Space::P1 && v == Space::P2) {
    axis = Axis::x;
    p2 = true;
  } else {
    throw std::invalid_argument("predict_regularity: unsupported combo " + combo.name());
  }
  const auto flags = classify_2d(m, alignment_tol);
  const int aligned = axis == Axis::y ? flags.aligned_count_y : flags.aligned_count_x;
  RegularityVerdict out;
  if (aligned >= 2) {
    out.predicted = Verdict::singular;
    out.reason = Reason::two_aligned;
    return out;
  }
  out.predicted = Verdict::regular;
  if (aligned == 1) {
    out.reason = Reason::one_aligned;
    return out;
  }
  if (!p2) {
    out.reason = Reason::no_aligned;
    return out;
  }
  if (m.n_v() % 2 == 1) {
    out.reason = Reason::odd_nv;
    return out;
  }
  out.s_value = std::abs(s_condition(m, axis)) / s_scale(m);
  out.s_evaluated = true;
  if (out.s_value > tol) {
    out.reason = Reason::even_nv_s_nonzero;
  } else {
    out.predicted = Verdict::singular;
    out.reason = Reason::even_nv_s_zero;
  }
  return out;
}

StructureFlags classify_3d(const MacroElement& m, double tol, Axis vertical) {
  if (m.patch.dim != 3) throw std::invalid_argument("classify_3d: 3D macro required");
  StructureFlags f;
  const auto faces = interior_faces(m.patch);
  f.x_structured = split_by_plane(m, faces, 0, tol);
  f.y_structured = split_by_plane(m, faces, 1, tol);
  f.z_structured = split_by_plane(m, faces, 2, tol);

  const auto hz = horizontal(vertical);
  const auto& p = m.patch.vertices;
  const double h = m.diameter();
  auto proj = [&](int v) { return std::array<double, 2>{p[v][hz[0]] - p[0][hz[0]], p[v][hz[1]] - p[0][hz[1]]}; };

  // vertical faces and the horizontal directions they span
  std::vector<std::vector<double>> dirs(faces.size());
  std::vector<bool> is_vertical(faces.size(), false);
  for (std::size_t i = 0; i < faces.size(); ++i) {
    std::vector<int> others;
    for (int v : faces[i].v)
      if (v != 0) others.push_back(v);
    if (others.size() != 2) continue;
    const auto a = proj(others[0]), b = proj(others[1]);
    if (std::abs(a[0] * b[1] - a[1] * b[0]) > tol * h * h) continue;
    is_vertical[i] = true;
    const double na = std::hypot(a[0], a[1]), nb = std::hypot(b[0], b[1]);
    const bool a_ok = na > tol * h, b_ok = nb > tol * h;
    if (a_ok) dirs[i].push_back(std::atan2(a[1], a[0]));
    if (b_ok && (!a_ok || a[0] * b[0] + a[1] * b[1] < 0)) dirs[i].push_back(std::atan2(b[1], b[0]));
  }
  UnionFind uf(static_cast<int>(m.patch.num_cells()));
  for (std::size_t i = 0; i < faces.size(); ++i)
    if (!is_vertical[i]) uf.unite(faces[i].a, faces[i].b);

  // group directions (tolerance 1e-9 rad) and keep groups that separate components
  constexpr double kAngleTol = 1e-9;
  std::vector<double> groups;
  std::vector<bool> separating;
  auto same_angle = [](double x, double y) {
    double d = std::fmod(std::abs(x - y), kTwoPi);
    return std::min(d, kTwoPi - d) <= kAngleTol;
  };
  for (std::size_t i = 0; i < faces.size(); ++i)
    for (double d : dirs[i]) {
      std::size_t g = 0;
      while (g < groups.size() && !same_angle(groups[g], d)) ++g;
      if (g == groups.size()) {
        groups.push_back(d);
        separating.push_back(false);
      }
      if (uf.find(faces[i].a) != uf.find(faces[i].b)) separating[g] = true;
    }
  std::vector<double> planes;
  for (std::size_t g = 0; g < groups.size(); ++g)
    if (separating[g]) planes.push_back(groups[g]);
  f.semi_plane_count = static_cast<int>(planes.size());
  f.semi_planes_aligned = planes.size() == 2 && same_angle(planes[0] + std::numbers::pi, planes[1]);
  return f;
}

RegularityVerdict predict_regularity_3d(const MacroElement& m, const FECombo& combo, double alignment_tol) {
  if (combo.dim() != 3 || combo.pressure != Space::P1 || m.patch.kind != CellKind::tetrahedron)
    throw std::invalid_argument("predict_regularity_3d: unsupported combo " + combo.name());
  std::vector<int> bubbles, plain;
  for (int k = 0; k < 3; ++k) {
    if (combo.velocity[k] == Space::P1b)
      bubbles.push_back(k);
    else if (combo.velocity[k] == Space::P1)
      plain.push_back(k);
    else
      throw std::invalid_argument("predict_regularity_3d: unsupported combo " + combo.name());
  }
  RegularityVerdict out;
  if (bubbles.size() == 2) {
    const auto f = classify_3d(m, alignment_tol);
    const int k = plain[0];
    const bool split = k == 0 ? f.x_structured : k == 1 ? f.y_structured : f.z_structured;
    out.predicted = split ? Verdict::singular : Verdict::regular;
    out.reason = split ? Reason::x_split_3d : Reason::no_split_3d;
    return out;
  }
  if (bubbles.size() == 1) {
    const auto f = classify_3d(m, alignment_tol, static_cast<Axis>(bubbles[0]));
    if (f.semi_plane_count <= 1) {
      out.reason = Reason::semiplane_case1;
    } else if (f.semi_plane_count == 2) {
      out.reason = f.semi_planes_aligned ? Reason::semiplane_case2_aligned : Reason::semiplane_case2;
      if (f.semi_planes_aligned) out.predicted = Verdict::singular;
    } else {
      out.reason = Reason::semiplane_case3;
      out.predicted = Verdict::singular;
    }
    return out;
  }
  throw std::invalid_argument("predict_regularity_3d: unsupported combo " + combo.name());
}

CsvTable structure_report(const Mesh& mesh, const std::vector<MacroElement>& macros,
                          const std::vector<FECombo>& combos) {
  CsvTable t;
  const bool d3 = mesh.dim == 3;
  t.header = {"vertex", "x", "y"};
  if (d3) t.header.push_back("z");
  t.header.insert(t.header.end(), {"n_v", "x_structured", "y_structured"});
  if (d3) {
    t.header.insert(t.header.end(), {"z_structured", "semi_plane_count", "semi_planes_aligned"});
  } else {
    t.header.insert(t.header.end(), {"aligned_x", "aligned_y", "min_sin", "min_cos", "S_over_scale_y",
                                     "S_over_scale_x"});
  }
  for (const auto& c : combos) t.header.push_back("verdict_" + c.name());
  for (const auto& m : macros) {
    const auto& q = mesh.vertices[m.center];
    std::vector<std::string> row{std::to_string(m.center), fmt_num(q[0]), fmt_num(q[1])};
    if (d3) row.push_back(fmt_num(q[2]));
    row.push_back(std::to_string(m.n_v()));
    if (d3) {
      const auto f = classify_3d(m);
      row.insert(row.end(), {f.x_structured ? "1" : "0", f.y_structured ? "1" : "0", f.z_structured ? "1" : "0",
                             std::to_string(f.semi_plane_count), f.semi_planes_aligned ? "1" : "0"});
      for (const auto& c : combos) row.push_back(to_string(predict_regularity_3d(m, c).predicted));
    } else {
      const auto f = classify_2d(m);
      auto s_col = [&](Axis a) -> std::string {
        if (m.patch.kind != CellKind::triangle) return "";
        try {
          return fmt_num(std::abs(s_condition(m, a)) / s_scale(m));
        } catch (const std::domain_error&) {
          return "";
        }
      };
      row.insert(row.end(), {f.x_structured ? "1" : "0", f.y_structured ? "1" : "0",
                             std::to_string(f.aligned_count_x), std::to_string(f.aligned_count_y), fmt_num(f.min_sin),
                             fmt_num(f.min_cos), s_col(Axis::y), s_col(Axis::x)});
      for (const auto& c : combos) row.push_back(to_string(predict_regularity(m, c).predicted));
    }
    t.add_row(row);
  }
  return t;
}

}  // namespace lbb
