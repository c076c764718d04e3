#include "lbb/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace lbb {

namespace {

double cross2(const Point& o, const Point& a, const Point& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

double det3(const Point& o, const Point& a, const Point& b, const Point& c) {
  const double ax = a[0] - o[0], ay = a[1] - o[1], az = a[2] - o[2];
  const double bx = b[0] - o[0], by = b[1] - o[1], bz = b[2] - o[2];
  const double cx = c[0] - o[0], cy = c[1] - o[1], cz = c[2] - o[2];
  return ax * (by * cz - bz * cy) - ay * (bx * cz - bz * cx) + az * (bx * cy - by * cx);
}

double dist(const Point& a, const Point& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                   (a[2] - b[2]) * (a[2] - b[2]));
}

using FacetKey = std::array<int, 3>;

// Local facets of a cell as index lists into the cell's vertex tuple.
std::vector<std::vector<int>> local_facets(CellKind kind) {
  switch (kind) {
    case CellKind::triangle:
      return {{0, 1}, {1, 2}, {2, 0}};
    case CellKind::quadrilateral:
      return {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
    case CellKind::tetrahedron:
      return {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};
  }
  return {};
}

FacetKey make_key(std::vector<int> vs) {
  std::sort(vs.begin(), vs.end());
  FacetKey k{-1, -1, -1};
  for (std::size_t i = 0; i < vs.size(); ++i) k[i] = vs[i];
  return k;
}

// facet -> owning cells
std::map<FacetKey, std::vector<int>> facet_owners(const Mesh& mesh) {
  std::map<FacetKey, std::vector<int>> owners;
  const auto lf = local_facets(mesh.kind);
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    for (const auto& f : lf) {
      std::vector<int> vs;
      for (int i : f) vs.push_back(mesh.cells[c][i]);
      owners[make_key(vs)].push_back(static_cast<int>(c));
    }
  }
  return owners;
}

bool point_strictly_in_segment(const Point& p, const Point& a, const Point& b, double tol) {
  const double len = dist(a, b);
  if (std::abs(cross2(a, b, p)) > tol * len * len) return false;
  const double t = ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / (len * len);
  return t > tol && t < 1.0 - tol;
}

bool point_strictly_in_triangle3d(const Point& p, const Point& a, const Point& b, const Point& c,
                                  double tol) {
  const double scale = std::max({dist(a, b), dist(b, c), dist(c, a)});
  if (std::abs(det3(a, b, c, p)) > tol * scale * scale * scale) return false;
  // barycentric coordinates in the plane of (a,b,c)
  const std::array<double, 3> e0{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
  const std::array<double, 3> e1{c[0] - a[0], c[1] - a[1], c[2] - a[2]};
  const std::array<double, 3> ep{p[0] - a[0], p[1] - a[1], p[2] - a[2]};
  auto dot = [](const auto& u, const auto& v) { return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]; };
  const double d00 = dot(e0, e0), d01 = dot(e0, e1), d11 = dot(e1, e1);
  const double d20 = dot(ep, e0), d21 = dot(ep, e1);
  const double den = d00 * d11 - d01 * d01;
  const double l1 = (d11 * d20 - d01 * d21) / den;
  const double l2 = (d00 * d21 - d01 * d20) / den;
  const double l0 = 1.0 - l1 - l2;
  return l0 > tol && l1 > tol && l2 > tol;
}

std::vector<std::vector<int>> vertex_to_cells(const Mesh& mesh) {
  std::vector<std::vector<int>> v2c(mesh.vertices.size());
  for (std::size_t c = 0; c < mesh.cells.size(); ++c)
    for (int i = 0; i < mesh.verts_per_cell(); ++i) v2c[mesh.cells[c][i]].push_back(static_cast<int>(c));
  return v2c;
}

void add_rect_boundary(Mesh& m, int nx, int ny, auto&& vid) {
  for (int i = 0; i < nx; ++i) {
    m.boundary_facets.push_back({{vid(i, 0), vid(i + 1, 0), -1}, 2, kTagBottom});
    m.boundary_facets.push_back({{vid(i + 1, ny), vid(i, ny), -1}, 2, kTagTop});
  }
  for (int j = 0; j < ny; ++j) {
    m.boundary_facets.push_back({{vid(nx, j), vid(nx, j + 1), -1}, 2, kTagRight});
    m.boundary_facets.push_back({{vid(0, j + 1), vid(0, j), -1}, 2, kTagLeft});
  }
}

void check_rect(const Rect& r) {
  if (!(r.x1 > r.x0) || !(r.y1 > r.y0)) throw MeshError("degenerate rectangle domain");
}

}  // namespace

std::string to_string(CellKind kind) {
  switch (kind) {
    case CellKind::triangle: return "triangle";
    case CellKind::tetrahedron: return "tetrahedron";
    case CellKind::quadrilateral: return "quadrilateral";
  }
  return "?";
}

double Mesh::signed_measure(std::size_t c) const {
  const auto& cell = cells[c];
  const auto& p = vertices;
  switch (kind) {
    case CellKind::triangle:
      return 0.5 * cross2(p[cell[0]], p[cell[1]], p[cell[2]]);
    case CellKind::quadrilateral: {
      double s = 0.0;
      for (int i = 0; i < 4; ++i) {
        const auto& a = p[cell[i]];
        const auto& b = p[cell[(i + 1) % 4]];
        s += a[0] * b[1] - a[1] * b[0];
      }
      return 0.5 * s;
    }
    case CellKind::tetrahedron:
      return det3(p[cell[0]], p[cell[1]], p[cell[2]], p[cell[3]]) / 6.0;
  }
  return 0.0;
}

double Mesh::measure(std::size_t c) const { return std::abs(signed_measure(c)); }

double Mesh::diameter(std::size_t c) const {
  double d = 0.0;
  const int n = verts_per_cell();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      d = std::max(d, dist(vertices[cells[c][i]], vertices[cells[c][j]]));
  return d;
}

Point Mesh::centroid(std::size_t c) const {
  Point g{0, 0, 0};
  const int n = verts_per_cell();
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < 3; ++k) g[k] += vertices[cells[c][i]][k] / n;
  return g;
}

void Mesh::finalize() {
  const int n = verts_per_cell();
  const auto nv = static_cast<int>(vertices.size());
  if ((kind == CellKind::tetrahedron) != (dim == 3))
    throw MeshError("cell kind " + to_string(kind) + " incompatible with dim " + std::to_string(dim));
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (int i = 0; i < n; ++i)
      if (cells[c][i] < 0 || cells[c][i] >= nv)
        throw MeshError("cell " + std::to_string(c) + " references vertex " +
                        std::to_string(cells[c][i]) + " out of range");
    if (kind != CellKind::tetrahedron) cells[c][3] = kind == CellKind::triangle ? -1 : cells[c][3];
    const double m = signed_measure(c);
    double scale = diameter(c);
    scale = std::pow(scale, dim);
    if (std::abs(m) <= 1e-14 * scale)
      throw MeshError("cell " + std::to_string(c) + " is degenerate");
    if (m < 0) {
      auto& cell = cells[c];
      switch (kind) {
        case CellKind::triangle: std::swap(cell[1], cell[2]); break;
        case CellKind::tetrahedron: std::swap(cell[2], cell[3]); break;
        case CellKind::quadrilateral: std::swap(cell[1], cell[3]); break;
      }
    }
  }
  const auto owners = facet_owners(*this);
  if (boundary_facets.empty()) {
    for (const auto& [key, cs] : owners) {
      if (cs.size() != 1) continue;
      BoundaryFacet f;
      f.size = dim;
      for (int i = 0; i < dim; ++i) f.v[i] = key[i];
      boundary_facets.push_back(f);
    }
  } else {
    for (const auto& f : boundary_facets) {
      std::vector<int> vs(f.v.begin(), f.v.begin() + f.size);
      auto it = owners.find(make_key(vs));
      if (it == owners.end() || it->second.size() != 1)
        throw MeshError("boundary facet does not belong to exactly one cell");
    }
  }
}

MeshMetrics metrics(const Mesh& mesh) {
  MeshMetrics m;
  m.min_area = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const double d = mesh.diameter(c);
    const double a = mesh.measure(c);
    m.h = std::max(m.h, d);
    m.min_area = std::min(m.min_area, a);
    m.shape_ratio = std::max(m.shape_ratio, d * d / a);
  }
  return m;
}

std::vector<std::array<int, 3>> topological_boundary(const Mesh& mesh) {
  std::vector<std::array<int, 3>> out;
  for (const auto& [key, cs] : facet_owners(mesh))
    if (cs.size() == 1) out.push_back(key);
  return out;
}

std::vector<bool> boundary_vertex_mask(const Mesh& mesh) {
  std::vector<bool> mask(mesh.num_vertices(), false);
  for (const auto& f : topological_boundary(mesh))
    for (int v : f)
      if (v >= 0) mask[v] = true;
  return mask;
}

std::vector<std::array<int, 2>> cell_local_edges(CellKind kind) {
  switch (kind) {
    case CellKind::triangle: return {{0, 1}, {1, 2}, {2, 0}};
    case CellKind::quadrilateral: return {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
    case CellKind::tetrahedron: return {{0, 1}, {1, 2}, {2, 0}, {0, 3}, {1, 3}, {2, 3}};
  }
  return {};
}

std::vector<std::array<int, 2>> mesh_edges(const Mesh& mesh) {
  std::vector<std::array<int, 2>> edges;
  const auto le = cell_local_edges(mesh.kind);
  edges.reserve(mesh.num_cells() * le.size());
  for (const auto& cell : mesh.cells)
    for (const auto& e : le) {
      const int a = cell[e[0]], b = cell[e[1]];
      edges.push_back({std::min(a, b), std::max(a, b)});
    }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

void check_conforming(const Mesh& mesh) {
  const auto owners = facet_owners(mesh);
  for (const auto& [key, cs] : owners)
    if (cs.size() > 2)
      throw MeshError("nonconforming mesh: facet shared by cells " + std::to_string(cs[0]) + " and " +
                      std::to_string(cs[1]) + " and others");
  const auto v2c = vertex_to_cells(mesh);
  constexpr double tol = 1e-10;
  for (const auto& [key, cs] : owners) {
    if (cs.size() != 1) continue;
    // bounding box of the facet
    const int nf = mesh.dim;
    Point lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
    for (int i = 0; i < nf; ++i)
      for (int k = 0; k < 3; ++k) {
        lo[k] = std::min(lo[k], mesh.vertices[key[i]][k]);
        hi[k] = std::max(hi[k], mesh.vertices[key[i]][k]);
      }
    double ext = 0.0;
    for (int k = 0; k < 3; ++k) ext = std::max(ext, hi[k] - lo[k]);
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
      if (std::find(key.begin(), key.begin() + nf, static_cast<int>(v)) != key.begin() + nf) continue;
      const auto& p = mesh.vertices[v];
      bool inside_box = true;
      for (int k = 0; k < 3; ++k)
        if (p[k] < lo[k] - tol * ext || p[k] > hi[k] + tol * ext) inside_box = false;
      if (!inside_box) continue;
      const bool hanging =
          nf == 2 ? point_strictly_in_segment(p, mesh.vertices[key[0]], mesh.vertices[key[1]], tol)
                  : point_strictly_in_triangle3d(p, mesh.vertices[key[0]], mesh.vertices[key[1]],
                                                 mesh.vertices[key[2]], tol);
      if (hanging && !v2c[v].empty())
        throw MeshError("nonconforming mesh: cells " + std::to_string(cs[0]) + " and " +
                        std::to_string(v2c[v].front()) + " meet at a hanging vertex " +
                        std::to_string(v));
    }
  }
}

// --- MSH ---------------------------------------------------------------------

Mesh parse_msh(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto next = [&](const char* what) -> std::string {
    if (!std::getline(in, line)) throw ParseError(std::string("unexpected end of file, expected ") + what, lineno);
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };

  bool have_format = false;
  std::map<long, int> node_id;
  std::vector<Point> nodes;
  struct RawElement {
    int type;
    int tag;
    std::vector<long> nodes;
    std::size_t line;
  };
  std::vector<RawElement> elements;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == "$MeshFormat") {
      std::istringstream fs(next("format line"));
      std::string version;
      int file_type = -1, dsize = 0;
      fs >> version >> file_type >> dsize;
      if (version.rfind("2.2", 0) != 0)
        throw ParseError("unsupported MSH version '" + version + "', only 2.2 ASCII is accepted", lineno);
      if (file_type != 0) throw ParseError("binary MSH files are not supported", lineno);
      have_format = true;
      if (next("$EndMeshFormat") != "$EndMeshFormat") throw ParseError("expected $EndMeshFormat", lineno);
    } else if (line == "$Nodes") {
      long n = 0;
      if (!(std::istringstream(next("node count")) >> n) || n < 0) throw ParseError("bad node count", lineno);
      for (long i = 0; i < n; ++i) {
        std::istringstream ns(next("node"));
        long id;
        Point p;
        if (!(ns >> id >> p[0] >> p[1] >> p[2])) throw ParseError("malformed node record", lineno);
        if (node_id.count(id)) throw ParseError("duplicate node id " + std::to_string(id), lineno);
        node_id[id] = static_cast<int>(nodes.size());
        nodes.push_back(p);
      }
      if (next("$EndNodes") != "$EndNodes") throw ParseError("expected $EndNodes", lineno);
    } else if (line == "$Elements") {
      long n = 0;
      if (!(std::istringstream(next("element count")) >> n) || n < 0)
        throw ParseError("bad element count", lineno);
      for (long i = 0; i < n; ++i) {
        std::istringstream es(next("element"));
        long id;
        int type, ntags;
        if (!(es >> id >> type >> ntags) || ntags < 0) throw ParseError("malformed element record", lineno);
        std::vector<int> tags(ntags);
        for (auto& t : tags)
          if (!(es >> t)) throw ParseError("malformed element tags", lineno);
        int nn = 0;
        switch (type) {
          case 1: nn = 2; break;
          case 2: nn = 3; break;
          case 3: nn = 4; break;
          case 4: nn = 4; break;
          case 15: nn = 1; break;
          default: throw ParseError("unsupported element type " + std::to_string(type), lineno);
        }
        RawElement e{type, tags.empty() ? 0 : tags[0], std::vector<long>(nn), lineno};
        for (auto& v : e.nodes)
          if (!(es >> v)) throw ParseError("element has too few nodes", lineno);
        elements.push_back(std::move(e));
      }
      if (next("$EndElements") != "$EndElements") throw ParseError("expected $EndElements", lineno);
    } else if (!line.empty() && line[0] == '$' && line.rfind("$End", 0) != 0) {
      // skip unknown sections such as $PhysicalNames
      const std::string end = "$End" + line.substr(1);
      while (next(end.c_str()) != end) {
      }
    }
  }
  if (!have_format) throw ParseError("missing $MeshFormat section", 0);
  if (nodes.empty()) throw ParseError("missing $Nodes section", 0);

  bool has_tet = false, has_quad = false, has_tri = false;
  for (const auto& e : elements) {
    has_tet |= e.type == 4;
    has_quad |= e.type == 3;
    has_tri |= e.type == 2;
  }
  Mesh mesh;
  int cell_type = 0, facet_type = 0;
  if (has_tet) {
    mesh.dim = 3;
    mesh.kind = CellKind::tetrahedron;
    cell_type = 4;
    facet_type = 2;
  } else if (has_quad) {
    if (has_tri) throw ParseError("mixed triangle/quadrilateral meshes are not supported", 0);
    mesh.kind = CellKind::quadrilateral;
    cell_type = 3;
    facet_type = 1;
  } else if (has_tri) {
    mesh.kind = CellKind::triangle;
    cell_type = 2;
    facet_type = 1;
  } else {
    throw ParseError("no cells found in $Elements", 0);
  }
  mesh.vertices = nodes;
  if (mesh.dim == 2)
    for (auto& p : mesh.vertices) p[2] = 0.0;
  auto resolve = [&](long id, std::size_t ln) {
    auto it = node_id.find(id);
    if (it == node_id.end()) throw ParseError("element references unknown node " + std::to_string(id), ln);
    return it->second;
  };
  for (const auto& e : elements) {
    if (e.type == cell_type) {
      std::array<int, 4> c{-1, -1, -1, -1};
      for (std::size_t i = 0; i < e.nodes.size(); ++i) c[i] = resolve(e.nodes[i], e.line);
      mesh.cells.push_back(c);
    } else if (e.type == facet_type) {
      BoundaryFacet f;
      f.size = static_cast<int>(e.nodes.size());
      for (int i = 0; i < f.size; ++i) f.v[i] = resolve(e.nodes[i], e.line);
      f.tag = e.tag;
      mesh.boundary_facets.push_back(f);
    }
  }
  mesh.finalize();
  check_conforming(mesh);
  return mesh;
}

Mesh load_msh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_msh(ss.str());
}

namespace {
std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

std::string format_msh(const Mesh& mesh) {
  std::ostringstream out;
  out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n" << mesh.num_vertices() << "\n";
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    const auto& p = mesh.vertices[i];
    out << i + 1 << ' ' << fmt17(p[0]) << ' ' << fmt17(p[1]) << ' ' << fmt17(p[2]) << "\n";
  }
  out << "$EndNodes\n$Elements\n" << mesh.boundary_facets.size() + mesh.num_cells() << "\n";
  const int facet_type = mesh.dim == 3 ? 2 : 1;
  const int cell_type = mesh.kind == CellKind::triangle ? 2 : mesh.kind == CellKind::quadrilateral ? 3 : 4;
  std::size_t id = 1;
  for (const auto& f : mesh.boundary_facets) {
    out << id++ << ' ' << facet_type << " 2 " << f.tag << ' ' << f.tag;
    for (int i = 0; i < f.size; ++i) out << ' ' << f.v[i] + 1;
    out << "\n";
  }
  for (const auto& c : mesh.cells) {
    out << id++ << ' ' << cell_type << " 2 0 0";
    for (int i = 0; i < mesh.verts_per_cell(); ++i) out << ' ' << c[i] + 1;
    out << "\n";
  }
  out << "$EndElements\n";
  return out.str();
}

void save_msh(const Mesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << format_msh(mesh);
}

// --- VTK ---------------------------------------------------------------------

std::string format_vtk(const Mesh& mesh, const std::vector<Field>& fields) {
  for (const auto& f : fields) {
    const std::size_t want = f.on_cells ? mesh.num_cells() : mesh.num_vertices();
    if (f.values.size() != want)
      throw std::invalid_argument("field '" + f.name + "' has " + std::to_string(f.values.size()) +
                                  " values, expected " + std::to_string(want));
  }
  std::ostringstream out;
  out << "# vtk DataFile Version 3.0\nlbb mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const auto& p : mesh.vertices) out << fmt17(p[0]) << ' ' << fmt17(p[1]) << ' ' << fmt17(p[2]) << "\n";
  const int n = mesh.verts_per_cell();
  out << "CELLS " << mesh.num_cells() << ' ' << mesh.num_cells() * (n + 1) << "\n";
  for (const auto& c : mesh.cells) {
    out << n;
    for (int i = 0; i < n; ++i) out << ' ' << c[i];
    out << "\n";
  }
  const int vtk_type = mesh.kind == CellKind::triangle ? 5 : mesh.kind == CellKind::quadrilateral ? 9 : 10;
  out << "CELL_TYPES " << mesh.num_cells() << "\n";
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) out << vtk_type << "\n";
  auto write_block = [&](bool cells) {
    bool header = false;
    for (const auto& f : fields) {
      if (f.on_cells != cells) continue;
      if (!header) {
        out << (cells ? "CELL_DATA " : "POINT_DATA ") << (cells ? mesh.num_cells() : mesh.num_vertices())
            << "\n";
        header = true;
      }
      out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : f.values) out << fmt17(v) << "\n";
    }
  };
  write_block(false);
  write_block(true);
  return out.str();
}

void save_vtk(const Mesh& mesh, const std::vector<Field>& fields, const std::filesystem::path& path) {
  const std::string text = format_vtk(mesh, fields);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// --- CSV ---------------------------------------------------------------------

std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string CsvTable::str() const {
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << "\n";
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out.str();
}

void CsvTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << str();
}

// --- generators --------------------------------------------------------------

Mesh gen_structured_tri(int nx, int ny, Rect r) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("gen_structured_tri: nx, ny must be >= 1");
  check_rect(r);
  Mesh m;
  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      m.vertices.push_back({r.x0 + (r.x1 - r.x0) * i / nx, r.y0 + (r.y1 - r.y0) * j / ny, 0.0});
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      m.cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), -1});
      m.cells.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1), -1});
    }
  add_rect_boundary(m, nx, ny, vid);
  m.finalize();
  return m;
}

Mesh gen_zigzag(int nx, int ny, Rect r) {
  if (nx < 2 || ny < 2) throw std::invalid_argument("gen_zigzag: nx, ny must be >= 2");
  check_rect(r);
  Mesh m;
  // column i holds rows of the parity of i, plus the bottom and top rows
  std::vector<std::vector<int>> rows(nx + 1), ids(nx + 1);
  for (int i = 0; i <= nx; ++i)
    for (int j = 0; j <= ny; ++j)
      if (j == 0 || j == ny || (i + j) % 2 == 0) {
        rows[i].push_back(j);
        ids[i].push_back(static_cast<int>(m.vertices.size()));
        m.vertices.push_back({r.x0 + (r.x1 - r.x0) * i / nx, r.y0 + (r.y1 - r.y0) * j / ny, 0.0});
      }
  for (int i = 0; i < nx; ++i) {
    const auto &yl = rows[i], &yr = rows[i + 1];
    const auto &L = ids[i], &R = ids[i + 1];
    std::size_t a = 0, b = 0;
    while (a + 1 < L.size() || b + 1 < R.size()) {
      if (a + 1 == L.size() || (b + 1 < R.size() && yr[b + 1] < yl[a + 1])) {
        m.cells.push_back({L[a], R[b], R[b + 1], -1});
        ++b;
      } else {
        m.cells.push_back({L[a], R[b], L[a + 1], -1});
        ++a;
      }
    }
  }
  for (int i = 0; i < nx; ++i) {
    m.boundary_facets.push_back({{ids[i].front(), ids[i + 1].front(), -1}, 2, kTagBottom});
    m.boundary_facets.push_back({{ids[i + 1].back(), ids[i].back(), -1}, 2, kTagTop});
  }
  for (std::size_t k = 0; k + 1 < ids[nx].size(); ++k)
    m.boundary_facets.push_back({{ids[nx][k], ids[nx][k + 1], -1}, 2, kTagRight});
  for (std::size_t k = 0; k + 1 < ids[0].size(); ++k)
    m.boundary_facets.push_back({{ids[0][k + 1], ids[0][k], -1}, 2, kTagLeft});
  m.finalize();
  return m;
}

Mesh gen_perturbed(const Mesh& base, double amplitude, std::uint64_t seed) {
  if (base.dim != 2) throw std::invalid_argument("gen_perturbed: base mesh must be 2D");
  if (amplitude < 0) throw std::invalid_argument("gen_perturbed: amplitude must be >= 0");
  Mesh out = base;
  const auto boundary = boundary_vertex_mask(base);
  const auto v2c = vertex_to_cells(base);
  std::vector<double> original(base.num_cells());
  for (std::size_t c = 0; c < base.num_cells(); ++c) original[c] = base.measure(c);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (std::size_t v = 0; v < out.num_vertices(); ++v) {
    if (boundary[v]) continue;
    double shift = amplitude * dist(rng);
    const double x0 = out.vertices[v][0];
    for (int attempt = 0; attempt < 60 && shift != 0.0; ++attempt) {
      out.vertices[v][0] = x0 + shift;
      bool ok = true;
      for (int c : v2c[v])
        if (out.signed_measure(c) < 0.1 * original[c]) ok = false;
      if (ok) break;
      shift *= 0.5;
      if (attempt == 59) shift = 0.0;
    }
    out.vertices[v][0] = x0 + shift;
  }
  return out;
}

Mesh gen_extruded_tet(const Mesh& base, int layers, double height) {
  if (base.kind != CellKind::triangle) throw std::invalid_argument("gen_extruded_tet: base must be triangular");
  if (layers < 1 || !(height > 0)) throw std::invalid_argument("gen_extruded_tet: bad layer spec");
  Mesh m;
  m.dim = 3;
  m.kind = CellKind::tetrahedron;
  const int nv = static_cast<int>(base.num_vertices());
  for (int k = 0; k <= layers; ++k)
    for (const auto& p : base.vertices) m.vertices.push_back({p[0], p[1], height * k / layers});
  for (int k = 0; k < layers; ++k)
    for (const auto& c : base.cells) {
      std::array<int, 3> t{c[0], c[1], c[2]};
      std::sort(t.begin(), t.end());
      const int A = t[0] + k * nv, B = t[1] + k * nv, C = t[2] + k * nv;
      const int A1 = A + nv, B1 = B + nv, C1 = C + nv;
      m.cells.push_back({A, B, C, C1});
      m.cells.push_back({A, B, B1, C1});
      m.cells.push_back({A, A1, B1, C1});
    }
  m.finalize();  // fills topological boundary facets with tag 0
  // tag bottom/top caps and sides by inheriting the base edge tag
  std::map<std::array<int, 2>, int> edge_tag;
  for (const auto& f : base.boundary_facets)
    edge_tag[{std::min(f.v[0], f.v[1]), std::max(f.v[0], f.v[1])}] = f.tag;
  for (auto& f : m.boundary_facets) {
    int lo = 1 << 30, hi = -1;
    std::set<int> base_ids;
    for (int i = 0; i < 3; ++i) {
      lo = std::min(lo, f.v[i] / nv);
      hi = std::max(hi, f.v[i] / nv);
      base_ids.insert(f.v[i] % nv);
    }
    if (lo == hi) {
      f.tag = lo == 0 ? kTagZBottom : kTagZTop;
    } else if (base_ids.size() == 2) {
      auto it = edge_tag.find({*base_ids.begin(), *base_ids.rbegin()});
      f.tag = it == edge_tag.end() ? 0 : it->second;
    }
  }
  return m;
}

Mesh gen_structured_tet(int n) {
  if (n < 1) throw std::invalid_argument("gen_structured_tet: n must be >= 1");
  Mesh m;
  m.dim = 3;
  m.kind = CellKind::tetrahedron;
  auto vid = [n](int i, int j, int k) { return (k * (n + 1) + j) * (n + 1) + i; };
  for (int k = 0; k <= n; ++k)
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i) m.vertices.push_back({double(i) / n, double(j) / n, double(k) / n});
  const std::array<std::array<int, 3>, 6> perms{{{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        for (const auto& p : perms) {
          std::array<int, 3> ijk{i, j, k};
          std::array<int, 4> tet;
          tet[0] = vid(ijk[0], ijk[1], ijk[2]);
          for (int s = 0; s < 3; ++s) {
            ++ijk[p[s]];
            tet[s + 1] = vid(ijk[0], ijk[1], ijk[2]);
          }
          m.cells.push_back(tet);
        }
  m.finalize();
  return m;
}

Mesh gen_structured_quad(int nx, int ny, Rect r) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("gen_structured_quad: nx, ny must be >= 1");
  check_rect(r);
  Mesh m;
  m.kind = CellKind::quadrilateral;
  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      m.vertices.push_back({r.x0 + (r.x1 - r.x0) * i / nx, r.y0 + (r.y1 - r.y0) * j / ny, 0.0});
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) m.cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)});
  add_rect_boundary(m, nx, ny, vid);
  m.finalize();
  return m;
}

Mesh gen_quad_macro(std::array<double, 2> widths, std::array<double, 2> heights) {
  if (!(widths[0] > 0 && widths[1] > 0 && heights[0] > 0 && heights[1] > 0))
    throw std::invalid_argument("gen_quad_macro: sizes must be positive");
  Mesh m;
  m.kind = CellKind::quadrilateral;
  const std::array<double, 3> xs{-widths[0], 0.0, widths[1]};
  const std::array<double, 3> ys{-heights[0], 0.0, heights[1]};
  auto vid = [](int i, int j) { return j * 3 + i; };
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) m.vertices.push_back({xs[i], ys[j], 0.0});
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i) m.cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)});
  add_rect_boundary(m, 2, 2, vid);
  m.finalize();
  return m;
}

}  // namespace lbb
