#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace lbb {

using Point = std::array<double, 3>;

/// Raised for malformed input files. `line` is 1-based, 0 when unknown.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Raised when a mesh violates a structural invariant.
class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CellKind { triangle, tetrahedron, quadrilateral };

std::string to_string(CellKind kind);

struct BoundaryFacet {
  std::array<int, 3> v{-1, -1, -1};  // 2 entries used in 2D, 3 in 3D
  int size = 0;
  int tag = 0;
};

/// Simplicial or rectangular mesh. Cells are stored counterclockwise (2D) or
/// with positive determinant (3D); `finalize()` enforces this.
struct Mesh {
  int dim = 2;
  CellKind kind = CellKind::triangle;
  std::vector<Point> vertices;
  std::vector<std::array<int, 4>> cells;
  std::vector<BoundaryFacet> boundary_facets;

  int verts_per_cell() const { return kind == CellKind::triangle ? 3 : 4; }
  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_cells() const { return cells.size(); }

  /// Signed measure (area / volume) of cell `c` in the stored orientation.
  double signed_measure(std::size_t c) const;
  double measure(std::size_t c) const;
  double diameter(std::size_t c) const;
  Point centroid(std::size_t c) const;

  /// Index checks, orientation repair, and boundary-facet ownership check.
  void finalize();
};

struct MeshMetrics {
  double h = 0.0;
  double min_area = 0.0;
  double shape_ratio = 0.0;  // max over cells of diameter^2 / measure
};

MeshMetrics metrics(const Mesh& mesh);

/// Facets (edges in 2D, faces in 3D) owned by exactly one cell, as sorted tuples.
std::vector<std::array<int, 3>> topological_boundary(const Mesh& mesh);

/// Per-vertex flag: vertex lies on a topological boundary facet.
std::vector<bool> boundary_vertex_mask(const Mesh& mesh);

/// Sorted global edge list, lexicographic by (min, max) vertex index.
std::vector<std::array<int, 2>> mesh_edges(const Mesh& mesh);

/// Local edges of a cell as index pairs into its vertex tuple.
std::vector<std::array<int, 2>> cell_local_edges(CellKind kind);

/// Throws MeshError naming an offending cell pair if the mesh is not
/// conforming (facet shared by more than two cells, or a hanging vertex
/// inside a facet owned by a single cell).
void check_conforming(const Mesh& mesh);

// --- I/O -------------------------------------------------------------------

Mesh load_msh(const std::filesystem::path& path);
Mesh parse_msh(const std::string& text);
void save_msh(const Mesh& mesh, const std::filesystem::path& path);
std::string format_msh(const Mesh& mesh);

/// Named scalar field for VTK output; `on_cells` selects CELL_DATA.
struct Field {
  std::string name;
  std::vector<double> values;
  bool on_cells = false;
};

void save_vtk(const Mesh& mesh, const std::vector<Field>& fields,
              const std::filesystem::path& path);
std::string format_vtk(const Mesh& mesh, const std::vector<Field>& fields);

/// Comma-separated table with a header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row) { rows.push_back(std::move(row)); }
  std::string str() const;
  void save(const std::filesystem::path& path) const;
};

std::string fmt_num(double v);

// --- generators ------------------------------------------------------------

struct Rect {
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
};

/// Boundary tags used by the rectangle generators.
inline constexpr int kTagBottom = 1;
inline constexpr int kTagRight = 2;
inline constexpr int kTagTop = 3;
inline constexpr int kTagLeft = 4;
inline constexpr int kTagZBottom = 5;
inline constexpr int kTagZTop = 6;

/// nx-by-ny rectangles, each split by the diagonal from lower-left to upper-right.
Mesh gen_structured_tri(int nx, int ny, Rect domain = {});

/// Staggered herringbone: column i carries the rows j with i + j even (plus
/// the bottom and top rows), neighbouring columns are zipped together. No
/// interior edge is horizontal; for nx == ny the interior stars are
/// equal-area hexagons with diagonals of slope +-1.
Mesh gen_zigzag(int nx, int ny, Rect domain = {});

/// Random x displacement of interior vertices, clipped so every incident cell
/// keeps at least 10% of its original measure.
Mesh gen_perturbed(const Mesh& base, double amplitude, std::uint64_t seed);

/// Extrudes a triangle mesh into `layers` layers of prisms over [0, height],
/// each split into three tetrahedra by the global vertex-index rule.
Mesh gen_extruded_tet(const Mesh& base2d, int layers, double height);

/// n^3 cubes of the unit cube, each split into six tetrahedra (Kuhn).
Mesh gen_structured_tet(int n);

/// 2x2 rectangular macro-element centred at the origin.
Mesh gen_quad_macro(std::array<double, 2> widths, std::array<double, 2> heights);

/// nx-by-ny axis-aligned rectangles.
Mesh gen_structured_quad(int nx, int ny, Rect domain = {});

}  // namespace lbb
