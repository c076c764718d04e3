#pragma once

#include <string>
#include <vector>

#include "lbb/fespace.hpp"
#include "lbb/mesh.hpp"

namespace lbb {

/// Star of one interior vertex. In 2D the ring is counterclockwise and
/// starts at the smallest angle; for triangles cells[i] is the cell
/// {center, ring[i], ring[i+1]}. In 3D the ring is sorted by index.
struct MacroElement {
  int center = -1;
  std::vector<int> ring_vertices;
  std::vector<int> cells;
  std::vector<double> angles;  // 2D: direction of center->ring[i] in [0, 2pi)
  std::vector<double> areas;   // measure of cells[i]
  /// Local copy of the star: vertex 0 is the center, vertex i+1 is ring[i],
  /// cell i is cells[i].
  Mesh patch;

  int n_v() const { return static_cast<int>(ring_vertices.size()); }
  double diameter() const;
};

/// One macro-element per interior vertex, ordered by vertex index. Cells
/// with no interior vertex are reported through `warnings`.
std::vector<MacroElement> build_macroelements(const Mesh& mesh, std::vector<std::string>* warnings = nullptr);

/// Triangle star around `center` with the given ring points (any order;
/// angular gaps must stay below pi).
MacroElement make_macro_2d(const Point& center, const std::vector<Point>& ring);

/// Macro-element built from a mesh whose only interior vertex is `center`.
MacroElement macro_at(const Mesh& mesh, int center);

struct StructureFlags {
  bool x_structured = false;
  bool y_structured = false;
  bool z_structured = false;
  double min_sin = 0.0;  // second smallest |sin sigma_i|
  double min_cos = 0.0;
  int aligned_count_x = 0;  // ring vertices with the same x as the center
  int aligned_count_y = 0;  // ring vertices with the same y as the center
  int semi_plane_count = 0;
  bool semi_planes_aligned = false;
};

inline constexpr double kAlignmentTol = 1e-9;
inline constexpr double kSTol = 1e-10;

StructureFlags classify_2d(const MacroElement& m, double alignment_tol = kAlignmentTol);

enum class Axis { x, y, z };

/// Alternating cotangent-area sum. Axis y uses cot = dx/dy (u enriched);
/// axis x uses dy/dx. Throws std::domain_error if a ring edge is aligned
/// with the chosen axis' normal direction.
double s_condition(const MacroElement& m, Axis axis = Axis::y);

/// Sum of reciprocal cell areas; the scale for the S test.
double s_scale(const MacroElement& m);

enum class Verdict { regular, singular };

enum class Reason {
  two_aligned,
  one_aligned,
  no_aligned,
  odd_nv,
  even_nv_s_nonzero,
  even_nv_s_zero,
  x_split_3d,
  no_split_3d,
  semiplane_case1,
  semiplane_case2,
  semiplane_case2_aligned,
  semiplane_case3,
};

std::string to_string(Verdict v);
std::string to_string(Reason r);

struct RegularityVerdict {
  Verdict predicted = Verdict::regular;
  Reason reason = Reason::no_aligned;
  double s_value = 0.0;  // |S| / scale where evaluated, else 0
  bool s_evaluated = false;
};

/// Supported: P1b-P1-P1, P1-P1b-P1, P2-P1-P1, P1-P2-P1.
RegularityVerdict predict_regularity(const MacroElement& m, const FECombo& combo, double tol = kSTol,
                                     double alignment_tol = kAlignmentTol);

/// 3D flags. Semi-planes are taken around the line through the center
/// parallel to `vertical`.
StructureFlags classify_3d(const MacroElement& m, double alignment_tol = kAlignmentTol, Axis vertical = Axis::z);

/// Supported: two bubble components (the remaining axis is the split
/// direction) or one bubble component (semi-planes around that axis), all
/// with P1 pressure.
RegularityVerdict predict_regularity_3d(const MacroElement& m, const FECombo& combo,
                                        double alignment_tol = kAlignmentTol);

/// Structure report, one row per macro, verdict columns per combo.
CsvTable structure_report(const Mesh& mesh, const std::vector<MacroElement>& macros,
                          const std::vector<FECombo>& combos);

}  // namespace lbb
