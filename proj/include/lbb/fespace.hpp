#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lbb/mesh.hpp"

namespace lbb {

enum class Space { P0, P1, P1b, P2, Q1, Q2 };

std::string to_string(Space s);
Space parse_space(const std::string& s);  // case-insensitive, throws std::invalid_argument
inline bool is_continuous(Space s) { return s != Space::P0; }
bool supports(Space s, CellKind kind);

/// Per-component velocity spaces plus the pressure space.
struct FECombo {
  std::vector<Space> velocity;
  Space pressure = Space::P1;

  int dim() const { return static_cast<int>(velocity.size()); }
  /// Canonical name, e.g. "P1b-P1-P1" (velocity components then pressure).
  std::string name() const;
  /// Accepts "p1b-p1:p1" (pressure after the colon) or "P1b-P1-P1" (last token is pressure).
  static FECombo parse(const std::string& text);
  bool operator==(const FECombo&) const = default;
};

/// Number of local shape functions of `s` on a cell of `kind`.
int local_dofs(Space s, CellKind kind);

/// Reference cells: triangle (0,0),(1,0),(0,1); tetrahedron unit corner
/// simplex; quadrilateral [-1,1]^2 with corners listed counterclockwise
/// from (-1,-1). Local dof order: vertices, then edges (cell_local_edges
/// order), then the cell-interior dof.
struct BasisEval {
  std::vector<double> values;
  std::vector<Eigen::Vector3d> grads;  // reference-coordinate gradients
};

BasisEval eval_basis(Space s, CellKind kind, const Eigen::Vector3d& ref);

/// Reference coordinates of the local dof nodes.
std::vector<Eigen::Vector3d> dof_nodes(Space s, CellKind kind);

/// Points are reference coordinates, weights sum to one.
struct QuadratureRule {
  std::vector<Eigen::Vector3d> points;
  std::vector<double> weights;
  int exact_degree = 0;
};

/// Triangle: 1 vertex rule, 2 edge-midpoint rule, 3..5 seven-point rule,
/// higher degrees Grundmann-Moeller. Tetrahedron: 1 vertex rule, else
/// Grundmann-Moeller. Quadrilateral: 1 trapezoidal, else tensor Gauss.
QuadratureRule quadrature(CellKind kind, int exact_degree);

/// Gauss-Legendre rule on [0, 1]; points use the first coordinate.
QuadratureRule quadrature_line(int exact_degree);

/// Affine map from the reference cell (quads must be parallelograms).
struct CellMap {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Matrix3d J = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d JinvT = Eigen::Matrix3d::Identity();
  double measure = 0.0;
  int dim = 2;

  Eigen::Vector3d to_physical(const Eigen::Vector3d& ref) const { return origin + J * ref; }
  Eigen::Vector3d grad(const Eigen::Vector3d& ref_grad) const { return JinvT * ref_grad; }
};

CellMap cell_map(const Mesh& mesh, std::size_t cell);

struct DofMap {
  Space space = Space::P1;
  CellKind kind = CellKind::triangle;
  int ndofs = 0;
  int per_cell = 0;
  std::vector<int> cell_dofs;  // per_cell entries per cell
  std::vector<Point> coords;
  std::vector<int> boundary;   // sorted
  std::vector<bool> on_boundary;

  const int* dofs(std::size_t cell) const { return cell_dofs.data() + cell * per_cell; }
};

DofMap build_dofmap(const Mesh& mesh, Space s);

/// Nodal interpolant. Cell-interior bubble coefficients are chosen so the
/// interpolant matches f at the barycentre.
Eigen::VectorXd interpolate(const Mesh& mesh, const DofMap& dm,
                            const std::function<double(const Point&)>& f);

/// Value and physical gradient of a finite element function at a reference point.
std::pair<double, Eigen::Vector3d> eval_function(const Mesh& mesh, const DofMap& dm,
                                                 const Eigen::VectorXd& coef, std::size_t cell,
                                                 const Eigen::Vector3d& ref);

}  // namespace lbb
