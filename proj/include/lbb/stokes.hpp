#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "lbb/fespace.hpp"
#include "lbb/mesh.hpp"

namespace lbb {

using SpMat = Eigen::SparseMatrix<double>;

/// Discrete Stokes operators. Velocity unknowns are stacked component by
/// component; component k occupies [offset[k], offset[k] + vel[k].ndofs).
struct StokesSystem {
  FECombo combo;
  std::vector<DofMap> vel;
  DofMap pres;
  std::vector<int> offset;  // size dim + 1
  SpMat A;                  // block diagonal of per-component Laplacians
  SpMat B;                  // B(i, j) = integral of psi_i * d_k phi_j
  SpMat Mp;                 // pressure mass matrix
  Eigen::VectorXd rhs;      // velocity load vector
  std::vector<bool> constrained;  // velocity Dirichlet mask
  Eigen::VectorXd bc_values;      // Dirichlet values (read where constrained)

  int num_velocity() const { return offset.back(); }
  int num_pressure() const { return pres.ndofs; }
  std::vector<int> free_velocity() const;
};

/// Assembles A, B, Mp and sets homogeneous Dirichlet conditions on every
/// boundary velocity dof; rhs starts at zero.
StokesSystem assemble(const Mesh& mesh, const FECombo& combo);

using VectorField = std::function<Eigen::Vector3d(const Point&)>;
using ScalarField = std::function<double(const Point&)>;

/// Adds the load (f, phi) for the body force f.
void add_body_force(StokesSystem& sys, const Mesh& mesh, const VectorField& f);

enum class LidVariant { dirichlet_lid, neumann_lid };

/// Lid-driven cavity on a rectangle with tagged boundary facets. Dirichlet:
/// u = 1 on the top (corners stay 0), v = 0 everywhere. Neumann: u is free
/// on the top with unit normal derivative, no-slip elsewhere.
StokesSystem cavity_problem(const Mesh& mesh, const FECombo& combo, LidVariant variant);

struct Solution {
  std::vector<Eigen::VectorXd> velocity;  // one coefficient vector per component
  Eigen::VectorXd pressure;
  double pressure_integral = 0.0;
  double residual = 0.0;         // relative residual of the saddle system
  double divergence_residual = 0.0;  // |B w + eps Mp p| / (|B w| + eps |Mp p| + tiny)
};

/// Solves [[A, -B^T], [-B, -eps Mp]] [w; p] = [f; 0] with a sparse LU
/// factorization and two steps of iterative refinement.
Solution solve_penalized(const StokesSystem& sys, double eps);

/// Symmetric saddle matrix on the free velocity dofs and all pressure dofs.
SpMat saddle_matrix(const StokesSystem& sys, double eps);

/// Restriction to free velocity dofs: A_ff and B_f.
struct ReducedOperators {
  SpMat A;
  SpMat B;
  SpMat Mp;
  std::vector<int> free;
};
ReducedOperators reduced_operators(const StokesSystem& sys);

// --- manufactured solution and errors ------------------------------------

/// Exact solution on the unit square with zero velocity trace and zero mean pressure.
struct ExactSolution {
  std::function<double(const Point&)> u, v, p;
  std::function<Eigen::Vector3d(const Point&)> grad_u, grad_v;
  VectorField f;
};

/// u = sin(ky)(cos kx - 1), v = -u(y, x), p = k (cos ky - cos kx), k = 2 pi.
ExactSolution trig_solution();

struct LevelErrors {
  int n = 0;
  double h = 0.0;       // nominal 1/n
  double h_max = 0.0;   // max cell diameter
  double l2_u = 0.0, h1_u = 0.0, l2_v = 0.0, h1_v = 0.0, l2_p = 0.0;
  double pressure_integral = 0.0;
};

struct ErrorReport {
  FECombo combo;
  std::vector<LevelErrors> levels;
  /// Order between levels k-1 and k for one error column.
  double order(std::size_t k, double LevelErrors::*field) const;
  CsvTable table() const;
};

LevelErrors compute_errors(const Mesh& mesh, const StokesSystem& sys, const Solution& sol,
                           const ExactSolution& ex, int quad_degree = 7);

/// Solves the manufactured problem on each mesh of the family.
ErrorReport convergence_study(const FECombo& combo, const std::vector<Mesh>& meshes,
                              const std::vector<int>& n_values, const ExactSolution& ex,
                              double eps = 1e-10);

}  // namespace lbb
