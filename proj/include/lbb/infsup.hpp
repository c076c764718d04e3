#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lbb/macroelement.hpp"
#include "lbb/stokes.hpp"

namespace lbb {

/// Local divergence operator of a macro-element: B_M^T restricted to
/// velocity dofs with zero trace on the macro boundary.
struct LocalOperator {
  Eigen::MatrixXd Bt;  // interior velocity dofs x pressure dofs
  Eigen::MatrixXd Mp;
  double norm = 0.0;   // spectral norm of Bt
};

LocalOperator local_operator(const MacroElement& m, const FECombo& combo);

inline constexpr double kNullspaceFloor = 1e-10;

struct LocalNullspace {
  int dim = 0;  // modulo constants
  std::vector<Eigen::VectorXd> basis;  // Mp-orthogonal to constants
  Eigen::VectorXd singular_values;     // of Bt on the complement of constants, descending
  int interior_velocity_dofs = 0;
  int pressure_dofs = 0;
};

LocalNullspace local_nullspace(const MacroElement& m, const FECombo& combo, double floor = kNullspaceFloor);

/// |Bt p| / (|Bt| |p|).
double relative_residual(const LocalOperator& op, const Eigen::VectorXd& p);

/// Explicit nullspace pressure (coefficients on the patch pressure dofs)
/// for singular macros; empty when the macro is predicted regular or the
/// combo has no closed form.
std::optional<Eigen::VectorXd> analytic_singular_pressure(const MacroElement& m, const FECombo& combo);

/// Layer-alternating pressure on a mesh whose vertices sit on uniformly
/// spaced lines y = const (P1b-P1-P1) or x = const (P1-P1b-P1), with zero
/// mean. Throws MeshError if the mesh is not layered that way.
Eigen::VectorXd global_counterexample(const Mesh& mesh, const FECombo& combo);

struct InfSupOptions {
  int k = 5;               // eigenvalues to report
  double shift = 1e-8;     // quasi-definite regularization
  double tol = 1e-8;       // relative Ritz residual
  int max_iter = 400;
  double floor = 1e-13;    // eigenvalues at or below are treated as zero
  std::uint64_t seed = 42;
};

struct InfSupResult {
  double beta = 0.0;
  std::vector<double> spectrum;  // smallest eigenvalues after deflation, ascending
  int deflated = 1;
  int iterations = 0;
  bool converged = false;
};

/// Smallest eigenvalues of B A^-1 B^T q = lambda Mp q on pressures
/// Mp-orthogonal to constants, velocities vanishing on the boundary.
InfSupResult infsup_constant(const Mesh& mesh, const FECombo& combo, const InfSupOptions& opt = {});
InfSupResult infsup_constant(const StokesSystem& sys, const InfSupOptions& opt = {});

/// Largest singular value of a sparse matrix by power iteration.
double spectral_norm(const SpMat& B, int iterations = 200);

}  // namespace lbb
