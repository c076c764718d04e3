#include "lbb/infsup.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace lbb {

namespace {

// Orthonormal basis of the Euclidean complement of v.
Eigen::MatrixXd complement_basis(const Eigen::VectorXd& v) {
  const int n = static_cast<int>(v.size());
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(v);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  return Q.rightCols(n - 1);
}

// Coordinate along the split axis and the axis the enriched component acts on.
struct AxisPair {
  int split;    // pressure varies along this coordinate (y for u-enriched combos)
  int along;    // derivative tested by the enriched component
};

std::optional<AxisPair> axis_for(const FECombo& c) {
  if (c.dim() != 2) return std::nullopt;
  const Space u = c.velocity[0], v = c.velocity[1];
  const bool u_rich = (u == Space::P1b || u == Space::P2 || u == Space::Q2);
  const bool v_rich = (v == Space::P1b || v == Space::P2 || v == Space::Q2);
  if (u_rich && !v_rich) return AxisPair{1, 0};
  if (v_rich && !u_rich) return AxisPair{0, 1};
  return std::nullopt;
}

// p = c * s on the positive side of the split line, c~ * s on the negative
// side, weighted by the side areas so the tested component integrates to zero.
Eigen::VectorXd two_sided_profile(const MacroElement& m, int split) {
  const auto& p = m.patch.vertices;
  const double s0 = p[0][split];
  double plus = 0.0, minus = 0.0;
  for (std::size_t c = 0; c < m.patch.num_cells(); ++c) {
    if (m.patch.centroid(c)[split] > s0)
      plus += m.patch.measure(c);
    else
      minus += m.patch.measure(c);
  }
  const double mean = 0.5 * (plus + minus);
  Eigen::VectorXd out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double s = p[i][split] - s0;
    out[i] = s > 0 ? s * mean / plus : -s * mean / minus;
  }
  return out;
}

}  // namespace

LocalOperator local_operator(const MacroElement& m, const FECombo& combo) {
  const auto sys = assemble(m.patch, combo);
  const auto red = reduced_operators(sys);
  if (red.free.empty()) throw std::logic_error("macro-element has no interior velocity dofs");
  LocalOperator op;
  op.Bt = Eigen::MatrixXd(red.B).transpose();
  op.Mp = Eigen::MatrixXd(red.Mp);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(op.Bt);
  op.norm = svd.singularValues()(0);
  return op;
}

LocalNullspace local_nullspace(const MacroElement& m, const FECombo& combo, double floor) {
  const auto op = local_operator(m, combo);
  const int np = static_cast<int>(op.Bt.cols());
  LocalNullspace out;
  out.interior_velocity_dofs = static_cast<int>(op.Bt.rows());
  out.pressure_dofs = np;
  const Eigen::MatrixXd Q = complement_basis(op.Mp * Eigen::VectorXd::Ones(np));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(op.Bt * Q, Eigen::ComputeFullV);
  out.singular_values = svd.singularValues();
  const double smax = out.singular_values.size() ? out.singular_values(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < out.singular_values.size(); ++i) rank += out.singular_values(i) > floor * smax;
  out.dim = (np - 1) - rank;
  const Eigen::MatrixXd& V = svd.matrixV();
  for (int j = rank; j < np - 1; ++j) out.basis.push_back(Q * V.col(j));
  return out;
}

double relative_residual(const LocalOperator& op, const Eigen::VectorXd& p) {
  return (op.Bt * p).norm() / (op.norm * p.norm());
}

std::optional<Eigen::VectorXd> analytic_singular_pressure(const MacroElement& m, const FECombo& combo) {
  const auto axes = axis_for(combo);
  if (!axes) return std::nullopt;
  const int split = axes->split, along = axes->along;

  if (m.patch.kind == CellKind::quadrilateral) {
    // Q2 on the enriched component, Q1 elsewhere: the macro is always split
    if (combo.pressure != Space::Q1) return std::nullopt;
    const Space rich = combo.velocity[along];
    const Space poor = combo.velocity[split];
    if (rich != Space::Q2 || poor != Space::Q1) return std::nullopt;
    return two_sided_profile(m, split);
  }

  const auto verdict = predict_regularity(m, combo);
  if (verdict.predicted == Verdict::regular) return std::nullopt;
  if (verdict.reason == Reason::two_aligned) return two_sided_profile(m, split);

  // even n_V with vanishing S: per cell p = b_j * t + c_j * s with
  // b_j = (-1)^j beta / alpha_j, t along the enriched derivative, s along the split
  const int n = m.n_v();
  const auto& p = m.patch.vertices;
  std::vector<double> dt(n), ds(n);
  for (int k = 0; k < n; ++k) {
    dt[k] = p[k + 1][along] - p[0][along];
    ds[k] = p[k + 1][split] - p[0][split];
  }
  auto sign = [](int j) { return j % 2 ? -1.0 : 1.0; };
  // unknowns (c_0..c_{n-1}, beta); continuity across edge k (cells k-1, k) and zero tested mean
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (int k = 0; k < n; ++k) {
    const int km = (k + n - 1) % n;
    L(k, k) += ds[k];
    L(k, km) -= ds[k];
    L(k, n) = (sign(k) / m.areas[k] - sign(km) / m.areas[km]) * dt[k];
  }
  for (int j = 0; j < n; ++j) L(n, j) = m.areas[j];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(L, Eigen::ComputeFullV);
  Eigen::VectorXd z = svd.matrixV().col(n);
  if (std::abs(z[n]) < 1e-300) return std::nullopt;
  z /= z[n];
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n + 1);
  for (int k = 0; k < n; ++k) {
    // average of the two adjacent cells, equal when the system is consistent
    const int km = (k + n - 1) % n;
    const double from_k = sign(k) / m.areas[k] * dt[k] + z[k] * ds[k];
    const double from_km = sign(km) / m.areas[km] * dt[k] + z[km] * ds[k];
    out[k + 1] = 0.5 * (from_k + from_km);
  }
  return out;
}

Eigen::VectorXd global_counterexample(const Mesh& mesh, const FECombo& combo) {
  if (mesh.kind != CellKind::triangle) throw MeshError("global_counterexample: triangle mesh required");
  const auto axes = axis_for(combo);
  if (!axes || combo.pressure != Space::P1)
    throw std::invalid_argument("global_counterexample: unsupported combo " + combo.name());
  const int s = axes->split;

  std::vector<double> levels;
  for (const auto& p : mesh.vertices) levels.push_back(p[s]);
  std::sort(levels.begin(), levels.end());
  const double span = levels.back() - levels.front();
  const double tol = 1e-10 * span;
  levels.erase(std::unique(levels.begin(), levels.end(), [tol](double a, double b) { return b - a <= tol; }),
               levels.end());
  const int nl = static_cast<int>(levels.size()) - 1;
  if (nl < 1) throw MeshError("global_counterexample: degenerate mesh");
  const double h = span / nl;
  for (int i = 0; i <= nl; ++i)
    if (std::abs(levels[i] - (levels.front() + i * h)) > tol)
      throw MeshError("global_counterexample: layers are not uniformly spaced");

  auto level_of = [&](double x) {
    const int i = static_cast<int>(std::lround((x - levels.front()) / h));
    if (i < 0 || i > nl || std::abs(levels.front() + i * h - x) > tol) return -1;
    return i;
  };
  std::vector<int> lev(mesh.num_vertices());
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    lev[v] = level_of(mesh.vertices[v][s]);
    if (lev[v] < 0) throw MeshError("global_counterexample: vertex " + std::to_string(v) + " is off the layer lines");
  }
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    int lo = nl, hi = 0;
    for (int i = 0; i < 3; ++i) {
      lo = std::min(lo, lev[mesh.cells[c][i]]);
      hi = std::max(hi, lev[mesh.cells[c][i]]);
    }
    if (hi - lo != 1) throw MeshError("global_counterexample: cell " + std::to_string(c) + " spans several layers");
  }
  // layer i (1-based) carries (-1)^i (s - r_i); at level line j this is (-1)^j h / 2
  Eigen::VectorXd p(mesh.num_vertices());
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) p[v] = (lev[v] % 2 ? -0.5 : 0.5) * h;
  return p;
}

double spectral_norm(const SpMat& B, int iterations) {
  if (B.cols() == 0 || B.rows() == 0) return 0.0;
  Eigen::VectorXd x = Eigen::VectorXd::Ones(B.cols());
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  for (int i = 0; i < x.size(); ++i) x[i] = u(rng);
  x.normalize();
  double s = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd y = B.transpose() * (B * x);
    const double ny = y.norm();
    if (ny == 0.0) return 0.0;
    const double next = std::sqrt(ny);
    x = y / ny;
    if (std::abs(next - s) <= 1e-14 * next) {
      s = next;
      break;
    }
    s = next;
  }
  return s;
}

InfSupResult infsup_constant(const Mesh& mesh, const FECombo& combo, const InfSupOptions& opt) {
  return infsup_constant(assemble(mesh, combo), opt);
}

InfSupResult infsup_constant(const StokesSystem& sys, const InfSupOptions& opt) {
  const auto red = reduced_operators(sys);
  const int nf = static_cast<int>(red.free.size());
  const int np = sys.num_pressure();
  const SpMat& M = red.Mp;

  // quasi-definite [[A, B^T], [B, -shift M]] gives z = (S + shift M)^{-1} r
  std::vector<Eigen::Triplet<double>> t;
  for (int k = 0; k < red.A.outerSize(); ++k)
    for (SpMat::InnerIterator it(red.A, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  for (int k = 0; k < red.B.outerSize(); ++k)
    for (SpMat::InnerIterator it(red.B, k); it; ++it) {
      t.emplace_back(nf + it.row(), it.col(), it.value());
      t.emplace_back(it.col(), nf + it.row(), it.value());
    }
  for (int k = 0; k < M.outerSize(); ++k)
    for (SpMat::InnerIterator it(M, k); it; ++it) t.emplace_back(nf + it.row(), nf + it.col(), -opt.shift * it.value());
  SpMat K(nf + np, nf + np);
  K.setFromTriplets(t.begin(), t.end());
  K.makeCompressed();
  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(K);
  lu.factorize(K);
  if (lu.info() != Eigen::Success) throw std::runtime_error("infsup: factorization failed: " + lu.lastErrorMessage());
  Eigen::SimplicialLDLT<SpMat> Achol(red.A);
  if (Achol.info() != Eigen::Success) throw std::runtime_error("infsup: velocity block is not positive definite");

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(np);
  const Eigen::VectorXd M1 = M * ones;
  const double one_norm2 = ones.dot(M1);
  auto deflate = [&](Eigen::VectorXd& x) { x -= (M1.dot(x) / one_norm2) * ones; };
  auto mdot = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.dot(M * b); };
  auto apply = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf + np);
    rhs.tail(np) = -(M * x);
    Eigen::VectorXd sol = lu.solve(rhs);
    Eigen::VectorXd z = sol.tail(np);
    deflate(z);
    return z;
  };

  const int nmax = std::min(np - 1, opt.max_iter);
  const int k = std::min(opt.k, nmax);
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd v(np);
  for (int i = 0; i < np; ++i) v[i] = u(rng);
  deflate(v);
  v /= std::sqrt(mdot(v, v));

  std::vector<Eigen::VectorXd> V{v};
  std::vector<double> alpha, beta;
  InfSupResult res;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
  int m = 0;
  for (int j = 0; j < nmax; ++j) {
    Eigen::VectorXd w = apply(V[j]);
    const double a = mdot(w, V[j]);
    alpha.push_back(a);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : V) w -= mdot(w, q) * q;
    const double b = std::sqrt(std::max(0.0, mdot(w, w)));
    m = j + 1;
    // Ritz values of the tridiagonal matrix
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) T(i, i) = alpha[i];
    for (int i = 0; i + 1 < m; ++i) T(i, i + 1) = T(i + 1, i) = beta[i];
    tri.compute(T);
    bool done = m >= k;
    for (int i = 0; i < std::min(k, m) && done; ++i) {
      const int idx = m - 1 - i;
      const double theta = tri.eigenvalues()(idx);
      if (std::abs(b * tri.eigenvectors()(m - 1, idx)) > opt.tol * std::abs(theta)) done = false;
    }
    if (done || b <= 1e-14 * std::abs(a) || j + 1 == nmax) {
      res.converged = done || b <= 1e-14 * std::abs(a);
      break;
    }
    beta.push_back(b);
    V.push_back(w / b);
  }
  res.iterations = m;

  // Ritz vectors, refined by the Rayleigh quotient of B A^-1 B^T
  Eigen::MatrixXd Vm(np, m);
  for (int i = 0; i < m; ++i) Vm.col(i) = V[i];
  for (int i = 0; i < std::min(k, m); ++i) {
    const int idx = m - 1 - i;
    const Eigen::VectorXd y = Vm * tri.eigenvectors().col(idx);
    const Eigen::VectorXd Bty = red.B.transpose() * y;
    const Eigen::VectorXd x = Achol.solve(Bty);
    res.spectrum.push_back(Bty.dot(x) / mdot(y, y));
  }
  std::sort(res.spectrum.begin(), res.spectrum.end());
  const double lmin = res.spectrum.empty() ? 0.0 : res.spectrum.front();
  res.beta = lmin > opt.floor ? std::sqrt(lmin) : 0.0;
  return res;
}

}  // namespace lbb
