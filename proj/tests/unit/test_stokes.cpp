#include <gtest/gtest.h>

#include <cmath>

#include "lbb/stokes.hpp"

using namespace lbb;

TEST(Assemble, TwoTriangleSquare) {
  const Mesh m = gen_structured_tri(1, 1);
  const auto sys = assemble(m, FECombo::parse("P1-P1-P1"));
  EXPECT_EQ(sys.B.rows(), 4);
  EXPECT_EQ(sys.B.cols(), 8);
  // constant pressure against any velocity: the divergence theorem on the
  // assembled rows gives zero for fields vanishing on the boundary
  const Eigen::RowVectorXd ones = Eigen::RowVectorXd::Ones(4) * sys.B;
  for (int j : sys.free_velocity()) EXPECT_NEAR(ones[j], 0.0, 1e-15);
}

TEST(Assemble, ConstantPressureRowVanishesOnInteriorDofs) {
  for (const char* c : {"P1b-P1-P1", "P2-P1-P1", "P1b-P1b-P1"}) {
    const Mesh m = gen_perturbed(gen_structured_tri(5, 5), 0.04, 2);
    const auto sys = assemble(m, FECombo::parse(c));
    const Eigen::RowVectorXd row = Eigen::RowVectorXd::Ones(sys.num_pressure()) * sys.B;
    for (int j : sys.free_velocity()) EXPECT_NEAR(row[j], 0.0, 1e-14) << c;
  }
}

TEST(Assemble, StiffnessAnnihilatesConstants) {
  const Mesh m = gen_zigzag(4, 4);
  const auto sys = assemble(m, FECombo::parse("P2-P1-P1"));
  // P2 and P1 interpolate constants with unit vertex and edge coefficients
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(sys.num_velocity());
  EXPECT_LT((sys.A * one).norm(), 1e-12);
}

TEST(Assemble, BubbleColumnMatchesMeanGradientIdentity) {
  // for linear p: integral of p d_x(bubble) = -(d_x p) integral of bubble
  const Mesh m = gen_perturbed(gen_structured_tri(2, 2), 0.1, 4);
  const auto sys = assemble(m, FECombo::parse("P1b-P1-P1"));
  const auto dm = build_dofmap(m, Space::P1b);
  Eigen::VectorXd p(sys.num_pressure());
  for (std::size_t v = 0; v < m.num_vertices(); ++v) p[v] = 0.3 + 2 * m.vertices[v][0] - m.vertices[v][1];
  const Eigen::VectorXd bt = sys.B.transpose() * p;
  for (std::size_t c = 0; c < m.num_cells(); ++c) {
    const int bubble = dm.dofs(c)[3];
    const double bubble_integral = 9.0 / 20.0 * m.measure(c);
    EXPECT_NEAR(bt[sys.offset[0] + bubble], -2.0 * bubble_integral, 1e-13);
  }
}

TEST(Saddle, Symmetric) {
  const Mesh m = gen_perturbed(gen_structured_tri(4, 4), 0.05, 9);
  const auto sys = cavity_problem(m, FECombo::parse("P1b-P1-P1"), LidVariant::dirichlet_lid);
  const SpMat K = saddle_matrix(sys, 1e-10);
  const SpMat D = K - SpMat(K.transpose());
  EXPECT_LE(D.norm(), 1e-14 * K.norm());
}

TEST(Solve, ZeroDataGivesZeroSolution) {
  const Mesh m = gen_structured_tri(3, 3);
  const auto sys = assemble(m, FECombo::parse("P1b-P1-P1"));
  const auto sol = solve_penalized(sys, 1e-10);
  EXPECT_EQ(sol.velocity[0].norm(), 0.0);
  EXPECT_EQ(sol.pressure.norm(), 0.0);
}

TEST(Solve, RejectsNonPositiveEps) {
  const auto sys = assemble(gen_structured_tri(2, 2), FECombo::parse("P1b-P1-P1"));
  EXPECT_THROW(solve_penalized(sys, 0.0), std::invalid_argument);
}

TEST(Solve, DivergenceBalanceAndGalerkinOrthogonality) {
  const Mesh m = gen_perturbed(gen_structured_tri(6, 6), 0.04, 3);
  const auto ex = trig_solution();
  auto sys = assemble(m, FECombo::parse("P1b-P1-P1"));
  add_body_force(sys, m, ex.f);
  const double eps = 1e-10;
  const auto sol = solve_penalized(sys, eps);
  EXPECT_LT(sol.residual, 1e-12);
  Eigen::VectorXd w(sys.num_velocity());
  for (int k = 0; k < 2; ++k) w.segment(sys.offset[k], sys.offset[k + 1] - sys.offset[k]) = sol.velocity[k];
  const Eigen::VectorXd bal = sys.B * w + eps * (sys.Mp * sol.pressure);
  EXPECT_LE(bal.norm(), 1e-10 * (sys.B * w).norm() + 1e-14);
  const Eigen::VectorXd r = sys.A * w - sys.B.transpose() * sol.pressure - sys.rhs;
  for (int j : sys.free_velocity()) EXPECT_LE(std::abs(r[j]), 1e-10 * sys.rhs.norm());
}

TEST(Cavity, DirichletLidValues) {
  const Mesh m = gen_structured_tri(4, 4);
  const auto sys = cavity_problem(m, FECombo::parse("P1b-P1-P1"), LidVariant::dirichlet_lid);
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    const auto& x = m.vertices[v];
    const bool top = x[1] == 1.0, side = x[0] == 0.0 || x[0] == 1.0;
    ASSERT_TRUE(sys.constrained[sys.offset[0] + v] || !(top || side || x[1] == 0.0));
    if (top && !side) EXPECT_EQ(sys.bc_values[sys.offset[0] + v], 1.0);
    if (top && side) EXPECT_EQ(sys.bc_values[sys.offset[0] + v], 0.0);
    if (sys.constrained[sys.offset[1] + v]) EXPECT_EQ(sys.bc_values[sys.offset[1] + v], 0.0);
  }
}

TEST(Cavity, NeumannLidLoadIsEdgeIntegral) {
  const Mesh m = gen_structured_tri(4, 4);
  const auto sys = cavity_problem(m, FECombo::parse("P1b-P1-P1"), LidVariant::neumann_lid);
  double total = 0.0;
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    if (m.vertices[v][1] != 1.0) continue;
    // corners belong to the no-slip sides and carry no load
    const bool corner = m.vertices[v][0] == 0.0 || m.vertices[v][0] == 1.0;
    EXPECT_NEAR(sys.rhs[sys.offset[0] + v], corner ? 0.0 : 0.25, 1e-14);
    total += sys.rhs[sys.offset[0] + v];
  }
  EXPECT_NEAR(total, 0.75, 1e-14);
  // no-slip sides keep their corner dofs fixed
  EXPECT_TRUE(sys.constrained[sys.offset[0] + 24]);
  EXPECT_FALSE(sys.constrained[sys.offset[0] + 22]);
}

TEST(Cavity, MissingTagsRejected) {
  Mesh m = gen_structured_tri(2, 2);
  for (auto& f : m.boundary_facets) f.tag = 0;
  EXPECT_THROW(cavity_problem(m, FECombo::parse("P1b-P1-P1"), LidVariant::dirichlet_lid), MeshError);
}

TEST(Manufactured, ForcingMatchesFiniteDifferences) {
  const auto ex = trig_solution();
  const double h = 1e-4;
  for (const Point& x : {Point{0.3, 0.7, 0}, Point{0.81, 0.12, 0}}) {
    auto lap = [&](const std::function<double(const Point&)>& f) {
      return (f({x[0] + h, x[1], 0}) + f({x[0] - h, x[1], 0}) + f({x[0], x[1] + h, 0}) + f({x[0], x[1] - h, 0}) -
              4 * f(x)) / (h * h);
    };
    const double px = (ex.p({x[0] + h, x[1], 0}) - ex.p({x[0] - h, x[1], 0})) / (2 * h);
    const double py = (ex.p({x[0], x[1] + h, 0}) - ex.p({x[0], x[1] - h, 0})) / (2 * h);
    const auto f = ex.f(x);
    EXPECT_NEAR(f[0], -lap(ex.u) + px, 1e-4 * std::abs(f[0]) + 1e-4);
    EXPECT_NEAR(f[1], -lap(ex.v) + py, 1e-4 * std::abs(f[1]) + 1e-4);
    // divergence free
    const double div = (ex.u({x[0] + h, x[1], 0}) - ex.u({x[0] - h, x[1], 0})) / (2 * h) +
                       (ex.v({x[0], x[1] + h, 0}) - ex.v({x[0], x[1] - h, 0})) / (2 * h);
    EXPECT_NEAR(div, 0.0, 1e-6);
  }
}

TEST(Manufactured, ZeroTraceAndMean) {
  const auto ex = trig_solution();
  for (double t : {0.0, 0.25, 0.6, 1.0}) {
    EXPECT_NEAR(ex.u({t, 0, 0}), 0.0, 1e-14);
    EXPECT_NEAR(ex.u({0, t, 0}), 0.0, 1e-14);
    EXPECT_NEAR(ex.v({t, 1, 0}), 0.0, 1e-14);
    EXPECT_NEAR(ex.v({1, t, 0}), 0.0, 1e-14);
  }
}

TEST(Convergence, InterpolationOracleOrders) {
  // errors of the nodal interpolant of the exact solution shrink at the
  // interpolation orders; the finite element errors match them
  const auto ex = trig_solution();
  std::vector<Mesh> ms;
  std::vector<int> ns;
  for (int n : {8, 16, 32}) {
    ms.push_back(gen_structured_tri(n, n));
    ns.push_back(n);
  }
  const auto rep = convergence_study(FECombo::parse("P2-P2-P1"), ms, ns, ex);
  EXPECT_NEAR(rep.order(2, &LevelErrors::l2_u), 3.0, 0.3);
  EXPECT_NEAR(rep.order(2, &LevelErrors::h1_u), 2.0, 0.2);
  EXPECT_NEAR(rep.order(2, &LevelErrors::l2_p), 2.0, 0.4);
  EXPECT_EQ(rep.table().rows.size(), 3u);
}

TEST(Convergence, StablePairPressureImprovesWhileStructuredStagnates) {
  const auto ex = trig_solution();
  std::vector<Mesh> zig, str;
  std::vector<int> ns;
  for (int n : {8, 16, 32}) {
    zig.push_back(gen_zigzag(n, n));
    str.push_back(gen_structured_tri(n, n));
    ns.push_back(n);
  }
  const auto c = FECombo::parse("P1b-P1-P1");
  const auto good = convergence_study(c, zig, ns, ex), bad = convergence_study(c, str, ns, ex);
  for (std::size_t k = 1; k < ns.size(); ++k)
    EXPECT_LT(good.levels[k].l2_p, 1.2 * good.levels[k - 1].l2_p);
  EXPECT_GT(bad.levels.back().l2_p, 0.5 * bad.levels.front().l2_p);
}
