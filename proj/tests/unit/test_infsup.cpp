#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/Dense>

#include "lbb/fixtures.hpp"
#include "lbb/infsup.hpp"
#include "lbb/unstructure.hpp"

using namespace lbb;

namespace {

Mesh scaled(Mesh m, double lam) {
  for (auto& v : m.vertices)
    for (double& x : v) x *= lam;
  return m;
}

}  // namespace

TEST(Counterexample, InNullspaceOfStructuredP1b) {
  const Mesh m = gen_structured_tri(6, 6);
  const auto c = FECombo::parse("P1b-P1-P1");
  const auto sys = assemble(m, c);
  const Eigen::VectorXd p = global_counterexample(m, c);
  const auto red = reduced_operators(sys);
  EXPECT_LT((SpMat(red.B.transpose()) * p).norm(), 1e-13 * p.norm());
  EXPECT_NEAR(p.dot(sys.Mp * Eigen::VectorXd::Ones(p.size())), 0.0, 1e-14);
}

TEST(Counterexample, RejectsUnlayeredMesh) {
  // x-only perturbations keep the y layers; moving vertices in y breaks them
  const Mesh layered = gen_perturbed(gen_structured_tri(4, 4), 0.05, 1);
  EXPECT_NO_THROW(global_counterexample(layered, FECombo::parse("P1b-P1-P1")));
  EXPECT_THROW(global_counterexample(apply_algorithm1(gen_structured_tri(4, 4), {0.15, Axis::y}),
                                     FECombo::parse("P1b-P1-P1")),
               MeshError);
}

TEST(InfSup, StructuredP1bIsZeroZigzagIsNot) {
  const auto c = FECombo::parse("P1b-P1-P1");
  EXPECT_LT(infsup_constant(gen_structured_tri(8, 8), c).beta, 1e-7);
  EXPECT_GT(infsup_constant(gen_zigzag(8, 8), c).beta, 0.05);
}

TEST(InfSup, InvariantUnderDilation) {
  const Mesh m = gen_perturbed(gen_structured_tri(6, 6), 0.05, 7);
  const auto c = FECombo::parse("P2-P1-P1");
  const double b = infsup_constant(m, c).beta;
  for (double lam : {0.5, 2.0}) EXPECT_NEAR(infsup_constant(scaled(m, lam), c).beta, b, 1e-6 * b);
}

TEST(InfSup, MatchesDenseGeneralizedEigenproblem) {
  const Mesh m = gen_zigzag(4, 4);
  const auto c = FECombo::parse("P2-P1-P1");
  const auto sys = assemble(m, c);
  const auto red = reduced_operators(sys);
  const Eigen::MatrixXd A(red.A), B(red.B), Mp(red.Mp);
  const Eigen::MatrixXd S = B * A.ldlt().solve(B.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Mp);
  // eigenvalue 0 belongs to the constants
  const double beta_dense = std::sqrt(es.eigenvalues()[1]);
  EXPECT_LT(std::abs(es.eigenvalues()[0]), 1e-10);
  const auto r = infsup_constant(sys);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.beta, beta_dense, 1e-6 * beta_dense);
}

TEST(InfSup, ConstantsAreDeflated) {
  const Mesh m = gen_zigzag(5, 5);
  const auto sys = assemble(m, FECombo::parse("P1b-P1-P1"));
  const auto red = reduced_operators(sys);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(sys.num_pressure());
  EXPECT_LT((SpMat(red.B.transpose()) * one).norm(), 1e-14);
  EXPECT_EQ(infsup_constant(sys).deflated, 1);
}

TEST(SpectralNorm, MatchesDenseSvd) {
  const auto sys = assemble(gen_zigzag(4, 4), FECombo::parse("P1b-P1-P1"));
  const Eigen::MatrixXd B(sys.B);
  const double s = Eigen::JacobiSVD<Eigen::MatrixXd>(B).singularValues()[0];
  EXPECT_NEAR(spectral_norm(sys.B), s, 1e-8 * s);
}

TEST(Local, AnalyticPressureIsInNullspace) {
  const auto m = macro_at(gen_structured_tri(2, 2), 4);
  for (const char* c : {"P1b-P1-P1", "P1-P1b-P1", "P2-P1-P1"}) {
    const auto combo = FECombo::parse(c);
    const auto p = analytic_singular_pressure(m, combo);
    ASSERT_TRUE(p.has_value()) << c;
    EXPECT_LT(relative_residual(local_operator(m, combo), *p), 1e-13) << c;
  }
}

TEST(Local, RegularMacroHasNoAnalyticPressure) {
  std::mt19937_64 rng(1);
  const auto m = random_macro_2d(rng, {5, 5, AlignMode::none, Axis::y});
  EXPECT_FALSE(analytic_singular_pressure(m, FECombo::parse("P2-P1-P1")).has_value());
  EXPECT_EQ(local_nullspace(m, FECombo::parse("P2-P1-P1")).dim, 0);
}

TEST(Local, QuadMacroQ2Q1Q1HasOneSpuriousMode) {
  const Mesh q = gen_quad_macro({1.0, 0.7}, {0.6, 1.1});
  const auto m = macro_at(q, 4);
  const auto ns = local_nullspace(m, FECombo::parse("Q2-Q1-Q1"));
  EXPECT_EQ(ns.dim, 1);
  EXPECT_EQ(local_nullspace(m, FECombo::parse("Q2-Q2-Q1")).dim, 0);
  const auto combo = FECombo::parse("Q2-Q1-Q1");
  const auto p = analytic_singular_pressure(m, combo);
  ASSERT_TRUE(p.has_value());
  EXPECT_LT(relative_residual(local_operator(m, combo), *p), 1e-13);
}
