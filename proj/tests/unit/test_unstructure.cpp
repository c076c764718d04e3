#include <gtest/gtest.h>

#include <cmath>

#include "lbb/unstructure.hpp"

using namespace lbb;

TEST(Verify, StructuredMeshFailsEverywhere) {
  const Mesh m = gen_structured_tri(6, 6);
  const auto rep = verify_uniform(m, {0.15, Axis::y});
  EXPECT_FALSE(rep.pass);
  EXPECT_EQ(rep.offending.size(), 25u);
  EXPECT_NEAR(rep.min_second_offset, 0.0, 1e-15);
}

TEST(Verify, ZigzagPassesForY) {
  EXPECT_TRUE(verify_uniform(gen_zigzag(6, 6), {0.15, Axis::y}).pass);
  EXPECT_FALSE(verify_uniform(gen_zigzag(6, 6), {0.15, Axis::x}).pass);
}

class Apply : public ::testing::TestWithParam<Axis> {};

TEST_P(Apply, ProducesUniformMeshWithBoundedMoves) {
  const Axis ax = GetParam();
  const Mesh in = gen_perturbed(gen_structured_tri(10, 10), 0.02, 5);
  UnstructureConfig cfg{0.15, ax};
  cfg.h = metrics(in).h;
  UnstructureLog log;
  const Mesh out = apply_algorithm1(in, cfg, &log);
  EXPECT_TRUE(verify_uniform(out, cfg).pass);
  EXPECT_GE(log.passes, 1);
  EXPECT_GT(log.moves, 0);
  const int k = ax == Axis::x ? 0 : 1;
  const auto bmask = boundary_vertex_mask(in);
  for (std::size_t v = 0; v < in.num_vertices(); ++v) {
    EXPECT_EQ(out.vertices[v][1 - k], in.vertices[v][1 - k]);
    if (bmask[v]) EXPECT_EQ(out.vertices[v], in.vertices[v]);
    EXPECT_LE(std::abs(out.vertices[v][k] - in.vertices[v][k]), 2 * cfg.h_r() * (1 + 1e-12));
  }
  for (std::size_t c = 0; c < out.num_cells(); ++c) EXPECT_GT(out.signed_measure(c), 0.0);
  EXPECT_EQ(out.cells, in.cells);
}

TEST_P(Apply, UniformInputIsFixpoint) {
  const Axis ax = GetParam();
  UnstructureConfig cfg{0.15, ax};
  const Mesh in = gen_structured_tri(8, 8);
  cfg.h = metrics(in).h;
  const Mesh once = apply_algorithm1(in, cfg);
  UnstructureLog log;
  const Mesh twice = apply_algorithm1(once, cfg, &log);
  EXPECT_EQ(log.moves, 0);
  EXPECT_EQ(twice.vertices, once.vertices);
}

INSTANTIATE_TEST_SUITE_P(Axes, Apply, ::testing::Values(Axis::x, Axis::y));

TEST(Apply, ShapeRatioStaysBounded) {
  const Mesh in = gen_structured_tri(12, 12);
  const double r = 0.15;
  const Mesh out = apply_algorithm1(in, {r, Axis::y});
  const double bound = metrics(in).shape_ratio / ((1 - 2 * r) * (1 - 2 * r));
  EXPECT_LE(metrics(out).shape_ratio, bound);
}

TEST(Apply, Deterministic) {
  const Mesh in = gen_perturbed(gen_structured_tri(7, 7), 0.03, 9);
  EXPECT_EQ(apply_algorithm1(in, {}).vertices, apply_algorithm1(in, {}).vertices);
}

TEST(Apply, RejectsBadArguments) {
  const Mesh in = gen_structured_tri(3, 3);
  EXPECT_THROW(apply_algorithm1(in, {0.0, Axis::y}), std::invalid_argument);
  EXPECT_THROW(apply_algorithm1(in, {1.0, Axis::y}), std::invalid_argument);
  EXPECT_THROW(apply_algorithm1(in, {0.15, Axis::z}), std::invalid_argument);
  EXPECT_THROW(apply_algorithm1(gen_structured_quad(3, 3), {}), std::invalid_argument);
}
