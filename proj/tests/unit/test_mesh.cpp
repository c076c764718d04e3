#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "lbb/macroelement.hpp"
#include "lbb/mesh.hpp"

using namespace lbb;

namespace {

double total_measure(const Mesh& m) {
  double s = 0.0;
  for (std::size_t c = 0; c < m.num_cells(); ++c) s += m.measure(c);
  return s;
}

bool all_positive(const Mesh& m) {
  for (std::size_t c = 0; c < m.num_cells(); ++c)
    if (m.signed_measure(c) <= 0) return false;
  return true;
}

}  // namespace

TEST(StructuredTri, CountsAndValences) {
  const Mesh m = gen_structured_tri(5, 3);
  EXPECT_EQ(m.num_vertices(), 24u);
  EXPECT_EQ(m.num_cells(), 30u);
  EXPECT_NEAR(total_measure(m), 1.0, 1e-14);
  EXPECT_TRUE(all_positive(m));
  const auto boundary = boundary_vertex_mask(m);
  std::vector<int> valence(m.num_vertices(), 0);
  for (const auto& c : m.cells)
    for (int i = 0; i < 3; ++i) ++valence[c[i]];
  int interior = 0;
  for (std::size_t v = 0; v < m.num_vertices(); ++v)
    if (!boundary[v]) {
      ++interior;
      EXPECT_EQ(valence[v], 6);
    }
  EXPECT_EQ(interior, 4 * 2);
  EXPECT_NO_THROW(check_conforming(m));
}

TEST(StructuredTri, SingleSquareHasTwoTriangles) { EXPECT_EQ(gen_structured_tri(1, 1).num_cells(), 2u); }

TEST(StructuredTri, EveryMacroIsStructuredInBothAxes) {
  const Mesh m = gen_structured_tri(4, 4);
  for (const auto& mac : build_macroelements(m)) {
    const auto f = classify_2d(mac);
    EXPECT_TRUE(f.x_structured);
    EXPECT_TRUE(f.y_structured);
  }
}

TEST(Zigzag, SmallestInstance) {
  const Mesh m = gen_zigzag(2, 2);
  const auto b = boundary_vertex_mask(m);
  EXPECT_EQ(std::count(b.begin(), b.end(), false), 1);
  EXPECT_NEAR(total_measure(m), 1.0, 1e-14);
}

TEST(Zigzag, XStructuredYUnstructuredWithSinBound) {
  const Mesh m = gen_zigzag(9, 9);
  EXPECT_NEAR(total_measure(m), 1.0, 1e-13);
  EXPECT_NO_THROW(check_conforming(m));
  const auto macros = build_macroelements(m);
  ASSERT_FALSE(macros.empty());
  for (const auto& mac : macros) {
    const auto f = classify_2d(mac);
    EXPECT_TRUE(f.x_structured);
    EXPECT_FALSE(f.y_structured);
    EXPECT_EQ(f.aligned_count_y, 0);
    EXPECT_GE(f.min_sin, std::sin(std::numbers::pi / 4) - 1e-12);
  }
}

TEST(Zigzag, InteriorHexagonsHaveVanishingCotangentSum) {
  const Mesh m = gen_zigzag(11, 11);
  int hexagons = 0;
  for (const auto& mac : build_macroelements(m)) {
    if (mac.n_v() != 6) continue;
    ++hexagons;
    EXPECT_LE(std::abs(s_condition(mac)) / s_scale(mac), 1e-12);
  }
  EXPECT_GT(hexagons, 0);
}

TEST(Zigzag, RejectsTinySizes) { EXPECT_THROW(gen_zigzag(1, 4), std::invalid_argument); }

TEST(Perturbed, ZeroAmplitudeIsIdentity) {
  const Mesh a = gen_structured_tri(6, 6);
  const Mesh b = gen_perturbed(a, 0.0, 42);
  EXPECT_EQ(a.vertices, b.vertices);
}

TEST(Perturbed, DeterministicBoundaryFixedXOnly) {
  const Mesh base = gen_structured_tri(8, 8);
  const Mesh a = gen_perturbed(base, 0.05, 7), b = gen_perturbed(base, 0.05, 7), c = gen_perturbed(base, 0.05, 8);
  EXPECT_EQ(a.vertices, b.vertices);
  EXPECT_NE(a.vertices, c.vertices);
  const auto boundary = boundary_vertex_mask(base);
  for (std::size_t v = 0; v < base.num_vertices(); ++v) {
    EXPECT_EQ(a.vertices[v][1], base.vertices[v][1]);
    if (boundary[v]) EXPECT_EQ(a.vertices[v], base.vertices[v]);
    EXPECT_LE(std::abs(a.vertices[v][0] - base.vertices[v][0]), 0.05);
  }
}

TEST(Perturbed, LargeAmplitudeIsClippedToValidCells) {
  const Mesh base = gen_structured_tri(6, 6);
  const Mesh m = gen_perturbed(base, 2.0, 3);
  for (std::size_t c = 0; c < m.num_cells(); ++c) EXPECT_GE(m.signed_measure(c), 0.1 * base.measure(c) - 1e-15);
  EXPECT_NEAR(total_measure(m), 1.0, 1e-13);
}

TEST(Extruded, PrismSplitCounts) {
  const Mesh m = gen_extruded_tet(gen_structured_tri(1, 1), 1, 1.0);
  EXPECT_EQ(m.num_cells(), 6u);
  EXPECT_NEAR(total_measure(m), 1.0, 1e-14);
  EXPECT_NO_THROW(check_conforming(m));
}

TEST(Extruded, ConformingAndZStructured) {
  const Mesh m = gen_extruded_tet(gen_perturbed(gen_structured_tri(4, 4), 0.05, 1), 3, 0.6);
  EXPECT_NO_THROW(check_conforming(m));
  EXPECT_NEAR(total_measure(m), 0.6, 1e-13);
  for (const auto& mac : build_macroelements(m)) EXPECT_TRUE(classify_3d(mac).z_structured);
}

TEST(StructuredTet, KuhnSubdivision) {
  const Mesh m = gen_structured_tet(2);
  EXPECT_EQ(m.num_cells(), 48u);
  EXPECT_NEAR(total_measure(m), 1.0, 1e-14);
  EXPECT_TRUE(all_positive(m));
  EXPECT_NO_THROW(check_conforming(m));
}

TEST(QuadMacro, NineVerticesCenterFour) {
  const Mesh m = gen_quad_macro({1.0, 2.0}, {0.5, 1.5});
  EXPECT_EQ(m.num_vertices(), 9u);
  EXPECT_EQ(m.num_cells(), 4u);
  EXPECT_EQ(m.vertices[4], (Point{0, 0, 0}));
  EXPECT_NEAR(total_measure(m), 3.0 * 2.0, 1e-14);
}

TEST(Finalize, FlipsClockwiseCells) {
  Mesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  m.cells = {{0, 2, 1, -1}};
  m.finalize();
  EXPECT_GT(m.signed_measure(0), 0);
}

TEST(Finalize, RejectsDegenerateCell) {
  Mesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  m.cells = {{0, 1, 2, -1}};
  EXPECT_THROW(m.finalize(), MeshError);
}

TEST(Conformity, DetectsHangingVertex) {
  Mesh m;
  m.vertices = {{0, 0, 0}, {2, 0, 0}, {0, 2, 0}, {2, 2, 0}, {1, 1, 0}, {3, 1, 0}};
  // one big triangle next to two small ones sharing the midpoint of its edge
  m.cells = {{0, 1, 2, -1}, {1, 3, 4, -1}, {1, 5, 3, -1}};
  m.finalize();
  EXPECT_THROW(check_conforming(m), MeshError);
}

TEST(Msh, RoundTrip) {
  const Mesh a = gen_perturbed(gen_structured_tri(5, 4), 0.03, 11);
  const Mesh b = parse_msh(format_msh(a));
  ASSERT_EQ(a.num_vertices(), b.num_vertices());
  ASSERT_EQ(a.cells, b.cells);
  for (std::size_t v = 0; v < a.num_vertices(); ++v)
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(a.vertices[v][k], b.vertices[v][k], 1e-12);
  std::map<int, int> ta, tb;
  for (const auto& f : a.boundary_facets) ++ta[f.tag];
  for (const auto& f : b.boundary_facets) ++tb[f.tag];
  EXPECT_EQ(ta, tb);
}

TEST(Msh, RoundTripTetAndQuad) {
  for (const Mesh& a : {gen_structured_tet(2), gen_structured_quad(3, 2)}) {
    const Mesh b = parse_msh(format_msh(a));
    EXPECT_EQ(a.kind, b.kind);
    EXPECT_EQ(a.cells, b.cells);
  }
}

TEST(Msh, RejectsOtherVersionsAndBinary) {
  EXPECT_THROW(parse_msh("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n"), ParseError);
  EXPECT_THROW(parse_msh("$MeshFormat\n2.2 1 8\n$EndMeshFormat\n"), ParseError);
  EXPECT_THROW(parse_msh("$Nodes\n1\n1 0 0 0\n$EndNodes\n"), ParseError);
}

TEST(Msh, ReportsLineOfBadNode) {
  const std::string text = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n2\n1 0 0 0\n2 zero 0 0\n$EndNodes\n";
  try {
    parse_msh(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 7u);
  }
}

TEST(Vtk, LegacyLayout) {
  const Mesh m = gen_structured_tri(1, 1);
  const std::string s = format_vtk(m, {{"p", {1, 2, 3, 4}}, {"id", {0, 1}, true}});
  EXPECT_NE(s.find("# vtk DataFile Version"), std::string::npos);
  EXPECT_NE(s.find("DATASET UNSTRUCTURED_GRID"), std::string::npos);
  EXPECT_NE(s.find("CELL_TYPES 2"), std::string::npos);
  EXPECT_NE(s.find("POINT_DATA 4"), std::string::npos);
  EXPECT_NE(s.find("CELL_DATA 2"), std::string::npos);
  EXPECT_LT(s.find("POINT_DATA"), s.find("CELL_DATA"));
}

TEST(Metrics, StructuredSizes) {
  const auto mm = metrics(gen_structured_tri(4, 4));
  EXPECT_NEAR(mm.h, std::sqrt(2.0) / 4, 1e-14);
  EXPECT_NEAR(mm.min_area, 1.0 / 32, 1e-15);
}

TEST(Edges, EulerCharacteristic) {
  for (const Mesh& m : {gen_structured_tri(3, 5), gen_zigzag(6, 6)}) {
    const long v = m.num_vertices(), e = mesh_edges(m).size(), f = m.num_cells();
    EXPECT_EQ(v - e + f, 1);
  }
}
