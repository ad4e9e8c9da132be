#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>

#include "robin/geometry.hpp"
#include "robin/mesh_io.hpp"

using namespace robin;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no robin::Error thrown";
  return ErrorCode::InvalidArgument;
}

void expect_conforming(const TriangleMesh& m) {
  std::map<std::pair<int, int>, int> count;
  for (const auto& t : m.triangles())
    for (int i = 0; i < 3; ++i) ++count[std::minmax(t[i], t[(i + 1) % 3])];
  std::set<std::pair<int, int>> boundary;
  for (const auto& e : m.boundary_edges()) boundary.insert(std::minmax(e.nodes[0], e.nodes[1]));
  for (const auto& [edge, c] : count) EXPECT_EQ(c, boundary.count(edge) ? 1 : 2);
  EXPECT_EQ(boundary.size(), m.boundary_edges().size());
}

void expect_outward(const TriangleMesh& m) {
  for (const auto& e : m.boundary_edges()) {
    const auto& t = m.triangles()[e.triangle];
    int opp = -1;
    for (int v : t)
      if (v != e.nodes[0] && v != e.nodes[1]) opp = v;
    const Point mid = 0.5 * (m.nodes()[e.nodes[0]] + m.nodes()[e.nodes[1]]);
    EXPECT_GT(dot(e.normal, mid - m.nodes()[opp]), 0.0);
    EXPECT_NEAR(norm(e.normal), 1.0, 1e-14);
  }
}

}  // namespace

TEST(Polygon, UnitSquareIsValid) {
  const auto d = unit_square();
  EXPECT_NEAR(d.area(), 1.0, 1e-15);
  EXPECT_EQ(d.label_set(), (std::set<std::string>{"bottom", "right", "top", "left"}));
}

TEST(Polygon, ClockwiseInputIsReoriented) {
  const auto d = build_polygon({{0, 0}, {0, 1}, {1, 1}, {1, 0}}, {"left", "top", "right", "bottom"});
  EXPECT_NEAR(d.area(), 1.0, 1e-15);
  // Each segment keeps its label after reversal.
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Point a = d.vertices()[i], b = d.vertices()[(i + 1) % d.size()];
    const Point mid = 0.5 * (a + b);
    const std::string& l = d.arc_labels()[i];
    if (mid.y == 0.0) EXPECT_EQ(l, "bottom");
    if (mid.x == 1.0) EXPECT_EQ(l, "right");
    if (mid.y == 1.0) EXPECT_EQ(l, "top");
    if (mid.x == 0.0) EXPECT_EQ(l, "left");
  }
}

TEST(Polygon, BowtieIsSelfIntersecting) {
  EXPECT_EQ(code_of([] { build_polygon({{0, 0}, {1, 1}, {1, 0}, {0, 1}}, {"a", "b", "c", "d"}); }),
            ErrorCode::SelfIntersection);
}

TEST(Polygon, RejectsDegenerateAndMismatchedInput) {
  EXPECT_EQ(code_of([] { build_polygon({{0, 0}, {1, 0}, {1, 0}, {0, 1}}, {"a", "b", "c", "d"}); }),
            ErrorCode::DegenerateEdge);
  EXPECT_EQ(code_of([] { build_polygon({{0, 0}, {1, 0}, {0, 1}}, {"a", "b"}); }), ErrorCode::LabelCountMismatch);
}

TEST(Mesh, CoarseSquareHasTwoTriangles) {
  const auto m = mesh_uniform(unit_square(), 1.5);
  EXPECT_EQ(m.triangles().size(), 2u);
  EXPECT_EQ(m.node_count(), 4u);
  EXPECT_EQ(m.boundary_edges().size(), 4u);
}

TEST(Mesh, SquareAtThreeQuartersHasEightTriangles) {
  const auto m = mesh_uniform(unit_square(), 0.75);
  EXPECT_EQ(m.triangles().size(), 8u);
  EXPECT_NEAR(m.area(), 1.0, 1e-12);
  EXPECT_LE(m.h(), 0.75);
}

TEST(Mesh, LShapeAreaIsConserved) {
  const auto m = mesh_uniform(lshape(), 0.5);
  EXPECT_NEAR(m.area(), 0.75, 1e-12);
  EXPECT_LE(m.h(), 0.5);
  expect_conforming(m);
  expect_outward(m);
}

TEST(Mesh, PositiveTriangleAreas) {
  const auto m = mesh_uniform(lshape(), 0.1);
  for (std::size_t t = 0; t < m.triangles().size(); ++t) EXPECT_GT(m.triangle_area(t), 0.0);
}

TEST(Mesh, GeneralPolygonIsConformingWithOutwardNormals) {
  const auto d = build_polygon({{0, 0}, {2, 0}, {1.5, 1}, {0.2, 1.2}}, {"base", "slope", "roof", "wall"});
  const auto m = mesh_uniform(d, 0.2);
  EXPECT_NEAR(m.area(), d.area(), 1e-10 * d.area());
  expect_conforming(m);
  expect_outward(m);
  EXPECT_EQ(m.labels(), d.label_set());
}

TEST(Refine, CountsAndAreas) {
  const auto m0 = mesh_uniform(unit_square(), 1.5);
  const auto m1 = refine(m0);
  EXPECT_EQ(m1.triangles().size(), 8u);
  EXPECT_EQ(m1.node_count(), 9u);
  EXPECT_NEAR(m1.area(), m0.area(), 1e-12);
  const auto m2 = refine(m0, 2);
  EXPECT_NEAR(m2.h(), m0.h() / 4.0, 1e-12);
}

TEST(Refine, ChildrenInheritLabels) {
  const auto m0 = coarse_mesh(lshape());
  const auto m1 = refine(m0);
  for (const auto& e : m1.boundary_edges()) {
    const Point mid = 0.5 * (m1.nodes()[e.nodes[0]] + m1.nodes()[e.nodes[1]]);
    bool found = false;
    for (const auto& p : m0.boundary_edges()) {
      const Point a = m0.nodes()[p.nodes[0]], b = m0.nodes()[p.nodes[1]];
      if (std::abs(orient2d(a, b, mid)) < 1e-12 && dot(mid - a, mid - b) <= 0.0) {
        EXPECT_EQ(e.label, p.label);
        found = true;
      }
    }
    EXPECT_TRUE(found);
  }
  expect_conforming(refine(m1));
}

TEST(Refine, ArcParameterCoversEachSide) {
  const auto m = refine(coarse_mesh(unit_square()), 3);
  for (const auto& e : m.boundary_edges()) {
    const Point a = m.nodes()[e.nodes[0]], b = m.nodes()[e.nodes[1]];
    EXPECT_NEAR(e.t1 - e.t0, distance(a, b), 1e-12);  // sides have unit length
    EXPECT_GE(e.t0, -1e-12);
    EXPECT_LE(e.t1, 1.0 + 1e-12);
  }
}

TEST(Region, SidesAndPerimeter) {
  const auto m = refine(coarse_mesh(unit_square()), 2);
  EXPECT_NEAR(boundary_region(m, {"bottom"}).total_length, 1.0, 1e-12);
  EXPECT_NEAR(boundary_region(m, {"bottom", "right", "top", "left"}).total_length, 4.0, 1e-12);
  EXPECT_EQ(code_of([&] { boundary_region(m, {"nonexistent"}); }), ErrorCode::EmptyRegion);
}

TEST(Region, SurvivesRefinement) {
  auto m = coarse_mesh(lshape());
  for (int l = 0; l < 3; ++l) {
    EXPECT_NEAR(boundary_region(m, {"inner_h", "inner_v"}).total_length, 1.0, 1e-12);
    m = refine(m);
  }
}

TEST(MeshIo, RoundTripIsExact) {
  const auto m = refine(coarse_mesh(lshape()), 2);
  std::stringstream ss;
  write_mesh(ss, m);
  const auto back = read_mesh(ss);
  EXPECT_EQ(back.nodes(), m.nodes());
  EXPECT_EQ(back.triangles(), m.triangles());
  ASSERT_EQ(back.boundary_edges().size(), m.boundary_edges().size());
  for (std::size_t i = 0; i < m.boundary_edges().size(); ++i) {
    EXPECT_EQ(back.boundary_edges()[i].nodes, m.boundary_edges()[i].nodes);
    EXPECT_EQ(back.boundary_edges()[i].label, m.boundary_edges()[i].label);
    EXPECT_EQ(back.boundary_edges()[i].t0, m.boundary_edges()[i].t0);
  }
}

TEST(MeshIo, ReportsLineOfBadInput) {
  std::stringstream ss("mesh 2d\nnode 0 0 0\nnode 1 1 0\nnode 2 0 oops\n");
  try {
    read_mesh(ss);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(MeshIo, RejectsNonConformingMesh) {
  // Hanging node: triangle edge (0,1) is split on one side only.
  std::stringstream ss(
      "mesh 2d\nnode 0 0 0\nnode 1 1 0\nnode 2 0 1\nnode 3 0.5 0\nnode 4 0.5 -1\n"
      "tri 0 0 1 2\ntri 1 0 4 3\ntri 2 3 4 1\n"
      "bedge 0 1 2 a\nbedge 1 2 0 a\nbedge 2 0 4 a\nbedge 3 4 1 a\n");
  EXPECT_EQ(code_of([&] { read_mesh(ss); }), ErrorCode::InvalidMesh);
}
