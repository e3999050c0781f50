#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "rcap/error.hpp"
#include "rcap/lattice.hpp"

using namespace rcap;

namespace {

Point pt(int x, int y = 0, int z = 0) {
  Point p{};
  p[0] = x;
  p[1] = y;
  p[2] = z;
  return p;
}

long ipow(long b, int e) {
  long v = 1;
  while (e-- > 0) v *= b;
  return v;
}

std::set<std::pair<Point, Point>> edge_points(const Domain& dom) {
  std::set<std::pair<Point, Point>> out;
  dom.for_each_edge([&](EdgeId, VertexId a, VertexId b) { out.insert({dom.coordinates(a), dom.coordinates(b)}); });
  return out;
}

}  // namespace

TEST(Lattice, FullBoxSmallCounts) {
  auto a = build_full_box(2, 1);
  EXPECT_EQ(a->num_vertices(), 9u);
  EXPECT_EQ(a->num_edges(), 12u);
  EXPECT_EQ(a->targets().size(), 8u);

  auto b = build_full_box(1, 4);
  EXPECT_EQ(b->num_vertices(), 9u);
  EXPECT_EQ(b->num_edges(), 8u);
  ASSERT_EQ(b->targets().size(), 2u);
  std::set<int> ends;
  for (VertexId v : b->targets()) ends.insert(b->coordinates(v)[0]);
  EXPECT_EQ(ends, (std::set<int>{-4, 4}));

  auto c = build_full_box(3, 2);
  EXPECT_EQ(c->num_vertices(), 125u);
  EXPECT_EQ(c->num_edges(), 300u);
  EXPECT_EQ(c->targets().size(), 98u);
}

TEST(Lattice, FullBoxClosedFormsUpToDim4) {
  for (int d = 1; d <= 4; ++d) {
    for (int M = 1; M <= 8; ++M) {
      if (ipow(2 * M + 1, d) > 200'000) continue;
      auto dom = build_full_box(d, M);
      const long side = 2 * M + 1;
      EXPECT_EQ(static_cast<long>(dom->num_vertices()), ipow(side, d)) << d << " " << M;
      EXPECT_EQ(static_cast<long>(dom->num_edges()), d * 2L * M * ipow(side, d - 1)) << d << " " << M;
      EXPECT_EQ(static_cast<long>(dom->targets().size()), ipow(side, d) - ipow(side - 2, d));
      EXPECT_FALSE(dom->is_target(dom->source()));
      EXPECT_EQ(dom->coordinates(dom->source()), Point{});
    }
  }
}

TEST(Lattice, EdgesAreUnitStepsInCanonicalOrder) {
  auto dom = build_full_box(3, 2);
  std::pair<VertexId, VertexId> prev{0, 0};
  bool first = true;
  dom->for_each_edge([&](EdgeId e, VertexId a, VertexId b) {
    EXPECT_LT(a, b);
    Point pa = dom->coordinates(a), pb = dom->coordinates(b);
    int l1 = 0;
    for (int i = 0; i < 3; ++i) l1 += std::abs(pa[i] - pb[i]);
    EXPECT_EQ(l1, 1);
    EXPECT_EQ(dom->edge(e), std::make_pair(a, b));
    EXPECT_EQ(dom->edge_between(b, a), e);
    if (!first) EXPECT_LT(prev, std::make_pair(a, b));
    prev = {a, b};
    first = false;
  });
}

TEST(Lattice, HalfBox) {
  auto a = build_half_box(2, 1, 3);
  EXPECT_EQ(a->num_vertices(), 4u);
  EXPECT_EQ(a->num_edges(), 4u);
  std::set<Point> targets;
  for (VertexId v : a->targets()) targets.insert(a->coordinates(v));
  EXPECT_EQ(targets, (std::set<Point>{pt(1, 0), pt(0, 1), pt(1, 1)}));

  auto b = build_half_box(1, 3, 5);
  EXPECT_EQ(b->num_vertices(), 4u);
  ASSERT_EQ(b->targets().size(), 1u);
  EXPECT_EQ(b->coordinates(b->targets()[0])[0], 3);

  auto c = build_half_box(2, 2, 2);
  EXPECT_EQ(c->num_vertices(), 9u);
  EXPECT_EQ(c->num_edges(), 12u);
  EXPECT_EQ(c->targets().size(), 5u);

  EXPECT_THROW(build_half_box(2, 3, 2), Error);
}

TEST(Lattice, AnnulusRemovesInnerEdges) {
  auto full = build_full_box(2, 2);
  auto ann0 = build_annulus(2, 0, 2);
  EXPECT_EQ(edge_points(*full), edge_points(*ann0));

  auto ann = build_annulus(2, 1, 3);
  // |E_3| - |E_1| = 2*6*7 - 12.
  EXPECT_EQ(ann->num_edges(), 72u);
  // Every edge of E_3 with an endpoint outside D_1.
  auto big = build_full_box(2, 3);
  std::set<std::pair<Point, Point>> expected;
  big->for_each_edge([&](EdgeId, VertexId a, VertexId b) {
    Point pa = big->coordinates(a), pb = big->coordinates(b);
    if (norm_inf(pa, 2) <= 1 && norm_inf(pb, 2) <= 1) return;
    expected.insert({pa, pb});
  });
  EXPECT_EQ(edge_points(*ann), expected);
  EXPECT_TRUE(ann->multi_source());
  EXPECT_EQ(ann->sources().size(), 8u);

  auto chain = build_annulus(1, 1, 4);
  EXPECT_EQ(chain->num_edges(), 6u);
  std::set<int> xs;
  for (VertexId v = 0; v < chain->num_vertices(); ++v) xs.insert(chain->coordinates(v)[0]);
  EXPECT_EQ(xs, (std::set<int>{-4, -3, -2, -1, 1, 2, 3, 4}));

  EXPECT_THROW(build_annulus(2, 3, 3), Error);
}

TEST(Lattice, ShellEdges) {
  auto a = build_full_box(2, 2);
  auto s1 = shell_edges(*a, 1);
  ASSERT_EQ(s1.size(), 4u);
  for (EdgeId e : s1) {
    auto [u, v] = a->edge(e);
    EXPECT_TRUE(u == a->source() || v == a->source());
  }
  EXPECT_EQ(shell_edges(*a, 2).size(), 12u);

  auto b = build_full_box(1, 3);
  std::set<std::pair<int, int>> got;
  for (EdgeId e : shell_edges(*b, 2)) {
    auto [u, v] = b->edge(e);
    got.insert({b->coordinates(u)[0], b->coordinates(v)[0]});
  }
  EXPECT_EQ(got, (std::set<std::pair<int, int>>{{-2, -1}, {1, 2}}));
}

TEST(Lattice, ShellsPartitionEdges) {
  auto dom = build_full_box(3, 3);
  std::vector<int> seen(dom->num_edges(), 0);
  for (int k = 0; k <= 3 * 3; ++k) {
    for (EdgeId e : shell_edges(*dom, k)) ++seen[e];
  }
  EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
}

TEST(Lattice, JsonRoundTripPreservesIndices) {
  std::vector<DomainPtr> doms = {build_full_box(2, 3), build_half_box(3, 2, 4), build_annulus(2, 1, 3),
                                 build_slab_segment(2, 2, 3, 5)};
  for (const auto& dom : doms) {
    auto back = domain_from_json(domain_to_json(*dom));
    ASSERT_EQ(back->num_vertices(), dom->num_vertices());
    ASSERT_EQ(back->num_edges(), dom->num_edges());
    for (VertexId v = 0; v < dom->num_vertices(); ++v) EXPECT_EQ(back->coordinates(v), dom->coordinates(v));
    for (EdgeId e = 0; e < dom->num_edges(); ++e) EXPECT_EQ(back->edge(e), dom->edge(e));
    EXPECT_EQ(domain_to_json(*back), domain_to_json(*dom));
  }
  EXPECT_THROW(domain_from_json("{\"kind\":\"torus\"}"), Error);
}

TEST(Lattice, SlabSegment) {
  auto slab = build_slab_segment(2, 1, 3, 4);
  // x in [-1, 4], y in [-1, 1].
  EXPECT_EQ(slab->num_vertices(), 18u);
  ASSERT_EQ(slab->targets().size(), 1u);
  EXPECT_EQ(slab->coordinates(slab->targets()[0]), pt(3));
  EXPECT_THROW(build_slab_segment(2, 1, 5, 4), Error);
}

TEST(Lattice, BallEdges) {
  auto dom = build_full_box(2, 3);
  EXPECT_EQ(ball_edges(*dom, Point{}, 1).size(), 12u);
  EXPECT_EQ(ball_edges(*dom, Point{}, 0).size(), 0u);
}

TEST(Lattice, SizingAndValidation) {
  BuildOptions tiny;
  tiny.memory_budget_bytes = 1 << 20;
  try {
    build_full_box(3, 100, tiny);
    FAIL() << "expected a sizing error";
  } catch (const Error& ex) {
    EXPECT_EQ(ex.kind(), ErrorKind::SizingError);
  }
  EXPECT_THROW(build_full_box(0, 2), Error);
  EXPECT_THROW(build_full_box(7, 1), Error);
  EXPECT_THROW(build_full_box(2, 0), Error);
}

TEST(Lattice, CsvDumps) {
  auto dom = build_full_box(1, 1);
  const std::string v = vertices_csv(*dom);
  const std::string e = edges_csv(*dom);
  EXPECT_EQ(std::count(v.begin(), v.end(), '\n'), 4);
  EXPECT_EQ(std::count(e.begin(), e.end(), '\n'), 3);
}
