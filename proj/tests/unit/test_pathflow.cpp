#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "oracles.hpp"
#include "rcap/error.hpp"
#include "rcap/pathflow.hpp"

using namespace rcap;

namespace {

Point pt(int x, int y = 0) {
  Point p{};
  p[0] = x;
  p[1] = y;
  return p;
}

std::vector<Point> coords(const Domain& dom, const std::vector<VertexId>& path) {
  std::vector<Point> out;
  for (VertexId v : path) out.push_back(dom.coordinates(v));
  return out;
}

}  // namespace

TEST(Pathflow, AxisPathIsStraight) {
  auto dom = build_full_box(3, 4);
  Point x{};
  x[0] = 4;
  auto path = coords(*dom, build_gamma(*dom, x));
  ASSERT_EQ(path.size(), 5u);
  for (int i = 0; i <= 4; ++i) {
    Point expect{};
    expect[0] = i;
    EXPECT_EQ(path[i], expect);
  }
}

TEST(Pathflow, TieRuleExample) {
  auto dom = build_full_box(2, 2);
  auto path = coords(*dom, build_gamma(*dom, pt(2, 1)));
  EXPECT_EQ(path, (std::vector<Point>{pt(0, 0), pt(1, 0), pt(1, 1), pt(2, 1)}));
}

TEST(Pathflow, DiagonalStaircaseHugsTheDiagonal) {
  const int n = 6;
  auto dom = build_full_box(2, n);
  auto path = coords(*dom, build_gamma(*dom, pt(n, n)));
  ASSERT_EQ(path.size(), static_cast<std::size_t>(2 * n + 1));
  // l_inf distance from (a, b) to the diagonal is |a - b| / 2.
  for (const auto& p : path) EXPECT_LE(std::abs(p[0] - p[1]), 1);
  for (std::size_t i = 2; i < path.size(); ++i) {
    const bool same = (path[i][0] - path[i - 1][0]) == (path[i - 1][0] - path[i - 2][0]);
    EXPECT_FALSE(same) << "steps must alternate";
  }
}

TEST(Pathflow, EveryGammaIsSimpleMonotoneAndShort) {
  auto dom = build_full_box(2, 5);
  for (VertexId t : dom->targets()) {
    const Point x = dom->coordinates(t);
    auto path = coords(*dom, build_gamma(*dom, x));
    EXPECT_EQ(static_cast<int>(path.size()) - 1, norm_1(x, 2));
    std::set<Point> seen(path.begin(), path.end());
    EXPECT_EQ(seen.size(), path.size());
    for (std::size_t i = 1; i < path.size(); ++i) {
      EXPECT_EQ(norm_1(path[i], 2), norm_1(path[i - 1], 2) + 1);
    }
  }
  EXPECT_THROW(build_gamma(*dom, pt(2, 1)), Error);
}

TEST(Pathflow, MarginalsMatchIndependentCounter) {
  for (int n : {2, 3, 5, 8}) {
    auto dom = build_full_box(2, n);
    auto measure = edge_marginals(dom);
    auto expect = oracle::gamma_counts_2d(n);
    ASSERT_EQ(measure.boundary_count, static_cast<std::uint64_t>(8 * n));
    dom->for_each_edge([&](EdgeId e, VertexId a, VertexId) {
      const Point p = dom->coordinates(a);
      const std::size_t key =
          (static_cast<std::size_t>(p[1] + n) * (2 * n + 1) + static_cast<std::size_t>(p[0] + n)) * 2 +
          dom->edge_axis(e);
      EXPECT_EQ(measure.counts[e], expect[key]) << "n=" << n << " e=" << e;
    });
  }
}

TEST(Pathflow, MeasureInvariants) {
  auto one = edge_marginals(build_full_box(1, 5));
  for (EdgeId e = 0; e < one.counts.size(); ++e) EXPECT_EQ(one.p(e), 0.5);

  auto dom = build_full_box(2, 6);
  auto m = edge_marginals(dom);
  std::uint64_t origin = 0;
  for (VertexId v : dom->neighbors(dom->source())) origin += m.counts[*dom->edge_between(dom->source(), v)];
  EXPECT_EQ(origin, m.boundary_count);
  const auto total = std::accumulate(m.counts.begin(), m.counts.end(), std::uint64_t{0});
  std::uint64_t lengths = 0;
  for (VertexId t : dom->targets()) lengths += norm_1(dom->coordinates(t), 2);
  EXPECT_EQ(total, lengths);
  EXPECT_LE(static_cast<double>(total) / m.boundary_count, 2.0 * 6);
}

TEST(Pathflow, LagrangianConstant) {
  auto m = edge_marginals(build_full_box(1, 4));
  EXPECT_NEAR(lagrangian_constant(m, 2.0), 2.0, 1e-14);

  auto dom = build_full_box(2, 4);
  auto mm = edge_marginals(dom);
  EXPECT_NEAR(lagrangian_constant(mm, 1.5), lagrangian_constant_by_shell(mm, 1.5), 1e-12);

  Point x{};
  x[0] = 4;
  auto single = PathMeasure::single_path(dom, build_gamma(*dom, x));
  EXPECT_NEAR(lagrangian_constant(single, 3.0), 4.0, 1e-14);
}

TEST(Pathflow, ScaledShellMarginalStaysBounded) {
  const double at4 = max_scaled_shell_marginal(edge_marginals(build_full_box(2, 4)));
  const double at8 = max_scaled_shell_marginal(edge_marginals(build_full_box(2, 8)));
  EXPECT_LE(at8, 1.5 * at4);
}

TEST(Pathflow, ThreadCountDoesNotChangeCounts) {
  auto dom = build_full_box(3, 6);
  MarginalsOptions a, b;
  b.threads = 3;
  EXPECT_EQ(edge_marginals(dom, a).counts, edge_marginals(dom, b).counts);
}

TEST(Pathflow, BudgetAndDomainErrors) {
  MarginalsOptions tiny;
  tiny.boundary_cap = 10;
  try {
    edge_marginals(build_full_box(2, 4), tiny);
    FAIL();
  } catch (const Error& ex) {
    EXPECT_EQ(ex.kind(), ErrorKind::BudgetExceeded);
  }
  EXPECT_THROW(edge_marginals(build_half_box(2, 2, 2)), Error);
}

TEST(Pathflow, CsvHasOneRowPerEdge) {
  auto m = edge_marginals(build_full_box(2, 2));
  const auto csv = path_measure_csv(m);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), static_cast<long>(m.counts.size()) + 1);
}
