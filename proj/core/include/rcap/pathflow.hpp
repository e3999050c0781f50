#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rcap/lattice.hpp"

namespace rcap {

/// Edge-usage marginals of a random source-to-boundary path, stored as exact
/// integer counts over a common denominator.
struct PathMeasure {
  DomainPtr domain;
  std::vector<std::uint64_t> counts;
  std::uint64_t boundary_count = 0;

  double p(EdgeId e) const noexcept {
    return static_cast<double>(counts[e]) / static_cast<double>(boundary_count);
  }
  std::vector<double> probabilities() const;

  /// Measure concentrated on one path (p_e = 1 on its edges).
  static PathMeasure single_path(DomainPtr domain, std::span<const VertexId> path);
};

/// Monotone nearest-neighbor path from the origin to boundary point x of a
/// FullBox, hugging the segment [0, x]. Each step moves one coordinate toward
/// x; the candidate with the smallest Euclidean distance to the segment
/// wins, exact ties go to the larger axis index.
std::vector<VertexId> build_gamma(const Domain& domain, const Point& x);

struct MarginalsOptions {
  std::uint64_t boundary_cap = 20'000'000;
  int threads = 1;
};

/// Exact p_e for X uniform on the boundary of a FullBox.
PathMeasure edge_marginals(DomainPtr domain, const MarginalsOptions& opts = {});

/// C = sum_e p_e^{r/(r-1)}, summed in canonical edge order.
double lagrangian_constant(const PathMeasure& measure, double r);
/// Same constant summed shell by shell (|e|_1 ascending).
double lagrangian_constant_by_shell(const PathMeasure& measure, double r);

/// max_k k^{d-1} * max_{|e|_1 = k} p_e, the quantity bounded uniformly in n.
double max_scaled_shell_marginal(const PathMeasure& measure);

/// CSV with columns edge,shell,count,p.
std::string path_measure_csv(const PathMeasure& measure);

}  // namespace rcap
