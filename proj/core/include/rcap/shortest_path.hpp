#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rcap/lattice.hpp"

namespace rcap {

struct NearestTarget {
  double distance = 0.0;
  bool reachable = false;
  VertexId target = kNoVertex;
  /// Vertex sequence from a source to `target`; filled only on request.
  std::vector<VertexId> path;
};

/// Label-setting shortest paths with a binary heap over nonnegative edge
/// weights. Heap ties are broken by vertex index, so results (including the
/// recovered path) are deterministic. Owns scratch buffers sized to the
/// domain; one instance per thread.
class ShortestPaths {
 public:
  explicit ShortestPaths(DomainPtr domain);

  const Domain& domain() const noexcept { return *domain_; }

  /// Distances from the source set to every vertex (+inf if unreachable).
  /// `allowed`, when non-empty, masks edges by index (nonzero = usable).
  const std::vector<double>& distances(std::span<const double> weights, std::span<const VertexId> sources,
                                       std::span<const std::uint8_t> allowed = {});

  /// Distance from the source set to the closest target; stops as soon as a
  /// target is settled.
  NearestTarget nearest(std::span<const double> weights, std::span<const VertexId> sources,
                        std::span<const VertexId> targets, std::span<const std::uint8_t> allowed = {},
                        bool want_path = false);

 private:
  template <typename Stop>
  VertexId run(std::span<const double> weights, std::span<const VertexId> sources,
               std::span<const std::uint8_t> allowed, bool track_pred, Stop stop);

  DomainPtr domain_;
  std::vector<double> dist_;
  std::vector<VertexId> pred_;
  std::vector<std::uint32_t> target_stamp_;
  std::uint32_t stamp_ = 0;
  std::vector<std::pair<double, VertexId>> heap_;
};

}  // namespace rcap
