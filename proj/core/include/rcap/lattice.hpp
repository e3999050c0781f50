#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rcap {

inline constexpr int kMaxDim = 6;

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;
inline constexpr VertexId kNoVertex = ~VertexId{0};

/// Lattice point; coordinates past the domain dimension are zero.
using Point = std::array<int, kMaxDim>;

int norm_inf(const Point& p, int d) noexcept;
int norm_1(const Point& p, int d) noexcept;
Point unit_vector(int axis, int scale = 1) noexcept;

enum class DomainKind { FullBox, HalfBox, Annulus, SlabSegment, Box };

const char* to_string(DomainKind kind) noexcept;

/// Parameters a domain was built from. Only the fields relevant to the kind
/// are meaningful; `lo`/`hi` always hold the bounding box.
struct DomainParams {
  int M = 0;  // FullBox radius
  int k = 0;  // HalfBox radius
  int n = 0;  // HalfBox clip / Annulus outer radius / Slab target distance
  int R = 0;  // Annulus inner radius
  int K = 0;  // Slab half-width
  int L = 0;  // Slab truncation
  Point lo{};
  Point hi{};
};

struct BuildOptions {
  std::uint64_t memory_budget_bytes = std::uint64_t{2} << 30;
};

/// Finite subgraph of Z^d: a box, optionally with the edges of an inner
/// closed box removed (vertices left isolated by the removal are dropped).
///
/// Vertices are numbered by mixed-radix encoding of the box coordinates with
/// axis 0 fastest, restricted to member vertices. Edges are numbered in
/// lexicographic order of (lower endpoint, axis), which coincides with the
/// lexicographic order of (lower endpoint, higher endpoint).
///
/// Immutable once built; share through DomainPtr.
class Domain {
 public:
  int dim() const noexcept { return dim_; }
  DomainKind kind() const noexcept { return kind_; }
  const DomainParams& params() const noexcept { return params_; }

  std::size_t num_vertices() const noexcept { return adj_offset_.size() - 1; }
  std::size_t num_edges() const noexcept { return first_edge_.back(); }

  Point coordinates(VertexId v) const noexcept;
  std::optional<VertexId> index_of(const Point& p) const noexcept;
  bool contains(const Point& p) const noexcept { return index_of(p).has_value(); }

  std::span<const VertexId> sources() const noexcept { return sources_; }
  std::span<const VertexId> targets() const noexcept { return targets_; }
  /// First source vertex; the origin for every kind except Annulus.
  VertexId source() const noexcept { return sources_.front(); }
  bool multi_source() const noexcept { return sources_.size() > 1 || kind_ == DomainKind::Annulus; }
  bool is_source(VertexId v) const noexcept { return (role_[v] & kSourceBit) != 0; }
  bool is_target(VertexId v) const noexcept { return (role_[v] & kTargetBit) != 0; }

  /// Neighbors of v in ascending vertex order.
  std::span<const VertexId> neighbors(VertexId v) const noexcept {
    return {adj_.data() + adj_offset_[v], adj_.data() + adj_offset_[v + 1]};
  }
  /// Neighbors with a larger index; the i-th one closes edge first_edge(v)+i.
  std::span<const VertexId> up_neighbors(VertexId v) const noexcept {
    const auto count = first_edge_[v + 1] - first_edge_[v];
    return {adj_.data() + adj_offset_[v + 1] - count, count};
  }
  EdgeId first_edge(VertexId v) const noexcept { return first_edge_[v]; }

  /// Endpoints (lower, higher) of an edge.
  std::pair<VertexId, VertexId> edge(EdgeId e) const noexcept;
  std::optional<EdgeId> edge_between(VertexId u, VertexId v) const noexcept;
  int edge_axis(EdgeId e) const noexcept;

  /// Calls fn(edge, lower, higher) for every edge in canonical order.
  template <typename Fn>
  void for_each_edge(Fn&& fn) const {
    const auto nv = static_cast<VertexId>(num_vertices());
    EdgeId e = 0;
    for (VertexId u = 0; u < nv; ++u) {
      for (VertexId w : up_neighbors(u)) fn(e++, u, w);
    }
  }

  /// |e|_1 = max of the endpoint l1-norms.
  int edge_l1(EdgeId e) const noexcept;

 private:
  friend class DomainBuilder;
  static constexpr std::uint8_t kSourceBit = 1;
  static constexpr std::uint8_t kTargetBit = 2;

  std::size_t box_index(const Point& p) const noexcept;
  Point box_coordinates(std::size_t b) const noexcept;
  VertexId vertex_of_box(std::size_t b) const noexcept {
    return box_to_vertex_.empty() ? static_cast<VertexId>(b) : box_to_vertex_[b];
  }
  std::size_t box_of_vertex(VertexId v) const noexcept {
    return vertex_to_box_.empty() ? v : vertex_to_box_[v];
  }

  int dim_ = 1;
  DomainKind kind_ = DomainKind::FullBox;
  DomainParams params_;
  std::array<std::size_t, kMaxDim> stride_{};
  std::array<int, kMaxDim> extent_{};
  std::vector<VertexId> box_to_vertex_;  // empty when every box point is a vertex
  std::vector<std::uint32_t> vertex_to_box_;
  std::vector<std::uint32_t> adj_offset_;
  std::vector<VertexId> adj_;
  std::vector<EdgeId> first_edge_;
  std::vector<std::uint8_t> role_;
  std::vector<VertexId> sources_;
  std::vector<VertexId> targets_;
};

using DomainPtr = std::shared_ptr<const Domain>;

/// D_M(0) with target boundary |y|_inf = M.
DomainPtr build_full_box(int d, int M, const BuildOptions& opts = {});
/// D_k(0) intersected with [0,n]^d; target is the union of the faces of
/// [0,k]^d that avoid the origin.
DomainPtr build_half_box(int d, int k, int n, const BuildOptions& opts = {});
/// Edge set E_n \ E_R with sources on |x|_inf = R and targets on |x|_inf = n.
DomainPtr build_annulus(int d, int R, int n, const BuildOptions& opts = {});
/// [-(L-n), L] x [-K, K]^(d-1) with source 0 and target n*e1.
DomainPtr build_slab_segment(int d, int K, int n, int L, const BuildOptions& opts = {});
/// Arbitrary box containing the origin; source 0, no targets.
DomainPtr build_box(int d, const Point& lo, const Point& hi, const BuildOptions& opts = {});

/// Edges with |e|_1 == k, in canonical order.
std::vector<EdgeId> shell_edges(const Domain& domain, int k);

/// Edges with both endpoints in D_R(center) (|y - center|_inf <= R).
std::vector<EdgeId> ball_edges(const Domain& domain, const Point& center, int R);

/// Estimated resident size of a domain with the given vertex/edge counts.
std::uint64_t estimated_domain_bytes(std::uint64_t vertices, std::uint64_t edges, bool holes) noexcept;

std::string domain_to_json(const Domain& domain);
DomainPtr domain_from_json(const std::string& json, const BuildOptions& opts = {});
std::string vertices_csv(const Domain& domain);
std::string edges_csv(const Domain& domain);

}  // namespace rcap
