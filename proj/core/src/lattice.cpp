#include "rcap/lattice.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "rcap/error.hpp"

namespace rcap {

int norm_inf(const Point& p, int d) noexcept {
  int m = 0;
  for (int i = 0; i < d; ++i) m = std::max(m, std::abs(p[i]));
  return m;
}

int norm_1(const Point& p, int d) noexcept {
  int s = 0;
  for (int i = 0; i < d; ++i) s += std::abs(p[i]);
  return s;
}

Point unit_vector(int axis, int scale) noexcept {
  Point p{};
  p[axis] = scale;
  return p;
}

const char* to_string(DomainKind kind) noexcept {
  switch (kind) {
    case DomainKind::FullBox: return "FullBox";
    case DomainKind::HalfBox: return "HalfBox";
    case DomainKind::Annulus: return "Annulus";
    case DomainKind::SlabSegment: return "SlabSegment";
    case DomainKind::Box: return "Box";
  }
  return "?";
}

std::uint64_t estimated_domain_bytes(std::uint64_t vertices, std::uint64_t edges, bool holes) noexcept {
  // adjacency offsets + first-edge offsets + role byte, two adjacency slots per edge
  std::uint64_t bytes = vertices * 9 + edges * 8;
  if (holes) bytes += vertices * 8;
  return bytes;
}

// ---------------------------------------------------------------------------

std::size_t Domain::box_index(const Point& p) const noexcept {
  std::size_t b = 0;
  for (int i = 0; i < dim_; ++i) b += static_cast<std::size_t>(p[i] - params_.lo[i]) * stride_[i];
  return b;
}

Point Domain::box_coordinates(std::size_t b) const noexcept {
  Point p{};
  for (int i = 0; i < dim_; ++i) {
    p[i] = params_.lo[i] + static_cast<int>(b % static_cast<std::size_t>(extent_[i]));
    b /= static_cast<std::size_t>(extent_[i]);
  }
  return p;
}

Point Domain::coordinates(VertexId v) const noexcept { return box_coordinates(box_of_vertex(v)); }

std::optional<VertexId> Domain::index_of(const Point& p) const noexcept {
  for (int i = 0; i < dim_; ++i) {
    if (p[i] < params_.lo[i] || p[i] > params_.hi[i]) return std::nullopt;
  }
  for (int i = dim_; i < kMaxDim; ++i) {
    if (p[i] != 0) return std::nullopt;
  }
  const VertexId v = vertex_of_box(box_index(p));
  if (v == kNoVertex) return std::nullopt;
  return v;
}

std::pair<VertexId, VertexId> Domain::edge(EdgeId e) const noexcept {
  // first_edge_ is non-decreasing; the owner is the last vertex whose offset <= e
  auto it = std::upper_bound(first_edge_.begin(), first_edge_.end(), e);
  const auto u = static_cast<VertexId>(std::distance(first_edge_.begin(), it) - 1);
  return {u, up_neighbors(u)[e - first_edge_[u]]};
}

std::optional<EdgeId> Domain::edge_between(VertexId u, VertexId v) const noexcept {
  if (u > v) std::swap(u, v);
  const auto up = up_neighbors(u);
  for (std::size_t i = 0; i < up.size(); ++i) {
    if (up[i] == v) return first_edge_[u] + static_cast<EdgeId>(i);
  }
  return std::nullopt;
}

int Domain::edge_axis(EdgeId e) const noexcept {
  const auto [u, v] = edge(e);
  const std::size_t diff = box_of_vertex(v) - box_of_vertex(u);
  for (int i = 0; i < dim_; ++i) {
    if (stride_[i] == diff) return i;
  }
  return -1;
}

int Domain::edge_l1(EdgeId e) const noexcept {
  const auto [u, v] = edge(e);
  return std::max(norm_1(coordinates(u), dim_), norm_1(coordinates(v), dim_));
}

// ---------------------------------------------------------------------------

class DomainBuilder {
 public:
  struct Cutout {
    Point lo{};
    Point hi{};
  };

  static std::shared_ptr<Domain> build(int d, DomainKind kind, DomainParams params,
                                       std::optional<Cutout> cutout, const BuildOptions& opts) {
    if (d < 1 || d > kMaxDim) {
      throw Error(ErrorKind::InvalidArgument, "dimension must lie in [1, " + std::to_string(kMaxDim) + "]");
    }
    auto dom = std::shared_ptr<Domain>(new Domain());
    dom->dim_ = d;
    dom->kind_ = kind;
    for (int i = d; i < kMaxDim; ++i) params.lo[i] = params.hi[i] = 0;
    dom->params_ = params;

    std::uint64_t box_points = 1;
    std::uint64_t box_edges = 0;
    for (int i = 0; i < kMaxDim; ++i) {
      dom->extent_[i] = i < d ? params.hi[i] - params.lo[i] + 1 : 1;
      if (dom->extent_[i] < 1) throw Error(ErrorKind::InvalidArgument, "empty box extent");
    }
    for (int i = 0; i < d; ++i) {
      dom->stride_[i] = i == 0 ? 1 : dom->stride_[i - 1] * static_cast<std::size_t>(dom->extent_[i - 1]);
      std::uint64_t along = static_cast<std::uint64_t>(dom->extent_[i] - 1);
      for (int j = 0; j < d; ++j) {
        if (j != i) along *= static_cast<std::uint64_t>(dom->extent_[j]);
      }
      box_edges += along;
      box_points *= static_cast<std::uint64_t>(dom->extent_[i]);
      if (box_points > std::numeric_limits<std::uint32_t>::max() / 2) {
        throw Error(ErrorKind::SizingError, "domain exceeds 32-bit vertex indexing");
      }
    }
    const std::uint64_t bytes = estimated_domain_bytes(box_points, box_edges, cutout.has_value());
    if (bytes > opts.memory_budget_bytes) {
      throw Error(ErrorKind::SizingError, "domain needs ~" + std::to_string(bytes) + " bytes, budget is " +
                                              std::to_string(opts.memory_budget_bytes));
    }

    const auto in_cutout = [&](const Point& p) {
      if (!cutout) return false;
      for (int i = 0; i < d; ++i) {
        if (p[i] < cutout->lo[i] || p[i] > cutout->hi[i]) return false;
      }
      return true;
    };

    const std::size_t nbox = static_cast<std::size_t>(box_points);
    // Membership: with a cutout, a point survives iff it keeps an edge.
    if (cutout) {
      dom->box_to_vertex_.assign(nbox, kNoVertex);
      VertexId next = 0;
      for (std::size_t b = 0; b < nbox; ++b) {
        const Point p = dom->box_coordinates(b);
        bool keep = !in_cutout(p);
        for (int i = 0; i < d && !keep; ++i) {
          for (int s : {-1, 1}) {
            Point q = p;
            q[i] += s;
            if (q[i] >= params.lo[i] && q[i] <= params.hi[i] && !in_cutout(q)) keep = true;
          }
        }
        if (keep) {
          dom->box_to_vertex_[b] = next++;
          dom->vertex_to_box_.push_back(static_cast<std::uint32_t>(b));
        }
      }
    }
    const std::size_t nv = cutout ? dom->vertex_to_box_.size() : nbox;

    dom->adj_offset_.assign(nv + 1, 0);
    dom->first_edge_.assign(nv + 1, 0);
    dom->adj_.reserve(static_cast<std::size_t>(2 * box_edges));
    for (VertexId v = 0; v < nv; ++v) {
      const std::size_t b = dom->box_of_vertex(v);
      const Point p = dom->box_coordinates(b);
      const bool pc = in_cutout(p);
      // descending strides give ascending neighbor order below, ascending above
      for (int i = d - 1; i >= 0; --i) {
        if (p[i] > params.lo[i]) {
          Point q = p;
          --q[i];
          if (!(pc && in_cutout(q))) dom->adj_.push_back(dom->vertex_of_box(b - dom->stride_[i]));
        }
      }
      std::uint32_t ups = 0;
      for (int i = 0; i < d; ++i) {
        if (p[i] < params.hi[i]) {
          Point q = p;
          ++q[i];
          if (!(pc && in_cutout(q))) {
            dom->adj_.push_back(dom->vertex_of_box(b + dom->stride_[i]));
            ++ups;
          }
        }
      }
      dom->adj_offset_[v + 1] = static_cast<std::uint32_t>(dom->adj_.size());
      dom->first_edge_[v + 1] = dom->first_edge_[v] + ups;
    }
    dom->adj_.shrink_to_fit();
    dom->role_.assign(nv, 0);
    return dom;
  }

  static void set_roles(Domain& dom, std::vector<VertexId> sources, std::vector<VertexId> targets) {
    std::sort(sources.begin(), sources.end());
    std::sort(targets.begin(), targets.end());
    for (VertexId s : sources) dom.role_[s] |= Domain::kSourceBit;
    for (VertexId t : targets) {
      if (dom.role_[t] & Domain::kSourceBit) {
        throw Error(ErrorKind::InvalidArgument, "source vertex belongs to the target set");
      }
      dom.role_[t] |= Domain::kTargetBit;
    }
    dom.sources_ = std::move(sources);
    dom.targets_ = std::move(targets);
  }

  template <typename Pred>
  static std::vector<VertexId> select(const Domain& dom, Pred pred) {
    std::vector<VertexId> out;
    const auto nv = static_cast<VertexId>(dom.num_vertices());
    for (VertexId v = 0; v < nv; ++v) {
      if (pred(dom.coordinates(v))) out.push_back(v);
    }
    return out;
  }
};

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw Error(ErrorKind::InvalidArgument, what);
}

Point filled(int d, int value) {
  Point p{};
  for (int i = 0; i < d; ++i) p[i] = value;
  return p;
}

}  // namespace

DomainPtr build_full_box(int d, int M, const BuildOptions& opts) {
  require(d >= 1 && d <= kMaxDim, "d must lie in [1, 6]");
  require(M >= 1, "M must be >= 1");
  DomainParams params;
  params.M = M;
  params.lo = filled(d, -M);
  params.hi = filled(d, M);
  auto dom = DomainBuilder::build(d, DomainKind::FullBox, params, std::nullopt, opts);
  auto targets = DomainBuilder::select(*dom, [&](const Point& p) { return norm_inf(p, d) == M; });
  DomainBuilder::set_roles(*dom, {*dom->index_of(Point{})}, std::move(targets));
  return dom;
}

DomainPtr build_half_box(int d, int k, int n, const BuildOptions& opts) {
  require(d >= 1 && d <= kMaxDim, "d must lie in [1, 6]");
  require(k >= 1 && k <= n, "half box needs 1 <= k <= n");
  DomainParams params;
  params.k = k;
  params.n = n;
  params.lo = filled(d, 0);
  params.hi = filled(d, k);
  auto dom = DomainBuilder::build(d, DomainKind::HalfBox, params, std::nullopt, opts);
  auto targets = DomainBuilder::select(*dom, [&](const Point& p) {
    for (int i = 0; i < d; ++i) {
      if (p[i] == k) return true;
    }
    return false;
  });
  DomainBuilder::set_roles(*dom, {*dom->index_of(Point{})}, std::move(targets));
  return dom;
}

DomainPtr build_annulus(int d, int R, int n, const BuildOptions& opts) {
  require(d >= 1 && d <= kMaxDim, "d must lie in [1, 6]");
  if (R < 0 || R >= n) throw Error(ErrorKind::InvalidArgument, "annulus needs 0 <= R < n");
  DomainParams params;
  params.R = R;
  params.n = n;
  params.lo = filled(d, -n);
  params.hi = filled(d, n);
  DomainBuilder::Cutout cut{filled(d, -R), filled(d, R)};
  auto dom = DomainBuilder::build(d, DomainKind::Annulus, params, cut, opts);
  auto sources = DomainBuilder::select(*dom, [&](const Point& p) { return norm_inf(p, d) == R; });
  auto targets = DomainBuilder::select(*dom, [&](const Point& p) { return norm_inf(p, d) == n; });
  DomainBuilder::set_roles(*dom, std::move(sources), std::move(targets));
  return dom;
}

DomainPtr build_slab_segment(int d, int K, int n, int L, const BuildOptions& opts) {
  require(d >= 1 && d <= kMaxDim, "d must lie in [1, 6]");
  require(K >= 0, "K must be >= 0");
  require(n >= 1, "n must be >= 1");
  require(L >= n, "truncation L must be >= n");
  DomainParams params;
  params.K = K;
  params.n = n;
  params.L = L;
  params.lo = filled(d, -K);
  params.hi = filled(d, K);
  params.lo[0] = -(L - n);
  params.hi[0] = L;
  auto dom = DomainBuilder::build(d, DomainKind::SlabSegment, params, std::nullopt, opts);
  DomainBuilder::set_roles(*dom, {*dom->index_of(Point{})}, {*dom->index_of(unit_vector(0, n))});
  return dom;
}

DomainPtr build_box(int d, const Point& lo, const Point& hi, const BuildOptions& opts) {
  require(d >= 1 && d <= kMaxDim, "d must lie in [1, 6]");
  for (int i = 0; i < d; ++i) require(lo[i] <= 0 && hi[i] >= 0, "box must contain the origin");
  DomainParams params;
  params.lo = lo;
  params.hi = hi;
  auto dom = DomainBuilder::build(d, DomainKind::Box, params, std::nullopt, opts);
  DomainBuilder::set_roles(*dom, {*dom->index_of(Point{})}, {});
  return dom;
}

std::vector<EdgeId> shell_edges(const Domain& domain, int k) {
  std::vector<EdgeId> out;
  const int d = domain.dim();
  domain.for_each_edge([&](EdgeId e, VertexId u, VertexId v) {
    if (std::max(norm_1(domain.coordinates(u), d), norm_1(domain.coordinates(v), d)) == k) out.push_back(e);
  });
  return out;
}

std::vector<EdgeId> ball_edges(const Domain& domain, const Point& center, int R) {
  std::vector<EdgeId> out;
  const int d = domain.dim();
  const auto inside = [&](VertexId v) {
    const Point p = domain.coordinates(v);
    for (int i = 0; i < d; ++i) {
      if (std::abs(p[i] - center[i]) > R) return false;
    }
    return true;
  };
  domain.for_each_edge([&](EdgeId e, VertexId u, VertexId v) {
    if (inside(u) && inside(v)) out.push_back(e);
  });
  return out;
}

// ---------------------------------------------------------------------------

std::string domain_to_json(const Domain& domain) {
  const auto& p = domain.params();
  const int d = domain.dim();
  nlohmann::ordered_json j;
  j["kind"] = to_string(domain.kind());
  j["d"] = d;
  switch (domain.kind()) {
    case DomainKind::FullBox: j["M"] = p.M; break;
    case DomainKind::HalfBox: j["k"] = p.k; j["n"] = p.n; break;
    case DomainKind::Annulus: j["R"] = p.R; j["n"] = p.n; break;
    case DomainKind::SlabSegment: j["K"] = p.K; j["n"] = p.n; j["L"] = p.L; break;
    case DomainKind::Box:
      j["lo"] = std::vector<int>(p.lo.begin(), p.lo.begin() + d);
      j["hi"] = std::vector<int>(p.hi.begin(), p.hi.begin() + d);
      break;
  }
  return j.dump();
}

DomainPtr domain_from_json(const std::string& text, const BuildOptions& opts) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::InvalidArgument, std::string("domain descriptor: ") + ex.what());
  }
  try {
    const std::string kind = j.at("kind");
    const int d = j.at("d");
    if (kind == "FullBox") return build_full_box(d, j.at("M"), opts);
    if (kind == "HalfBox") return build_half_box(d, j.at("k"), j.at("n"), opts);
    if (kind == "Annulus") return build_annulus(d, j.at("R"), j.at("n"), opts);
    if (kind == "SlabSegment") return build_slab_segment(d, j.at("K"), j.at("n"), j.at("L"), opts);
    if (kind == "Box") {
      const auto lo = j.at("lo").get<std::vector<int>>();
      const auto hi = j.at("hi").get<std::vector<int>>();
      if (static_cast<int>(lo.size()) != d || static_cast<int>(hi.size()) != d || d > kMaxDim) {
        throw Error(ErrorKind::InvalidArgument, "box bounds must have d entries");
      }
      Point plo{}, phi{};
      std::copy(lo.begin(), lo.end(), plo.begin());
      std::copy(hi.begin(), hi.end(), phi.begin());
      return build_box(d, plo, phi, opts);
    }
    throw Error(ErrorKind::InvalidArgument, "unknown domain kind '" + kind + "'");
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::InvalidArgument, std::string("domain descriptor: ") + ex.what());
  }
}

std::string vertices_csv(const Domain& domain) {
  std::ostringstream os;
  const int d = domain.dim();
  os << "vertex";
  for (int i = 0; i < d; ++i) os << ",x" << i;
  os << ",role\n";
  const auto nv = static_cast<VertexId>(domain.num_vertices());
  for (VertexId v = 0; v < nv; ++v) {
    const Point p = domain.coordinates(v);
    os << v;
    for (int i = 0; i < d; ++i) os << ',' << p[i];
    os << ',' << (domain.is_source(v) ? "source" : domain.is_target(v) ? "target" : "interior") << '\n';
  }
  return os.str();
}

std::string edges_csv(const Domain& domain) {
  std::ostringstream os;
  const int d = domain.dim();
  os << "edge,u,v,axis,shell\n";
  domain.for_each_edge([&](EdgeId e, VertexId u, VertexId v) {
    const Point a = domain.coordinates(u);
    const Point b = domain.coordinates(v);
    int axis = 0;
    while (axis < d && a[axis] == b[axis]) ++axis;
    os << e << ',' << u << ',' << v << ',' << axis << ',' << std::max(norm_1(a, d), norm_1(b, d)) << '\n';
  });
  return os.str();
}

}  // namespace rcap
