#include "rcap/shortest_path.hpp"

#include <algorithm>
#include <functional>
#include <limits>

#include "rcap/error.hpp"

namespace rcap {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

ShortestPaths::ShortestPaths(DomainPtr domain) : domain_(std::move(domain)) {
  const std::size_t nv = domain_->num_vertices();
  dist_.assign(nv, kInf);
  pred_.assign(nv, kNoVertex);
  target_stamp_.assign(nv, 0);
  heap_.reserve(nv);
}

template <typename Stop>
VertexId ShortestPaths::run(std::span<const double> weights, std::span<const VertexId> sources,
                            std::span<const std::uint8_t> allowed, bool track_pred, Stop stop) {
  const Domain& dom = *domain_;
  if (weights.size() != dom.num_edges()) {
    throw Error(ErrorKind::InvalidArgument, "edge weight vector does not match the domain");
  }
  std::fill(dist_.begin(), dist_.end(), kInf);
  if (track_pred) std::fill(pred_.begin(), pred_.end(), kNoVertex);
  heap_.clear();
  const auto cmp = std::greater<>{};
  for (VertexId s : sources) {
    dist_[s] = 0.0;
    heap_.emplace_back(0.0, s);
  }
  std::make_heap(heap_.begin(), heap_.end(), cmp);

  while (!heap_.empty()) {
    std::pop_heap(heap_.begin(), heap_.end(), cmp);
    const auto [du, u] = heap_.back();
    heap_.pop_back();
    if (du > dist_[u]) continue;
    if (stop(u)) return u;

    const auto nbrs = dom.neighbors(u);
    const auto ups = dom.up_neighbors(u);
    const std::size_t downs = nbrs.size() - ups.size();
    for (std::size_t i = 0; i < nbrs.size(); ++i) {
      const VertexId w = nbrs[i];
      EdgeId e;
      if (i >= downs) {
        e = dom.first_edge(u) + static_cast<EdgeId>(i - downs);
      } else {
        const auto wu = dom.up_neighbors(w);
        e = dom.first_edge(w) + static_cast<EdgeId>(std::find(wu.begin(), wu.end(), u) - wu.begin());
      }
      if (!allowed.empty() && !allowed[e]) continue;
      const double nd = du + weights[e];
      if (nd < dist_[w]) {
        dist_[w] = nd;
        if (track_pred) pred_[w] = u;
        heap_.emplace_back(nd, w);
        std::push_heap(heap_.begin(), heap_.end(), cmp);
      }
    }
  }
  return kNoVertex;
}

const std::vector<double>& ShortestPaths::distances(std::span<const double> weights,
                                                    std::span<const VertexId> sources,
                                                    std::span<const std::uint8_t> allowed) {
  run(weights, sources, allowed, false, [](VertexId) { return false; });
  return dist_;
}

NearestTarget ShortestPaths::nearest(std::span<const double> weights, std::span<const VertexId> sources,
                                     std::span<const VertexId> targets, std::span<const std::uint8_t> allowed,
                                     bool want_path) {
  if (++stamp_ == 0) {
    std::fill(target_stamp_.begin(), target_stamp_.end(), 0);
    stamp_ = 1;
  }
  for (VertexId t : targets) target_stamp_[t] = stamp_;
  const VertexId hit =
      run(weights, sources, allowed, want_path, [this](VertexId u) { return target_stamp_[u] == stamp_; });

  NearestTarget out;
  if (hit == kNoVertex) {
    out.distance = kInf;
    return out;
  }
  out.reachable = true;
  out.target = hit;
  out.distance = dist_[hit];
  if (want_path) {
    for (VertexId v = hit; v != kNoVertex; v = pred_[v]) out.path.push_back(v);
    std::reverse(out.path.begin(), out.path.end());
  }
  return out;
}

}  // namespace rcap
