#include "rcap/pathflow.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "rcap/error.hpp"
#include "rcap/parallel.hpp"

namespace rcap {

std::vector<double> PathMeasure::probabilities() const {
  std::vector<double> out(counts.size());
  for (std::size_t e = 0; e < counts.size(); ++e) out[e] = p(static_cast<EdgeId>(e));
  return out;
}

PathMeasure PathMeasure::single_path(DomainPtr domain, std::span<const VertexId> path) {
  PathMeasure m;
  m.counts.assign(domain->num_edges(), 0);
  m.boundary_count = 1;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const auto e = domain->edge_between(path[i - 1], path[i]);
    if (!e) throw Error(ErrorKind::InvalidArgument, "path steps along a non-edge");
    m.counts[*e] = 1;
  }
  m.domain = std::move(domain);
  return m;
}

namespace {

// Squared distance from p to the segment [0, x], scaled by |x|^2 so it stays
// an exact integer.
std::int64_t scaled_segment_dist2(const Point& p, const Point& x, int d) {
  std::int64_t dot = 0, xx = 0, pp = 0, px = 0;
  for (int i = 0; i < d; ++i) {
    dot += std::int64_t{p[i]} * x[i];
    xx += std::int64_t{x[i]} * x[i];
    pp += std::int64_t{p[i]} * p[i];
    const std::int64_t diff = p[i] - x[i];
    px += diff * diff;
  }
  if (dot <= 0) return pp * xx;
  if (dot >= xx) return px * xx;
  return pp * xx - dot * dot;
}

}  // namespace

std::vector<VertexId> build_gamma(const Domain& domain, const Point& x) {
  if (domain.kind() != DomainKind::FullBox) {
    throw Error(ErrorKind::UnsupportedDomain, "gamma paths are defined on FullBox domains");
  }
  const int d = domain.dim();
  const int n = domain.params().M;
  const auto target = domain.index_of(x);
  if (!target || norm_inf(x, d) != n) throw Error(ErrorKind::NotBoundary, "point is not on the outer boundary");

  std::vector<VertexId> path;
  path.reserve(static_cast<std::size_t>(norm_1(x, d)) + 1);
  Point p{};
  path.push_back(*domain.index_of(p));
  while (p != x) {
    int best_axis = -1;
    std::int64_t best = 0;
    for (int i = 0; i < d; ++i) {
      if (p[i] == x[i]) continue;
      Point q = p;
      q[i] += x[i] > p[i] ? 1 : -1;
      const std::int64_t dist = scaled_segment_dist2(q, x, d);
      if (best_axis < 0 || dist <= best) {
        best = dist;
        best_axis = i;
      }
    }
    p[best_axis] += x[best_axis] > p[best_axis] ? 1 : -1;
    path.push_back(*domain.index_of(p));
  }
  return path;
}

PathMeasure edge_marginals(DomainPtr domain, const MarginalsOptions& opts) {
  if (domain->kind() != DomainKind::FullBox) {
    throw Error(ErrorKind::UnsupportedDomain, "edge marginals are defined on FullBox domains");
  }
  const auto boundary = domain->targets();
  if (boundary.size() > opts.boundary_cap) {
    throw Error(ErrorKind::BudgetExceeded, "boundary has " + std::to_string(boundary.size()) +
                                               " points, cap is " + std::to_string(opts.boundary_cap));
  }
  const std::size_t ne = domain->num_edges();
  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (boundary.size() + kChunk - 1) / kChunk;
  const int workers = static_cast<int>(std::min<std::size_t>(resolve_threads(opts.threads), std::max<std::size_t>(chunks, 1)));

  // Integer counts reduce exactly, so per-worker partial sums are bit-stable.
  std::vector<std::vector<std::uint64_t>> partial(static_cast<std::size_t>(workers));
  parallel_for(static_cast<std::size_t>(workers), workers, [&](std::size_t w) {
    auto& local = partial[w];
    local.assign(ne, 0);
    for (std::size_t c = w; c < chunks; c += static_cast<std::size_t>(workers)) {
      const std::size_t end = std::min(boundary.size(), (c + 1) * kChunk);
      for (std::size_t i = c * kChunk; i < end; ++i) {
        const auto path = build_gamma(*domain, domain->coordinates(boundary[i]));
        for (std::size_t s = 1; s < path.size(); ++s) ++local[*domain->edge_between(path[s - 1], path[s])];
      }
    }
  });

  PathMeasure m;
  m.counts.assign(ne, 0);
  for (const auto& local : partial) {
    for (std::size_t e = 0; e < ne; ++e) m.counts[e] += local[e];
  }
  m.boundary_count = boundary.size();
  m.domain = std::move(domain);
  return m;
}

double lagrangian_constant(const PathMeasure& measure, double r) {
  if (!(r > 1.0)) throw Error(ErrorKind::UnsupportedExponent, "Lagrangian constant needs r > 1");
  const double q = r / (r - 1.0);
  double sum = 0.0;
  for (std::size_t e = 0; e < measure.counts.size(); ++e) {
    if (measure.counts[e] != 0) sum += std::pow(measure.p(static_cast<EdgeId>(e)), q);
  }
  return sum;
}

double lagrangian_constant_by_shell(const PathMeasure& measure, double r) {
  if (!(r > 1.0)) throw Error(ErrorKind::UnsupportedExponent, "Lagrangian constant needs r > 1");
  const double q = r / (r - 1.0);
  std::map<int, double> shells;
  measure.domain->for_each_edge([&](EdgeId e, VertexId, VertexId) {
    if (measure.counts[e] != 0) shells[measure.domain->edge_l1(e)] += std::pow(measure.p(e), q);
  });
  double sum = 0.0;
  for (const auto& [k, s] : shells) sum += s;
  return sum;
}

double max_scaled_shell_marginal(const PathMeasure& measure) {
  const Domain& dom = *measure.domain;
  const int d = dom.dim();
  double best = 0.0;
  dom.for_each_edge([&](EdgeId e, VertexId, VertexId) {
    if (measure.counts[e] == 0) return;
    const int k = dom.edge_l1(e);
    best = std::max(best, measure.p(e) * std::pow(static_cast<double>(k), d - 1));
  });
  return best;
}

std::string path_measure_csv(const PathMeasure& measure) {
  std::ostringstream os;
  os.precision(17);
  os << "edge,shell,count,p\n";
  measure.domain->for_each_edge([&](EdgeId e, VertexId, VertexId) {
    os << e << ',' << measure.domain->edge_l1(e) << ',' << measure.counts[e] << ',' << measure.p(e) << '\n';
  });
  return os.str();
}

}  // namespace rcap
