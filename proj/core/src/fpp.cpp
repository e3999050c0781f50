#include "rcap/fpp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "rcap/error.hpp"
#include "rcap/parallel.hpp"
#include "rcap/shortest_path.hpp"
#include "text.hpp"

namespace rcap {

using detail::fmt;

namespace {

constexpr std::uint64_t kMuStream = 0x6d75ULL << 32;
constexpr std::uint64_t kBootstrapStream = 0x6273ULL << 32;
constexpr long kBlock = 64;

VertexId vertex_at(const Domain& dom, const Point& p) {
  auto v = dom.index_of(p);
  if (!v) throw Error(ErrorKind::InvalidArgument, "point outside the domain");
  return *v;
}

}  // namespace

void WeightConfig::validate() const {
  if (!domain) throw Error(ErrorKind::InvalidArgument, "weight config without a domain");
  if (tau.size() != domain->num_edges()) throw Error(ErrorKind::InvalidArgument, "one weight per edge required");
  for (double t : tau) {
    if (!std::isfinite(t) || t < 0.0) throw Error(ErrorKind::InvalidArgument, "weights must be finite and nonnegative");
  }
}

WeightConfig constant_weights(DomainPtr domain, double c) {
  WeightConfig cfg{domain, std::vector<double>(domain->num_edges(), c)};
  cfg.validate();
  return cfg;
}

void sample_weights(const WeightModel& model, RandomStream& rng, std::span<double> tau) {
  for (double& t : tau) t = sample(model, rng.uniform());
}

WeightConfig sample_weights(DomainPtr domain, const WeightModel& model, RandomStream& rng) {
  model.validate();
  WeightConfig cfg{domain, std::vector<double>(domain->num_edges())};
  sample_weights(model, rng, cfg.tau);
  return cfg;
}

PassageResult passage_time(const WeightConfig& config, std::span<const VertexId> sources,
                           std::span<const VertexId> targets, bool want_geodesic,
                           std::span<const std::uint8_t> allowed) {
  const Domain& dom = *config.domain;
  if (config.tau.size() != dom.num_edges()) throw Error(ErrorKind::InvalidArgument, "one weight per edge required");
  if (sources.empty() || targets.empty()) throw Error(ErrorKind::InvalidArgument, "empty source or target set");
  for (VertexId v : sources) {
    if (v >= dom.num_vertices()) throw Error(ErrorKind::InvalidArgument, "source outside the domain");
  }
  for (VertexId v : targets) {
    if (v >= dom.num_vertices()) throw Error(ErrorKind::InvalidArgument, "target outside the domain");
  }
  ShortestPaths sp(config.domain);
  NearestTarget hit = sp.nearest(config.tau, sources, targets, allowed, want_geodesic);
  PassageResult out;
  out.sources.assign(sources.begin(), sources.end());
  out.targets.assign(targets.begin(), targets.end());
  out.reachable = hit.reachable;
  out.value = hit.reachable ? hit.distance : std::numeric_limits<double>::infinity();
  out.target = hit.target;
  if (want_geodesic && hit.reachable) out.geodesic = std::move(hit.path);
  return out;
}

PassageResult passage_time(const WeightConfig& config, VertexId source, VertexId target, bool want_geodesic) {
  return passage_time(config, std::span<const VertexId>(&source, 1), std::span<const VertexId>(&target, 1),
                      want_geodesic);
}

double path_weight(const WeightConfig& config, std::span<const VertexId> path) {
  double sum = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    auto e = config.domain->edge_between(path[i - 1], path[i]);
    if (!e) throw Error(ErrorKind::InvalidArgument, "path step is not an edge");
    sum += config.tau[*e];
  }
  return sum;
}

bool subadditivity_check(const WeightConfig& config, VertexId x, VertexId y, VertexId z) {
  const double xz = passage_time(config, x, z).value;
  const double xy = passage_time(config, x, y).value;
  const double yz = passage_time(config, y, z).value;
  return xz <= xy + yz + 1e-9;
}

double slab_passage(int d, int K, int n, int L, const WeightModel& model, RandomStream& rng) {
  if (L < n) throw Error(ErrorKind::InvalidArgument, "slab truncation L must be at least n");
  auto dom = build_slab_segment(d, K, n, L);
  WeightConfig cfg = sample_weights(dom, model, rng);
  return passage_time(cfg, dom->sources(), dom->targets()).value;
}

DomainPtr passage_box(int d, int n, double margin, const BuildOptions& opts) {
  if (d < 1 || d > kMaxDim) throw Error(ErrorKind::InvalidArgument, "dimension out of range");
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "n must be positive");
  if (!(margin >= 0.0)) throw Error(ErrorKind::InvalidArgument, "box margin must be nonnegative");
  const int m = static_cast<int>(std::ceil(margin * n));
  Point lo{}, hi{};
  for (int i = 0; i < d; ++i) {
    lo[i] = -m;
    hi[i] = m;
  }
  hi[0] = n + m;
  return build_box(d, lo, hi, opts);
}

MuEstimate estimate_mu(int d, const WeightModel& model, const std::vector<int>& n_list, const MuOptions& opts) {
  if (n_list.empty()) throw Error(ErrorKind::InvalidArgument, "empty n list");
  for (std::size_t i = 1; i < n_list.size(); ++i) {
    if (n_list[i] <= n_list[i - 1]) throw Error(ErrorKind::InvalidArgument, "n list must be increasing");
  }
  if (opts.samples < 2) throw Error(ErrorKind::InvalidArgument, "at least two samples per n");
  if (opts.constant) {
    if (!std::isfinite(*opts.constant) || *opts.constant < 0.0)
      throw Error(ErrorKind::InvalidArgument, "constant weight must be finite and nonnegative");
  } else {
    model.validate();
  }

  MuEstimate out;
  out.seed = opts.seed;
  std::vector<std::vector<double>> all(n_list.size());
  for (std::size_t k = 0; k < n_list.size(); ++k) {
    const int n = n_list[k];
    auto dom = passage_box(d, n, opts.box_margin);
    Point end{};
    end[0] = n;
    const VertexId target = vertex_at(*dom, end);
    const VertexId origin = vertex_at(*dom, Point{});
    std::vector<double>& values = all[k];
    values.assign(static_cast<std::size_t>(opts.samples), 0.0);
    const std::size_t blocks = static_cast<std::size_t>((opts.samples + kBlock - 1) / kBlock);
    parallel_for(blocks, opts.threads, [&](std::size_t b) {
      ShortestPaths sp(dom);
      std::vector<double> tau(dom->num_edges(), opts.constant.value_or(0.0));
      const long lo = static_cast<long>(b) * kBlock;
      const long hi = std::min(opts.samples, lo + kBlock);
      for (long i = lo; i < hi; ++i) {
        if (!opts.constant) {
          RandomStream rng(opts.seed, kMuStream | static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(i));
          sample_weights(model, rng, tau);
        }
        values[i] = sp.nearest(tau, std::span(&origin, 1), std::span(&target, 1)).distance;
      }
    });
    MuRow row{n, 0.0, 0.0, opts.samples};
    for (double v : values) row.mean += v;
    row.mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - row.mean) * (v - row.mean);
    row.stderr_mean = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
    out.rows.push_back(row);
  }

  // Raw-moment form: exact when the means are exactly linear in n, so
  // deterministic weights give mu_hat = c to the last bit.
  auto fit = [&](const std::vector<double>& means) {
    if (means.size() == 1) return std::pair{means[0] / n_list[0], 0.0};
    const double N = static_cast<double>(means.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < means.size(); ++k) {
      const double x = n_list[k];
      sx += x;
      sy += means[k];
      sxx += x * x;
      sxy += x * means[k];
    }
    const double slope = (N * sxy - sx * sy) / (N * sxx - sx * sx);
    return std::pair{slope, (sy - slope * sx) / N};
  };

  std::vector<double> means;
  for (const auto& row : out.rows) means.push_back(row.mean);
  std::tie(out.mu_hat, out.intercept) = fit(means);

  if (opts.bootstrap > 1) {
    RandomStream rng(opts.seed, kBootstrapStream, 0);
    std::vector<double> slopes;
    slopes.reserve(static_cast<std::size_t>(opts.bootstrap));
    for (int b = 0; b < opts.bootstrap; ++b) {
      std::vector<double> resampled(all.size());
      for (std::size_t k = 0; k < all.size(); ++k) {
        const auto& values = all[k];
        std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
        double s = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) s += values[pick(rng.engine())];
        resampled[k] = s / static_cast<double>(values.size());
      }
      slopes.push_back(fit(resampled).first);
    }
    double m = 0.0;
    for (double s : slopes) m += s;
    m /= static_cast<double>(slopes.size());
    double ss = 0.0;
    for (double s : slopes) ss += (s - m) * (s - m);
    out.stderr_mu = std::sqrt(ss / static_cast<double>(slopes.size() - 1));
  }
  if (opts.keep_samples) out.samples = std::move(all);
  return out;
}

std::string mu_samples_csv(const MuEstimate& estimate) {
  std::ostringstream os;
  os << "seed,n,sample,T\n";
  for (std::size_t k = 0; k < estimate.samples.size(); ++k) {
    for (std::size_t i = 0; i < estimate.samples[k].size(); ++i) {
      os << estimate.seed << ',' << estimate.rows[k].n << ',' << i << ',' << fmt(estimate.samples[k][i]) << '\n';
    }
  }
  return os.str();
}

std::string mu_table_csv(const MuEstimate& estimate) {
  std::ostringstream os;
  os << "n,mean,stderr,samples\n";
  for (const auto& row : estimate.rows) {
    os << row.n << ',' << fmt(row.mean) << ',' << fmt(row.stderr_mean) << ',' << row.samples << '\n';
  }
  return os.str();
}

std::string to_json(const MuEstimate& estimate) {
  nlohmann::ordered_json j;
  j["mu_hat"] = estimate.mu_hat;
  j["stderr"] = estimate.stderr_mu;
  j["intercept"] = estimate.intercept;
  j["seed"] = estimate.seed;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : estimate.rows) {
    rows.push_back({{"n", row.n}, {"mean", row.mean}, {"stderr", row.stderr_mean}, {"samples", row.samples}});
  }
  j["rows"] = rows;
  return j.dump(2);
}

}  // namespace rcap
