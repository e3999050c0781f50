#include "rcap/ldp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "rcap/capacity.hpp"
#include "rcap/error.hpp"
#include "rcap/parallel.hpp"
#include "rcap/shortest_path.hpp"
#include "text.hpp"

namespace rcap {

using detail::fmt;

namespace {

constexpr std::uint64_t kTailStream = 0x746cULL << 40;
constexpr std::uint64_t kInclusionStream = 0x6963ULL << 40;
constexpr std::uint64_t kSumStream = 0x7374ULL << 40;
constexpr long kTailBlock = 256;
constexpr long kSumBlock = 4096;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

nlohmann::ordered_json number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

VertexId vertex_at(const Domain& dom, const Point& p) {
  auto v = dom.index_of(p);
  if (!v) throw Error(ErrorKind::GeometryError, "point outside the domain");
  return *v;
}

Point axis_point(int n) {
  Point p{};
  p[0] = n;
  return p;
}

std::vector<EdgeId> incident_edges(const Domain& dom, VertexId v) {
  std::vector<EdgeId> out;
  for (VertexId w : dom.neighbors(v)) out.push_back(*dom.edge_between(v, w));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

int ell_M(int d, double r, double M, int n) {
  if (d < 2) throw Error(ErrorKind::OutOfRange, "ell_M needs d >= 2");
  if (!(r > 1.0) || r > d) throw Error(ErrorKind::OutOfRange, "ell_M needs 1 < r <= d");
  if (!(M > 0.0)) throw Error(ErrorKind::InvalidArgument, "M must be positive");
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "n must be positive");
  double v = r == d ? M * n / (1.0 + std::log(static_cast<double>(n)))
                    : M * std::pow(static_cast<double>(n), (r - 1.0) / (d - 1.0));
  // Guard against 2.0000000000000004 rounding up to 3.
  const double nearest = std::round(v);
  if (std::abs(v - nearest) <= 1e-12 * std::max(1.0, v)) v = nearest;
  return static_cast<int>(std::ceil(v));
}

double g_scaling(int d, double r, int n, double N) {
  if (n < 1 || N < n) throw Error(ErrorKind::InvalidArgument, "g_scaling needs N >= n >= 1");
  if (!(r > 1.0)) throw Error(ErrorKind::InvalidArgument, "g_scaling needs r > 1");
  if (r < d) return std::pow(N, r);
  if (r == d) return std::pow(N, d) / std::pow(1.0 + std::log(static_cast<double>(n)), d - 1);
  return std::pow(N, r) / std::pow(static_cast<double>(n), r - d);
}

double theoretical_rate(int d, double r, double alpha, double xi, std::optional<double> lambda) {
  if (d < 2) throw Error(ErrorKind::InvalidArgument, "rate constants are stated for d >= 2");
  if (!(xi > 0.0)) throw Error(ErrorKind::InvalidArgument, "xi must be positive");
  if (!(alpha > 0.0) || !(r > 0.0)) throw Error(ErrorKind::InvalidArgument, "alpha and r must be positive");
  if (r <= 1.0) return 2.0 * d * alpha * std::pow(xi, r);
  if (r < d) {
    if (!lambda) throw Error(ErrorKind::MissingLambda, "1 < r < d needs the capacity lambda_{d,r}");
    return alpha * std::pow(2.0, 1.0 - r) * *lambda * std::pow(xi, r);
  }
  if (r == d) return alpha * std::pow(2.0, 1.0 - d) * std::pow(xi, d);
  throw Error(ErrorKind::OutOfRange, "no closed rate constant for r > d");
}

ScalingReport scaling_report(int d, double r, int n, double N, double M, double alpha, double xi,
                             std::optional<double> lambda) {
  ScalingReport rep{d, r, n, N, M, 0, 0.0, kNaN};
  if (r > 1.0 && r <= d && d >= 2) rep.ell = ell_M(d, r, M, n);
  rep.g = g_scaling(d, r, n, N);
  if (r <= d) rep.rate = theoretical_rate(d, r, alpha, xi, lambda);
  return rep;
}

std::string to_json(const ScalingReport& report) {
  nlohmann::ordered_json j;
  j["d"] = report.d;
  j["r"] = report.r;
  j["n"] = report.n;
  j["N"] = report.N;
  j["M"] = report.M;
  j["ell"] = report.ell;
  j["g"] = report.g;
  j["rate"] = number(report.rate);
  return j.dump(2);
}

// ---------------------------------------------------------------------------

InclusionGeometry inclusion_geometry(DomainPtr domain, int n, int ell) {
  if (ell < 1) throw Error(ErrorKind::GeometryError, "ball radius must be at least 1");
  if (2 * ell >= n) throw Error(ErrorKind::GeometryError, "balls around 0 and n e1 intersect");
  const Domain& dom = *domain;
  const int d = dom.dim();
  InclusionGeometry g;
  g.domain = domain;
  g.n = n;
  g.ell = ell;
  g.origin = vertex_at(dom, Point{});
  g.end = vertex_at(dom, axis_point(n));

  std::vector<std::uint8_t> in0(dom.num_vertices()), in1(dom.num_vertices());
  std::size_t count0 = 0, count1 = 0;
  for (VertexId v = 0; v < dom.num_vertices(); ++v) {
    const Point p = dom.coordinates(v);
    int r0 = 0, r1 = 0;
    for (int i = 0; i < d; ++i) {
      r0 = std::max(r0, std::abs(p[i]));
      r1 = std::max(r1, std::abs(p[i] - (i == 0 ? n : 0)));
    }
    if (r0 <= ell) {
      in0[v] = 1;
      ++count0;
      if (r0 == ell) g.boundary0.push_back(v);
    }
    if (r1 <= ell) {
      in1[v] = 1;
      ++count1;
      if (r1 == ell) g.boundary1.push_back(v);
    }
  }
  const auto full = static_cast<std::size_t>(std::pow(2 * ell + 1, d));
  if (count0 != full || count1 != full) throw Error(ErrorKind::GeometryError, "balls do not fit in the domain");

  g.inside0.assign(dom.num_edges(), 0);
  g.inside1.assign(dom.num_edges(), 0);
  g.outside.assign(dom.num_edges(), 0);
  dom.for_each_edge([&](EdgeId e, VertexId u, VertexId v) {
    g.inside0[e] = in0[u] && in0[v];
    g.inside1[e] = in1[u] && in1[v];
    g.outside[e] = !g.inside0[e] && !g.inside1[e];
  });
  return g;
}

InclusionOutcome event_inclusion_check(const InclusionGeometry& geometry, const WeightConfig& config, double mu,
                                       double xi, double eps) {
  if (config.domain != geometry.domain) throw Error(ErrorKind::InvalidArgument, "config lives on another domain");
  if (!(xi > 0.0) || !(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "xi and eps must be positive");
  const double n = geometry.n;
  ShortestPaths sp(geometry.domain);
  const auto origin = std::span(&geometry.origin, 1);
  const auto end = std::span(&geometry.end, 1);
  InclusionOutcome out;
  auto dist = [](const NearestTarget& t) { return t.reachable ? t.distance : std::numeric_limits<double>::infinity(); };
  out.t1 = dist(sp.nearest(config.tau, origin, geometry.boundary0, geometry.inside0));
  out.t2 = dist(sp.nearest(config.tau, end, geometry.boundary1, geometry.inside1));
  out.tg = dist(sp.nearest(config.tau, geometry.boundary0, geometry.boundary1, geometry.outside));
  out.tn = dist(sp.nearest(config.tau, origin, end));
  out.f1 = out.t1 >= (xi + eps) * n / 2.0;
  out.f2 = out.t2 >= (xi + eps) * n / 2.0;
  out.g = out.tg >= (mu - eps) * n;
  const double level = (mu + xi) * n;
  out.tail = out.tn >= level - 1e-9 * std::max(1.0, std::abs(level));
  out.holds = !(out.f1 && out.f2 && out.g) || out.tail;
  return out;
}

std::vector<WeightConfig> adversarial_configurations(const InclusionGeometry& geo, double mu, double xi, double eps) {
  const Domain& dom = *geo.domain;
  const double n = geo.n;
  const double ell = geo.ell;
  // Weights that put F1, F2 and G exactly at their thresholds on straight paths.
  const double a = (xi + eps) * n / (2.0 * ell);
  const double b = std::max(0.0, (mu - eps) * n / (n - 2.0 * ell));
  auto in_ball = [&](EdgeId e) { return geo.inside0[e] || geo.inside1[e]; };
  auto make = [&](auto&& weight) {
    WeightConfig cfg{geo.domain, std::vector<double>(dom.num_edges())};
    dom.for_each_edge([&](EdgeId e, VertexId u, VertexId v) { cfg.tau[e] = weight(e, u, v); });
    return cfg;
  };
  auto radius = [&](VertexId v) {
    const Point p = dom.coordinates(v);
    int r0 = 0, r1 = 0;
    for (int i = 0; i < dom.dim(); ++i) {
      r0 = std::max(r0, std::abs(p[i]));
      r1 = std::max(r1, std::abs(p[i] - (i == 0 ? geo.n : 0)));
    }
    return std::min(r0, r1);
  };

  std::vector<WeightConfig> out;
  out.push_back(make([&](EdgeId e, VertexId, VertexId) { return in_ball(e) ? 100.0 * a : b; }));
  out.push_back(make([&](EdgeId e, VertexId, VertexId) { return in_ball(e) ? a : b; }));
  // Free corridor one row above the balls: G fails.
  out.push_back(make([&](EdgeId e, VertexId u, VertexId v) {
    if (in_ball(e)) return 100.0 * a;
    const Point pu = dom.coordinates(u), pv = dom.coordinates(v);
    const bool corridor = dom.dim() > 1 && pu[1] == geo.ell + 1 && pv[1] == geo.ell + 1;
    return corridor ? 0.0 : b;
  }));
  out.push_back(make([&](EdgeId e, VertexId, VertexId) { return in_ball(e) ? 0.0 : 10.0 * b; }));
  out.push_back(make([&](EdgeId, VertexId, VertexId) { return 0.0; }));
  out.push_back(make([&](EdgeId, VertexId, VertexId) { return 1e6; }));
  // Zero-cost ray from the origin: F1 fails.
  out.push_back(make([&](EdgeId e, VertexId u, VertexId v) {
    const Point pu = dom.coordinates(u), pv = dom.coordinates(v);
    const int axis = dom.dim() > 1 ? 1 : 0;
    bool ray = true;
    for (int i = 0; i < dom.dim(); ++i) {
      if (i != axis && (pu[i] != 0 || pv[i] != 0)) ray = false;
    }
    if (ray && geo.inside0[e] && pu[axis] >= 0 && pv[axis] >= 0) return 0.0;
    return in_ball(e) ? a : b;
  }));
  out.push_back(make([&](EdgeId e, VertexId, VertexId) {
    const double scale = in_ball(e) ? 2.0 * a : 2.0 * b;
    return (e % 2 == 0) ? scale : 0.0;
  }));
  // Heavy shell on the ball boundaries, free interiors.
  out.push_back(make([&](EdgeId e, VertexId u, VertexId v) {
    if (!in_ball(e)) return b;
    return (radius(u) == geo.ell) != (radius(v) == geo.ell) ? (xi + eps) * n / 2.0 : 0.0;
  }));
  out.push_back(make([&](EdgeId e, VertexId, VertexId) {
    const double frac = static_cast<double>((static_cast<std::uint64_t>(e) * 2654435761ULL) % 1000) / 1000.0;
    return (in_ball(e) ? 2.0 * a : 2.0 * b) * frac;
  }));
  return out;
}

InclusionReport inclusion_trials(int d, int n, int ell, double mu, double xi, double eps, const WeightModel& model,
                                 long trials, const InclusionOptions& opts) {
  model.validate();
  if (trials < 0) throw Error(ErrorKind::InvalidArgument, "trials must be nonnegative");
  auto box = passage_box(d, n, opts.box_margin);
  const InclusionGeometry geo = inclusion_geometry(box, n, ell);
  const double ball_boost = (xi + eps) * n / ell;
  const double outside_boost = std::max(1.0, mu * n / ((n - 2.0 * ell) * mean(model)));

  std::vector<InclusionOutcome> results(static_cast<std::size_t>(trials));
  parallel_for(results.size(), opts.threads, [&](std::size_t i) {
    RandomStream rng(opts.seed, kInclusionStream, i);
    WeightConfig cfg = sample_weights(box, model, rng);
    const int mode = static_cast<int>(i % 4);
    if (mode == 1 || mode == 3) {
      for (EdgeId e = 0; e < cfg.tau.size(); ++e) {
        if (!geo.outside[e]) cfg.tau[e] += ball_boost * rng.uniform();
      }
    }
    if (mode == 2 || mode == 3) {
      const double factor = outside_boost * (0.5 + 1.5 * rng.uniform());
      for (EdgeId e = 0; e < cfg.tau.size(); ++e) {
        if (geo.outside[e]) cfg.tau[e] *= factor;
      }
    }
    results[i] = event_inclusion_check(geo, cfg, mu, xi, eps);
  });

  InclusionReport rep;
  rep.trials = trials;
  auto tally = [&](const InclusionOutcome& o) {
    if (!o.holds) ++rep.violations;
    if (o.f1 && o.f2 && o.g) ++rep.premise_true;
    if (o.tail) ++rep.tail_true;
  };
  for (const auto& o : results) tally(o);
  if (opts.adversarial) {
    for (const auto& cfg : adversarial_configurations(geo, mu, xi, eps)) {
      tally(event_inclusion_check(geo, cfg, mu, xi, eps));
      ++rep.adversarial;
    }
  }
  return rep;
}

std::string to_json(const InclusionReport& report) {
  nlohmann::ordered_json j;
  j["trials"] = report.trials;
  j["adversarial"] = report.adversarial;
  j["violations"] = report.violations;
  j["premise_true"] = report.premise_true;
  j["tail_true"] = report.tail_true;
  return j.dump(2);
}

// ---------------------------------------------------------------------------

const char* to_string(TailMethod method) noexcept { return method == TailMethod::Plain ? "plain" : "tilted"; }

TailMethod tail_method_from_string(const std::string& name) {
  if (name == "plain") return TailMethod::Plain;
  if (name == "tilted") return TailMethod::Tilted;
  throw Error(ErrorKind::InvalidArgument, "unknown method '" + name + "'");
}

const char* to_string(TiltRegion region) noexcept {
  switch (region) {
    case TiltRegion::Auto: return "auto";
    case TiltRegion::Origin: return "origin";
    case TiltRegion::Endpoints: return "endpoints";
    case TiltRegion::Balls: return "balls";
  }
  return "?";
}

TiltRegion tilt_region_from_string(const std::string& name) {
  if (name == "auto") return TiltRegion::Auto;
  if (name == "origin") return TiltRegion::Origin;
  if (name == "endpoints") return TiltRegion::Endpoints;
  if (name == "balls") return TiltRegion::Balls;
  throw Error(ErrorKind::InvalidArgument, "unknown tilt region '" + name + "'");
}

Proposal tail_proposal(const Domain& box, const WeightModel& model, int n, double xi, const TailOptions& opts) {
  if (opts.tilt && !(*opts.tilt < model.alpha)) throw Error(ErrorKind::DegenerateTilt, "tilt must stay below alpha");
  if (opts.tilt && !(*opts.tilt >= 0.0)) throw Error(ErrorKind::InvalidArgument, "tilt must be nonnegative");
  const int d = box.dim();
  TiltRegion region = opts.region;
  if (region == TiltRegion::Auto) region = (model.r <= 1.0 || d < 2) ? TiltRegion::Endpoints : TiltRegion::Balls;

  std::map<EdgeId, double> fixed(opts.fixed.begin(), opts.fixed.end());
  auto strip_fixed = [&](std::vector<std::pair<EdgeId, double>> comp) {
    std::erase_if(comp, [&](const auto& et) { return fixed.count(et.first) > 0 || et.second <= 0.0; });
    return comp;
  };

  Proposal prop;
  std::ostringstream desc;
  if (!(opts.mean_scale > 0.0)) throw Error(ErrorKind::InvalidArgument, "mean scale must be positive");
  const double per_edge_mean = opts.mean_scale * (xi + 0.1) * n;
  if (region == TiltRegion::Origin || region == TiltRegion::Endpoints) {
    const double tilt = opts.tilt.value_or(tilt_for_mean(model.alpha, model.r, per_edge_mean));
    std::vector<VertexId> centers{vertex_at(box, Point{})};
    if (region == TiltRegion::Endpoints) centers.push_back(vertex_at(box, axis_point(n)));
    for (VertexId c : centers) {
      std::vector<std::pair<EdgeId, double>> comp;
      for (EdgeId e : incident_edges(box, c)) comp.emplace_back(e, tilt);
      prop.components.push_back(strip_fixed(std::move(comp)));
    }
    desc << to_string(region) << ": " << centers.size() << " component(s), tilt " << fmt(tilt) << " on the "
         << incident_edges(box, centers[0]).size() << " edges at each endpoint";
  } else {
    if (d < 2) throw Error(ErrorKind::UnsupportedDomain, "ball tilting needs d >= 2");
    const double r_ell = (model.r > 1.0 && model.r <= d) ? model.r : static_cast<double>(d);
    const int ell = ell_M(d, r_ell, opts.M, n);
    // Per-edge share of the crossing cost of each ball, from the capacity
    // minimizer on D_ell (|grad f| is a unit-length path metric).
    std::vector<double> share;
    DomainPtr ball;
    if (!opts.tilt && model.r > 1.0) {
      ball = build_full_box(d, ell);
      Solution sol = solve_potential(ball, model.r);
      share.resize(ball->num_edges());
      ball->for_each_edge([&](EdgeId e, VertexId u, VertexId v) {
        share[e] = std::abs(sol.potential.f[u] - sol.potential.f[v]);
      });
    }
    std::map<EdgeId, double> tilts;
    for (int side = 0; side < 2; ++side) {
      const Point c = side == 0 ? Point{} : axis_point(n);
      for (EdgeId e : ball_edges(box, c, ell)) {
        double tilt = 0.0;
        if (opts.tilt) {
          tilt = *opts.tilt;
        } else if (ball) {
          auto [u, v] = box.edge(e);
          Point pu = box.coordinates(u), pv = box.coordinates(v);
          for (int i = 0; i < d; ++i) {
            pu[i] -= c[i];
            pv[i] -= c[i];
          }
          auto bu = ball->index_of(pu), bv = ball->index_of(pv);
          const double s = share[*ball->edge_between(*bu, *bv)];
          tilt = s > 0.0 ? tilt_for_mean(model.alpha, model.r, per_edge_mean / 2.0 * s) : 0.0;
        } else {
          tilt = tilt_for_mean(model.alpha, model.r, per_edge_mean / (2.0 * ell));
        }
        tilts[e] = std::max(tilts[e], tilt);
      }
    }
    prop.components.push_back(strip_fixed({tilts.begin(), tilts.end()}));
    desc << "balls: radius " << ell << ", " << prop.components[0].size() << " tilted edges";
    if (opts.tilt) desc << ", tilt " << fmt(*opts.tilt);
    else desc << ", mean " << fmt(opts.mean_scale) << "(xi+0.1)n/2 times the capacity edge profile";
  }
  prop.description = desc.str();
  return prop;
}

namespace {

// Sum of exp(x) over added terms, kept as exp(top) * rest so that weights far
// below the double range still accumulate.
struct LogSum {
  double top = -std::numeric_limits<double>::infinity();
  double rest = 0.0;

  void add(double log_x) { merge({log_x, 1.0}); }
  void merge(const LogSum& o) {
    if (o.rest == 0.0) return;
    if (o.top > top) {
      rest = rest * std::exp(top - o.top) + o.rest;
      top = o.top;
    } else {
      rest += o.rest * std::exp(o.top - top);
    }
  }
  double log() const { return rest > 0.0 ? top + std::log(rest) : -std::numeric_limits<double>::infinity(); }
};

struct TailAcc {
  long count = 0;
  long hits = 0;
  LogSum sw, sw2;
  // Localization ratio terms on the first threshold.
  LogSum sw_loc, sw2_loc;

  void merge(const TailAcc& o) {
    count += o.count;
    hits += o.hits;
    sw.merge(o.sw);
    sw2.merge(o.sw2);
    sw_loc.merge(o.sw_loc);
    sw2_loc.merge(o.sw2_loc);
  }
};

struct TailRun {
  std::vector<TailAcc> acc;  // one per threshold
  std::string description;
};

TailRun run_tail(const DomainPtr& box, const WeightModel& model, int n, double xi, const TailOptions& opts,
                 const std::vector<double>& thresholds, const std::vector<EdgeId>& loc_edges, double loc_level) {
  model.validate();
  if (opts.samples < 2) throw Error(ErrorKind::InvalidArgument, "at least two samples required");
  for (const auto& [e, value] : opts.fixed) {
    if (e >= box->num_edges()) throw Error(ErrorKind::InvalidArgument, "fixed edge outside the domain");
    if (!std::isfinite(value) || value < 0.0) throw Error(ErrorKind::InvalidArgument, "fixed weight must be nonnegative");
  }
  TailRun out;
  Proposal prop;
  if (opts.method == TailMethod::Tilted) {
    prop = tail_proposal(*box, model, n, xi, opts);
    out.description = prop.description;
  } else {
    out.description = "none";
  }
  const std::size_t K = prop.components.size();
  const double log_k = std::log(static_cast<double>(std::max<std::size_t>(K, 1)));

  const VertexId origin = vertex_at(*box, Point{});
  const VertexId end = vertex_at(*box, axis_point(n));
  const std::uint64_t stream = kTailStream | (static_cast<std::uint64_t>(opts.method) << 32) |
                               static_cast<std::uint64_t>(n);
  const std::size_t blocks = static_cast<std::size_t>((opts.samples + kTailBlock - 1) / kTailBlock);
  std::vector<std::vector<TailAcc>> partial(blocks, std::vector<TailAcc>(thresholds.size()));

  parallel_for(blocks, opts.threads, [&](std::size_t b) {
    RandomStream rng(opts.seed, stream, b);
    ShortestPaths sp(box);
    std::vector<double> tau(box->num_edges());
    std::vector<double> log_q(K);
    const long lo = static_cast<long>(b) * kTailBlock;
    const long hi = std::min(opts.samples, lo + kTailBlock);
    auto& acc = partial[b];
    for (long i = lo; i < hi; ++i) {
      sample_weights(model, rng, tau);
      double log_w = 0.0;
      if (K > 0) {
        const std::size_t pick = std::min(K - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(K)));
        for (const auto& [e, t] : prop.components[pick]) tau[e] = sample(model.tilted(t), rng.uniform());
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < K; ++k) {
          double lq = 0.0;
          for (const auto& [e, t] : prop.components[k]) lq -= log_likelihood_ratio(model.tilted(t), tau[e]);
          log_q[k] = lq;
          top = std::max(top, lq);
        }
        double s = 0.0;
        for (double lq : log_q) s += std::exp(lq - top);
        log_w = -(top + std::log(s) - log_k);
      }
      for (const auto& [e, value] : opts.fixed) tau[e] = value;
      const double T = sp.nearest(tau, std::span(&origin, 1), std::span(&end, 1)).distance;
      bool loc = true;
      for (EdgeId e : loc_edges) {
        if (tau[e] > loc_level) {
          loc = false;
          break;
        }
      }
      for (std::size_t k = 0; k < thresholds.size(); ++k) {
        TailAcc& a = acc[k];
        ++a.count;
        if (!(T > thresholds[k])) continue;
        ++a.hits;
        a.sw.add(log_w);
        a.sw2.add(2.0 * log_w);
        if (loc) {
          a.sw_loc.add(log_w);
          a.sw2_loc.add(2.0 * log_w);
        }
      }
    }
  });

  out.acc.assign(thresholds.size(), TailAcc{});
  for (const auto& block : partial) {
    for (std::size_t k = 0; k < thresholds.size(); ++k) out.acc[k].merge(block[k]);
  }
  return out;
}

RareEventEstimate make_estimate(const TailAcc& a, TailMethod method, const std::string& tilt, int n, double xi,
                                double mu_hat, double threshold) {
  RareEventEstimate est;
  est.n_samples = a.count;
  est.hits = a.hits;
  est.method = method;
  est.tilt = tilt;
  est.n = n;
  est.xi = xi;
  est.mu_hat = mu_hat;
  est.threshold = threshold;
  const double N = static_cast<double>(a.count);
  const double log_s1 = a.sw.log();
  est.log_p_hat = log_s1 - std::log(N);
  est.p_hat = method == TailMethod::Plain ? static_cast<double>(a.hits) / N : std::exp(est.log_p_hat);
  if (a.hits > 0) {
    // (stderr / p)^2 = (N S2 / S1^2 - 1) / (N - 1)
    const double ratio = std::exp(a.sw2.log() - 2.0 * log_s1 + std::log(N));
    est.rel_stderr = std::sqrt(std::max(0.0, ratio - 1.0) / (N - 1.0));
    est.stderr_p = est.p_hat * est.rel_stderr;
  }
  est.low_confidence = a.hits < 10;
  return est;
}

void check_tail_args(int n, double xi) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "n must be positive");
  if (!(xi > 0.0)) throw Error(ErrorKind::InvalidArgument, "xi must be positive");
}

}  // namespace

RareEventEstimate estimate_upper_tail(int d, const WeightModel& model, int n, double xi, double mu_hat,
                                      const TailOptions& opts) {
  check_tail_args(n, xi);
  auto box = passage_box(d, n, opts.box_margin);
  const double threshold = (mu_hat + xi) * n;
  TailRun run = run_tail(box, model, n, xi, opts, {threshold}, {}, 0.0);
  return make_estimate(run.acc[0], opts.method, run.description, n, xi, mu_hat, threshold);
}

std::string to_json(const RareEventEstimate& e) {
  nlohmann::ordered_json j;
  j["p_hat"] = e.p_hat;
  j["log_p_hat"] = number(e.log_p_hat);
  j["stderr"] = e.stderr_p;
  j["rel_stderr"] = e.rel_stderr;
  j["n_samples"] = e.n_samples;
  j["hits"] = e.hits;
  j["method"] = to_string(e.method);
  j["tilt"] = e.tilt;
  j["n"] = e.n;
  j["xi"] = e.xi;
  j["mu_hat"] = e.mu_hat;
  j["threshold"] = e.threshold;
  j["low_confidence"] = e.low_confidence;
  return j.dump(2);
}

double agreement_z(const RareEventEstimate& a, const RareEventEstimate& b) {
  const double s = std::sqrt(a.stderr_p * a.stderr_p + b.stderr_p * b.stderr_p);
  if (s == 0.0) return a.p_hat == b.p_hat ? 0.0 : std::numeric_limits<double>::infinity();
  return (a.p_hat - b.p_hat) / s;
}

RateCurve rate_curve(int d, const WeightModel& model, double xi, const std::vector<int>& n_list, double mu_hat,
                     double mu_stderr, const TailOptions& opts, std::optional<double> lambda) {
  if (!(xi > 0.0)) throw Error(ErrorKind::InvalidArgument, "xi must be positive");
  if (n_list.empty()) throw Error(ErrorKind::InvalidArgument, "empty n list");
  model.validate();
  const double r = model.r;
  RateCurve curve{d, r, model.alpha, xi, mu_hat, mu_stderr, kNaN, lambda, {}};
  if (r > 1.0 && r < d && !curve.lambda) {
    int ell = 1;
    for (int n : n_list) ell = std::max(ell, ell_M(d, r, opts.M, n));
    curve.lambda = solve_potential(build_full_box(d, ell), r).estimate.value;
  }
  if (d >= 2 && r <= d) curve.theoretical = theoretical_rate(d, r, model.alpha, xi, curve.lambda);

  for (int n : n_list) {
    RateRow row;
    row.n = n;
    try {
      check_tail_args(n, xi);
      if (r == d && d >= 2) {
        const double lam = solve_potential(build_full_box(d, ell_M(d, r, opts.M, n)), r).estimate.value;
        row.scale = std::pow(static_cast<double>(n), d) * lam;
      } else if (r > d) {
        row.scale = std::pow(static_cast<double>(n), d);
      } else {
        row.scale = std::pow(static_cast<double>(n), r);
      }
      auto box = passage_box(d, n, opts.box_margin);
      const std::vector<double> thresholds{(mu_hat + xi) * n, (mu_hat - 2.0 * mu_stderr + xi) * n,
                                           (mu_hat + 2.0 * mu_stderr + xi) * n};
      TailRun run = run_tail(box, model, n, xi, opts, thresholds, {}, 0.0);
      row.estimate = make_estimate(run.acc[0], opts.method, run.description, n, xi, mu_hat, thresholds[0]);
      auto normalized = [&](const TailAcc& a, double thr) {
        const RareEventEstimate e = make_estimate(a, opts.method, run.description, n, xi, mu_hat, thr);
        return -e.log_p_hat / row.scale;
      };
      row.normalized = -row.estimate.log_p_hat / row.scale;
      row.normalized_mu_low = normalized(run.acc[1], thresholds[1]);
      row.normalized_mu_high = normalized(run.acc[2], thresholds[2]);
    } catch (const Error& e) {
      row.error = e.what();
    }
    curve.rows.push_back(std::move(row));
  }
  return curve;
}

std::string rate_csv(const RateCurve& curve) {
  std::ostringstream os;
  os << "n,p_hat,stderr,hits,scale,normalized,normalized_mu_low,normalized_mu_high,theoretical\n";
  for (const auto& row : curve.rows) {
    const auto& e = row.estimate;
    os << row.n << ',' << fmt(e.p_hat) << ',' << fmt(e.stderr_p) << ',' << e.hits << ',' << fmt(row.scale) << ','
       << fmt(row.normalized) << ',' << fmt(row.normalized_mu_low) << ',' << fmt(row.normalized_mu_high) << ','
       << fmt(curve.theoretical) << '\n';
  }
  return os.str();
}

std::string to_json(const RateCurve& curve) {
  nlohmann::ordered_json j;
  j["d"] = curve.d;
  j["r"] = curve.r;
  j["alpha"] = curve.alpha;
  j["xi"] = curve.xi;
  j["mu_hat"] = curve.mu_hat;
  j["mu_stderr"] = curve.mu_stderr;
  j["theoretical"] = number(curve.theoretical);
  j["lambda"] = curve.lambda ? nlohmann::ordered_json(*curve.lambda) : nlohmann::ordered_json();
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : curve.rows) {
    nlohmann::ordered_json jr;
    jr["n"] = row.n;
    if (!row.error.empty()) {
      jr["error"] = row.error;
    } else {
      jr["estimate"] = nlohmann::ordered_json::parse(to_json(row.estimate));
      jr["scale"] = row.scale;
      jr["normalized"] = number(row.normalized);
      jr["normalized_mu_low"] = number(row.normalized_mu_low);
      jr["normalized_mu_high"] = number(row.normalized_mu_high);
    }
    rows.push_back(jr);
  }
  j["rows"] = rows;
  return j.dump(2);
}

LocalizationStat localization_stat(int d, const WeightModel& model, int n, double xi, double mu_hat, int R,
                                   double eps0, const TailOptions& opts) {
  check_tail_args(n, xi);
  if (R < 0) throw Error(ErrorKind::InvalidArgument, "R must be nonnegative");
  if (!(eps0 > 0.0)) throw Error(ErrorKind::InvalidArgument, "eps0 must be positive");
  auto box = passage_box(d, n, opts.box_margin);
  const double threshold = (mu_hat + xi) * n;
  const auto loc_edges = ball_edges(*box, Point{}, R);
  TailRun run = run_tail(box, model, n, xi, opts, {threshold}, loc_edges, eps0 * n);
  const TailAcc& a = run.acc[0];
  if (a.hits < 30) {
    throw Error(ErrorKind::InsufficientHits,
                "only " + std::to_string(a.hits) + " samples hit the conditioning event (30 needed)");
  }
  LocalizationStat st;
  st.R = R;
  st.eps0 = eps0;
  st.hits = a.hits;
  st.tail = make_estimate(a, opts.method, run.description, n, xi, mu_hat, threshold);
  const double log_s1 = a.sw.log();
  st.freq_loc = std::exp(a.sw_loc.log() - log_s1);
  st.signal = 1.0 - st.freq_loc;
  // Delta method for the ratio of weighted sums; the localized terms are a
  // subset of the hit terms.
  const double q = st.freq_loc;
  const double b_loc = std::exp(a.sw2_loc.log() - 2.0 * log_s1);
  const double b_all = std::exp(a.sw2.log() - 2.0 * log_s1);
  const double resid = b_loc * (1.0 - q) * (1.0 - q) + (b_all - b_loc) * q * q;
  st.stderr_freq = std::sqrt(std::max(0.0, resid));
  return st;
}

std::string to_json(const LocalizationStat& stat) {
  nlohmann::ordered_json j;
  j["freq_loc"] = stat.freq_loc;
  j["signal"] = stat.signal;
  j["stderr"] = stat.stderr_freq;
  j["hits"] = stat.hits;
  j["R"] = stat.R;
  j["eps0"] = stat.eps0;
  j["tail"] = nlohmann::ordered_json::parse(to_json(stat.tail));
  return j.dump(2);
}

SumTailTable sum_tail_check(const WeightModel& model, int k, const std::vector<double>& n_list, long samples,
                            double c, std::uint64_t seed, int threads) {
  model.validate();
  if (model.r > 1.0) throw Error(ErrorKind::InvalidArgument, "sum tail check needs r <= 1");
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be positive");
  if (samples < 2) throw Error(ErrorKind::InvalidArgument, "at least two samples required");
  if (!(c > 0.0 && c < 1.0)) throw Error(ErrorKind::InvalidArgument, "c must lie in (0, 1)");
  const std::size_t blocks = static_cast<std::size_t>((samples + kSumBlock - 1) / kSumBlock);
  std::vector<std::vector<long>> counts(blocks, std::vector<long>(n_list.size(), 0));
  parallel_for(blocks, threads, [&](std::size_t b) {
    RandomStream rng(seed, kSumStream | static_cast<std::uint64_t>(k), b);
    const long lo = static_cast<long>(b) * kSumBlock;
    const long hi = std::min(samples, lo + kSumBlock);
    for (long i = lo; i < hi; ++i) {
      double s = 0.0;
      for (int j = 0; j < k; ++j) s += sample(model, rng.uniform());
      for (std::size_t m = 0; m < n_list.size(); ++m) counts[b][m] += s > n_list[m];
    }
  });
  SumTailTable table{k, model.r, model.alpha, c, samples, {}, std::nullopt};
  const double N = static_cast<double>(samples);
  for (std::size_t m = 0; m < n_list.size(); ++m) {
    long hits = 0;
    for (const auto& block : counts) hits += block[m];
    SumTailRow row;
    row.n = n_list[m];
    row.p_hat = static_cast<double>(hits) / N;
    row.stderr_p = std::sqrt(row.p_hat * (1.0 - row.p_hat) / N);
    row.envelope = std::exp(-(1.0 - c) * model.alpha * std::pow(row.n, model.r));
    row.holds = row.p_hat <= row.envelope;
    table.rows.push_back(row);
  }
  // n0: first listed n such that this and every larger listed n hold.
  std::vector<std::size_t> order(n_list.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return n_list[a] < n_list[b]; });
  for (auto it = order.rbegin(); it != order.rend() && table.rows[*it].holds; ++it) table.n0 = n_list[*it];
  return table;
}

std::string sum_tail_csv(const SumTailTable& table) {
  std::ostringstream os;
  os << "n,p_hat,stderr,envelope,holds\n";
  for (const auto& row : table.rows) {
    os << fmt(row.n) << ',' << fmt(row.p_hat) << ',' << fmt(row.stderr_p) << ',' << fmt(row.envelope) << ','
       << (row.holds ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string to_json(const SumTailTable& table) {
  nlohmann::ordered_json j;
  j["k"] = table.k;
  j["r"] = table.r;
  j["alpha"] = table.alpha;
  j["c"] = table.c;
  j["samples"] = table.samples;
  j["n0"] = table.n0 ? nlohmann::ordered_json(*table.n0) : nlohmann::ordered_json();
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    rows.push_back({{"n", row.n},
                    {"p_hat", row.p_hat},
                    {"stderr", row.stderr_p},
                    {"envelope", row.envelope},
                    {"holds", row.holds}});
  }
  j["rows"] = rows;
  return j.dump(2);
}

}  // namespace rcap
