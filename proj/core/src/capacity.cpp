#include "rcap/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "rcap/error.hpp"
#include "rcap/parallel.hpp"
#include "rcap/shortest_path.hpp"
#include "text.hpp"

namespace rcap {

using detail::fmt;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxDegree = 2 * kMaxDim;

bool is_two(double r) noexcept { return r == 2.0; }

double abs_pow(double x, double r) noexcept {
  const double a = std::abs(x);
  return is_two(r) ? a * a : std::pow(a, r);
}

double local_objective(const double* a, int k, double r, double s) noexcept {
  double sum = 0.0;
  for (int i = 0; i < k; ++i) sum += abs_pow(s - a[i], r);
  return sum;
}

// Derivative (up to the factor r) of s -> sum_i |s - a_i|^r and its slope.
struct Slope {
  double g = 0.0;
  double gp = 0.0;
};

Slope local_slope(const double* a, int k, double r, double s) noexcept {
  Slope out;
  for (int i = 0; i < k; ++i) {
    const double diff = s - a[i];
    const double ad = std::abs(diff);
    if (ad == 0.0) {
      if (r < 2.0) out.gp = kInf;
      continue;
    }
    const double pw = std::pow(ad, r - 1.0);
    out.g += std::copysign(pw, diff);
    out.gp += pw / ad;
  }
  out.gp *= r - 1.0;
  return out;
}

// Minimizer of s -> sum_i |s - a_i|^r, i.e. the root of its increasing
// derivative on [min a, max a]. Newton steps from the warm start; steps
// leaving the bracket fall back to Illinois regula falsi, which copes with
// the square-root-like kinks at s = a_i when r < 2. Bracket resolved to 1e-12.
double local_argmin(const double* a, int k, double r, double guess) noexcept {
  if (is_two(r)) {
    double sum = 0.0;
    for (int i = 0; i < k; ++i) sum += a[i];
    return sum / k;
  }
  double lo = a[0], hi = a[0];
  for (int i = 1; i < k; ++i) {
    lo = std::min(lo, a[i]);
    hi = std::max(hi, a[i]);
  }
  if (hi - lo <= 1e-15) return lo;
  // bracket slopes are evaluated only if regula falsi is needed
  double glo = std::numeric_limits<double>::quiet_NaN();
  double ghi = glo;
  double s = std::clamp(guess, lo, hi);
  int side = 0;
  for (int it = 0; it < 200; ++it) {
    const Slope sl = local_slope(a, k, r, s);
    if (sl.g == 0.0) return s;
    if (sl.g > 0.0) {
      hi = s;
      ghi = sl.g;
      if (side > 0) glo *= 0.5;
      side = 1;
    } else {
      lo = s;
      glo = sl.g;
      if (side < 0) ghi *= 0.5;
      side = -1;
    }
    if (hi - lo <= 1e-12) return 0.5 * (lo + hi);
    double next = std::isfinite(sl.gp) && sl.gp > 0.0 ? s - sl.g / sl.gp : lo;
    if (!(next > lo && next < hi)) {
      if (std::isnan(glo)) glo = local_slope(a, k, r, lo).g;
      if (std::isnan(ghi)) ghi = local_slope(a, k, r, hi).g;
      next = (lo * ghi - hi * glo) / (ghi - glo);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    }
    if (std::abs(next - s) <= 1e-14) return next;
    s = next;
  }
  return s;
}

std::vector<double> initial_ramp(const Domain& dom) {
  const std::size_t nv = dom.num_vertices();
  std::vector<double> f(nv, 0.0);
  if (dom.kind() == DomainKind::FullBox) {
    const double M = dom.params().M;
    for (VertexId v = 0; v < nv; ++v) f[v] = norm_inf(dom.coordinates(v), dom.dim()) / M;
    return f;
  }
  // hop distances: f = d_src / (d_src + d_tgt)
  const auto bfs = [&](std::span<const VertexId> seeds) {
    std::vector<int> dist(nv, -1);
    std::deque<VertexId> queue;
    for (VertexId s : seeds) {
      dist[s] = 0;
      queue.push_back(s);
    }
    while (!queue.empty()) {
      const VertexId u = queue.front();
      queue.pop_front();
      for (VertexId w : dom.neighbors(u)) {
        if (dist[w] < 0) {
          dist[w] = dist[u] + 1;
          queue.push_back(w);
        }
      }
    }
    return dist;
  };
  const auto ds = bfs(dom.sources());
  const auto dt = bfs(dom.targets());
  for (VertexId v = 0; v < nv; ++v) {
    if (ds[v] < 0 || dt[v] < 0) continue;
    f[v] = static_cast<double>(ds[v]) / static_cast<double>(ds[v] + dt[v]);
  }
  return f;
}

// Optimal SOR factor of the grid Laplacian for r >= 2; damped toward 1 for
// r < 2, where the effective conductances |grad f|^{r-2} are unbounded.
double default_relaxation(const Domain& dom, double r) {
  int extent = 1;
  for (int i = 0; i < dom.dim(); ++i) extent = std::max(extent, dom.params().hi[i] - dom.params().lo[i] + 1);
  const double optimal = 2.0 / (1.0 + std::sin(std::numbers::pi / extent));
  return r >= 2.0 ? optimal : 1.0 + 0.55 * (optimal - 1.0);
}

void check_feasible(const Potential& p, double tol) {
  const Domain& dom = *p.domain;
  for (VertexId s : dom.sources()) {
    if (std::abs(p.f[s]) > tol) throw Error(ErrorKind::InfeasiblePotential, "potential is nonzero at a source");
  }
  for (VertexId t : dom.targets()) {
    if (p.f[t] < 1.0 - tol) throw Error(ErrorKind::InfeasiblePotential, "potential is below 1 on the target set");
  }
}

}  // namespace

double default_tolerance(const Domain& domain) noexcept {
  int extent = 1;
  for (int i = 0; i < domain.dim(); ++i) {
    extent = std::max(extent, domain.params().hi[i] - domain.params().lo[i]);
  }
  return extent <= 128 ? 1e-9 : 1e-7;
}

Solution solve_potential(DomainPtr domain, double r, const SolveOptions& opts) {
  if (!(r > 1.0)) {
    throw Error(ErrorKind::UnsupportedExponent,
                "the iterative solver needs r > 1; use small_r_upper_bound for 0 < r <= 1");
  }
  const Domain& dom = *domain;
  if (dom.targets().empty()) throw Error(ErrorKind::InvalidArgument, "domain has an empty target set");
  const double tol = opts.tol > 0.0 ? opts.tol : default_tolerance(dom);
  const double omega = opts.relaxation > 0.0 ? opts.relaxation : default_relaxation(dom, r);
  if (!(omega > 0.0 && omega < 2.0)) throw Error(ErrorKind::InvalidArgument, "relaxation must lie in (0, 2)");

  const std::size_t nv = dom.num_vertices();
  std::vector<double> f;
  if (opts.initial) {
    if (opts.initial->f.size() != nv) throw Error(ErrorKind::InvalidArgument, "warm start has the wrong size");
    f = opts.initial->f;
    for (double& x : f) x = std::clamp(x, 0.0, 1.0);
  } else {
    f = initial_ramp(dom);
  }
  std::vector<VertexId> interior;
  interior.reserve(nv);
  for (VertexId v = 0; v < nv; ++v) {
    if (dom.is_source(v)) {
      f[v] = 0.0;
    } else if (dom.is_target(v)) {
      f[v] = 1.0;
    } else if (!dom.neighbors(v).empty()) {
      interior.push_back(v);
    }
  }

  const bool quadratic = is_two(r);
  double a[kMaxDegree];
  const auto relax = [&](VertexId v) {
    const auto nb = dom.neighbors(v);
    const int k = static_cast<int>(nb.size());
    for (int i = 0; i < k; ++i) a[i] = f[nb[i]];
    const double old = f[v];
    const double s = local_argmin(a, k, r, old);
    double next = old + omega * (s - old);
    if (omega != 1.0) {
      next = std::clamp(next, 0.0, 1.0);
      if (!quadratic && local_objective(a, k, r, next) > local_objective(a, k, r, old)) next = s;
    }
    f[v] = next;
    return std::abs(s - old);
  };

  CapacityEstimate est;
  est.r = r;
  est.domain = domain_to_json(dom);
  double residual = kInf;
  long sweep = 0;
  while (sweep < opts.max_iter) {
    ++sweep;
    residual = 0.0;
    for (VertexId v : interior) residual = std::max(residual, relax(v));
    for (auto it = interior.rbegin(); it != interior.rend(); ++it) residual = std::max(residual, relax(*it));
    if (residual <= tol) break;
  }
  if (interior.empty()) residual = 0.0;

  Potential pot{domain, std::move(f)};
  est.iterations = sweep;
  est.final_residual = residual;
  est.converged = residual <= tol;
  est.value = energy(pot, r);
  est.upper_bound = est.value;
  est.lower_bound = std::min(dual_lower_bound(pot, r), est.value);
  est.duality_gap = est.upper_bound - est.lower_bound;
  return {std::move(pot), std::move(est)};
}

void require_converged(const CapacityEstimate& estimate) {
  if (!estimate.converged) {
    throw Error(ErrorKind::NonConvergence, "residual " + fmt(estimate.final_residual) + " after " +
                                               std::to_string(estimate.iterations) + " sweeps");
  }
}

double energy(const Potential& potential, double r) {
  double sum = 0.0;
  const auto& f = potential.f;
  potential.domain->for_each_edge([&](EdgeId, VertexId u, VertexId v) { sum += abs_pow(f[u] - f[v], r); });
  return sum;
}

double dual_lower_bound(const Potential& potential, double r) {
  const Domain& dom = *potential.domain;
  const auto& f = potential.f;
  check_feasible(potential, 1e-12);
  std::vector<double> net_in(dom.num_vertices(), 0.0);
  double total = 0.0;
  dom.for_each_edge([&](EdgeId, VertexId u, VertexId v) {
    const double diff = f[v] - f[u];
    const double g = std::copysign(std::pow(std::abs(diff), r - 1.0), diff);
    net_in[v] += g;
    net_in[u] -= g;
    total += abs_pow(diff, r);
  });
  if (total <= 0.0) return 0.0;
  double flux = 0.0;
  for (VertexId t : dom.targets()) flux += net_in[t];
  double leak = 0.0;
  for (VertexId v = 0; v < dom.num_vertices(); ++v) {
    if (!dom.is_source(v) && !dom.is_target(v)) leak += std::abs(net_in[v]);
  }
  const double effective = std::max(0.0, flux - leak);
  return std::pow(effective, r) / std::pow(total, r - 1.0);
}

EdgeField potential_to_edgefield(const Potential& potential, double tol) {
  check_feasible(potential, tol);
  EdgeField field{potential.domain, std::vector<double>(potential.domain->num_edges())};
  const auto& f = potential.f;
  potential.domain->for_each_edge([&](EdgeId e, VertexId u, VertexId v) { field.t[e] = std::abs(f[u] - f[v]); });
  return field;
}

Potential edgefield_to_potential(const EdgeField& field) {
  for (double t : field.t) {
    if (!(t >= 0.0)) throw Error(ErrorKind::InvalidArgument, "edge field must be nonnegative");
  }
  ShortestPaths sp(field.domain);
  const auto& dist = sp.distances(field.t, field.domain->sources());
  return {field.domain, dist};
}

PathFeasibility verify_path_feasibility(const EdgeField& field, double tol) {
  ShortestPaths sp(field.domain);
  const auto& dist = sp.distances(field.t, field.domain->sources());
  PathFeasibility out;
  out.min_path_weight = kInf;
  for (VertexId t : field.domain->targets()) out.min_path_weight = std::min(out.min_path_weight, dist[t]);
  out.feasible = out.min_path_weight >= 1.0 - tol;
  return out;
}

const char* to_string(TestFunction kind) noexcept {
  switch (kind) {
    case TestFunction::Indicator: return "indicator";
    case TestFunction::Logarithmic: return "logarithmic";
    case TestFunction::Linear: return "linear";
  }
  return "?";
}

Potential test_function(DomainPtr domain, TestFunction kind) {
  const Domain& dom = *domain;
  if (dom.kind() != DomainKind::FullBox) {
    throw Error(ErrorKind::UnsupportedDomain, "test functions are defined on FullBox domains");
  }
  const int n = dom.params().M;
  const int d = dom.dim();
  if (kind == TestFunction::Logarithmic && n < 2) {
    throw Error(ErrorKind::InvalidArgument, "logarithmic test function needs n >= 2");
  }
  std::vector<double> f(dom.num_vertices());
  const double log_n = std::log(static_cast<double>(n));
  for (VertexId v = 0; v < f.size(); ++v) {
    const int l1 = norm_1(dom.coordinates(v), d);
    switch (kind) {
      case TestFunction::Indicator: f[v] = l1 == 0 ? 0.0 : 1.0; break;
      case TestFunction::Logarithmic: f[v] = std::log(l1 + 1.0) / log_n; break;
      case TestFunction::Linear: f[v] = static_cast<double>(l1) / n; break;
    }
  }
  return {std::move(domain), std::move(f)};
}

double testfn_upper_bound(DomainPtr domain, double r, TestFunction kind) {
  return energy(test_function(std::move(domain), kind), r);
}

double flow_lower_bound(const PathMeasure& measure, double r) {
  if (!(r > 1.0)) throw Error(ErrorKind::UnsupportedExponent, "flow lower bound needs r > 1");
  const double c = lagrangian_constant(measure, r);
  if (!(c > 0.0)) throw Error(ErrorKind::DegenerateMeasure, "path measure has no mass");
  return std::pow(c, 1.0 - r);
}

double small_r_upper_bound(const Domain& domain, double r) {
  if (!(r > 0.0 && r <= 1.0)) throw Error(ErrorKind::InvalidArgument, "small_r_upper_bound needs 0 < r <= 1");
  if (domain.kind() != DomainKind::FullBox) {
    throw Error(ErrorKind::UnsupportedDomain, "small_r_upper_bound is defined on FullBox domains");
  }
  return 2.0 * domain.dim();
}

double kappa(int d, double r, int n, double lambda_value) {
  if (r < d) return lambda_value;
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "kappa needs n >= 2 when r >= d");
  if (r == d) return std::pow(std::log(static_cast<double>(n)), d - 1) * lambda_value;
  return std::pow(static_cast<double>(n), r - d) * lambda_value;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorKind::InvalidArgument, "fit needs >= 2 points");
  const double m = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw Error(ErrorKind::InvalidArgument, "fit needs distinct abscissae");
  LinearFit fit;
  fit.c1 = sxy / sxx;
  fit.c0 = my - fit.c1 * mx;
  return fit;
}

SweepResult capacity_sweep(int d, double r, const std::vector<int>& n_list, double tol, int threads,
                           bool keep_potentials) {
  if (n_list.empty()) throw Error(ErrorKind::InvalidArgument, "empty n list");
  for (std::size_t i = 1; i < n_list.size(); ++i) {
    if (n_list[i] <= n_list[i - 1]) throw Error(ErrorKind::InvalidArgument, "n list must be increasing");
  }
  if (!(r > 1.0)) {
    throw Error(ErrorKind::UnsupportedExponent,
                "the iterative solver needs r > 1; use small_r_upper_bound for 0 < r <= 1");
  }
  SweepResult out;
  out.d = d;
  out.r = r;
  out.rows.resize(n_list.size());
  parallel_for(n_list.size(), threads, [&](std::size_t i) {
    SweepRow& row = out.rows[i];
    row.n = n_list[i];
    try {
      SolveOptions opts;
      opts.tol = tol;
      auto sol = solve_potential(build_full_box(d, row.n), r, opts);
      row.estimate = std::move(sol.estimate);
      row.kappa = r >= d && row.n < 2 ? 0.0 : kappa(d, r, row.n, row.estimate.value);
      if (keep_potentials) row.potential = std::make_shared<const Potential>(std::move(sol.potential));
    } catch (const Error& ex) {
      row.error = ex.what();
      row.error_kind = ex.kind();
    }
  });

  const SweepRow* prev = nullptr;
  for (const auto& row : out.rows) {
    if (!row.error.empty()) continue;
    if (prev) {
      const double slack = tol > 0.0 ? tol : (row.n <= 64 ? 1e-9 : 1e-7);
      if (row.estimate.value > prev->estimate.value + slack) out.monotone = false;
    }
    prev = &row;
  }
  if (r == d) {
    std::vector<double> x, y;
    for (const auto& row : out.rows) {
      if (row.error.empty() && row.n >= 2) {
        x.push_back(1.0 / std::log(static_cast<double>(row.n)));
        y.push_back(row.kappa);
      }
    }
    if (x.size() >= 2) out.extrapolation = fit_line(x, y);
  }
  return out;
}

std::string sweep_csv(const SweepResult& sweep) {
  std::ostringstream os;
  os << "d,r,n,lambda,lower,upper,gap,kappa,iterations\n";
  for (const auto& row : sweep.rows) {
    if (!row.error.empty()) continue;
    const auto& e = row.estimate;
    os << sweep.d << ',' << fmt(sweep.r) << ',' << row.n << ',' << fmt(e.value) << ',' << fmt(e.lower_bound) << ','
       << fmt(e.upper_bound) << ',' << fmt(e.duality_gap) << ',' << fmt(row.kappa) << ',' << e.iterations << '\n';
  }
  return os.str();
}

namespace {
nlohmann::ordered_json estimate_json(const CapacityEstimate& e) {
  nlohmann::ordered_json j;
  j["value"] = e.value;
  j["lower_bound"] = e.lower_bound;
  j["upper_bound"] = e.upper_bound;
  j["duality_gap"] = e.duality_gap;
  j["iterations"] = e.iterations;
  j["final_residual"] = e.final_residual;
  j["r"] = e.r;
  j["converged"] = e.converged;
  j["domain"] = e.domain.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json::parse(e.domain);
  return j;
}
}  // namespace

std::string to_json(const CapacityEstimate& estimate) { return estimate_json(estimate).dump(2); }

std::string to_json(const SweepResult& sweep) {
  nlohmann::ordered_json j;
  j["d"] = sweep.d;
  j["r"] = sweep.r;
  j["monotone"] = sweep.monotone;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : sweep.rows) {
    nlohmann::ordered_json jr;
    jr["n"] = row.n;
    if (row.error.empty()) {
      jr["lambda"] = row.estimate.value;
      jr["kappa"] = row.kappa;
      jr["estimate"] = estimate_json(row.estimate);
    } else {
      jr["error"] = row.error;
    }
    rows.push_back(std::move(jr));
  }
  j["rows"] = std::move(rows);
  if (sweep.extrapolation) j["extrapolation"] = {{"c0", sweep.extrapolation->c0}, {"c1", sweep.extrapolation->c1}};
  return j.dump(2);
}

CapacityEstimate half_box_capacity(int d, int k, int n, double r, double tol) {
  SolveOptions opts;
  opts.tol = tol;
  return solve_potential(build_half_box(d, k, n), r, opts).estimate;
}

}  // namespace rcap
