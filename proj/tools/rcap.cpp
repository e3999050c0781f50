// rcap: command-line front end for the capacity solver and the passage-time
// Monte Carlo experiments. Every subcommand writes JSON and CSV files into
// --out; with a fixed --seed the files do not depend on --threads.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rcap/capacity.hpp"
#include "rcap/error.hpp"
#include "rcap/fpp.hpp"
#include "rcap/lattice.hpp"
#include "rcap/ldp.hpp"
#include "rcap/pathflow.hpp"
#include "rcap/weights.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

const std::vector<std::string> kSubcommands{"capacity", "bounds",    "fpp-mu",          "ldp-tail",
                                            "localize", "sum-tail", "inclusion-check"};

struct Common {
  std::string out = ".";
  std::uint64_t seed = 1;
  int threads = 1;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out, "Output directory")->capture_default_str();
  sub->add_option("--seed", c.seed, "Master seed")->capture_default_str();
  sub->add_option("--threads", c.threads, "Worker threads (0 = all cores); never changes output")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
}

void write_file(const Common& c, const std::string& name, const std::string& text) {
  fs::create_directories(c.out);
  std::ofstream f(fs::path(c.out) / name, std::ios::binary);
  if (!f) throw rcap::Error(rcap::ErrorKind::InvalidArgument, "cannot write " + (fs::path(c.out) / name).string());
  f << text;
  if (!text.empty() && text.back() != '\n') f << '\n';
}

std::string g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string flag_for_key(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return (key.size() == 1 ? "-" : "--") + key;
}

// Turns {"--config", path} into the equivalent flags, placed right after the
// subcommand so that flags typed on the command line take precedence.
/// `canonical(subcommand, flag)` maps any alias of an option to one name, so
/// "-n" on the command line shadows "n_list" in the config.
std::vector<std::string> expand_config(
    std::vector<std::string> args,
    const std::function<std::string(const std::string&, const std::string&)>& canonical) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<long>(i));
      break;
    }
  }
  if (!path) return args;

  std::ifstream in(*path);
  if (!in) throw rcap::Error(rcap::ErrorKind::InvalidArgument, "cannot read config " + *path);
  ordered_json cfg;
  try {
    cfg = ordered_json::parse(in);
  } catch (const std::exception& e) {
    throw rcap::Error(rcap::ErrorKind::InvalidArgument, std::string("config is not valid JSON: ") + e.what());
  }
  if (!cfg.is_object()) throw rcap::Error(rcap::ErrorKind::InvalidArgument, "config must be a JSON object");

  auto sub_at = std::find_if(args.begin(), args.end(), [](const std::string& a) {
    return std::find(kSubcommands.begin(), kSubcommands.end(), a) != kSubcommands.end();
  });
  if (sub_at == args.end()) {
    if (!cfg.contains("subcommand")) {
      throw rcap::Error(rcap::ErrorKind::InvalidArgument, "no subcommand on the command line or in the config");
    }
    sub_at = args.insert(args.end(), cfg["subcommand"].get<std::string>());
  }
  const std::string sub = *sub_at;
  std::vector<std::string> given;
  for (const auto& a : args) {
    if (a.rfind("-", 0) == 0) given.push_back(canonical(sub, a.substr(0, a.find('='))));
  }
  std::vector<std::string> extra;
  for (const auto& [key, value] : cfg.items()) {
    if (key == "subcommand") continue;
    const std::string flag = flag_for_key(key);
    if (std::find(given.begin(), given.end(), canonical(sub, flag)) != given.end()) continue;
    auto text = [](const ordered_json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (value.is_boolean()) {
      if (value.get<bool>()) extra.push_back(flag);
    } else if (value.is_array()) {
      extra.push_back(flag);
      for (const auto& v : value) extra.push_back(text(v));
    } else if (!value.is_null()) {
      extra.push_back(flag);
      extra.push_back(text(value));
    }
  }
  args.insert(sub_at + 1, extra.begin(), extra.end());
  return args;
}

rcap::WeightModel make_model(double alpha, double r) {
  rcap::WeightModel m{alpha, r, 0.0};
  m.validate();
  return m;
}

// mu_hat from the supplied value or a fresh estimate over `n_list`.
struct MuChoice {
  double mu = 0.0;
  double stderr_mu = 0.0;
  bool estimated = false;
};

MuChoice choose_mu(std::optional<double> given, int d, const rcap::WeightModel& model, std::vector<int> n_list,
                   long samples, double margin, const Common& c) {
  if (given) return {*given, 0.0, false};
  std::sort(n_list.begin(), n_list.end());
  n_list.erase(std::unique(n_list.begin(), n_list.end()), n_list.end());
  if (n_list.size() == 1) n_list.push_back(2 * n_list[0]);
  rcap::MuOptions mo;
  mo.samples = samples;
  mo.box_margin = margin;
  mo.seed = c.seed;
  mo.threads = c.threads;
  auto est = rcap::estimate_mu(d, model, n_list, mo);
  return {est.mu_hat, est.stderr_mu, true};
}

ordered_json mu_json(const MuChoice& m) {
  return {{"mu_hat", m.mu}, {"stderr", m.stderr_mu}, {"estimated", m.estimated}};
}

// ---------------------------------------------------------------------------

struct CapacityArgs {
  int d = 2;
  double r = 2.0;
  std::vector<int> n;
  double tol = 0.0;
  bool dump_potential = false;
  bool allow_partial = false;
};

int run_capacity(const CapacityArgs& a, const Common& c) {
  auto sweep = rcap::capacity_sweep(a.d, a.r, a.n, a.tol, c.threads, a.dump_potential);
  write_file(c, "capacity.json", rcap::to_json(sweep));
  write_file(c, "capacity.csv", rcap::sweep_csv(sweep));
  std::optional<rcap::ErrorKind> failure;
  bool unconverged = false;
  for (const auto& row : sweep.rows) {
    if (!row.error.empty()) {
      std::cout << "n=" << row.n << " error: " << row.error << '\n';
      if (!failure) failure = row.error_kind;
      continue;
    }
    const auto& e = row.estimate;
    std::cout << "n=" << row.n << " lambda=" << g17(e.value) << " lower=" << g17(e.lower_bound)
              << " upper=" << g17(e.upper_bound) << " kappa=" << g17(row.kappa)
              << " converged=" << (e.converged ? "true" : "false") << '\n';
    unconverged = unconverged || !e.converged;
    if (row.potential) {
      const auto& dom = *row.potential->domain;
      std::ostringstream os;
      for (int i = 0; i < dom.dim(); ++i) os << 'x' << i << ',';
      os << "f\n";
      for (rcap::VertexId v = 0; v < dom.num_vertices(); ++v) {
        const auto p = dom.coordinates(v);
        for (int i = 0; i < dom.dim(); ++i) os << p[i] << ',';
        os << g17(row.potential->f[v]) << '\n';
      }
      write_file(c, "potential_n" + std::to_string(row.n) + ".csv", os.str());
    }
  }
  std::cout << "monotone=" << (sweep.monotone ? "true" : "false") << '\n';
  if (failure) return rcap::exit_code(*failure);
  if (unconverged && !a.allow_partial) {
    std::cerr << "error: solver did not converge (pass --allow-partial to accept)\n";
    return rcap::exit_code(rcap::ErrorKind::NonConvergence);
  }
  return 0;
}

struct BoundsArgs {
  int d = 2;
  double r = 2.0;
  int n = 8;
  double tol = 0.0;
};

int run_bounds(const BoundsArgs& a, const Common& c) {
  auto dom = rcap::build_full_box(a.d, a.n);
  std::vector<std::pair<std::string, double>> rows;
  if (a.r <= 1.0) {
    rows.emplace_back("small_r_upper", rcap::small_r_upper_bound(*dom, a.r));
  } else {
    for (auto kind : {rcap::TestFunction::Indicator, rcap::TestFunction::Logarithmic, rcap::TestFunction::Linear}) {
      if (kind == rcap::TestFunction::Logarithmic && a.n < 2) continue;
      rows.emplace_back(std::string("testfn_") + rcap::to_string(kind), rcap::testfn_upper_bound(dom, a.r, kind));
    }
    rcap::MarginalsOptions mo;
    mo.threads = c.threads;
    rows.emplace_back("flow_lower", rcap::flow_lower_bound(rcap::edge_marginals(dom, mo), a.r));
    rcap::SolveOptions so;
    so.tol = a.tol;
    auto sol = rcap::solve_potential(dom, a.r, so);
    rcap::require_converged(sol.estimate);
    rows.emplace_back("solver", sol.estimate.value);
    rows.emplace_back("solver_dual_lower", sol.estimate.lower_bound);
    if (a.r < a.d || a.n >= 2) rows.emplace_back("kappa", rcap::kappa(a.d, a.r, a.n, sol.estimate.value));
  }
  std::ostringstream csv;
  csv << "bound,value\n";
  ordered_json j;
  j["d"] = a.d;
  j["r"] = a.r;
  j["n"] = a.n;
  ordered_json b = ordered_json::object();
  for (const auto& [name, value] : rows) {
    csv << name << ',' << g17(value) << '\n';
    b[name] = value;
    std::cout << name << '=' << g17(value) << '\n';
  }
  j["bounds"] = b;
  write_file(c, "bounds.csv", csv.str());
  write_file(c, "bounds.json", j.dump(2));
  return 0;
}

struct MuArgs {
  int d = 2;
  double r = 1.0;
  double alpha = 1.0;
  std::vector<int> n{8, 16, 32};
  long samples = 1000;
  double box_margin = 1.0;
  std::optional<double> constant;
  int bootstrap = 200;
};

int run_mu(const MuArgs& a, const Common& c) {
  const auto model = make_model(a.alpha, a.r);
  rcap::MuOptions mo;
  mo.samples = a.samples;
  mo.box_margin = a.box_margin;
  mo.seed = c.seed;
  mo.threads = c.threads;
  mo.constant = a.constant;
  mo.bootstrap = a.bootstrap;
  mo.keep_samples = true;
  auto est = rcap::estimate_mu(a.d, model, a.n, mo);
  write_file(c, "fpp_mu.json", rcap::to_json(est));
  write_file(c, "fpp_mu.csv", rcap::mu_table_csv(est));
  write_file(c, "fpp_mu_samples.csv", rcap::mu_samples_csv(est));
  for (const auto& row : est.rows) {
    std::cout << "n=" << row.n << " mean=" << g17(row.mean) << " stderr=" << g17(row.stderr_mean) << '\n';
  }
  std::cout << "mu_hat=" << g17(est.mu_hat) << " stderr=" << g17(est.stderr_mu) << '\n';
  return 0;
}

struct TailArgs {
  int d = 2;
  double r = 0.5;
  double alpha = 1.0;
  std::vector<int> n{8};
  double xi = 0.5;
  std::optional<double> mu;
  long mu_samples = 500;
  std::string method = "tilted";
  long samples = 10'000;
  std::optional<long> plain_samples;
  std::string tilt_region = "auto";
  std::optional<double> tilt;
  double mean_scale = 1.0;
  double M = 1.0;
  double box_margin = 1.0;
  std::vector<std::string> fix;
};

rcap::TailOptions tail_options(const TailArgs& a, const Common& c, rcap::TailMethod method, int n) {
  rcap::TailOptions o;
  o.samples = method == rcap::TailMethod::Plain && a.plain_samples ? *a.plain_samples : a.samples;
  o.box_margin = a.box_margin;
  o.seed = c.seed;
  o.threads = c.threads;
  o.method = method;
  o.region = rcap::tilt_region_from_string(a.tilt_region);
  o.tilt = a.tilt;
  o.mean_scale = a.mean_scale;
  o.M = a.M;
  if (!a.fix.empty()) {
    auto box = rcap::passage_box(a.d, n, a.box_margin);
    for (const auto& spec : a.fix) {
      const auto colon = spec.find(':');
      if (colon == std::string::npos) {
        throw rcap::Error(rcap::ErrorKind::InvalidArgument, "--fix expects EDGE:VALUE, got '" + spec + "'");
      }
      const std::string edge = spec.substr(0, colon);
      rcap::EdgeId e = 0;
      try {
        if (edge == "origin") {
          rcap::Point p{};
          p[0] = 1;
          e = *box->edge_between(*box->index_of(rcap::Point{}), *box->index_of(p));
        } else {
          e = static_cast<rcap::EdgeId>(std::stoul(edge));
        }
        o.fixed.emplace_back(e, std::stod(spec.substr(colon + 1)));
      } catch (const std::logic_error&) {
        throw rcap::Error(rcap::ErrorKind::InvalidArgument, "cannot parse --fix '" + spec + "'");
      }
    }
  }
  return o;
}

std::vector<rcap::TailMethod> methods_of(const std::string& name) {
  if (name == "both") return {rcap::TailMethod::Plain, rcap::TailMethod::Tilted};
  return {rcap::tail_method_from_string(name)};
}

int run_tail(const TailArgs& a, const Common& c) {
  const auto model = make_model(a.alpha, a.r);
  const auto methods = methods_of(a.method);
  const MuChoice mu = choose_mu(a.mu, a.d, model, a.n, a.mu_samples, a.box_margin, c);
  ordered_json j;
  j["d"] = a.d;
  j["r"] = a.r;
  j["alpha"] = a.alpha;
  j["xi"] = a.xi;
  j["mu"] = mu_json(mu);
  std::cout << "mu_hat=" << g17(mu.mu) << (mu.estimated ? " (estimated)" : "") << '\n';

  if (a.n.size() == 1) {
    const int n = a.n[0];
    std::vector<rcap::RareEventEstimate> est;
    auto arr = ordered_json::array();
    for (auto m : methods) {
      est.push_back(rcap::estimate_upper_tail(a.d, model, n, a.xi, mu.mu, tail_options(a, c, m, n)));
      arr.push_back(ordered_json::parse(rcap::to_json(est.back())));
      const auto& e = est.back();
      std::cout << rcap::to_string(m) << ": p_hat=" << g17(e.p_hat) << " stderr=" << g17(e.stderr_p)
                << " log_p_hat=" << g17(e.log_p_hat) << " hits=" << e.hits
                << (e.low_confidence ? " low_confidence" : "") << '\n';
    }
    j["estimates"] = arr;
    if (est.size() == 2) {
      const double z = rcap::agreement_z(est[0], est[1]);
      j["z"] = std::isfinite(z) ? ordered_json(z) : ordered_json();
      std::cout << "z=" << g17(z) << '\n';
    }
    write_file(c, "ldp_tail.json", j.dump(2));
    return 0;
  }

  auto curves = ordered_json::array();
  for (auto m : methods) {
    auto curve = rcap::rate_curve(a.d, model, a.xi, a.n, mu.mu, mu.stderr_mu, tail_options(a, c, m, a.n.back()));
    write_file(c, std::string("ldp_rate_") + rcap::to_string(m) + ".csv", rcap::rate_csv(curve));
    curves.push_back(ordered_json::parse(rcap::to_json(curve)));
    for (const auto& row : curve.rows) {
      std::cout << rcap::to_string(m) << ": n=" << row.n;
      if (!row.error.empty()) {
        std::cout << " error: " << row.error << '\n';
        continue;
      }
      std::cout << " p_hat=" << g17(row.estimate.p_hat) << " normalized=" << g17(row.normalized)
                << " theoretical=" << g17(curve.theoretical) << '\n';
    }
  }
  j["curves"] = curves;
  write_file(c, "ldp_rate.json", j.dump(2));
  return 0;
}

struct LocalizeArgs {
  TailArgs tail;
  int R = 1;
  double eps0 = 0.25;
};

int run_localize(const LocalizeArgs& a, const Common& c) {
  const auto model = make_model(a.tail.alpha, a.tail.r);
  if (a.tail.n.size() != 1) throw rcap::Error(rcap::ErrorKind::InvalidArgument, "localize takes a single n");
  const int n = a.tail.n[0];
  const MuChoice mu = choose_mu(a.tail.mu, a.tail.d, model, a.tail.n, a.tail.mu_samples, a.tail.box_margin, c);
  const auto method = rcap::tail_method_from_string(a.tail.method);
  auto st = rcap::localization_stat(a.tail.d, model, n, a.tail.xi, mu.mu, a.R, a.eps0,
                                    tail_options(a.tail, c, method, n));
  ordered_json j = ordered_json::parse(rcap::to_json(st));
  j["mu"] = mu_json(mu);
  write_file(c, "localize.json", j.dump(2));
  std::cout << "signal=" << g17(st.signal) << " stderr=" << g17(st.stderr_freq) << " freq_loc=" << g17(st.freq_loc)
            << " hits=" << st.hits << '\n';
  return 0;
}

struct SumArgs {
  double r = 0.5;
  double alpha = 1.0;
  int k = 3;
  std::vector<double> n;
  long samples = 1'000'000;
  double c = 0.2;
};

int run_sum(const SumArgs& a, const Common& c) {
  std::vector<double> n_list = a.n;
  if (n_list.empty()) {
    for (int v = 5; v <= 100; v += 5) n_list.push_back(v);
  }
  auto table = rcap::sum_tail_check(make_model(a.alpha, a.r), a.k, n_list, a.samples, a.c, c.seed, c.threads);
  write_file(c, "sum_tail.csv", rcap::sum_tail_csv(table));
  write_file(c, "sum_tail.json", rcap::to_json(table));
  for (const auto& row : table.rows) {
    std::cout << "n=" << g17(row.n) << " p_hat=" << g17(row.p_hat) << " envelope=" << g17(row.envelope)
              << (row.holds ? "" : " above") << '\n';
  }
  std::cout << "n0=" << (table.n0 ? g17(*table.n0) : std::string("none")) << '\n';
  return 0;
}

struct InclusionArgs {
  int d = 2;
  int n = 32;
  double r = 2.0;
  double alpha = 1.0;
  double xi = 1.0;
  double eps = 0.1;
  std::optional<double> mu;
  long mu_samples = 200;
  double M = 1.0;
  std::optional<int> ell;
  long trials = 1000;
  bool no_adversarial = false;
  double box_margin = 1.0;
};

int run_inclusion(const InclusionArgs& a, const Common& c) {
  const auto model = make_model(a.alpha, a.r);
  const int ell = a.ell ? *a.ell : rcap::ell_M(a.d, std::min<double>(a.r, a.d), a.M, a.n);
  const MuChoice mu = choose_mu(a.mu, a.d, model, {a.n}, a.mu_samples, a.box_margin, c);
  rcap::InclusionOptions io;
  io.box_margin = a.box_margin;
  io.seed = c.seed;
  io.threads = c.threads;
  io.adversarial = !a.no_adversarial;
  auto rep = rcap::inclusion_trials(a.d, a.n, ell, mu.mu, a.xi, a.eps, model, a.trials, io);
  ordered_json j = ordered_json::parse(rcap::to_json(rep));
  j["ell"] = ell;
  j["mu"] = mu_json(mu);
  write_file(c, "inclusion.json", j.dump(2));
  std::cout << "ell=" << ell << " trials=" << rep.trials << " adversarial=" << rep.adversarial
            << " premise_true=" << rep.premise_true << '\n';
  std::cout << rep.violations << " violations\n";
  return rep.violations == 0 ? 0 : 1;
}

void add_model(CLI::App* sub, double& r, double& alpha) {
  sub->add_option("-r,--shape", r, "Weibull shape r")->capture_default_str();
  sub->add_option("--alpha", alpha, "Weibull rate alpha")->capture_default_str();
}

void add_tail(CLI::App* sub, TailArgs& t, bool many_n) {
  sub->add_option("-d,--dim", t.d, "Dimension")->capture_default_str();
  add_model(sub, t.r, t.alpha);
  auto* n = sub->add_option("-n,--n-list", t.n, many_n ? "Distance n; several values give a rate curve" : "Distance n");
  n->capture_default_str();
  sub->add_option("--xi", t.xi, "Excess xi > 0 over mu")->capture_default_str();
  sub->add_option("--mu", t.mu, "mu_hat; estimated when absent");
  sub->add_option("--mu-samples", t.mu_samples, "Samples per n for the mu_hat estimate")->capture_default_str();
  sub->add_option("--samples", t.samples, "Samples per estimate")->capture_default_str();
  sub->add_option("--tilt-region", t.tilt_region, "auto, origin, endpoints or balls")->capture_default_str();
  sub->add_option("--tilt", t.tilt, "Uniform tilt on the region (< alpha)");
  sub->add_option("--mean-scale", t.mean_scale, "Multiplier on the default tilted means")->capture_default_str();
  sub->add_option("-M,--ball-scale", t.M, "Ball radius scale M")->capture_default_str();
  sub->add_option("--box-margin", t.box_margin, "Box margin as a fraction of n")->capture_default_str();
  sub->add_option("--fix", t.fix, "Hold an edge fixed: EDGE:VALUE (EDGE = index or 'origin')");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete r-capacity and passage-time experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "rcap 0.1.0");
  app.footer(
      "--config FILE reads flags from a JSON object (keys are flag names, '_' for '-');\n"
      "flags on the command line win. Schema: tools/schema/run_config.schema.json.\n"
      "Exit codes: 0 ok, 1 inclusion violation found, 2 validation, 3 non-convergence, 4 budget.");

  Common common;

  CapacityArgs cap;
  auto* s_cap = app.add_subcommand("capacity", "Capacity sweep over n");
  s_cap->add_option("-d,--dim", cap.d, "Dimension")->required();
  s_cap->add_option("-r,--exponent", cap.r, "Exponent r > 1")->required();
  s_cap->add_option("-n,--n-list", cap.n, "Box radii")->required();
  s_cap->add_option("--tol", cap.tol, "Solver tolerance (0 = size-based default)")->capture_default_str();
  s_cap->add_flag("--dump-potential", cap.dump_potential, "Write the minimizing potential per n");
  s_cap->add_flag("--allow-partial", cap.allow_partial, "Exit 0 even if some solve did not converge");
  add_common(s_cap, common);

  BoundsArgs bounds;
  auto* s_bounds = app.add_subcommand("bounds", "Test-function, flow and solver bounds at one n");
  s_bounds->add_option("-d,--dim", bounds.d, "Dimension")->required();
  s_bounds->add_option("-r,--exponent", bounds.r, "Exponent r > 0")->required();
  s_bounds->add_option("-n,--n-list", bounds.n, "Box radius")->required();
  s_bounds->add_option("--tol", bounds.tol, "Solver tolerance (0 = size-based default)")->capture_default_str();
  add_common(s_bounds, common);

  MuArgs mu;
  auto* s_mu = app.add_subcommand("fpp-mu", "Time constant estimate from T(0, n e1)");
  s_mu->add_option("-d,--dim", mu.d, "Dimension")->capture_default_str();
  add_model(s_mu, mu.r, mu.alpha);
  s_mu->add_option("-n,--n-list", mu.n, "Increasing distances")->capture_default_str();
  s_mu->add_option("--samples", mu.samples, "Samples per n")->capture_default_str();
  s_mu->add_option("--box-margin", mu.box_margin, "Box margin as a fraction of n")->capture_default_str();
  s_mu->add_option("--constant", mu.constant, "Deterministic weight instead of the Weibull model");
  s_mu->add_option("--bootstrap", mu.bootstrap, "Bootstrap replicates for the stderr")->capture_default_str();
  add_common(s_mu, common);

  TailArgs tail;
  auto* s_tail = app.add_subcommand("ldp-tail", "Upper-tail probability P(T(0, n e1) > (mu + xi) n)");
  add_tail(s_tail, tail, true);
  s_tail->add_option("--method", tail.method, "plain, tilted or both")->capture_default_str();
  s_tail->add_option("--plain-samples", tail.plain_samples, "Plain-method budget (default: --samples)");
  add_common(s_tail, common);

  LocalizeArgs loc;
  loc.tail.method = "plain";
  loc.tail.xi = 0.1;
  loc.tail.n = {24};
  auto* s_loc = app.add_subcommand("localize", "Weight near the origin conditional on the tail event");
  add_tail(s_loc, loc.tail, false);
  s_loc->add_option("--method", loc.tail.method, "plain or tilted")->capture_default_str();
  s_loc->add_option("-R,--radius", loc.R, "Radius of the edge set E_R around 0")->capture_default_str();
  s_loc->add_option("--eps0", loc.eps0, "Level eps0 (edges compared with eps0 n)")->capture_default_str();
  add_common(s_loc, common);

  SumArgs sum;
  auto* s_sum = app.add_subcommand("sum-tail", "Tail of a sum of k Weibull variables against exp(-(1-c) alpha n^r)");
  add_model(s_sum, sum.r, sum.alpha);
  s_sum->add_option("-k", sum.k, "Number of summands")->capture_default_str();
  s_sum->add_option("-n,--n-list", sum.n, "Levels (default 5, 10, ..., 100)");
  s_sum->add_option("--samples", sum.samples, "Samples")->capture_default_str();
  s_sum->add_option("-c", sum.c, "Envelope constant c")->capture_default_str();
  add_common(s_sum, common);

  InclusionArgs inc;
  auto* s_inc = app.add_subcommand("inclusion-check", "Check F1, F2, G => T(0, n e1) >= (mu + xi) n");
  s_inc->add_option("-d,--dim", inc.d, "Dimension")->capture_default_str();
  add_model(s_inc, inc.r, inc.alpha);
  s_inc->add_option("-n,--n-list", inc.n, "Distance n")->capture_default_str();
  s_inc->add_option("--xi", inc.xi, "Excess xi")->capture_default_str();
  s_inc->add_option("--eps", inc.eps, "Slack eps")->capture_default_str();
  s_inc->add_option("--mu", inc.mu, "mu_hat; estimated when absent");
  s_inc->add_option("--mu-samples", inc.mu_samples, "Samples for the mu_hat estimate")->capture_default_str();
  s_inc->add_option("-M,--ball-scale", inc.M, "Ball radius scale M")->capture_default_str();
  s_inc->add_option("--ell", inc.ell, "Ball radius (overrides the M formula)");
  s_inc->add_option("--trials", inc.trials, "Random configurations")->capture_default_str();
  s_inc->add_flag("--no-adversarial", inc.no_adversarial, "Skip the ten constructed configurations");
  s_inc->add_option("--box-margin", inc.box_margin, "Box margin as a fraction of n")->capture_default_str();
  add_common(s_inc, common);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(std::move(args), [&](const std::string& sub, const std::string& flag) {
      const CLI::Option* opt = app.get_subcommand(sub)->get_option_no_throw(flag);
      return opt ? opt->get_name() : flag;
    });
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const rcap::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return rcap::exit_code(e.kind());
  }

  try {
    if (s_cap->parsed()) return run_capacity(cap, common);
    if (s_bounds->parsed()) return run_bounds(bounds, common);
    if (s_mu->parsed()) return run_mu(mu, common);
    if (s_tail->parsed()) return run_tail(tail, common);
    if (s_loc->parsed()) return run_localize(loc, common);
    if (s_sum->parsed()) return run_sum(sum, common);
    if (s_inc->parsed()) return run_inclusion(inc, common);
  } catch (const rcap::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return rcap::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
