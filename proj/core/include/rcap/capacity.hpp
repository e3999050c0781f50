#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rcap/error.hpp"
#include "rcap/lattice.hpp"
#include "rcap/pathflow.hpp"

namespace rcap {

/// Vertex function; after a solve f = 0 on sources, f = 1 on targets and
/// 0 <= f <= 1 elsewhere.
struct Potential {
  DomainPtr domain;
  std::vector<double> f;
};

/// Nonnegative edge weights indexed by canonical edge order.
struct EdgeField {
  DomainPtr domain;
  std::vector<double> t;
};

struct CapacityEstimate {
  double value = 0.0;        // r-Dirichlet energy of the returned potential
  double lower_bound = 0.0;  // dual flow certificate
  double upper_bound = 0.0;  // energy of a feasible potential
  double duality_gap = 0.0;
  long iterations = 0;       // symmetric sweeps
  double final_residual = 0.0;
  double r = 0.0;
  bool converged = false;
  std::string domain;  // JSON descriptor
};

std::string to_json(const CapacityEstimate& estimate);

struct SolveOptions {
  /// Max one-step coordinate defect; 0 selects the size-based default.
  double tol = 0.0;
  long max_iter = 200'000;
  /// Over-relaxation factor in (0, 2); 0 selects the default for the grid.
  double relaxation = 0.0;
  /// Warm start; must live on the same domain.
  const Potential* initial = nullptr;
};

struct Solution {
  Potential potential;
  CapacityEstimate estimate;
};

/// 1e-9 up to radius 64, 1e-7 above.
double default_tolerance(const Domain& domain) noexcept;

/// Minimizes sum_{<x,y>} |f(x) - f(y)|^r subject to f = 0 on the sources and
/// f = 1 on the targets by symmetric nonlinear Gauss-Seidel sweeps, each
/// vertex update solving its one-dimensional convex problem exactly.
/// Throws UnsupportedExponent for r <= 1. Non-convergence is reported through
/// `estimate.converged`, with the last iterate returned.
Solution solve_potential(DomainPtr domain, double r, const SolveOptions& opts = {});

/// Throws NonConvergence unless the solve met its tolerance.
void require_converged(const CapacityEstimate& estimate);

double energy(const Potential& potential, double r);

/// Certified lower bound on the capacity from the flow |grad f|^{r-1} of any
/// potential with values in [0, 1] and f = 1 on targets; tight at the
/// minimizer.
double dual_lower_bound(const Potential& potential, double r);

/// t_e = |f(x) - f(y)|. Throws InfeasiblePotential when f(source) != 0 or
/// f < 1 on a target (beyond tol).
EdgeField potential_to_edgefield(const Potential& potential, double tol = 1e-9);

/// f(x) = shortest-path distance from the sources under t.
Potential edgefield_to_potential(const EdgeField& field);

struct PathFeasibility {
  double min_path_weight = 0.0;
  bool feasible = false;
};

PathFeasibility verify_path_feasibility(const EdgeField& field, double tol);

enum class TestFunction { Indicator, Logarithmic, Linear };

const char* to_string(TestFunction kind) noexcept;

/// The named explicit potential on a FullBox of radius n: indicator of
/// x != 0, log(|x|_1 + 1) / log n, or |x|_1 / n.
Potential test_function(DomainPtr domain, TestFunction kind);
double testfn_upper_bound(DomainPtr domain, double r, TestFunction kind);

/// (sum_e p_e^{r/(r-1)})^{1-r}.
double flow_lower_bound(const PathMeasure& measure, double r);

/// 2d, the indicator energy, valid for every r including 0 < r <= 1.
double small_r_upper_bound(const Domain& domain, double r);

/// lambda for r < d, (log n)^{d-1} lambda for r = d, n^{r-d} lambda for r > d.
double kappa(int d, double r, int n, double lambda_value);

struct SweepRow {
  int n = 0;
  CapacityEstimate estimate;
  double kappa = 0.0;
  std::string error;  // non-empty when the row failed
  std::optional<ErrorKind> error_kind;
  std::shared_ptr<const Potential> potential;  // kept on request
};

struct LinearFit {
  double c0 = 0.0;
  double c1 = 0.0;
};

struct SweepResult {
  int d = 0;
  double r = 0.0;
  std::vector<SweepRow> rows;
  bool monotone = true;
  /// kappa(n) ~ c0 + c1 / log n, present when r == d.
  std::optional<LinearFit> extrapolation;
};

SweepResult capacity_sweep(int d, double r, const std::vector<int>& n_list, double tol = 0.0, int threads = 1,
                           bool keep_potentials = false);

/// Columns d,r,n,lambda,lower,upper,gap,kappa,iterations.
std::string sweep_csv(const SweepResult& sweep);
std::string to_json(const SweepResult& sweep);

/// Capacity of the half-box D_k^+ against the far faces J_k.
CapacityEstimate half_box_capacity(int d, int k, int n, double r, double tol = 0.0);

/// Least-squares fit y ~ c0 + c1 * x.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace rcap
