#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rcap/fpp.hpp"
#include "rcap/lattice.hpp"
#include "rcap/weights.hpp"

namespace rcap {

/// ceil(M n^{(r-1)/(d-1)}) for 1 < r < d, ceil(M n / (1 + ln n)) for r = d.
/// Throws OutOfRange for r outside (1, d].
int ell_M(int d, double r, double M, int n);

/// N^r for r < d, N^d / (1 + ln n)^{d-1} for r = d, N^r / n^{r-d} for r > d.
double g_scaling(int d, double r, int n, double N);

/// Magnitude of the upper-tail rate constant (the log-probability is minus
/// this times the speed): 2d alpha xi^r for r <= 1, alpha 2^{1-r} lambda xi^r
/// for 1 < r < d (lambda required, else MissingLambda), alpha 2^{1-d} xi^d for
/// r = d, per unit of n^d lambda_{d,d}(ell_M(n)). OutOfRange for r > d;
/// InvalidArgument for d < 2 or xi <= 0.
double theoretical_rate(int d, double r, double alpha, double xi, std::optional<double> lambda = {});

struct ScalingReport {
  int d = 0;
  double r = 0.0;
  int n = 0;
  double N = 0.0;
  double M = 0.0;
  int ell = 0;        // 0 when r is outside (1, d]
  double g = 0.0;
  double rate = 0.0;  // NaN when no closed branch applies
};

ScalingReport scaling_report(int d, double r, int n, double N, double M, double alpha, double xi,
                             std::optional<double> lambda = {});
std::string to_json(const ScalingReport& report);

// ---------------------------------------------------------------------------
// Event inclusion: with B0 = D_ell(0) and B1 = D_ell(n e1) disjoint,
//   F1: T from 0 to the boundary of B0 using edges inside B0 >= (xi+eps) n / 2,
//   F2: the same around n e1,
//   G:  T between the two boundaries avoiding edges inside either ball
//       >= (mu - eps) n,
// and F1, F2, G together force T(0, n e1) >= (mu + xi) n.

struct InclusionGeometry {
  DomainPtr domain;
  int n = 0;
  int ell = 0;
  VertexId origin = kNoVertex;
  VertexId end = kNoVertex;
  std::vector<VertexId> boundary0, boundary1;
  std::vector<std::uint8_t> inside0, inside1, outside;  // edge masks
};

/// GeometryError when the balls meet or do not fit in the domain.
InclusionGeometry inclusion_geometry(DomainPtr domain, int n, int ell);

struct InclusionOutcome {
  bool f1 = false, f2 = false, g = false, tail = false;
  bool holds = true;
  double t1 = 0.0, t2 = 0.0, tg = 0.0, tn = 0.0;
};

/// `tail` compares against (mu + xi) n with relative slack 1e-9 for rounding.
InclusionOutcome event_inclusion_check(const InclusionGeometry& geometry, const WeightConfig& config, double mu,
                                       double xi, double eps);

/// Ten hand-built configurations probing the boundary of the implication.
std::vector<WeightConfig> adversarial_configurations(const InclusionGeometry& geometry, double mu, double xi,
                                                     double eps);

struct InclusionReport {
  long trials = 0;
  long adversarial = 0;
  long violations = 0;
  long premise_true = 0;  // configurations with F1, F2 and G all true
  long tail_true = 0;
};

struct InclusionOptions {
  double box_margin = 1.0;
  std::uint64_t seed = 1;
  int threads = 1;
  bool adversarial = true;
};

/// Random configurations (base weights from `model`, alternately boosted
/// inside the balls and outside them so every premise is exercised) plus the
/// adversarial set.
InclusionReport inclusion_trials(int d, int n, int ell, double mu, double xi, double eps, const WeightModel& model,
                                 long trials, const InclusionOptions& opts = {});
std::string to_json(const InclusionReport& report);

// ---------------------------------------------------------------------------
// Upper-tail probabilities P(T(0, n e1) > (mu + xi) n).

enum class TailMethod { Plain, Tilted };
const char* to_string(TailMethod method) noexcept;
TailMethod tail_method_from_string(const std::string& name);

/// Tilt regions. Auto picks Endpoints for r <= 1 and Balls otherwise.
enum class TiltRegion { Auto, Origin, Endpoints, Balls };
const char* to_string(TiltRegion region) noexcept;
TiltRegion tilt_region_from_string(const std::string& name);

struct TailOptions {
  long samples = 10'000;
  double box_margin = 1.0;
  std::uint64_t seed = 1;
  int threads = 1;
  TailMethod method = TailMethod::Plain;
  TiltRegion region = TiltRegion::Auto;
  /// Uniform tilt on the region; per-edge defaults when absent.
  std::optional<double> tilt;
  /// Multiplier on the default tilted means (ignored with a uniform tilt).
  double mean_scale = 1.0;
  /// Ball radius scale for the Balls region.
  double M = 1.0;
  /// Edges held at fixed values (position in canonical order of the box).
  std::vector<std::pair<EdgeId, double>> fixed;
};

struct RareEventEstimate {
  double p_hat = 0.0;
  double log_p_hat = 0.0;  // -inf without hits; finite even when p_hat underflows
  double stderr_p = 0.0;
  double rel_stderr = 0.0;  // stderr / p_hat, meaningful when p_hat underflows
  long n_samples = 0;
  long hits = 0;
  TailMethod method = TailMethod::Plain;
  std::string tilt;  // description of the proposal
  int n = 0;
  double xi = 0.0;
  double mu_hat = 0.0;
  double threshold = 0.0;  // hit iff T > threshold
  bool low_confidence = false;
};

/// Unbiased (not self-normalized) importance-sampling estimate. Tilted
/// proposals are equal-weight mixtures of componentwise tilts; the weight is
/// the exact density ratio of the mixture.
RareEventEstimate estimate_upper_tail(int d, const WeightModel& model, int n, double xi, double mu_hat,
                                      const TailOptions& opts = {});

/// Tilted mixture components as (edge, tilt) lists on the passage box, and
/// a short description. Exposed for inspection.
struct Proposal {
  std::vector<std::vector<std::pair<EdgeId, double>>> components;
  std::string description;
};
Proposal tail_proposal(const Domain& box, const WeightModel& model, int n, double xi, const TailOptions& opts);

std::string to_json(const RareEventEstimate& estimate);

/// (p_hat - q_hat) / sqrt(se_p^2 + se_q^2); 0 when both stderrs vanish.
double agreement_z(const RareEventEstimate& a, const RareEventEstimate& b);

struct RateRow {
  int n = 0;
  RareEventEstimate estimate;
  double scale = 0.0;
  double normalized = 0.0;  // -log p_hat / scale
  /// Normalized rate with the threshold moved to mu_hat -/+ 2 stderr.
  double normalized_mu_low = 0.0, normalized_mu_high = 0.0;
  std::string error;
};

struct RateCurve {
  int d = 0;
  double r = 0.0;
  double alpha = 0.0;
  double xi = 0.0;
  double mu_hat = 0.0;
  double mu_stderr = 0.0;
  double theoretical = 0.0;  // NaN when no closed branch applies
  std::optional<double> lambda;
  std::vector<RateRow> rows;
};

/// Speed n^r for r < d, n^d lambda_{d,d}(ell_M(n)) for r = d, n^d for r > d.
/// For 1 < r < d without `lambda` the capacity at the largest ell is used.
RateCurve rate_curve(int d, const WeightModel& model, double xi, const std::vector<int>& n_list, double mu_hat,
                     double mu_stderr, const TailOptions& opts = {}, std::optional<double> lambda = {});

/// Columns n,p_hat,stderr,hits,scale,normalized,normalized_mu_low,normalized_mu_high,theoretical.
std::string rate_csv(const RateCurve& curve);
std::string to_json(const RateCurve& curve);

struct LocalizationStat {
  double freq_loc = 0.0;  // P(all edges of E_R stay <= eps0 n | tail event)
  double signal = 0.0;    // 1 - freq_loc
  double stderr_freq = 0.0;
  long hits = 0;
  int R = 0;
  double eps0 = 0.0;
  RareEventEstimate tail;
};

/// Conditional law by importance weighting on the tail event; E_R are the
/// edges with both endpoints in D_R(0). InsufficientHits below 30 hits.
LocalizationStat localization_stat(int d, const WeightModel& model, int n, double xi, double mu_hat, int R,
                                   double eps0, const TailOptions& opts = {});
std::string to_json(const LocalizationStat& stat);

struct SumTailRow {
  double n = 0.0;
  double p_hat = 0.0;
  double stderr_p = 0.0;
  double envelope = 0.0;  // exp(-(1 - c) alpha n^r)
  bool holds = false;     // p_hat <= envelope
};

struct SumTailTable {
  int k = 0;
  double r = 0.0;
  double alpha = 0.0;
  double c = 0.0;
  long samples = 0;
  std::vector<SumTailRow> rows;
  /// Smallest listed n from which every row holds.
  std::optional<double> n0;
};

/// P(X_1 + ... + X_k > n) for i.i.d. Weibull X_i with r <= 1.
SumTailTable sum_tail_check(const WeightModel& model, int k, const std::vector<double>& n_list, long samples,
                            double c = 0.2, std::uint64_t seed = 1, int threads = 1);
std::string sum_tail_csv(const SumTailTable& table);
std::string to_json(const SumTailTable& table);

}  // namespace rcap
