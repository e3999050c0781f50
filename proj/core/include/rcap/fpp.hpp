#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rcap/lattice.hpp"
#include "rcap/weights.hpp"

namespace rcap {

/// Edge weights tau_e in canonical edge order.
struct WeightConfig {
  DomainPtr domain;
  std::vector<double> tau;

  /// Throws InvalidArgument on size mismatch or a negative / non-finite entry.
  void validate() const;
};

WeightConfig constant_weights(DomainPtr domain, double c);

/// Fills `tau` (one entry per edge, canonical order) with independent draws.
void sample_weights(const WeightModel& model, RandomStream& rng, std::span<double> tau);
WeightConfig sample_weights(DomainPtr domain, const WeightModel& model, RandomStream& rng);

struct PassageResult {
  double value = 0.0;  // +inf when unreachable
  bool reachable = false;
  std::vector<VertexId> sources;
  std::vector<VertexId> targets;
  VertexId target = kNoVertex;  // target attaining the value
  /// Present on request; its weight sum equals `value`.
  std::optional<std::vector<VertexId>> geodesic;
};

/// Restricted passage time from a source set to a target set inside the
/// domain. `allowed`, when non-empty, masks edges (nonzero = usable).
PassageResult passage_time(const WeightConfig& config, std::span<const VertexId> sources,
                           std::span<const VertexId> targets, bool want_geodesic = false,
                           std::span<const std::uint8_t> allowed = {});
PassageResult passage_time(const WeightConfig& config, VertexId source, VertexId target,
                           bool want_geodesic = false);

/// Sum of tau along a vertex path; throws InvalidArgument on a non-edge step.
double path_weight(const WeightConfig& config, std::span<const VertexId> path);

/// T(x, z) <= T(x, y) + T(y, z) up to 1e-9.
bool subadditivity_check(const WeightConfig& config, VertexId x, VertexId y, VertexId z);

/// T(0, n e1) inside [-(L - n), L] x [-K, K]^{d-1}. Truncation can only raise
/// the value relative to the infinite slab.
double slab_passage(int d, int K, int n, int L, const WeightModel& model, RandomStream& rng);

/// [-m, n + m] x [-m, m]^{d-1} with m = ceil(margin * n); source 0, target n e1.
DomainPtr passage_box(int d, int n, double margin, const BuildOptions& opts = {});

struct MuOptions {
  long samples = 1000;
  double box_margin = 1.0;
  std::uint64_t seed = 1;
  int threads = 1;
  int bootstrap = 200;
  /// Deterministic tau = c instead of sampling from the model.
  std::optional<double> constant;
  bool keep_samples = false;
};

struct MuRow {
  int n = 0;
  double mean = 0.0;
  double stderr_mean = 0.0;
  long samples = 0;
};

struct MuEstimate {
  double mu_hat = 0.0;
  double stderr_mu = 0.0;
  double intercept = 0.0;
  std::vector<MuRow> rows;
  /// Per n (same order as rows), T for each sample; filled when keep_samples.
  std::vector<std::vector<double>> samples;
  std::uint64_t seed = 0;
};

/// Slope of the least-squares line through (n, mean T(0, n e1)); the
/// intercept absorbs the subadditive bias. Bootstrap stderr over samples.
MuEstimate estimate_mu(int d, const WeightModel& model, const std::vector<int>& n_list, const MuOptions& opts = {});

/// Columns seed,n,sample,T.
std::string mu_samples_csv(const MuEstimate& estimate);
/// Columns n,mean,stderr,samples.
std::string mu_table_csv(const MuEstimate& estimate);
std::string to_json(const MuEstimate& estimate);

}  // namespace rcap
