#pragma once

#include <cstdint>
#include <random>

namespace rcap {

/// Weibull-tail edge weights, P(tau > t) = exp(-(alpha - tilt) t^r).
/// `tilt` is an exponential tilt on the statistic t^r; tilt = 0 is the
/// reference model.
struct WeightModel {
  double alpha = 1.0;
  double r = 1.0;
  double tilt = 0.0;

  double rate() const noexcept { return alpha - tilt; }
  WeightModel untilted() const noexcept { return {alpha, r, 0.0}; }
  WeightModel tilted(double by) const noexcept { return {alpha, r, by}; }
  /// Throws InvalidArgument (or DegenerateTilt when tilt >= alpha).
  void validate() const;
};

/// Inverse-tail sampling: (-ln u / (alpha - tilt))^{1/r}; decreasing in u.
double sample(const WeightModel& model, double u) noexcept;

/// log dP_reference / dP_tilted at `value`.
double log_likelihood_ratio(const WeightModel& model, double value) noexcept;

double tail(const WeightModel& model, double t) noexcept;

/// Gamma(1 + 1/r) / (alpha - tilt)^{1/r}.
double mean(const WeightModel& model) noexcept;

/// Tilt giving the requested mean; 0 when the reference mean already meets
/// it. Result is strictly below alpha.
double tilt_for_mean(double alpha, double r, double target_mean);

/// Independent, reproducible stream: mt19937_64 seeded from
/// (master seed, stream tag, block index).
class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::uint64_t stream, std::uint64_t block);

  /// Uniform on the open interval (0, 1) with 53-bit resolution.
  double uniform() noexcept { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }
  std::uint64_t bits() noexcept { return engine_(); }
  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace rcap
