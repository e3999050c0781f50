#include "rcap/weights.hpp"

#include <cmath>

#include "rcap/error.hpp"

namespace rcap {

void WeightModel::validate() const {
  if (!(alpha > 0.0)) throw Error(ErrorKind::InvalidArgument, "alpha must be positive");
  if (!(r > 0.0)) throw Error(ErrorKind::InvalidArgument, "shape r must be positive");
  if (!(tilt >= 0.0)) throw Error(ErrorKind::InvalidArgument, "tilt must be nonnegative");
  if (!(tilt < alpha)) throw Error(ErrorKind::DegenerateTilt, "tilt must stay below alpha");
}

double sample(const WeightModel& model, double u) noexcept {
  return std::pow(-std::log(u) / model.rate(), 1.0 / model.r);
}

double log_likelihood_ratio(const WeightModel& model, double value) noexcept {
  if (model.tilt == 0.0) return 0.0;
  return -model.tilt * std::pow(value, model.r) + std::log(model.alpha / model.rate());
}

double tail(const WeightModel& model, double t) noexcept {
  if (t <= 0.0) return 1.0;
  return std::exp(-model.rate() * std::pow(t, model.r));
}

double mean(const WeightModel& model) noexcept {
  return std::tgamma(1.0 + 1.0 / model.r) / std::pow(model.rate(), 1.0 / model.r);
}

double tilt_for_mean(double alpha, double r, double target_mean) {
  if (!(target_mean > 0.0)) throw Error(ErrorKind::InvalidArgument, "target mean must be positive");
  // mean = G / rate^{1/r}  =>  rate = (G / mean)^r
  const double rate = std::pow(std::tgamma(1.0 + 1.0 / r) / target_mean, r);
  return rate >= alpha ? 0.0 : alpha - rate;
}

RandomStream::RandomStream(std::uint64_t master_seed, std::uint64_t stream, std::uint64_t block) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream),      static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(block),       static_cast<std::uint32_t>(block >> 32)};
  engine_.seed(seq);
}

}  // namespace rcap
