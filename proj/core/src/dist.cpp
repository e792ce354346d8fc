#include "specexec/dist.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "specexec/errors.hpp"

namespace specexec {

ParetoDist::ParetoDist(double scale, double shape) : scale_(scale), shape_(shape) {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw std::invalid_argument("Pareto scale must be positive and finite");
  if (!(shape > 1.0) || !std::isfinite(shape))
    throw std::invalid_argument("Pareto shape must exceed 1, got " + std::to_string(shape));
}

ParetoDist ParetoDist::with_mean(double mean, double shape) {
  if (!(shape > 1.0)) throw std::invalid_argument("Pareto shape must exceed 1");
  return ParetoDist(mean * (shape - 1.0) / shape, shape);
}

double ParetoDist::cdf(double t) const noexcept {
  if (t < scale_) return 0.0;
  return 1.0 - std::pow(scale_ / t, shape_);
}

double ParetoDist::survival(double t) const noexcept {
  if (t < scale_) return 1.0;
  return std::pow(scale_ / t, shape_);
}

double ParetoDist::quantile(double p) const {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("quantile level must lie in [0, 1)");
  return from_uniform(p);
}

double ParetoDist::from_uniform(double u) const noexcept {
  return scale_ * std::pow(1.0 - u, -1.0 / shape_);
}

double ParetoDist::sample(RandomStream& rng) const {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  return from_uniform(uniform(rng));
}

double ParetoDist::mean() const noexcept { return scale_ * shape_ / (shape_ - 1.0); }

double ParetoDist::second_moment() const {
  if (shape_ <= 2.0)
    throw DivergingMomentError("E[x^2] diverges for Pareto shape " + std::to_string(shape_) +
                               " <= 2");
  return scale_ * scale_ * shape_ / (shape_ - 2.0);
}

ParetoDist ParetoDist::min_of(double k) const {
  if (!(k >= 1.0)) throw std::invalid_argument("copy count must be >= 1");
  return ParetoDist(scale_, k * shape_);
}

double ParetoDist::expected_min(double k) const {
  if (!(k >= 1.0)) throw std::invalid_argument("copy count must be >= 1");
  const double tail = k * shape_;
  if (tail <= 1.0)
    throw DivergingMomentError("expected minimum diverges: copies * shape = " +
                               std::to_string(tail) + " <= 1");
  return scale_ * tail / (tail - 1.0);
}

RemainingTimeLaw::RemainingTimeLaw(const ParetoDist& base, double elapsed)
    : base_(base), elapsed_(elapsed) {
  if (!(elapsed >= 0.0)) throw std::invalid_argument("elapsed time must be nonnegative");
}

double RemainingTimeLaw::survival(double t) const noexcept {
  if (t < 0.0) return 1.0;
  if (conditioned()) return std::pow(elapsed_ / (elapsed_ + t), base_.shape());
  return base_.survival(elapsed_ + t);
}

double RemainingTimeLaw::expected() const noexcept {
  if (conditioned()) return elapsed_ / (base_.shape() - 1.0);
  return base_.mean() - elapsed_;
}

RemainingTimeLaw remaining_time_law(const ParetoDist& d, double elapsed) {
  return RemainingTimeLaw(d, elapsed);
}

double integrate_survival_power(const ParetoDist& d, double power, double lo, double hi) {
  if (hi <= lo) return 0.0;
  const double mu = d.scale();
  double total = 0.0;
  if (lo < mu) {
    total += std::min(hi, mu) - lo;
    lo = mu;
    if (hi <= mu) return total;
  }
  const double b = power * d.shape();
  // Integral of (mu / t)^b over [lo, hi).
  if (std::isinf(hi)) {
    if (b <= 1.0)
      throw DivergingMomentError("survival power integral diverges: exponent " +
                                 std::to_string(b) + " <= 1");
    return total + mu * std::pow(mu / lo, b - 1.0) / (b - 1.0);
  }
  if (b == 1.0) return total + mu * std::log(hi / lo);
  return total + mu * (std::pow(mu / lo, b - 1.0) - std::pow(mu / hi, b - 1.0)) / (b - 1.0);
}

}  // namespace specexec
