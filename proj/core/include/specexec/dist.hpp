#pragma once

#include <cstdint>
#include <random>

#include "specexec/quadrature.hpp"

namespace specexec {

// Single-owner random stream. Parallel runs construct independent streams.
using RandomStream = std::mt19937_64;

// Pareto task-duration law: F(t) = 1 - (scale / t)^shape for t >= scale.
// shape > 1 so the mean exists.
class ParetoDist {
 public:
  ParetoDist(double scale, double shape);

  // Scale chosen so the law has the requested mean.
  static ParetoDist with_mean(double mean, double shape);

  double scale() const noexcept { return scale_; }
  double shape() const noexcept { return shape_; }

  double cdf(double t) const noexcept;
  double survival(double t) const noexcept;
  double quantile(double p) const;

  // Inverse-CDF transform of a uniform u in [0, 1).
  double from_uniform(double u) const noexcept;
  double sample(RandomStream& rng) const;

  double mean() const noexcept;
  // Throws DivergingMomentError for shape <= 2.
  double second_moment() const;

  // Law of the minimum of k iid copies: Pareto(scale, k * shape).
  ParetoDist min_of(double k) const;
  // E[min of k iid copies] = scale * k * shape / (k * shape - 1). k may be
  // fractional (the cloning relaxation treats copy counts as reals).
  double expected_min(double k) const;

  bool operator==(const ParetoDist&) const = default;

 private:
  double scale_;
  double shape_;
};

// Law of the remaining run time of a task that has already run `elapsed`.
// Once elapsed >= scale the conditional law x | x > e is Pareto(e, shape), so
// the remainder is Lomax with survival (e / (e + t))^shape.
class RemainingTimeLaw {
 public:
  RemainingTimeLaw(const ParetoDist& base, double elapsed);

  double elapsed() const noexcept { return elapsed_; }
  const ParetoDist& base() const noexcept { return base_; }
  bool conditioned() const noexcept { return elapsed_ >= base_.scale(); }

  double survival(double t) const noexcept;
  double expected() const noexcept;

 private:
  ParetoDist base_;
  double elapsed_;
};

RemainingTimeLaw remaining_time_law(const ParetoDist& d, double elapsed);

// Integral of S(t)^power over [lo, hi) for S the Pareto survival, in closed
// form. hi may be infinite when power * shape > 1.
double integrate_survival_power(const ParetoDist& d, double power, double lo, double hi);

}  // namespace specexec
