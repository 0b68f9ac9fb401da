#pragma once

#include <string_view>

namespace gmsr {

enum class RateKind {
  Hill,                   // a*N/(N+b)
  SaturatingExponential,  // a*(1-exp(-r*N))
};

std::string_view to_string(RateKind kind) noexcept;

/// A workload-dependent service rate curve mu(N). Both families are strictly
/// increasing, strictly concave, bounded by cap(), and vanish at N = 0, with
/// closed-form inverses of the curve and of its derivative.
class ServiceRateFn {
 public:
  /// mu(N) = cap * N / (N + half). Throws DomainError unless cap, half > 0.
  static ServiceRateFn hill(double cap, double half);
  /// mu(N) = cap * (1 - exp(-rate * N)). Throws DomainError unless cap, rate > 0.
  static ServiceRateFn saturating_exponential(double cap, double rate);

  RateKind kind() const noexcept { return kind_; }
  /// Supremum mu(infinity).
  double cap() const noexcept { return cap_; }
  /// Second parameter: half-saturation workload (hill) or exponential rate.
  double shape() const noexcept { return shape_; }

  double rate(double workload) const;
  double gradient(double workload) const;
  double curvature(double workload) const;  // mu''(N) < 0
  /// Gradient at zero workload, the largest value mu' attains.
  double max_gradient() const noexcept;

  /// Workload N with mu(N) = y, for 0 <= y < cap().
  double inverse_rate(double y) const;
  /// Workload N with mu'(N) = g, for 0 < g <= max_gradient().
  double inverse_gradient(double g) const;

  friend bool operator==(const ServiceRateFn&, const ServiceRateFn&) = default;

 private:
  ServiceRateFn(RateKind kind, double cap, double shape) : kind_(kind), cap_(cap), shape_(shape) {}

  RateKind kind_;
  double cap_;
  double shape_;
};

}  // namespace gmsr
