#include "gmsr/service_rate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gmsr/errors.hpp"

namespace gmsr {

namespace {

void require_nonnegative(double workload, const char* what) {
  if (!(workload >= 0.0)) {
    throw DomainError(std::string(what) + ": workload must be nonnegative, got " +
                      std::to_string(workload));
  }
}

}  // namespace

std::string_view to_string(RateKind kind) noexcept {
  switch (kind) {
    case RateKind::Hill:
      return "hill";
    case RateKind::SaturatingExponential:
      return "saturating-exponential";
  }
  return "unknown";
}

ServiceRateFn ServiceRateFn::hill(double cap, double half) {
  if (!(cap > 0.0) || !(half > 0.0) || !std::isfinite(cap) || !std::isfinite(half)) {
    throw DomainError("hill service curve needs finite cap > 0 and half > 0");
  }
  return {RateKind::Hill, cap, half};
}

ServiceRateFn ServiceRateFn::saturating_exponential(double cap, double rate) {
  if (!(cap > 0.0) || !(rate > 0.0) || !std::isfinite(cap) || !std::isfinite(rate)) {
    throw DomainError("saturating-exponential service curve needs finite cap > 0 and rate > 0");
  }
  return {RateKind::SaturatingExponential, cap, rate};
}

double ServiceRateFn::rate(double workload) const {
  require_nonnegative(workload, "rate");
  if (kind_ == RateKind::Hill) {
    return cap_ * workload / (workload + shape_);
  }
  return -cap_ * std::expm1(-shape_ * workload);
}

double ServiceRateFn::gradient(double workload) const {
  require_nonnegative(workload, "gradient");
  if (kind_ == RateKind::Hill) {
    const double d = workload + shape_;
    return cap_ * shape_ / (d * d);
  }
  return cap_ * shape_ * std::exp(-shape_ * workload);
}

double ServiceRateFn::curvature(double workload) const {
  require_nonnegative(workload, "curvature");
  if (kind_ == RateKind::Hill) {
    const double d = workload + shape_;
    return -2.0 * cap_ * shape_ / (d * d * d);
  }
  return -cap_ * shape_ * shape_ * std::exp(-shape_ * workload);
}

double ServiceRateFn::max_gradient() const noexcept {
  return kind_ == RateKind::Hill ? cap_ / shape_ : cap_ * shape_;
}

double ServiceRateFn::inverse_rate(double y) const {
  if (!(y >= 0.0)) {
    throw DomainError("inverse_rate: rate must be nonnegative");
  }
  if (y >= cap_) {
    throw SaturationError("inverse_rate: rate " + std::to_string(y) + " is not below cap " +
                          std::to_string(cap_));
  }
  if (kind_ == RateKind::Hill) {
    return shape_ * y / (cap_ - y);
  }
  return -std::log1p(-y / cap_) / shape_;
}

double ServiceRateFn::inverse_gradient(double g) const {
  if (!(g > 0.0)) {
    throw DomainError("inverse_gradient: gradient must be positive");
  }
  const double top = max_gradient();
  if (g > top) {
    throw NoSolutionError("inverse_gradient: gradient " + std::to_string(g) +
                          " exceeds the gradient at zero workload " + std::to_string(top));
  }
  if (g == top) {
    return 0.0;
  }
  if (kind_ == RateKind::Hill) {
    return std::max(0.0, std::sqrt(cap_ * shape_ / g) - shape_);
  }
  return std::max(0.0, std::log(cap_ * shape_ / g) / shape_);
}

}  // namespace gmsr
