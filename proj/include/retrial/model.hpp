#pragma once

#include "retrial/dists.hpp"

namespace retrial {

/// The five event-dependent Poisson rates.
struct RateProfile {
  double lambda_minus = 0.0;   // after a service completion
  double lambda_e = 0.0;       // first arrival during a primary-initiated service
  double lambda_e_plus = 0.0;  // later arrivals during that service
  double lambda_r = 0.0;       // first arrival during a retrial-initiated service
  double lambda_r_plus = 0.0;  // later arrivals during that service

  /// Throws ConfigError unless all rates are finite, >= 0, and lambda_minus > 0.
  void validate() const;

  bool operator==(const RateProfile&) const = default;
};

struct ModelSpec {
  RateProfile rates;
  Distribution service;  // B
  Distribution seek;     // A

  void validate() const { rates.validate(); }
};

/// Which kind of customer occupies the server.
enum class ArrivalClass { e, r };

struct ClassRates {
  double first;
  double subsequent;
};

constexpr ClassRates class_rates(ArrivalClass k, const RateProfile& r) noexcept {
  return k == ArrivalClass::e ? ClassRates{r.lambda_e, r.lambda_e_plus}
                              : ClassRates{r.lambda_r, r.lambda_r_plus};
}

/// Same rate in every state.
inline RateProfile event_independent(double lambda) {
  return {lambda, lambda, lambda, lambda, lambda};
}

}  // namespace retrial
