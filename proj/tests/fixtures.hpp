#pragma once

#include <cmath>
#include <vector>

#include "retrial/model.hpp"
#include "retrial/optimizer.hpp"

namespace fixtures {

using namespace retrial;

/// lambda = 0.5 everywhere, Exponential(2) service, Exponential(3) seek.
inline ModelSpec event_independent_model(double lambda = 0.5) {
  return {event_independent(lambda), Distribution::exponential(2.0), Distribution::exponential(3.0)};
}

/// Joining-probability model with lambda_plus = 2, Erlang(4, 1.5) service and
/// Erlang(3, 3) seek.
inline ModelSpec admission_model(double lambda_minus, const opt::Q& q) {
  opt::AdmissionProblem p;
  p.lambda_minus = lambda_minus;
  return p.model(q);
}

/// The optimum published for lambda_minus = 1 in the lambda_plus = 2 setting.
inline ModelSpec published_optimum_lm1() { return admission_model(1.0, {0.0547, 0.0287, 0.1719, 0.033}); }

/// A moderately loaded model with distinct rates in every state.
inline ModelSpec generic_model() {
  return {{0.8, 0.6, 0.3, 0.5, 0.2}, Distribution::erlang(2, 3.0), Distribution::erlang(2, 4.0)};
}

/// Deterministic-service and hyperexponential-service variants of generic_model.
inline std::vector<ModelSpec> service_variants() {
  const RateProfile r = generic_model().rates;
  return {generic_model(),
          {r, Distribution::deterministic(0.7), Distribution::exponential(2.5)},
          {r, Distribution::hyperexponential({0.3, 0.7}, {1.0, 4.0}), Distribution::erlang(3, 6.0)},
          {{1.0, 0.5, 0.5, 1.0, 0.5}, Distribution::exponential(3.0), Distribution::erlang(2, 5.0)}};
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

}  // namespace fixtures
