#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "retrial/model.hpp"

namespace retrial {

// ---- arrival counts during a service -------------------------------------

/// P(N(t) = n) for the two-rate process whose first arrival comes at rate
/// lambda^k and every later one at lambda_+^k.
double arrival_count_pmf(ArrivalClass k, const RateProfile& rates, int n, double t);

/// b_n^k: probability of n arrivals during one class-k service, by adaptive
/// quadrature of arrival_count_pmf against the service density.
double arrivals_during_service_pmf(ArrivalClass k, const ModelSpec& model, int n);

/// PGF of the class-k arrival count, |z| <= 1.
cplx A_k(ArrivalClass k, const ModelSpec& model, cplx z);

struct ADerivatives {
  double first;   // A_k'(1)
  double second;  // A_k''(1)
};
ADerivatives A_k_derivatives(ArrivalClass k, const ModelSpec& model);

// ---- embedded chain -------------------------------------------------------

/// Drift margin alpha*(lambda^-) - [(1-alpha*)A_e'(1) + alpha* A_r'(1)].
/// The embedded chain is ergodic iff this is > 0.
double stability_margin(const ModelSpec& model);
inline bool is_stable(const ModelSpec& model) { return stability_margin(model) > 0.0; }

/// The explicit threshold form of the stability condition, as printed:
/// (threshold - mean service). Returns nullopt when lambda^e or lambda^r is 0,
/// or the printed denominator vanishes. `corrected` replaces the
/// beta*(lambda^e) factor of the second term by 1 - beta*(lambda^e), which makes
/// the sign agree with stability_margin.
std::optional<double> stability_threshold_gap(const ModelSpec& model, bool corrected);

double embedded_pi0(const ModelSpec& model);
cplx embedded_pgf(const ModelSpec& model, cplx z);

/// One-step transition probability p_{m,n} of the embedded chain.
double transition_prob(const ModelSpec& model, int m, int n);

/// Orbit-size PGF conditioned on an idle server.
double chi1(const ModelSpec& model, double z);

// ---- arbitrary epochs -----------------------------------------------------

struct TTerms {
  double p00;
  double t_e;
  double t_r;
};
TTerms p00_t_terms(const ModelSpec& model);

/// Partial PGFs in z of the orbit size jointly with the server state, each
/// integrated over the remaining seek/service time (argument s = 0).
struct EpochTransforms {
  cplx P0;   // idle and seeking, orbit nonempty
  cplx P12;  // busy with a primary, no arrivals yet
  cplx P13;  // busy with a retrial, no arrivals yet
  cplx P45;  // busy with a primary, >= 1 arrival
  cplx P67;  // busy with a retrial, >= 1 arrival
  cplx K;
};
EpochTransforms arbitrary_epoch_transforms(const ModelSpec& model, cplx z);

/// The same partial transforms at a general LST argument s >= 0.
struct TwoArgTransforms {
  cplx P0;
  cplx P12;
  cplx P13;
  cplx P45;
  cplx P67;
};
TwoArgTransforms two_arg_transforms(const ModelSpec& model, cplx s, cplx z);

/// Rates at which each state is entered (transforms evaluated at zero
/// remaining time), P_x(0, z).
struct BoundaryRates {
  cplx P0;
  cplx P12;
  cplx P13;
  cplx P45;
  cplx P67;
  cplx sum_busy() const { return P12 + P13 + P45 + P67; }
};
BoundaryRates boundary_rates(const ModelSpec& model, cplx z);

struct ServerStateProbs {
  double idle;  // C = 0
  double e2;
  double e3;
  double e45;
  double e67;
  double total() const { return idle + e2 + e3 + e45 + e67; }
};
ServerStateProbs server_state_probs(const ModelSpec& model);

struct MomentsThroughput {
  double EX;    // mean orbit size
  double TH_S;  // departure rate
  double ES;    // EX / TH_S
  double S_e;
  double S_r;
  double G;
  double F;
};
MomentsThroughput moments_and_throughput(const ModelSpec& model);

/// Closed-form departure rate. Defined for unstable models too, where it is
/// the rate the formula gives, not a steady-state quantity. NaN if undefined.
double throughput_closed_form(const ModelSpec& model);

/// Admission rate assembled from the state probabilities of the transforms.
double throughput_from_transforms(const ModelSpec& model);

/// PGF of the number in system (orbit + in service).
cplx total_system_pgf(const ModelSpec& model, cplx z);
/// PGF of the orbit size at an arbitrary epoch.
cplx orbit_pgf(const ModelSpec& model, cplx z);

struct AsymptoticBounds {
  double lower;
  double upper;
};
AsymptoticBounds asymptotic_bounds(const ModelSpec& model);

// ---- report ---------------------------------------------------------------

struct LedgerEntry {
  std::string id;
  std::string reading;
};
/// Readings applied where printed formulas are ambiguous or inconsistent.
const std::vector<LedgerEntry>& typo_ledger();

struct StationaryReport {
  bool stable = false;
  double stability_margin = 0.0;
  std::optional<double> threshold_gap_printed;
  std::optional<double> threshold_gap_corrected;
  bool threshold_form_disagrees = false;

  double pi0 = 0.0;
  double p00 = 0.0;
  double P_idle = 0.0;
  ServerStateProbs state_event_probs{};
  double EX = 0.0;
  double TH_S = 0.0;
  double ES = 0.0;
  double t_e = 0.0;
  double t_r = 0.0;
  AsymptoticBounds bounds{};
  std::vector<double> orbit_pmf_departure;
  std::vector<double> system_pmf;
};

/// Everything above in one record. When pmf_len > 0, the departure-epoch
/// orbit pmf and the system-size pmf are extracted up to that length.
/// Unstable models yield a report with only the stability fields set.
StationaryReport stationary_report(const ModelSpec& model, std::size_t pmf_len = 0);

}  // namespace retrial
