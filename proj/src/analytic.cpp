#include "retrial/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "retrial/errors.hpp"
#include "retrial/oracles.hpp"

namespace retrial {

void RateProfile::validate() const {
  const double all[] = {lambda_minus, lambda_e, lambda_e_plus, lambda_r, lambda_r_plus};
  for (double r : all)
    if (!std::isfinite(r) || r < 0.0) throw ConfigError("rates must be finite and >= 0");
  if (!(lambda_minus > 0.0)) throw ConfigError("lambda_minus must be > 0");
}

namespace {

cplx dd(const Distribution& d, std::initializer_list<cplx> nodes) {
  return d.divided_difference(std::span<const cplx>(nodes.begin(), nodes.size()));
}

// (1 - beta*(l)) / l, continuous at l = 0.
double R_of(const Distribution& b, double l) { return -b.divided_difference({l, 0.0}); }
// (bbar - R(l)) / l, continuous at l = 0.
double Q_of(const Distribution& b, double l) { return b.divided_difference({l, 0.0, 0.0}); }

ADerivatives derivatives(const Distribution& b, ClassRates c) {
  if (c.first == 0.0) return {0.0, 0.0};
  const double R = R_of(b, c.first);
  const double Q = Q_of(b, c.first);
  const double lp = c.subsequent;
  return {c.first * R + lp * c.first * Q,
          2.0 * lp * c.first * Q + lp * lp * (b.moment(2) - 2.0 * Q)};
}

// (A_k(z) - 1) / (z - 1), regular at z = 1 where it equals A_k'(1).
cplx A_tilde(const Distribution& b, ClassRates c, cplx z) {
  if (c.first == 0.0) return 0.0;
  const cplx node = c.subsequent * (1.0 - z);
  return -c.first * (dd(b, {node, c.first}) - c.subsequent * dd(b, {node, c.first, 0.0}));
}

// Ratios t_e / lambda^e and t_r / lambda^r carry every stability-related
// quantity; they stay finite when lambda^r = 0.
struct Core {
  double lm;
  double alpha;
  double b1;
  double b2;
  ClassRates ce;
  ClassRates cr;
  double Re;
  double Rr;
  ADerivatives Ae;
  ADerivatives Ar;
  double tau_e;
  double tau_r;
  double margin;
};

Core core(const ModelSpec& m) {
  m.validate();
  Core c{};
  c.lm = m.rates.lambda_minus;
  c.alpha = m.seek.lst(c.lm);
  c.b1 = m.service.mean();
  c.b2 = m.service.moment(2);
  c.ce = class_rates(ArrivalClass::e, m.rates);
  c.cr = class_rates(ArrivalClass::r, m.rates);
  c.Re = R_of(m.service, c.ce.first);
  c.Rr = R_of(m.service, c.cr.first);
  c.Ae = derivatives(m.service, c.ce);
  c.Ar = derivatives(m.service, c.cr);
  c.tau_e = c.Ae.first;
  c.tau_r = 1.0 - c.Ar.first;
  c.margin = c.alpha * c.tau_r - (1.0 - c.alpha) * c.tau_e;
  return c;
}

struct Stationary : Core {
  double pi0 = 0.0;
  double TH = 0.0;
  double p00 = 0.0;
  double den = 0.0;  // (1 + lm b1) tau_r + lm b1 tau_e
  double P_idle = 0.0;
};

Stationary stationary(const ModelSpec& m) {
  Stationary s{core(m)};
  if (!(s.margin > 0.0)) throw UnstableModel(s.margin);
  const double tt = s.tau_r + s.tau_e;
  s.pi0 = s.margin / (s.alpha * tt);
  s.TH = s.lm / (s.lm * s.b1 + s.tau_r / tt);
  s.p00 = s.TH * s.pi0 / s.lm;
  s.den = (1.0 + s.lm * s.b1) * s.tau_r + s.lm * s.b1 * s.tau_e;
  s.P_idle = s.tau_r / s.den;
  return s;
}

struct ZTerms {
  cplx Ae_t;  // A_e tilde
  cplx Ar_t;
  cplx D;
  cplx w;  // p00 + P0*(0,z)
  cplx K;
  cplx ce_node;
  cplx cr_node;
};

ZTerms z_terms(const ModelSpec& m, const Stationary& s, cplx z) {
  if (std::abs(z) > 1.0 + 1e-12) throw std::domain_error("|z| must be <= 1");
  ZTerms t{};
  t.Ae_t = A_tilde(m.service, s.ce, z);
  t.Ar_t = A_tilde(m.service, s.cr, z);
  t.D = s.alpha * (z * t.Ae_t + 1.0 - t.Ar_t) - z * t.Ae_t;
  t.w = s.p00 * s.alpha * (1.0 - t.Ar_t) / t.D;
  t.K = s.lm * s.alpha * s.p00 * t.Ae_t / t.D;
  t.ce_node = s.ce.subsequent * (1.0 - z);
  t.cr_node = s.cr.subsequent * (1.0 - z);
  return t;
}

EpochTransforms epoch(const ModelSpec& m, const Stationary& s, cplx z) {
  const ZTerms t = z_terms(m, s, z);
  EpochTransforms e{};
  e.P0 = t.w - s.p00;
  e.P12 = s.lm * s.Re * t.w;
  e.P13 = s.Rr * t.K;
  e.P45 = s.lm * s.ce.first * z * dd(m.service, {t.ce_node, s.ce.first, 0.0}) * t.w;
  e.P67 = s.cr.first * z * dd(m.service, {t.cr_node, s.cr.first, 0.0}) * t.K;
  e.K = t.K;
  return e;
}

// log sum_j x^j / (n+j)!, n >= 1.
double log_g(int n, double x) {
  const double ln_nfact = std::lgamma(n + 1.0);
  if (x == 0.0) return -ln_nfact;
  std::vector<double> terms;
  double peak = -std::numeric_limits<double>::infinity();
  if (x > 0.0) {
    const double lx = std::log(x);
    for (int j = 0;; ++j) {
      const double term = j * lx - std::lgamma(n + j + 1.0);
      terms.push_back(term);
      peak = std::max(peak, term);
      if (j > x && term < peak - 46.0) break;
    }
  } else {
    // Kummer transformation keeps every term positive.
    const double y = -x;
    const double ly = std::log(y);
    for (int k = 0;; ++k) {
      const double term = k * ly - std::lgamma(k + 1.0) + std::log(double(n) / (n + k));
      terms.push_back(term);
      peak = std::max(peak, term);
      if (k > y && term < peak - 46.0) break;
    }
  }
  double acc = 0.0;
  for (double term : terms) acc += std::exp(term - peak);
  const double lse = peak + std::log(acc);
  return x > 0.0 ? lse : x - ln_nfact + lse;
}

}  // namespace

double arrival_count_pmf(ArrivalClass k, const RateProfile& rates, int n, double t) {
  if (n < 0) return 0.0;
  if (!(t >= 0.0)) throw std::domain_error("arrival_count_pmf: t must be >= 0");
  const auto [l, lp] = class_rates(k, rates);
  if (t == 0.0 || l == 0.0) return n == 0 ? 1.0 : 0.0;
  if (n == 0) return std::exp(-l * t);
  if (lp == 0.0) return n == 1 ? -std::expm1(-l * t) : 0.0;
  const double lp_ = std::log(lp);
  const double logp = std::log(l) + (n - 1) * lp_ + n * std::log(t) - lp * t +
                      log_g(n, (lp - l) * t);
  return std::exp(logp);
}

double arrivals_during_service_pmf(ArrivalClass k, const ModelSpec& model, int n) {
  model.validate();
  if (n < 0) return 0.0;
  const Distribution& b = model.service;
  if (b.is_point_mass()) return arrival_count_pmf(k, model.rates, n, b.mean());
  if (n == 0) return b.lst(class_rates(k, model.rates).first);
  const double horizon = b.tail_horizon(1e-15);
  auto integrand = [&](double t) { return arrival_count_pmf(k, model.rates, n, t) * b.pdf(t); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, horizon,
                                                                       20, 1e-13);
}

cplx A_k(ArrivalClass k, const ModelSpec& model, cplx z) {
  model.validate();
  if (std::abs(z) > 1.0 + 1e-12) throw std::domain_error("A_k: |z| must be <= 1");
  const auto [l, lp] = class_rates(k, model.rates);
  if (l == 0.0) return 1.0;
  const cplx node = lp * (1.0 - z);
  return model.service.lst(cplx(l)) - l * z * dd(model.service, {node, l});
}

ADerivatives A_k_derivatives(ArrivalClass k, const ModelSpec& model) {
  model.validate();
  return derivatives(model.service, class_rates(k, model.rates));
}

double stability_margin(const ModelSpec& model) { return core(model).margin; }

std::optional<double> stability_threshold_gap(const ModelSpec& model, bool corrected) {
  const Core c = core(model);
  const double le = c.ce.first, lep = c.ce.subsequent, lr = c.cr.first, lrp = c.cr.subsequent;
  if (le == 0.0 || lr == 0.0) return std::nullopt;
  const double denom = lep + (lrp - lep) * c.alpha;
  if (!(denom > 0.0)) return std::nullopt;
  const double br = model.service.lst(lr);
  const double be = model.service.lst(le);
  const double second_factor = corrected ? 1.0 - be : be;
  const double threshold = c.alpha * (lrp + (lr - lrp) * br) / (lr * denom) -
                           (1.0 - c.alpha) * (le - lep) * second_factor / (le * denom);
  return threshold - c.b1;
}

double embedded_pi0(const ModelSpec& model) { return stationary(model).pi0; }

cplx embedded_pgf(const ModelSpec& model, cplx z) {
  const Stationary s = stationary(model);
  const ZTerms t = z_terms(model, s, z);
  return s.pi0 * s.alpha * (z * t.Ae_t + 1.0 - t.Ar_t) / t.D;
}

double transition_prob(const ModelSpec& model, int m, int n) {
  if (m < 0 || n < 0) throw std::domain_error("transition_prob: states are >= 0");
  if (m == 0) return arrivals_during_service_pmf(ArrivalClass::e, model, n);
  const double alpha = model.seek.lst(model.rates.lambda_minus);
  const double be = n - m >= 0 ? arrivals_during_service_pmf(ArrivalClass::e, model, n - m) : 0.0;
  const double br =
      n - m + 1 >= 0 ? arrivals_during_service_pmf(ArrivalClass::r, model, n - m + 1) : 0.0;
  return (1.0 - alpha) * be + alpha * br;
}

double chi1(const ModelSpec& model, double z) {
  const Stationary s = stationary(model);
  const ZTerms t = z_terms(model, s, cplx(z));
  return ((1.0 - t.Ar_t) / t.D).real() * s.margin / s.tau_r;
}

TTerms p00_t_terms(const ModelSpec& model) {
  const Stationary s = stationary(model);
  return {s.p00, s.ce.first * s.tau_e, s.cr.first * s.tau_r};
}

EpochTransforms arbitrary_epoch_transforms(const ModelSpec& model, cplx z) {
  return epoch(model, stationary(model), z);
}

TwoArgTransforms two_arg_transforms(const ModelSpec& model, cplx s_arg, cplx z) {
  const Stationary s = stationary(model);
  const ZTerms t = z_terms(model, s, z);
  const Distribution& b = model.service;
  const cplx P0_boundary = z * t.K;
  TwoArgTransforms r{};
  r.P0 = -dd(model.seek, {s_arg, s.lm}) * P0_boundary / s.alpha;
  r.P12 = -s.lm * dd(b, {s_arg, s.ce.first}) * t.w;
  r.P13 = -dd(b, {s_arg, s.cr.first}) * t.K;
  r.P45 = s.lm * s.ce.first * z * dd(b, {s_arg, t.ce_node, s.ce.first}) * t.w;
  r.P67 = s.cr.first * P0_boundary * dd(b, {s_arg, t.cr_node, s.cr.first});
  return r;
}

BoundaryRates boundary_rates(const ModelSpec& model, cplx z) {
  const Stationary s = stationary(model);
  const ZTerms t = z_terms(model, s, z);
  const Distribution& b = model.service;
  BoundaryRates r{};
  r.P0 = z * t.K;
  r.P12 = s.lm * b.lst(cplx(s.ce.first)) * t.w;
  r.P13 = b.lst(cplx(s.cr.first)) * t.K;
  r.P45 = -s.lm * s.ce.first * z * dd(b, {t.ce_node, s.ce.first}) * t.w;
  r.P67 = -s.cr.first * z * dd(b, {t.cr_node, s.cr.first}) * t.K;
  return r;
}

ServerStateProbs server_state_probs(const ModelSpec& model) {
  const Stationary s = stationary(model);
  ServerStateProbs p{};
  p.idle = s.P_idle;
  p.e2 = s.lm * s.tau_r * s.Re / s.den;
  p.e3 = s.lm * s.tau_e * s.Rr / s.den;
  p.e45 = s.lm * s.tau_r * (s.b1 - s.Re) / s.den;
  p.e67 = s.lm * s.tau_e * (s.b1 - s.Rr) / s.den;
  return p;
}

MomentsThroughput moments_and_throughput(const ModelSpec& model) {
  const Stationary s = stationary(model);
  const double S_e = (s.ce.first - s.ce.subsequent) * Q_of(model.service, s.ce.first) +
                     s.ce.subsequent * s.b2 / 2.0;
  const double S_r = (s.cr.first - s.cr.subsequent) * Q_of(model.service, s.cr.first) +
                     s.cr.subsequent * s.b2 / 2.0;
  const double A1e = s.Ae.first, A2e = s.Ae.second, A1r = s.Ar.first, A2r = s.Ar.second;
  const double G =
      s.alpha * ((2.0 * A1e + A2e) * (1.0 - A1r) + A1e * A2r) / (2.0 * s.margin * s.margin);
  // K(1) and K'(1): seek-completion rate and its orbit-weighted counterpart.
  const double K1 = s.TH * s.tau_e / (s.tau_r + s.tau_e);
  const double K1p = s.lm * s.alpha * s.p00 * G - K1;
  const double EX = s.p00 * (1.0 - s.alpha) * (1.0 + s.lm * s.b1) * G + s.lm * s.P_idle * S_e +
                    K1 * S_r + s.b1 * K1p;
  return {EX, s.TH, EX / s.TH, S_e, S_r, G, K1p / (s.lm * s.alpha)};
}

double throughput_closed_form(const ModelSpec& model) {
  const Core c = core(model);
  const double tt = c.tau_r + c.tau_e;
  if (tt == 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double denom = c.lm * c.b1 + c.tau_r / tt;
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return c.lm / denom;
}

double throughput_from_transforms(const ModelSpec& model) {
  const Stationary s = stationary(model);
  const EpochTransforms e = epoch(model, s, 1.0);
  const double idle = s.p00 + e.P0.real();
  return s.lm * idle + s.ce.first * e.P12.real() + s.ce.subsequent * e.P45.real() +
         s.cr.first * e.P13.real() + s.cr.subsequent * e.P67.real();
}

cplx total_system_pgf(const ModelSpec& model, cplx z) {
  const Stationary s = stationary(model);
  const EpochTransforms e = epoch(model, s, z);
  return s.p00 + e.P0 + z * (e.P12 + e.P13 + e.P45 + e.P67);
}

cplx orbit_pgf(const ModelSpec& model, cplx z) {
  const Stationary s = stationary(model);
  const EpochTransforms e = epoch(model, s, z);
  return s.p00 + e.P0 + e.P12 + e.P13 + e.P45 + e.P67;
}

AsymptoticBounds asymptotic_bounds(const ModelSpec& model) {
  const Stationary s = stationary(model);
  const double num = 2.0 * s.tau_e * (1.0 - s.alpha);
  return {num / (s.alpha * s.den), num / (s.alpha * s.tau_r)};
}

const std::vector<LedgerEntry>& typo_ledger() {
  static const std::vector<LedgerEntry> entries = {
      {"arrival-pgf-sign",
       "A_k(z): first numerator term uses (1 - z), so A_k(0) = beta*(lambda^k)"},
      {"arrival-count-exponent", "two-rate count pmf: exp(-lambda^k t), not exp(-lambda^k) t"},
      {"transition-parenthesis", "p_{m,n}: (1 - alpha*(lambda^-)) multiplies b^e_{n-m} only"},
      {"stability-threshold-factor",
       "explicit stability threshold: second term carries 1 - beta*(lambda^e); drift form is "
       "authoritative"},
      {"pi0-parenthesis", "pi0, t_e: (1 - beta*(lambda^e)) closed before multiplying"},
      {"p00-parenthesis",
       "p00 = [alpha*(lambda^e t_r + lambda^r t_e) - lambda^r t_e] / "
       "(alpha*[(1 + lambda^- b) lambda^e t_r + lambda^- b lambda^r t_e])"},
      {"k-argument", "K(z): P0*(0,x) read as P0*(0,z); A_r^*(z) read as A_r(z)"},
      {"busy-transform-argument",
       "partial transforms after the first arrival use beta*(lambda_+^k (1 - z))"},
      {"state-e3-denominator", "P(C=1,E3): denominator ends in lambda^- b lambda^r t_e"},
      {"state-e45-numerator", "P(C=1,E4 or E5): numerator factor lambda^- lambda^e t_r"},
      {"f-parenthesis", "F: (1 - alpha*(lambda^-) A_r'(1)) with alpha* evaluated at lambda^-"},
      {"ex-f-weight", "E(X): the b F term is weighted by lambda^- alpha*(lambda^-)"},
      {"throughput-idle-term", "throughput sum includes lambda^- p00"},
      {"total-pgf-variable", "P(z): the factor multiplying the busy transforms is z"},
      {"chi1-normaliser", "chi1: normalised by the stability margin so that chi1(1) = 1"},
      {"bounds-middle-term",
       "distance to the instant-seek limit measured as sum_n |P(X=n) - P_inf(X=n)|"},
  };
  return entries;
}

StationaryReport stationary_report(const ModelSpec& model, std::size_t pmf_len) {
  StationaryReport r;
  const Core c = core(model);
  r.stability_margin = c.margin;
  r.stable = c.margin > 0.0;
  r.threshold_gap_printed = stability_threshold_gap(model, false);
  r.threshold_gap_corrected = stability_threshold_gap(model, true);
  if (r.threshold_gap_printed)
    r.threshold_form_disagrees = (*r.threshold_gap_printed > 0.0) != r.stable;
  if (!r.stable) return r;

  const Stationary s = stationary(model);
  r.pi0 = s.pi0;
  r.p00 = s.p00;
  r.P_idle = s.P_idle;
  r.state_event_probs = server_state_probs(model);
  const MomentsThroughput mt = moments_and_throughput(model);
  r.EX = mt.EX;
  r.TH_S = mt.TH_S;
  r.ES = mt.ES;
  r.t_e = s.ce.first * s.tau_e;
  r.t_r = s.cr.first * s.tau_r;
  r.bounds = asymptotic_bounds(model);
  if (pmf_len > 0) {
    const int n_max = static_cast<int>(pmf_len) - 1;
    r.orbit_pmf_departure =
        oracles::pgf_to_pmf([&](cplx z) { return embedded_pgf(model, z); }, std::max(n_max, 1));
    r.system_pmf = oracles::pgf_to_pmf([&](cplx z) { return total_system_pgf(model, z); },
                                       std::max(n_max, 1));
    r.orbit_pmf_departure.resize(pmf_len);
    r.system_pmf.resize(pmf_len);
  }
  return r;
}

}  // namespace retrial
