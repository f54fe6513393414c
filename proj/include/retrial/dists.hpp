#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace retrial {

using cplx = std::complex<double>;

/// Random stream used by the simulator and the optimizer's seeding.
/// std::mt19937_64 output is fixed by the standard, and the variate
/// transforms below avoid <random> distributions so draws are bit-exact
/// across standard library implementations.
using Rng = std::mt19937_64;

/// Independent stream for replication `stream` of a run seeded with `seed`.
Rng make_stream(std::uint64_t seed, std::uint64_t stream);

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Exp(rate) variate; rate must be > 0.
double exponential_variate(Rng& rng, double rate);

struct Exponential {
  double rate;
  bool operator==(const Exponential&) const = default;
};
struct Erlang {
  int phases;
  double rate;  // per-phase rate
  bool operator==(const Erlang&) const = default;
};
struct Deterministic {
  double value;
  bool operator==(const Deterministic&) const = default;
};
struct HyperExponential {
  std::vector<double> weights;
  std::vector<double> rates;
  bool operator==(const HyperExponential&) const = default;
};

/// A nonnegative service or seek time law.
///
/// Every member has an exact LST on Re(s) >= 0 and exact (confluent)
/// divided differences of it; the closed forms in `analytic` are written in
/// terms of those.
class Distribution {
 public:
  using Kind = std::variant<Exponential, Erlang, Deterministic, HyperExponential>;

  /// Validates the parameters; throws std::invalid_argument.
  explicit Distribution(Kind kind);

  static Distribution exponential(double rate);
  static Distribution erlang(int phases, double rate);
  static Distribution deterministic(double value);
  static Distribution hyperexponential(std::vector<double> weights, std::vector<double> rates);

  const Kind& kind() const noexcept { return kind_; }

  /// E[exp(-sT)] for s >= 0. Throws std::domain_error for s < 0.
  double lst(double s) const;
  /// LST continued to Re(s) >= 0.
  cplx lst(cplx s) const;

  /// Divided difference of the LST over 1 to 4 (possibly repeated) nodes in
  /// the closed right half-plane. Repeated nodes give the confluent limit, so
  /// e.g. divided_difference({s, s}) == lst'(s).
  cplx divided_difference(std::span<const cplx> nodes) const;
  double divided_difference(std::initializer_list<double> nodes) const;

  /// k-th derivative of the LST at real s >= 0 (k <= 3).
  double lst_derivative(double s, int k) const;

  /// Raw moment of order 1 or 2. Any other order throws std::invalid_argument.
  double moment(int order) const;
  double mean() const { return moment(1); }

  double sample(Rng& rng) const;

  /// Density. Not defined for Deterministic (throws std::domain_error).
  double pdf(double t) const;
  /// P(T > t).
  double survival(double t) const;
  /// Smallest convenient horizon with survival(horizon) < mass.
  double tail_horizon(double mass) const;

  bool is_point_mass() const noexcept { return std::holds_alternative<Deterministic>(kind_); }
  bool is_zero() const noexcept;

  std::string describe() const;

  bool operator==(const Distribution&) const = default;

 private:
  Kind kind_;
};

}  // namespace retrial
