#include "retrial/dists.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace retrial {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Upper-triangular matrix of order <= 4. Divided differences of f over nodes
// x0..xn are the top-right entry of f(Z), Z = diag(x) + superdiagonal ones.
struct Tri {
  int n = 0;
  std::array<cplx, 16> a{};

  explicit Tri(int order) : n(order) {}
  cplx& operator()(int i, int j) { return a[static_cast<std::size_t>(i * 4 + j)]; }
  cplx operator()(int i, int j) const { return a[static_cast<std::size_t>(i * 4 + j)]; }

  static Tri identity(int order) {
    Tri t(order);
    for (int i = 0; i < order; ++i) t(i, i) = 1.0;
    return t;
  }

  friend Tri operator*(const Tri& x, const Tri& y) {
    Tri r(x.n);
    for (int i = 0; i < x.n; ++i)
      for (int j = i; j < x.n; ++j) {
        cplx acc = 0.0;
        for (int k = i; k <= j; ++k) acc += x(i, k) * y(k, j);
        r(i, j) = acc;
      }
    return r;
  }
  Tri& operator+=(const Tri& y) {
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) (*this)(i, j) += y(i, j);
    return *this;
  }
  Tri& operator*=(cplx c) {
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) (*this)(i, j) *= c;
    return *this;
  }
  double norm1() const {
    double best = 0.0;
    for (int j = 0; j < n; ++j) {
      double col = 0.0;
      for (int i = 0; i <= j; ++i) col += std::abs((*this)(i, j));
      best = std::max(best, col);
    }
    return best;
  }
};

Tri power(Tri base, int e) {
  Tri result = Tri::identity(base.n);
  while (e > 0) {
    if (e & 1) result = result * base;
    e >>= 1;
    if (e > 0) base = base * base;
  }
  return result;
}

// rate * (rate I + Z)^{-1} for the bidiagonal Z.
Tri resolvent(double rate, std::span<const cplx> nodes) {
  const int n = static_cast<int>(nodes.size());
  Tri t(n);
  for (int i = 0; i < n; ++i) {
    cplx prod = 1.0;
    for (int j = i; j < n; ++j) {
      prod *= rate + nodes[static_cast<std::size_t>(j)];
      t(i, j) = ((j - i) % 2 == 0 ? rate : -rate) / prod;
    }
  }
  return t;
}

// exp(-v Z) by scaling and squaring.
Tri exp_shifted(double v, std::span<const cplx> nodes) {
  const int n = static_cast<int>(nodes.size());
  Tri a(n);
  for (int i = 0; i < n; ++i) {
    a(i, i) = -v * nodes[static_cast<std::size_t>(i)];
    if (i + 1 < n) a(i, i + 1) = -v;
  }
  int squarings = 0;
  double nrm = a.norm1();
  while (nrm > 0.25) {
    nrm *= 0.5;
    ++squarings;
  }
  a *= std::ldexp(1.0, -squarings);
  Tri sum = Tri::identity(n);
  Tri term = Tri::identity(n);
  for (int k = 1; k <= 18; ++k) {
    term = term * a;
    term *= 1.0 / k;
    sum += term;
  }
  for (int k = 0; k < squarings; ++k) sum = sum * sum;
  return sum;
}

cplx ratio_power(double rate, cplx s, int m) {
  const cplx g = rate / (rate + s);
  cplx result = 1.0;
  cplx base = g;
  while (m > 0) {
    if (m & 1) result *= base;
    m >>= 1;
    if (m > 0) base *= base;
  }
  return result;
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x5eed5eedU};
  return Rng(seq);
}

double exponential_variate(Rng& rng, double rate) { return -std::log1p(-uniform01(rng)) / rate; }

Distribution::Distribution(Kind kind) : kind_(std::move(kind)) {
  std::visit(overloaded{
                 [](const Exponential& d) {
                   require(std::isfinite(d.rate) && d.rate > 0.0, "exponential rate must be > 0");
                 },
                 [](const Erlang& d) {
                   require(d.phases >= 1, "erlang phases must be >= 1");
                   require(std::isfinite(d.rate) && d.rate > 0.0, "erlang rate must be > 0");
                 },
                 [](const Deterministic& d) {
                   require(std::isfinite(d.value) && d.value >= 0.0,
                           "deterministic value must be >= 0");
                 },
                 [](const HyperExponential& d) {
                   require(!d.weights.empty() && d.weights.size() == d.rates.size(),
                           "hyperexp weights and rates must be nonempty and equal length");
                   double total = 0.0;
                   for (double w : d.weights) {
                     require(std::isfinite(w) && w >= 0.0, "hyperexp weights must be >= 0");
                     total += w;
                   }
                   require(std::abs(total - 1.0) <= 1e-12, "hyperexp weights must sum to 1");
                   for (double r : d.rates)
                     require(std::isfinite(r) && r > 0.0, "hyperexp rates must be > 0");
                 },
             },
             kind_);
}

Distribution Distribution::exponential(double rate) { return Distribution(Exponential{rate}); }
Distribution Distribution::erlang(int phases, double rate) {
  return Distribution(Erlang{phases, rate});
}
Distribution Distribution::deterministic(double value) {
  return Distribution(Deterministic{value});
}
Distribution Distribution::hyperexponential(std::vector<double> weights,
                                            std::vector<double> rates) {
  return Distribution(HyperExponential{std::move(weights), std::move(rates)});
}

bool Distribution::is_zero() const noexcept {
  const auto* d = std::get_if<Deterministic>(&kind_);
  return d != nullptr && d->value == 0.0;
}

double Distribution::lst(double s) const {
  if (!(s >= 0.0)) throw std::domain_error("lst: argument must be >= 0");
  if (s == 0.0) return 1.0;
  return std::visit(overloaded{
                        [&](const Exponential& d) { return d.rate / (d.rate + s); },
                        [&](const Erlang& d) {
                          return std::exp(-d.phases * std::log1p(s / d.rate));
                        },
                        [&](const Deterministic& d) { return std::exp(-s * d.value); },
                        [&](const HyperExponential& d) {
                          double acc = 0.0;
                          for (std::size_t i = 0; i < d.rates.size(); ++i)
                            acc += d.weights[i] * d.rates[i] / (d.rates[i] + s);
                          return acc;
                        },
                    },
                    kind_);
}

cplx Distribution::lst(cplx s) const {
  if (s.real() < -1e-12) throw std::domain_error("lst: Re(s) must be >= 0");
  return std::visit(overloaded{
                        [&](const Exponential& d) { return cplx(d.rate) / (d.rate + s); },
                        [&](const Erlang& d) { return ratio_power(d.rate, s, d.phases); },
                        [&](const Deterministic& d) { return std::exp(-s * d.value); },
                        [&](const HyperExponential& d) {
                          cplx acc = 0.0;
                          for (std::size_t i = 0; i < d.rates.size(); ++i)
                            acc += d.weights[i] * d.rates[i] / (d.rates[i] + s);
                          return acc;
                        },
                    },
                    kind_);
}

cplx Distribution::divided_difference(std::span<const cplx> nodes) const {
  if (nodes.empty() || nodes.size() > 4)
    throw std::invalid_argument("divided_difference: 1 to 4 nodes");
  for (const cplx& x : nodes)
    if (x.real() < -1e-12) throw std::domain_error("divided_difference: Re(node) must be >= 0");
  const int last = static_cast<int>(nodes.size()) - 1;
  if (last == 0) return lst(nodes[0]);
  return std::visit(overloaded{
                        [&](const Exponential& d) { return resolvent(d.rate, nodes)(0, last); },
                        [&](const Erlang& d) {
                          return power(resolvent(d.rate, nodes), d.phases)(0, last);
                        },
                        [&](const Deterministic& d) {
                          if (d.value == 0.0) return cplx(0.0);
                          return exp_shifted(d.value, nodes)(0, last);
                        },
                        [&](const HyperExponential& d) {
                          cplx acc = 0.0;
                          for (std::size_t i = 0; i < d.rates.size(); ++i)
                            acc += d.weights[i] * resolvent(d.rates[i], nodes)(0, last);
                          return acc;
                        },
                    },
                    kind_);
}

double Distribution::divided_difference(std::initializer_list<double> nodes) const {
  std::array<cplx, 4> buf{};
  if (nodes.size() == 0 || nodes.size() > 4)
    throw std::invalid_argument("divided_difference: 1 to 4 nodes");
  std::copy(nodes.begin(), nodes.end(), buf.begin());
  return divided_difference(std::span<const cplx>(buf.data(), nodes.size())).real();
}

double Distribution::lst_derivative(double s, int k) const {
  if (k < 0 || k > 3) throw std::invalid_argument("lst_derivative: order 0..3");
  if (k == 0) return lst(s);
  std::array<cplx, 4> nodes{};
  nodes.fill(cplx(s));
  double fact = 1.0;
  for (int i = 2; i <= k; ++i) fact *= i;
  return fact * divided_difference(std::span<const cplx>(nodes.data(), static_cast<std::size_t>(k) + 1)).real();
}

double Distribution::moment(int order) const {
  if (order != 1 && order != 2) throw std::invalid_argument("moment: unsupported order");
  return std::visit(overloaded{
                        [&](const Exponential& d) {
                          return order == 1 ? 1.0 / d.rate : 2.0 / (d.rate * d.rate);
                        },
                        [&](const Erlang& d) {
                          const double m = d.phases;
                          return order == 1 ? m / d.rate : m * (m + 1.0) / (d.rate * d.rate);
                        },
                        [&](const Deterministic& d) {
                          return order == 1 ? d.value : d.value * d.value;
                        },
                        [&](const HyperExponential& d) {
                          double acc = 0.0;
                          for (std::size_t i = 0; i < d.rates.size(); ++i)
                            acc += d.weights[i] * (order == 1 ? 1.0 / d.rates[i]
                                                             : 2.0 / (d.rates[i] * d.rates[i]));
                          return acc;
                        },
                    },
                    kind_);
}

double Distribution::sample(Rng& rng) const {
  return std::visit(overloaded{
                        [&](const Exponential& d) { return exponential_variate(rng, d.rate); },
                        [&](const Erlang& d) {
                          // product of uniforms, logged every 32 factors to stay clear of underflow
                          double total = 0.0;
                          int left = d.phases;
                          while (left > 0) {
                            const int chunk = std::min(left, 32);
                            double prod = 1.0;
                            for (int i = 0; i < chunk; ++i) prod *= 1.0 - uniform01(rng);
                            total -= std::log(prod);
                            left -= chunk;
                          }
                          return total / d.rate;
                        },
                        [&](const Deterministic& d) { return d.value; },
                        [&](const HyperExponential& d) {
                          const double u = uniform01(rng);
                          double cum = 0.0;
                          std::size_t pick = d.rates.size() - 1;
                          for (std::size_t i = 0; i < d.rates.size(); ++i) {
                            cum += d.weights[i];
                            if (u < cum) {
                              pick = i;
                              break;
                            }
                          }
                          return exponential_variate(rng, d.rates[pick]);
                        },
                    },
                    kind_);
}

double Distribution::pdf(double t) const {
  if (t < 0.0) return 0.0;
  return std::visit(overloaded{
                        [&](const Exponential& d) { return d.rate * std::exp(-d.rate * t); },
                        [&](const Erlang& d) {
                          if (t == 0.0) return d.phases == 1 ? d.rate : 0.0;
                          return std::exp(d.phases * std::log(d.rate) +
                                          (d.phases - 1) * std::log(t) - d.rate * t -
                                          std::lgamma(static_cast<double>(d.phases)));
                        },
                        [&](const Deterministic&) -> double {
                          throw std::domain_error("pdf: point mass has no density");
                        },
                        [&](const HyperExponential& d) {
                          double acc = 0.0;
                          for (std::size_t i = 0; i < d.rates.size(); ++i)
                            acc += d.weights[i] * d.rates[i] * std::exp(-d.rates[i] * t);
                          return acc;
                        },
                    },
                    kind_);
}

double Distribution::survival(double t) const {
  if (t < 0.0) return 1.0;
  return std::visit(overloaded{
                        [&](const Exponential& d) { return std::exp(-d.rate * t); },
                        [&](const Erlang& d) {
                          return boost::math::gamma_q(static_cast<double>(d.phases), d.rate * t);
                        },
                        [&](const Deterministic& d) { return t < d.value ? 1.0 : 0.0; },
                        [&](const HyperExponential& d) {
                          double acc = 0.0;
                          for (std::size_t i = 0; i < d.rates.size(); ++i)
                            acc += d.weights[i] * std::exp(-d.rates[i] * t);
                          return acc;
                        },
                    },
                    kind_);
}

double Distribution::tail_horizon(double mass) const {
  if (const auto* d = std::get_if<Deterministic>(&kind_)) return d->value;
  double t = std::max(mean(), 1e-12);
  while (survival(t) >= mass) t *= 1.5;
  return t;
}

std::string Distribution::describe() const {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const Exponential& d) { os << "Exponential(" << d.rate << ")"; },
                 [&](const Erlang& d) { os << "Erlang(" << d.phases << ", " << d.rate << ")"; },
                 [&](const Deterministic& d) { os << "Deterministic(" << d.value << ")"; },
                 [&](const HyperExponential& d) {
                   os << "HyperExponential(";
                   for (std::size_t i = 0; i < d.rates.size(); ++i)
                     os << (i ? ", " : "") << d.weights[i] << "@" << d.rates[i];
                   os << ")";
                 },
             },
             kind_);
  return os.str();
}

}  // namespace retrial
