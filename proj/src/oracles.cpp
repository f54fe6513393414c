#include "retrial/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include "retrial/errors.hpp"

namespace retrial::oracles {

namespace {

namespace odeint = boost::numeric::odeint;
using State = std::vector<double>;

constexpr double kAbsTol = 1e-14;
constexpr double kRelTol = 1e-12;

// Forward equations of the two-rate counting process on 0..n_max, with one
// extra absorbing state for "more than n_max".
void count_rhs(double l, double lp, int n_max, const double* p, double* dp) {
  const auto top = static_cast<std::size_t>(n_max);
  for (std::size_t n = 0; n <= top; ++n) {
    const double out = (n == 0 ? l : lp) * p[n];
    const double in = n == 0 ? 0.0 : (n == 1 ? l : lp) * p[n - 1];
    dp[n] = in - out;
  }
  dp[top + 1] = (top == 0 ? l : lp) * p[top];
}

State counts_at(double l, double lp, double t, int n_max) {
  State p(static_cast<std::size_t>(n_max) + 2, 0.0);
  p[0] = 1.0;
  if (t == 0.0 || l == 0.0) return p;
  auto sys = [&](const State& x, State& dx, double) { count_rhs(l, lp, n_max, x.data(), dx.data()); };
  odeint::integrate_adaptive(
      odeint::make_controlled(kAbsTol, kRelTol, odeint::runge_kutta_dopri5<State>()), sys, p, 0.0,
      t, t / 100.0);
  return p;
}

void require_config(bool ok, const char* what) {
  if (!ok) throw ConfigError(what);
}

// Tail sums T[j] = sum_{k >= j} b_k from counts b_0..b_L plus the mass above L.
std::vector<double> tail_sums(const std::vector<double>& b) {
  std::vector<double> t(b.size());
  double acc = 0.0;
  for (std::size_t j = b.size(); j-- > 0;) {
    acc += b[j];
    t[j] = acc;
  }
  return t;
}

struct ChainInputs {
  double alpha;
  std::vector<double> be;  // b^e_0..b^e_N, over
  std::vector<double> br;  // b^r_0..b^r_{N+1}, over
  std::vector<double> Te;
  std::vector<double> Tr;
};

ChainInputs chain_inputs(const ModelSpec& model, std::size_t N) {
  ChainInputs c;
  c.alpha = model.seek.lst(model.rates.lambda_minus);
  c.be = service_arrival_counts(ArrivalClass::e, model, static_cast<int>(N));
  c.br = service_arrival_counts(ArrivalClass::r, model, static_cast<int>(N) + 1);
  c.Te = tail_sums(c.be);
  c.Tr = tail_sums(c.br);
  return c;
}

// Probability of a jump from j to a state >= n (n > j - 1).
double up_mass(const ChainInputs& c, std::size_t j, std::size_t n) {
  if (j == 0) return c.Te[n];
  return (1.0 - c.alpha) * c.Te[n - j] + c.alpha * c.Tr[n - j + 1];
}

std::vector<double> solve_lu(const ChainInputs& c, std::size_t N) {
  const auto S = static_cast<Eigen::Index>(N + 1);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(S, S);  // A = P^T - I
  for (std::size_t m = 0; m <= N; ++m) {
    const std::size_t lo = m == 0 ? 0 : m - 1;
    for (std::size_t n = lo; n < N; ++n) {
      double p;
      if (m == 0) {
        p = c.be[n];
      } else {
        const double e = n >= m ? c.be[n - m] : 0.0;
        p = (1.0 - c.alpha) * e + c.alpha * c.br[n - m + 1];
      }
      A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) += p;
    }
    A(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(m)) += up_mass(c, m, N);
  }
  A -= Eigen::MatrixXd::Identity(S, S);
  A.row(S - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(S);
  rhs(S - 1) = 1.0;
  const Eigen::VectorXd x = A.partialPivLu().solve(rhs);
  return std::vector<double>(x.data(), x.data() + S);
}

std::vector<double> solve_level_crossing(const ChainInputs& c, std::size_t N) {
  const double down = c.alpha * c.br[0];
  if (!(down > 0.0)) throw std::runtime_error("level-crossing solve: no downward transitions");
  std::vector<double> pi(N + 1, 0.0);
  pi[0] = 1.0;
  for (std::size_t n = 1; n <= N; ++n) {
    double up = 0.0;
    for (std::size_t j = 0; j < n; ++j) up += pi[j] * up_mass(c, j, n);
    pi[n] = up / down;
    if (pi[n] > 1e200) {
      for (std::size_t j = 0; j <= n; ++j) pi[j] *= 1e-200;
    }
  }
  return pi;
}

void normalize(std::vector<double>& pi) {
  for (double& p : pi) p = std::max(p, 0.0);
  double total = 0.0;
  for (double p : pi) total += p;
  for (double& p : pi) p /= total;
}

}  // namespace

std::vector<double> ode_arrival_count(ArrivalClass k, const RateProfile& rates, double t,
                                      int n_max) {
  if (!(t >= 0.0)) throw std::domain_error("ode_arrival_count: t must be >= 0");
  if (n_max < 1) throw std::invalid_argument("ode_arrival_count: n_max must be >= 1");
  const auto [l, lp] = class_rates(k, rates);
  State p = counts_at(l, lp, t, n_max);
  p.pop_back();
  return p;
}

std::vector<double> service_arrival_counts(ArrivalClass k, const ModelSpec& model, int n_max) {
  if (n_max < 0) throw std::invalid_argument("service_arrival_counts: n_max must be >= 0");
  const auto [l, lp] = class_rates(k, model.rates);
  const Distribution& b = model.service;
  const auto width = static_cast<std::size_t>(n_max) + 2;
  if (b.is_point_mass()) return counts_at(l, lp, b.mean(), n_max);
  if (l == 0.0) {
    State out(width, 0.0);
    out[0] = 1.0;
    return out;
  }

  // x = (P_0..P_{n_max}, P_over, Y_0..Y_{n_max}, Y_over) with Y' = P b(t).
  State x(2 * width, 0.0);
  x[0] = 1.0;
  auto sys = [&](const State& s, State& ds, double t) {
    count_rhs(l, lp, n_max, s.data(), ds.data());
    const double dens = b.pdf(t);
    for (std::size_t i = 0; i < width; ++i) ds[width + i] = s[i] * dens;
  };
  const double horizon = b.tail_horizon(1e-15);
  odeint::integrate_adaptive(
      odeint::make_controlled(kAbsTol, kRelTol, odeint::runge_kutta_dopri5<State>()), sys, x, 0.0,
      horizon, horizon / 1000.0);
  return State(x.begin() + static_cast<std::ptrdiff_t>(width), x.end());
}

void TruncationConfig::validate() const {
  require_config(max_orbit >= 10, "max_orbit must be >= 10");
  require_config(tail_tolerance > 0.0 && tail_tolerance <= 1e-6,
                 "tail_tolerance must be in (0, 1e-6]");
}

TruncatedSolution solve_truncated_chain(const ModelSpec& model, const TruncationConfig& cfg,
                                        ChainMethod method) {
  model.validate();
  cfg.validate();
  const std::size_t N = cfg.max_orbit;
  const ChainInputs c = chain_inputs(model, N);
  std::vector<double> pi = method == ChainMethod::lu ? solve_lu(c, N) : solve_level_crossing(c, N);
  normalize(pi);
  const double boundary = pi.back();
  return {std::move(pi), boundary, boundary < cfg.tail_tolerance};
}

TruncatedSolution solve_truncated_chain(const ModelSpec& model, const TruncationConfig& cfg) {
  return solve_truncated_chain(
      model, cfg, cfg.max_orbit < 2000 ? ChainMethod::lu : ChainMethod::level_crossing);
}

std::vector<double> embedded_stationary_truncated(const ModelSpec& model,
                                                  const TruncationConfig& cfg) {
  TruncatedSolution sol = solve_truncated_chain(model, cfg);
  if (sol.certified) return std::move(sol.pi);
  const std::size_t N = cfg.max_orbit;
  std::size_t suggested = 2 * N;
  const double prev = sol.pi[N - 1];
  if (prev > 0.0 && sol.boundary_mass > 0.0) {
    const double ratio = sol.boundary_mass / prev;
    if (ratio < 1.0) {
      const double extra = std::log(cfg.tail_tolerance / sol.boundary_mass) / std::log(ratio);
      suggested = std::max(suggested, N + static_cast<std::size_t>(std::ceil(extra)) + 10);
    }
  }
  throw TruncationInsufficient(sol.boundary_mass, suggested);
}

std::size_t required_truncation(const ModelSpec& model, double tail_tolerance, std::size_t start,
                                std::size_t cap) {
  for (std::size_t n = std::max<std::size_t>(start, 10); n <= cap; n *= 2) {
    if (solve_truncated_chain(model, {n, tail_tolerance}).certified) return n;
  }
  return 0;
}

double default_radius(int n_max) { return std::max(0.9, std::pow(10.0, -4.0 / std::max(n_max, 1))); }

std::vector<double> pgf_to_pmf(const Pgf& f, int n_max, double radius) {
  if (n_max < 1) throw std::invalid_argument("pgf_to_pmf: n_max must be >= 1");
  if (!(radius > 0.0 && radius < 1.0)) throw std::invalid_argument("pgf_to_pmf: radius in (0,1)");
  std::size_t pts = 8;
  while (pts < 4 * static_cast<std::size_t>(n_max)) pts *= 2;
  const std::size_t half = pts / 2;
  const double step = 2.0 * std::numbers::pi / static_cast<double>(pts);

  // Real coefficients: f(conj z) = conj f(z), so half the circle suffices.
  std::vector<cplx> vals(half + 1);
  for (std::size_t j = 0; j <= half; ++j) vals[j] = f(std::polar(radius, step * double(j)));
  std::vector<double> cosv(pts), sinv(pts);
  for (std::size_t j = 0; j < pts; ++j) {
    cosv[j] = std::cos(step * double(j));
    sinv[j] = std::sin(step * double(j));
  }

  std::vector<double> out(static_cast<std::size_t>(n_max) + 1);
  for (std::size_t n = 0; n < out.size(); ++n) {
    double acc = vals[0].real() + (n % 2 == 0 ? 1.0 : -1.0) * vals[half].real();
    for (std::size_t j = 1; j < half; ++j) {
      const std::size_t idx = (j * n) % pts;
      // Re(f_j e^{-i theta})
      acc += 2.0 * (vals[j].real() * cosv[idx] + vals[j].imag() * sinv[idx]);
    }
    double a = acc / (double(pts) * std::pow(radius, double(n)));
    if (a < -1e-10) throw NotAPgf(n, a);
    out[n] = std::max(a, 0.0);
  }
  return out;
}

double fd_derivative(const std::function<double(double)>& f, double x, int order, double h,
                     Stencil stencil) {
  if (order != 1 && order != 2) throw std::invalid_argument("fd_derivative: order 1 or 2");
  if (!(h > 0.0)) throw std::invalid_argument("fd_derivative: h must be > 0");
  if (stencil == Stencil::central) {
    const double fp2 = f(x + 2 * h), fp1 = f(x + h), fm1 = f(x - h), fm2 = f(x - 2 * h);
    if (order == 1) return (-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12 * h);
    return (-fp2 + 16 * fp1 - 30 * f(x) + 16 * fm1 - fm2) / (12 * h * h);
  }
  // A forward stencil is the backward one with the step negated.
  const double step = stencil == Stencil::backward ? h : -h;
  double v[6];
  for (int i = 0; i < 6; ++i) v[i] = f(x - i * step);
  if (order == 1) return (25 * v[0] - 48 * v[1] + 36 * v[2] - 16 * v[3] + 3 * v[4]) / (12 * step);
  return (45 * v[0] - 154 * v[1] + 214 * v[2] - 156 * v[3] + 61 * v[4] - 10 * v[5]) / (12 * h * h);
}

}  // namespace retrial::oracles
