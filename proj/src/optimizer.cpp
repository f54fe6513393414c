#include "retrial/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

#include "retrial/analytic.hpp"
#include "retrial/errors.hpp"

namespace retrial::opt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Q clamp01(const Q& q) {
  Q out;
  for (std::size_t i = 0; i < 4; ++i) out[i] = std::clamp(q[i], 0.0, 1.0);
  return out;
}

double ordering_violation(const AdmissionProblem& p, const Q& q) {
  if (!p.ordering) return 0.0;
  return std::max(0.0, kGap - (q[0] - q[1])) + std::max(0.0, kGap - (q[2] - q[3]));
}

// Search state of one restart (or of the whole run after reduction).
struct Incumbent {
  bool found = false;
  Q q{};
  Evaluation ev{};
  Q least{};
  double least_violation = kInf;
  std::uint64_t evaluations = 0;

  void offer(const AdmissionProblem& p, const Q& q_, const Evaluation& e) {
    ++evaluations;
    if (e.feasible) {
      if (!found || e.TH > ev.TH) {
        found = true;
        q = q_;
        ev = e;
      }
      return;
    }
    double v = ordering_violation(p, q_);
    if (!e.stable)
      v += 1.0 + (kGap - e.margin);
    else
      v += std::max(0.0, e.EX - p.ex_bound) + std::max(0.0, kGap - e.margin);
    if (v < least_violation) {
      least_violation = v;
      least = q_;
    }
  }
};

double penalized(const AdmissionProblem& p, const Q& raw, double rho, Incumbent& inc) {
  const Q q = clamp01(raw);
  double box = 0.0;
  for (std::size_t i = 0; i < 4; ++i) box += (raw[i] - q[i]) * (raw[i] - q[i]);
  const Evaluation e = evaluate(p, q);
  inc.offer(p, q, e);
  if (!e.stable) return 1e3 * (1.0 + kGap - e.margin) + rho * box;
  const double scale = std::isfinite(p.ex_bound) ? std::max(1.0, p.ex_bound) : 1.0;
  const double ex_excess = std::max(0.0, e.EX - p.ex_bound) / scale;
  const double stab = std::max(0.0, kGap - e.margin);
  const double ord = ordering_violation(p, q);
  return -e.TH + rho * (ex_excess * ex_excess + stab * stab + ord * ord + box);
}

// Plain Nelder-Mead on R^4, started from x0 with an axis-aligned simplex.
Q nelder_mead(const std::function<double(const Q&)>& f, const Q& x0, int max_evals) {
  constexpr std::size_t n = 4;
  std::array<Q, n + 1> x;
  std::array<double, n + 1> fx;
  x[0] = x0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i + 1] = x0;
    x[i + 1][i] += x0[i] > 0.5 ? -0.1 : 0.1;
  }
  int evals = 0;
  for (std::size_t i = 0; i <= n; ++i) {
    fx[i] = f(x[i]);
    ++evals;
  }
  std::array<std::size_t, n + 1> order;
  while (evals < max_evals) {
    for (std::size_t i = 0; i <= n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
    const std::size_t best = order[0], worst = order[n], second = order[n - 1];
    double size = 0.0;
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t d = 0; d < n; ++d)
        size = std::max(size, std::abs(x[order[i]][d] - x[best][d]));
    if (size < 1e-10) break;

    Q centroid{};
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < n; ++d) centroid[d] += x[order[i]][d] / double(n);
    auto along = [&](double t) {
      Q y;
      for (std::size_t d = 0; d < n; ++d) y[d] = centroid[d] + t * (x[worst][d] - centroid[d]);
      return y;
    };
    const Q xr = along(-1.0);
    const double fr = f(xr);
    ++evals;
    if (fr < fx[best]) {
      const Q xe = along(-2.0);
      const double fe = f(xe);
      ++evals;
      if (fe < fr) {
        x[worst] = xe;
        fx[worst] = fe;
      } else {
        x[worst] = xr;
        fx[worst] = fr;
      }
    } else if (fr < fx[second]) {
      x[worst] = xr;
      fx[worst] = fr;
    } else {
      const bool outside = fr < fx[worst];
      const Q xc = along(outside ? -0.5 : 0.5);
      const double fc = f(xc);
      ++evals;
      if (fc < (outside ? fr : fx[worst])) {
        x[worst] = xc;
        fx[worst] = fc;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          const std::size_t k = order[i];
          for (std::size_t d = 0; d < n; ++d) x[k][d] = x[best][d] + 0.5 * (x[k][d] - x[best][d]);
          fx[k] = f(x[k]);
          ++evals;
        }
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i <= n; ++i)
    if (fx[i] < fx[best]) best = i;
  return x[best];
}

std::vector<Q> latin_hypercube(unsigned count, std::uint64_t seed, bool ordering) {
  Rng rng = make_stream(seed, 0x4c485331u);
  std::vector<Q> pts(count);
  for (std::size_t d = 0; d < 4; ++d) {
    std::vector<unsigned> perm(count);
    for (unsigned i = 0; i < count; ++i) perm[i] = i;
    for (unsigned i = count; i > 1; --i) {
      const auto j = static_cast<unsigned>(uniform01(rng) * i);
      std::swap(perm[i - 1], perm[std::min(j, i - 1)]);
    }
    for (unsigned i = 0; i < count; ++i) pts[i][d] = (perm[i] + uniform01(rng)) / double(count);
  }
  if (ordering) {
    for (Q& q : pts) {
      if (q[1] > q[0]) std::swap(q[0], q[1]);
      if (q[3] > q[2]) std::swap(q[2], q[3]);
    }
  }
  return pts;
}

Incumbent run_restart(const AdmissionProblem& p, const Q& start, const SolveOptions& o) {
  Incumbent inc;
  Q x = start;
  double rho = 1.0;
  for (int round = 0; round < o.penalty_rounds; ++round, rho *= 10.0) {
    x = nelder_mead([&](const Q& q) { return penalized(p, q, rho, inc); }, x, o.nm_max_evals);
    x = clamp01(x);
  }
  return inc;
}

void pattern_search(const AdmissionProblem& p, Incumbent& inc, double tol) {
  std::vector<Q> dirs;
  for (std::size_t i = 0; i < 4; ++i)
    for (double s : {1.0, -1.0}) {
      Q d{};
      d[i] = s;
      dirs.push_back(d);
    }
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j)
      for (double si : {1.0, -1.0})
        for (double sj : {1.0, -1.0}) {
          Q d{};
          d[i] = si;
          d[j] = sj;
          dirs.push_back(d);
        }
  double step = 0.05;
  while (step >= tol) {
    bool improved = false;
    for (const Q& d : dirs) {
      Q cand;
      for (std::size_t k = 0; k < 4; ++k) cand[k] = inc.q[k] + step * d[k];
      cand = clamp01(cand);
      if (cand == inc.q) continue;
      const Evaluation e = evaluate(p, cand);
      ++inc.evaluations;
      if (e.feasible && e.TH > inc.ev.TH) {
        inc.q = cand;
        inc.ev = e;
        improved = true;
        break;
      }
    }
    if (!improved) step *= 0.5;
  }
}

}  // namespace

void AdmissionProblem::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!(std::isfinite(lambda_plus) && lambda_plus >= 0.0))
    throw ConfigError("lambda_plus must be finite and >= 0");
  if (!positive(lambda_minus)) throw ConfigError("lambda_minus must be > 0");
  if (!positive(mu) || !positive(alpha)) throw ConfigError("mu and alpha must be > 0");
  if (M < 1 || N < 1) throw ConfigError("M and N must be >= 1");
  if (std::isnan(ex_bound) || ex_bound < 0.0) throw ConfigError("ex_bound must be >= 0");
}

ModelSpec AdmissionProblem::model(const Q& q) const {
  for (double v : q)
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("joining probabilities must lie in [0, 1]");
  RateProfile r{lambda_minus, lambda_plus * q[0], lambda_plus * q[1], lambda_plus * q[2],
                lambda_plus * q[3]};
  return {r, Distribution::erlang(M, mu), Distribution::erlang(N, alpha)};
}

Evaluation evaluate(const AdmissionProblem& problem, const Q& q) {
  const ModelSpec m = problem.model(q);
  Evaluation e{};
  e.margin = stability_margin(m);
  e.stable = e.margin > 0.0;
  if (e.stable) {
    const MomentsThroughput mt = moments_and_throughput(m);
    e.TH = mt.TH_S;
    e.EX = mt.EX;
  } else {
    e.TH = throughput_closed_form(m);
    e.EX = kInf;
  }
  e.feasible = e.stable && e.margin > kGap && e.EX <= problem.ex_bound + kGap &&
               ordering_violation(problem, q) == 0.0;
  return e;
}

AdmissionSolution solve(const AdmissionProblem& problem, unsigned restarts, std::uint64_t seed,
                        const SolveOptions& options) {
  problem.validate();
  if (restarts < 1) throw ConfigError("restarts must be >= 1");
  const std::vector<Q> starts = latin_hypercube(restarts, seed, problem.ordering);

  std::vector<Incumbent> results(restarts);
  const unsigned workers = std::max(1u, std::min(options.threads, restarts));
  if (workers == 1) {
    for (unsigned i = 0; i < restarts; ++i) results[i] = run_restart(problem, starts[i], options);
  } else {
    std::atomic<unsigned> next{0};
    std::vector<std::exception_ptr> errors(restarts);
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < workers; ++k)
      pool.emplace_back([&] {
        for (unsigned i = next++; i < restarts; i = next++) {
          try {
            results[i] = run_restart(problem, starts[i], options);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  Incumbent best;
  for (const Incumbent& r : results) {
    best.evaluations += r.evaluations;
    if (r.found && (!best.found || r.ev.TH > best.ev.TH)) {
      best.found = true;
      best.q = r.q;
      best.ev = r.ev;
    }
    if (r.least_violation < best.least_violation) {
      best.least_violation = r.least_violation;
      best.least = r.least;
    }
  }

  AdmissionSolution sol;
  sol.restarts_used = restarts;
  sol.seed = seed;
  if (!best.found) {
    const Evaluation e = evaluate(problem, best.least);
    sol.q = best.least;
    sol.TH = e.TH;
    sol.EX = e.EX;
    sol.margin = e.margin;
    sol.feasible = false;
    sol.evaluations = best.evaluations;
    return sol;
  }

  pattern_search(problem, best, options.pattern_tol);

  const Evaluation fresh = evaluate(problem, best.q);
  if (!fresh.feasible) throw std::logic_error("optimizer: incumbent failed re-validation");
  const double th_transforms = throughput_from_transforms(problem.model(best.q));
  if (std::abs(th_transforms - fresh.TH) > 1e-8)
    throw std::runtime_error("optimizer: closed-form and transform throughput disagree");

  sol.q = best.q;
  sol.TH = fresh.TH;
  sol.EX = fresh.EX;
  sol.margin = fresh.margin;
  sol.feasible = true;
  sol.evaluations = best.evaluations;
  return sol;
}

}  // namespace retrial::opt
