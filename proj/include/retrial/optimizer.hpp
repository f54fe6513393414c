#pragma once

#include <array>
#include <cstdint>

#include "retrial/model.hpp"

namespace retrial::opt {

using Q = std::array<double, 4>;

/// Joining probabilities q scale a common rate: (lambda^e, lambda_+^e,
/// lambda^r, lambda_+^r) = lambda_plus * q. Service Erlang(M, mu), seek
/// Erlang(N, alpha).
struct AdmissionProblem {
  double lambda_plus = 2.0;
  double lambda_minus = 1.0;
  int M = 4;
  double mu = 1.5;
  int N = 3;
  double alpha = 3.0;
  double ex_bound = 20.0;  // may be +inf
  bool ordering = true;    // q2 < q1 and q4 < q3

  /// Throws ConfigError on nonpositive rates/phases or a negative bound.
  void validate() const;
  ModelSpec model(const Q& q) const;

  bool operator==(const AdmissionProblem&) const = default;
};

/// Closed constraints used in place of the strict inequalities.
inline constexpr double kGap = 1e-9;

struct Evaluation {
  double TH;      // closed form; for unstable q only a formula value
  double EX;      // +inf when unstable
  double margin;  // stability margin
  bool stable;
  bool feasible;
};

Evaluation evaluate(const AdmissionProblem& problem, const Q& q);

struct AdmissionSolution {
  Q q{};
  double TH = 0.0;
  double EX = 0.0;
  double margin = 0.0;
  bool feasible = false;
  unsigned restarts_used = 0;
  std::uint64_t seed = 0;
  std::uint64_t evaluations = 0;
};

struct SolveOptions {
  /// Worker threads over restarts; results reduce in restart order.
  unsigned threads = 1;
  /// Penalty rounds per restart, weight x10 each round.
  int penalty_rounds = 7;
  int nm_max_evals = 400;
  double pattern_tol = 1e-6;
};

/// Latin-hypercube starts, penalty Nelder-Mead per start, then a feasible-only
/// pattern search from the best feasible point seen. Never returns an
/// infeasible incumbent: with no feasible point, feasible == false and q is
/// the least-violating point. Throws std::runtime_error if the closed-form and
/// transform-based throughputs of the result disagree by more than 1e-8.
AdmissionSolution solve(const AdmissionProblem& problem, unsigned restarts, std::uint64_t seed,
                        const SolveOptions& options = {});

}  // namespace retrial::opt
