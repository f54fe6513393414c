#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "retrial/model.hpp"

// Numerical ground truth for the closed forms in analytic.hpp. Nothing here
// calls into the analytic module; only Distribution::lst/pdf are shared.

namespace retrial::oracles {

/// P(N(t) = n), n = 0..n_max, by integrating the forward equations of the
/// two-rate arrival process from N(0) = 0 (abs. tolerance 1e-10 or better).
/// The vector sums to 1 minus the mass above n_max.
std::vector<double> ode_arrival_count(ArrivalClass k, const RateProfile& rates, double t,
                                      int n_max);

/// Class-k arrival counts during one service, b_0..b_{n_max}, plus the mass
/// above n_max as the final element (size n_max + 2). The forward equations
/// are integrated together with the accumulators int P(N(t)=n) dB(t).
std::vector<double> service_arrival_counts(ArrivalClass k, const ModelSpec& model, int n_max);

struct TruncationConfig {
  std::size_t max_orbit = 400;
  double tail_tolerance = 1e-10;
  /// Throws ConfigError unless max_orbit >= 10 and 0 < tail_tolerance <= 1e-6.
  void validate() const;
};

struct TruncatedSolution {
  std::vector<double> pi;  // states 0..max_orbit, sums to 1
  double boundary_mass;    // pi[max_orbit], which also holds all overflow
  bool certified;          // boundary_mass < tail_tolerance
};

/// Stationary law of the embedded chain cut at max_orbit, with every jump
/// beyond it redirected to max_orbit. Dense LU up to 2000 states; above that
/// the equivalent level-crossing recursion, which only adds positive terms.
TruncatedSolution solve_truncated_chain(const ModelSpec& model, const TruncationConfig& cfg);

/// Same, forcing one method (used to cross-check the two).
enum class ChainMethod { lu, level_crossing };
TruncatedSolution solve_truncated_chain(const ModelSpec& model, const TruncationConfig& cfg,
                                        ChainMethod method);

/// Certified solution or TruncationInsufficient with a suggested size.
std::vector<double> embedded_stationary_truncated(const ModelSpec& model,
                                                  const TruncationConfig& cfg);

/// Smallest max_orbit of the form start * 2^j (capped at cap) that certifies.
/// Returns 0 if even `cap` does not.
std::size_t required_truncation(const ModelSpec& model, double tail_tolerance,
                                std::size_t start = 50, std::size_t cap = 1u << 16);

using Pgf = std::function<cplx(cplx)>;

/// Default extraction radius for n_max coefficients: large enough that
/// radius^-n_max stays below 1e4.
double default_radius(int n_max);

/// Coefficients 0..n_max of a PGF by averaging over 2^ceil(log2(4 n_max))
/// points on |z| = radius. Coefficients in (-1e-10, 0) are clipped to 0;
/// anything more negative throws NotAPgf.
std::vector<double> pgf_to_pmf(const Pgf& f, int n_max, double radius);
inline std::vector<double> pgf_to_pmf(const Pgf& f, int n_max) {
  return pgf_to_pmf(f, n_max, default_radius(n_max));
}

enum class Stencil { central, backward, forward };

/// Five-point (central) or one-sided (backward, forward) finite-difference derivative
/// of order 1 or 2; truncation error O(h^4) in both cases.
double fd_derivative(const std::function<double(double)>& f, double x, int order, double h,
                     Stencil stencil = Stencil::central);

}  // namespace retrial::oracles
