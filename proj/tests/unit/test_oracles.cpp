#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "retrial/analytic.hpp"
#include "retrial/errors.hpp"
#include "retrial/oracles.hpp"

using namespace retrial;
using namespace fixtures;

TEST_CASE("ode_arrival_count") {
  const RateProfile q{1.0, 0.7, 2.5, 0.3438, 0.066};
  const auto at0 = oracles::ode_arrival_count(ArrivalClass::e, q, 0.0, 5);
  REQUIRE(at0.size() == 6);
  CHECK(at0[0] == 1.0);
  for (int n = 1; n <= 5; ++n) CHECK(at0[n] == 0.0);

  const RateProfile flat = event_independent(1.3);
  const auto p = oracles::ode_arrival_count(ArrivalClass::r, flat, 2.0, 12);
  for (int n = 0; n <= 12; ++n) {
    const double poisson = std::exp(n * std::log(2.6) - 2.6 - std::lgamma(n + 1.0));
    CHECK(std::abs(p[n] - poisson) < 1e-10);
  }
  const auto wide = oracles::ode_arrival_count(ArrivalClass::e, q, 3.0, 60);
  CHECK(std::accumulate(wide.begin(), wide.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-10));
  const auto narrow = oracles::ode_arrival_count(ArrivalClass::e, q, 3.0, 2);
  CHECK(std::accumulate(narrow.begin(), narrow.end(), 0.0) < 1.0);
}

TEST_CASE("service_arrival_counts") {
  for (const ModelSpec& m : service_variants()) {
    const auto b = oracles::service_arrival_counts(ArrivalClass::e, m, 20);
    REQUIRE(b.size() == 22);
    CHECK(std::accumulate(b.begin(), b.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(b[0] == doctest::Approx(m.service.lst(m.rates.lambda_e)).epsilon(1e-9));
  }
}

TEST_CASE("pgf_to_pmf") {
  SUBCASE("monomial") {
    const auto p = oracles::pgf_to_pmf([](cplx z) { return z * z * z; }, 8);
    REQUIRE(p.size() == 9);
    for (int n = 0; n <= 8; ++n) CHECK(std::abs(p[n] - (n == 3 ? 1.0 : 0.0)) < 1e-14);
  }
  SUBCASE("geometric") {
    const auto b = Distribution::exponential(2.0);
    const double lambda = 0.5, p0 = 2.0 / 2.5;
    const auto p = oracles::pgf_to_pmf([&](cplx z) { return b.lst(lambda * (1.0 - z)); }, 40);
    for (int n = 0; n <= 40; ++n) CHECK(std::abs(p[n] - p0 * std::pow(1.0 - p0, n)) < 1e-12);
  }
  SUBCASE("negative coefficient is rejected") {
    CHECK_THROWS_AS(oracles::pgf_to_pmf([](cplx z) { return 1.5 - 0.5 * z; }, 4), NotAPgf);
    // Tiny negative values are clipped.
    const auto p = oracles::pgf_to_pmf([](cplx z) { return 1.0 + 1e-12 - 1e-12 * z; }, 4);
    CHECK(p[1] == 0.0);
  }
  SUBCASE("radius") {
    CHECK(oracles::default_radius(8) == doctest::Approx(0.9));
    CHECK(std::pow(oracles::default_radius(512), -512) == doctest::Approx(1e4).epsilon(1e-9));
    const auto p = oracles::pgf_to_pmf([](cplx z) { return 0.25 * (1.0 + z) * (1.0 + z); }, 4, 0.5);
    CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-13));
  }
}

TEST_CASE("fd_derivative") {
  auto ex = [](double x) { return std::exp(x); };
  CHECK(std::abs(oracles::fd_derivative(ex, 0.0, 1, 1e-3) - 1.0) < 1e-9);
  CHECK(std::abs(oracles::fd_derivative(ex, 0.0, 2, 1e-2) - 1.0) < 1e-7);
  CHECK(std::abs(oracles::fd_derivative(ex, 0.0, 1, 1e-3, oracles::Stencil::backward) - 1.0) < 1e-9);
  CHECK(std::abs(oracles::fd_derivative(ex, 0.0, 1, 1e-3, oracles::Stencil::forward) - 1.0) < 1e-9);
  CHECK(std::abs(oracles::fd_derivative(ex, 0.0, 2, 1e-2, oracles::Stencil::forward) - 1.0) < 1e-6);
  auto flat = [](double) { return 3.0; };
  CHECK(oracles::fd_derivative(flat, 1.0, 1, 1e-3) == 0.0);
  CHECK(oracles::fd_derivative(flat, 1.0, 2, 1e-3, oracles::Stencil::backward) == 0.0);
  CHECK_THROWS_AS(oracles::fd_derivative(flat, 1.0, 3, 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(oracles::fd_derivative(flat, 1.0, 1, 0.0), std::invalid_argument);
}

TEST_CASE("truncation config") {
  CHECK_THROWS_AS((oracles::TruncationConfig{5, 1e-10}.validate()), ConfigError);
  CHECK_THROWS_AS((oracles::TruncationConfig{100, 1e-3}.validate()), ConfigError);
  CHECK_THROWS_AS((oracles::TruncationConfig{100, 0.0}.validate()), ConfigError);
  CHECK_NOTHROW((oracles::TruncationConfig{100, 1e-10}.validate()));
}

TEST_CASE("truncated chain") {
  SUBCASE("reduction value") {
    const auto pi = oracles::embedded_stationary_truncated(event_independent_model(), {200, 1e-10});
    CHECK(std::abs(pi[0] - (1.0 - 0.25 * 7.0 / 6.0)) < 1e-8);
  }
  SUBCASE("probability vector and method agreement") {
    for (const ModelSpec& m : service_variants()) {
      const auto lu = oracles::solve_truncated_chain(m, {300, 1e-10}, oracles::ChainMethod::lu);
      const auto lc = oracles::solve_truncated_chain(m, {300, 1e-10}, oracles::ChainMethod::level_crossing);
      CHECK(lu.certified);
      CHECK(std::accumulate(lu.pi.begin(), lu.pi.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
      for (double x : lu.pi) CHECK(x >= 0.0);
      double diff = 0.0;
      for (std::size_t i = 0; i < lu.pi.size(); ++i) diff = std::max(diff, std::abs(lu.pi[i] - lc.pi[i]));
      CHECK(diff < 1e-10);
    }
  }
  SUBCASE("published optimum needs a long chain") {
    // Its margin is about 1e-4, so the orbit tail decays slowly.
    const ModelSpec m = published_optimum_lm1();
    CHECK_FALSE(oracles::solve_truncated_chain(m, {400, 1e-8}).certified);
    const std::size_t need = oracles::required_truncation(m, 1e-8);
    REQUIRE(need > 400);
    const auto s = oracles::solve_truncated_chain(m, {need, 1e-8});
    CHECK(s.certified);
    CHECK(std::accumulate(s.pi.begin(), s.pi.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("insufficient truncation is reported with a larger size") {
    const ModelSpec near = admission_model(1.0, {0.0547, 0.0287, 0.1719, 0.033});
    try {
      oracles::embedded_stationary_truncated(near, {20, 1e-10});
      FAIL("expected TruncationInsufficient");
    } catch (const TruncationInsufficient& e) {
      CHECK(e.boundary_mass() >= 1e-10);
      CHECK(e.suggested_max_orbit() > 20);
    }
  }
}

TEST_CASE("truncation demand grows near the stability boundary") {
  // One rate lambda with Exponential(2) service and Exponential(3) seek is
  // stable iff 3 / (3 + lambda) > lambda / 2, i.e. lambda < 1.3723.
  std::size_t previous = 0;
  for (double lambda : {1.0, 1.2, 1.3, 1.35}) {
    const ModelSpec m = event_independent_model(lambda);
    REQUIRE(is_stable(m));
    const std::size_t need = oracles::required_truncation(m, 1e-10, 25);
    CHECK(need > 0);
    CHECK(need >= previous);
    previous = need;
  }
  CHECK(previous >= 200);
}
