#include <doctest.h>

#include <array>
#include <cmath>
#include <stdexcept>

#include "retrial/dists.hpp"
#include "retrial/oracles.hpp"

using namespace retrial;

namespace {

std::vector<Distribution> all_kinds() {
  return {Distribution::exponential(2.0), Distribution::erlang(4, 1.5),
          Distribution::deterministic(0.8), Distribution::hyperexponential({0.25, 0.75}, {0.5, 3.0})};
}

}  // namespace

TEST_CASE("lst examples") {
  CHECK(Distribution::erlang(4, 1.5).lst(0.1094) ==
        doctest::Approx(std::pow(1.5 / 1.6094, 4)).epsilon(1e-14));
  CHECK(Distribution::erlang(4, 1.5).lst(0.1094) == doctest::Approx(0.754587).epsilon(1e-6));
  CHECK(Distribution::deterministic(2.0).lst(0.5) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  for (const auto& d : all_kinds()) CHECK(d.lst(0.0) == 1.0);
}

TEST_CASE("lst rejects negative arguments") {
  for (const auto& d : all_kinds()) CHECK_THROWS_AS(d.lst(-0.1), std::domain_error);
}

TEST_CASE("lst is strictly decreasing and log-convex") {
  const std::array<double, 6> s{0.0, 0.01, 0.3, 1.0, 4.0, 10.0};
  for (const auto& d : all_kinds()) {
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      CHECK(d.lst(s[i + 1]) < d.lst(s[i]));
      const double a = s[i], b = s[i + 1], mid = 0.5 * (a + b);
      CHECK(d.lst(mid) * d.lst(mid) <= d.lst(a) * d.lst(b) * (1.0 + 1e-14));
    }
  }
}

TEST_CASE("moment examples") {
  CHECK(Distribution::erlang(4, 1.5).moment(1) == doctest::Approx(4.0 / 1.5));
  CHECK(Distribution::exponential(2.0).moment(2) == doctest::Approx(0.5));
  CHECK(Distribution::deterministic(3.0).moment(2) == doctest::Approx(9.0));
  CHECK_THROWS_AS(Distribution::exponential(2.0).moment(3), std::invalid_argument);
}

TEST_CASE("moments are the derivatives of the lst at zero") {
  for (const auto& d : all_kinds()) {
    CAPTURE(d.describe());
    auto f = [&](double s) { return d.lst(s); };
    const double d1 = oracles::fd_derivative(f, 0.0, 1, 1e-4, oracles::Stencil::forward);
    const double d2 = oracles::fd_derivative(f, 0.0, 2, 1e-3, oracles::Stencil::forward);
    CHECK(-d1 == doctest::Approx(d.moment(1)).epsilon(1e-6));
    CHECK(d2 == doctest::Approx(d.moment(2)).epsilon(1e-4));
    CHECK(-d.lst_derivative(0.0, 1) == doctest::Approx(d.moment(1)).epsilon(1e-13));
    CHECK(d.lst_derivative(0.0, 2) == doctest::Approx(d.moment(2)).epsilon(1e-13));
  }
}

TEST_CASE("lst derivatives away from zero match central differences") {
  for (const auto& d : all_kinds()) {
    for (double s : {0.01, 0.1, 1.0, 10.0}) {
      auto f = [&](double x) { return d.lst(x); };
      const double h = std::min(1e-3, s / 4.0);
      CHECK(d.lst_derivative(s, 1) == doctest::Approx(oracles::fd_derivative(f, s, 1, h)).epsilon(1e-6));
    }
  }
}

TEST_CASE("divided differences") {
  for (const auto& d : all_kinds()) {
    CAPTURE(d.describe());
    const double a = 0.4, b = 1.3, c = 2.2;
    CHECK(d.divided_difference({a}) == doctest::Approx(d.lst(a)));
    const double ab = (d.lst(a) - d.lst(b)) / (a - b);
    const double bc = (d.lst(b) - d.lst(c)) / (b - c);
    CHECK(d.divided_difference({a, b}) == doctest::Approx(ab).epsilon(1e-12));
    CHECK(d.divided_difference({a, b, c}) == doctest::Approx((ab - bc) / (a - c)).epsilon(1e-9));
    CHECK(d.divided_difference({a, a}) == doctest::Approx(d.lst_derivative(a, 1)).epsilon(1e-12));
    CHECK(d.divided_difference({a, a, a}) ==
          doctest::Approx(d.lst_derivative(a, 2) / 2.0).epsilon(1e-12));
    // Nearly coincident nodes stay accurate where the naive quotient cancels.
    CHECK(d.divided_difference({a, a + 1e-9}) ==
          doctest::Approx(d.lst_derivative(a, 1)).epsilon(1e-8));
    // Complex nodes agree with real ones on the real axis.
    const std::array<cplx, 2> z{cplx(a, 0.0), cplx(b, 0.0)};
    CHECK(d.divided_difference(z).real() == doctest::Approx(ab).epsilon(1e-12));
  }
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(Distribution::exponential(0.0), std::invalid_argument);
  CHECK_THROWS_AS(Distribution::erlang(0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(Distribution::deterministic(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(Distribution::hyperexponential({0.5, 0.4}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(Distribution::hyperexponential({0.5, 0.5}, {1.0}), std::invalid_argument);
  CHECK(Distribution::deterministic(0.0).is_zero());
  CHECK(Distribution::deterministic(0.0).moment(1) == 0.0);
}

TEST_CASE("survival and density") {
  const auto e = Distribution::erlang(3, 2.0);
  CHECK(e.survival(0.0) == doctest::Approx(1.0));
  // Erlang(3, 2) survival at t = 1: e^-2 (1 + 2 + 2).
  CHECK(e.survival(1.0) == doctest::Approx(5.0 * std::exp(-2.0)).epsilon(1e-12));
  CHECK(e.pdf(1.0) == doctest::Approx(4.0 * std::exp(-2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(Distribution::deterministic(1.0).pdf(1.0), std::domain_error);
  for (const auto& d : all_kinds()) CHECK(d.survival(d.tail_horizon(1e-12)) < 1e-12);
}

TEST_CASE("sampling examples") {
  Rng rng = make_stream(7, 0);
  CHECK(Distribution::deterministic(2.0).sample(rng) == 2.0);
  auto mean_of = [&](const Distribution& d, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += d.sample(rng);
    return s / n;
  };
  CHECK(std::abs(mean_of(Distribution::exponential(1.0), 1'000'000) - 1.0) < 0.01);
  CHECK(std::abs(mean_of(Distribution::erlang(4, 1.5), 1'000'000) - 4.0 / 1.5) < 0.02);
}

TEST_CASE("sample moments within four standard errors") {
  constexpr int n = 1'000'000;
  for (const auto& d : all_kinds()) {
    CAPTURE(d.describe());
    Rng rng = make_stream(11, 3);
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = d.sample(rng);
      s1 += x;
      s2 += x * x;
      s4 += x * x * x * x;
    }
    const double m1 = s1 / n, m2 = s2 / n, m4 = s4 / n;
    const double se1 = std::sqrt(std::max(m2 - m1 * m1, 0.0) / n);
    const double se2 = std::sqrt(std::max(m4 - m2 * m2, 0.0) / n);
    CHECK(std::abs(m1 - d.moment(1)) <= 4.0 * se1 + 1e-9);
    CHECK(std::abs(m2 - d.moment(2)) <= 4.0 * se2 + 1e-9);
  }
}

TEST_CASE("streams are reproducible and distinct") {
  Rng a = make_stream(42, 1), b = make_stream(42, 1), c = make_stream(42, 2), e = make_stream(43, 1);
  const auto xa = a(), xb = b(), xc = c(), xe = e();
  CHECK(xa == xb);
  CHECK(xa != xc);
  CHECK(xa != xe);
  Rng r = make_stream(1, 0);
  for (int i = 0; i < 1000; ++i) {
    const double u = uniform01(r);
    CHECK((u >= 0.0 && u < 1.0));
  }
}
