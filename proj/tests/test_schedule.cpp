#include <doctest.h>

#include <cmath>
#include <vector>

#include "hsmc/schedule.hpp"

using namespace hsmc;

TEST_CASE("fixed geometric ladder endpoints and monotonicity") {
  const auto s = TemperingSchedule::fixed_geometric(2.5e-5, 500);
  REQUIRE(s.exponents.size() == 501);
  CHECK(s.exponents.front() == 0.0);
  CHECK(s.exponents.back() == 1.0);
  CHECK(s.exponents[1] == doctest::Approx(2.5e-5));
  for (std::size_t t = 1; t < s.exponents.size(); ++t) CHECK(s.exponents[t] > s.exponents[t - 1]);
}

TEST_CASE("fixed geometric ladder has constant consecutive ratios for t >= 1") {
  const auto s = TemperingSchedule::fixed_geometric(1e-4, 100);
  const double ratio = s.exponents[2] / s.exponents[1];
  for (std::size_t t = 2; t + 1 < s.exponents.size(); ++t) {
    CHECK(s.exponents[t + 1] / s.exponents[t] == doctest::Approx(ratio).epsilon(1e-9));
  }
}

TEST_CASE("single-step ladder is importance sampling from the prior") {
  const auto s = TemperingSchedule::fixed_geometric(0.5, 1);
  REQUIRE(s.exponents.size() == 2);
  CHECK(s.exponents[0] == 0.0);
  CHECK(s.exponents[1] == 1.0);
}

TEST_CASE("adaptive step: flat likelihood jumps straight to 1") {
  std::vector<double> w(10, 0.1);
  auto inc = [](double, std::span<double> out) {
    for (auto& v : out) v = 0.7;  // constant in the particle: ESS unchanged
  };
  CHECK(next_exponent_adaptive(w, inc, 0.2, 0.9) == 1.0);
}

TEST_CASE("adaptive step approaches the current exponent as the target tightens") {
  std::vector<double> w(2, 0.5);
  // two particles with log-likelihood values 1 and 0 under the powered bridge
  auto inc = [](double a_prime, std::span<double> out) {
    out[0] = (a_prime - 0.0) * 1.0;
    out[1] = 0.0;
  };
  const double a_low = next_exponent_adaptive(w, inc, 0.0, 0.9);
  const double a_high = next_exponent_adaptive(w, inc, 0.0, 0.999);
  CHECK(a_high < a_low);  // monotone in the target
  CHECK(a_high > 0.0);
  CHECK(a_high < 0.1);
}

TEST_CASE("adaptive step reproduces the two-particle closed form") {
  // likelihood values (e, 1): incremental weights (e^{da}, 1), so
  // ESS(da) = 1 / (p^2 + (1-p)^2) with p = e^{da} / (e^{da} + 1).
  std::vector<double> w(2, 0.5);
  auto inc = [](double a_prime, std::span<double> out) {
    out[0] = a_prime;
    out[1] = 0.0;
  };
  const double target_fraction = 0.9;
  const double a = next_exponent_adaptive(w, inc, 0.0, target_fraction);

  // scalar bisection oracle on the closed form
  auto ess_of = [](double da) {
    const double p = std::exp(da) / (std::exp(da) + 1.0);
    return 1.0 / (p * p + (1.0 - p) * (1.0 - p));
  };
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (ess_of(mid) >= target_fraction * 2.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  CHECK(a == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-5));
}

TEST_CASE("schedule validation rejects non-monotone ladders") {
  TemperingSchedule s;
  s.mode = TemperingSchedule::Mode::FixedGeometric;
  s.exponents = {0.0, 0.5, 0.4, 1.0};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}
