#include <doctest.h>

#include <cmath>
#include <vector>

#include "hsmc/random.hpp"
#include "hsmc/resample.hpp"
#include "hsmc/weights.hpp"

using namespace hsmc;

TEST_CASE("ess of uniform weights is N") {
  std::vector<double> w(100, 0.01);
  CHECK(ess(w) == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("ess of a point mass is 1") {
  std::vector<double> w{1.0, 0.0, 0.0, 0.0};
  CHECK(ess(w) == doctest::Approx(1.0));
}

TEST_CASE("ess hand-checked value") {
  std::vector<double> w{0.5, 0.25, 0.25};
  CHECK(ess(w) == doctest::Approx(1.0 / (0.25 + 0.0625 + 0.0625)).epsilon(1e-12));
  CHECK(ess(w) == doctest::Approx(2.6666666666666665));
}

TEST_CASE("ess rejects an all-zero population") {
  std::vector<double> w{0.0, 0.0};
  CHECK_THROWS_AS(ess(w), DegeneratePopulationError);
}

TEST_CASE("normalized weights sum to one after updates") {
  WeightVector w(64);
  RngStream rng(7);
  std::vector<double> ratio(64);
  for (int rep = 0; rep < 50; ++rep) {
    for (auto& r : ratio) r = 20.0 * rng.normal();
    w.apply_log_ratio(ratio);
    double sum = 0.0;
    for (double v : w.normalized()) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    const double e = w.ess();
    CHECK(e >= 1.0 - 1e-9);
    CHECK(e <= 64.0 + 1e-9);
  }
}

TEST_CASE("weight update: zero log-ratio changes nothing") {
  WeightVector w(8);
  std::vector<double> r0(8, 1.3);
  w.apply_log_ratio(r0);  // arbitrary non-uniform history
  const auto before = w.normalized();
  const double ess_before = w.ess();
  std::vector<double> zeros(8, 0.0);
  w.apply_log_ratio(zeros);
  for (std::size_t i = 0; i < 8; ++i) CHECK(w.normalized()[i] == doctest::Approx(before[i]));
  CHECK(w.ess() == doctest::Approx(ess_before));
}

TEST_CASE("weight update matches direct substitution") {
  WeightVector w(2);
  std::vector<double> ratio{std::log(3.0), std::log(1.0)};
  w.apply_log_ratio(ratio);
  CHECK(w.normalized()[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(w.normalized()[1] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("weight update is reversible") {
  WeightVector w(32);
  RngStream rng(3);
  std::vector<double> ratio(32);
  for (auto& r : ratio) r = 5.0 * rng.normal();
  const auto original = w.normalized();
  w.apply_log_ratio(ratio);
  for (auto& r : ratio) r = -r;
  w.apply_log_ratio(ratio);
  for (std::size_t i = 0; i < 32; ++i) {
    CHECK(std::abs(w.normalized()[i] - original[i]) < 1e-10);
  }
}

TEST_CASE("weight update flags a fully vanished population") {
  WeightVector w(4);
  std::vector<double> ratio(4, -std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(w.apply_log_ratio(ratio), DegeneratePopulationError);
}

TEST_CASE("systematic resampling: point mass maps everything to it") {
  std::vector<double> w{1.0, 0.0, 0.0};
  for (double u : {0.0, 0.3, 0.999}) {
    const auto idx = systematic_resample(w, u);
    REQUIRE(idx.size() == 3);
    for (auto i : idx) CHECK(i == 0);
  }
}

TEST_CASE("systematic resampling: uniform weights preserve the population") {
  std::vector<double> w(4, 0.25);
  const auto idx = systematic_resample(w, 0.1);
  REQUIRE(idx.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(idx[i] == i);
}

TEST_CASE("systematic resampling: two strata enumerate by hand") {
  std::vector<double> w{0.5, 0.5};
  const auto idx = systematic_resample(w, 0.3);
  REQUIRE(idx.size() == 2);
  CHECK(idx[0] == 0);
  CHECK(idx[1] == 1);
}

TEST_CASE("systematic resampling rejects u outside [0,1)") {
  std::vector<double> w{0.5, 0.5};
  CHECK_THROWS_AS(systematic_resample(w, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(systematic_resample(w, -0.1), std::invalid_argument);
}

TEST_CASE("systematic resampling count property: |count - N W_i| < 1, sorted output") {
  RngStream rng(19);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + rng.uniform_int(40);
    std::vector<double> w(n);
    double sum = 0.0;
    for (auto& v : w) {
      v = -std::log1p(-rng.uniform());
      sum += v;
    }
    for (auto& v : w) v /= sum;
    const auto idx = systematic_resample(w, rng.uniform());
    REQUIRE(idx.size() == n);
    std::vector<int> count(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++count[idx[i]];
      if (i) CHECK(idx[i] >= idx[i - 1]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(count[i] - static_cast<double>(n) * w[i]) < 1.0);
    }
  }
}
