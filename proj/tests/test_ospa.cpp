#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <vector>

#include "hsmc/experiments/ospa.hpp"
#include "hsmc/random.hpp"

using namespace hsmc;

namespace {
// exhaustive-permutation reference for equal-size sets
double ospa_bruteforce(const std::vector<Eigen::Vector3d>& a, const std::vector<Eigen::Vector3d>& b) {
  std::vector<std::size_t> perm(b.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  const std::size_t m = std::min(a.size(), b.size());
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < m; ++i) cost += (a[i] - b[perm[i]]).norm();
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}
}  // namespace

TEST_CASE("ospa of a set against itself is zero under any labeling") {
  std::vector<Eigen::Vector3d> a{{1, 2, 3}, {-4, 0, 2}, {0.5, 0.5, 0.5}};
  std::vector<Eigen::Vector3d> b{a[2], a[0], a[1]};
  CHECK(ospa(a, a) == doctest::Approx(0.0));
  CHECK(ospa(a, b) == doctest::Approx(0.0));
}

TEST_CASE("ospa with cardinality mismatch keeps only the best matches") {
  std::vector<Eigen::Vector3d> est{{0, 0, 0}};
  std::vector<Eigen::Vector3d> truth{{3, 0, 0}, {100, 0, 0}};
  CHECK(ospa(est, truth) == doctest::Approx(3.0));
  CHECK(ospa(truth, est) == doctest::Approx(3.0));  // symmetric roles
}

TEST_CASE("ospa of empty sets is zero") {
  std::vector<Eigen::Vector3d> none;
  std::vector<Eigen::Vector3d> some{{1, 1, 1}};
  CHECK(ospa(none, some) == doctest::Approx(0.0));
  CHECK(ospa(none, none) == doctest::Approx(0.0));
}

TEST_CASE("ospa equals the brute-force permutation minimum on random instances") {
  RngStream rng(42);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<Eigen::Vector3d> a(4), b(4);
    for (auto& p : a) p = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()) * 5.0;
    for (auto& p : b) p = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()) * 5.0;
    CHECK(ospa(a, b) == doctest::Approx(ospa_bruteforce(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("ospa is monotone when a matched point moves away") {
  std::vector<Eigen::Vector3d> truth{{0, 0, 0}, {5, 0, 0}};
  double prev = -1.0;
  for (double shift : {0.0, 0.5, 1.0, 1.5, 2.0}) {
    std::vector<Eigen::Vector3d> est{{0, 0, shift}, {5, 0, 0}};
    const double v = ospa(est, truth);
    CHECK(v >= prev);
    prev = v;
  }
}
