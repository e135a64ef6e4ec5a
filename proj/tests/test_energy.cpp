#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hcg/energy.hpp"
#include "hcg/samplers.hpp"

using namespace hcg;

namespace {

Configuration random_config(int d, int n, Stream& rng) { return sample_iid(d, n, rng); }

// Points packed into a few tiny cubes, so deep levels carry most of the energy.
Configuration clustered_config(int d, int n, Stream& rng) {
  Configuration c{d, 1.0, {}};
  const int k = 5 + static_cast<int>(rng.below(20));
  const DyadicCube seed = cube_of(uniform_point_in(unit_cube(d), rng), k);
  for (int i = 0; i < n; ++i) c.points.push_back(uniform_point_in(seed, rng));
  return c;
}

}  // namespace

TEST_CASE("fast energy equals the pair loop") {
  Stream rng(11);
  for (int d = 1; d <= 3; ++d) {
    for (int t = 0; t < 200; ++t) {
      const int n = static_cast<int>(rng.below(60));
      const Configuration c = t % 2 ? random_config(d, n, rng) : clustered_config(d, n, rng);
      const double a = energy_naive(c), b = energy_fast(c);
      CAPTURE(d);
      CAPTURE(n);
      REQUIRE(b == doctest::Approx(a).epsilon(1e-12));
    }
  }
}

TEST_CASE("small configurations by hand") {
  Configuration c{3, 1.0, {}};
  CHECK(energy_fast(c) == 0.0);
  c.points.push_back(Point::from_doubles(std::vector<double>{0.1, 0.1, 0.1}));
  CHECK(energy_fast(c) == 0.0);
  c.points.push_back(Point::from_doubles(std::vector<double>{0.9, 0.1, 0.1}));  // level 1
  c.points.push_back(Point::from_doubles(std::vector<double>{0.2, 0.1, 0.1}));  // level 3 with the first
  CHECK(energy_naive(c) == 2.0 + 8.0 + 2.0);
  CHECK(energy_fast(c) == 12.0);
}

TEST_CASE("coincident points give infinite energy") {
  for (int d = 1; d <= 3; ++d) {
    Stream rng(static_cast<std::uint64_t>(d));
    Configuration c = random_config(d, 10, rng);
    c.points.push_back(c.points[3]);
    CHECK(std::isinf(energy_naive(c)));
    CHECK(std::isinf(energy_fast(c)));
    CHECK(std::isinf(energy_delta(c, 0, c.points[5])));
  }
}

TEST_CASE("energy delta matches recomputation") {
  Stream rng(23);
  for (int d = 1; d <= 3; ++d) {
    for (int t = 0; t < 200; ++t) {
      Configuration c = random_config(d, 2 + static_cast<int>(rng.below(30)), rng);
      const std::size_t i = rng.below(c.size());
      const Point y = t % 3 ? uniform_point_in(unit_cube(d), rng) : uniform_point_in(cube_of(c.points[0], 8), rng);
      const double before = energy_naive(c);
      const double delta = energy_delta(c, i, y);
      c.points[i] = y;
      REQUIRE(delta == doctest::Approx(energy_naive(c) - before).epsilon(1e-12).scale(before));
    }
  }
}

TEST_CASE("energy is permutation invariant") {
  Stream rng(29);
  Configuration c = random_config(2, 40, rng);
  const double e = energy_fast(c);
  std::reverse(c.points.begin(), c.points.end());
  CHECK(energy_fast(c) == e);
}

TEST_CASE("morton order agrees with child order") {
  Stream rng(31);
  for (int d = 1; d <= 3; ++d) {
    for (int t = 0; t < 500; ++t) {
      const Point a = uniform_point_in(unit_cube(d), rng), b = uniform_point_in(unit_cube(d), rng);
      if (a == b) continue;
      const int k = *separation_level(a, b);
      const DyadicCube pa = cube_of(a, k), pb = cube_of(b, k);
      REQUIRE(pa.parent() == pb.parent());
      // child rank inside the shared parent, first coordinate most significant
      int ra = 0, rb = 0;
      for (int i = 0; i < d; ++i) {
        ra = 2 * ra + static_cast<int>(pa.index[static_cast<std::size_t>(i)] & 1);
        rb = 2 * rb + static_cast<int>(pb.index[static_cast<std::size_t>(i)] & 1);
      }
      CHECK(morton_less(a, b) == (ra < rb));
      CHECK(child(pa.parent(), ra) == pa);
    }
  }
}

TEST_CASE("uniform point in a cube stays inside and is uniform in the low bits") {
  Stream rng(37);
  const DyadicCube c{4, {3, 9, 0}, 2};
  double s = 0.0;
  const int N = 20000;
  for (int t = 0; t < N; ++t) {
    const Point x = uniform_point_in(c, rng);
    REQUIRE(c.contains(x));
    s += (x.coord(0) - c.lo(0)) / c.side();
  }
  CHECK(std::abs(s / N - 0.5) < 4 * std::sqrt(1.0 / 12.0 / N));
}

TEST_CASE("annealing finds a well-spread configuration") {
  Stream rng(41);
  // n = 2^d points, one per child: H = w_min C(n,2) exactly, the minimum.
  for (int d = 1; d <= 3; ++d) {
    const int n = 1 << d;
    std::vector<AnnealStage> schedule{{1.0, 2000}, {4.0, 2000}, {16.0, 4000}};
    const AnnealResult r = anneal_min_energy(d, static_cast<std::size_t>(n), schedule, rng);
    CHECK(r.energy == doctest::Approx(potential_min(d) * n * (n - 1) / 2.0));
    CHECK(energy_naive(r.best) == doctest::Approx(r.energy));
  }
}
