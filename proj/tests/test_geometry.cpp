#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hcg/geometry.hpp"
#include "hcg/rng.hpp"

using namespace hcg;

namespace {

Point pt(std::initializer_list<double> xs) { return Point::from_doubles(std::vector<double>(xs)); }

// Independent oracle: first k with floor(x 2^k) != floor(y 2^k) in some axis.
std::optional<int> separation_by_floor(const Point& x, const Point& y) {
  for (int k = 1; k <= kFracBits; ++k) {
    for (int i = 0; i < x.dim; ++i) {
      if (std::floor(std::ldexp(x.coord(i), k)) != std::floor(std::ldexp(y.coord(i), k))) return k;
    }
  }
  return std::nullopt;
}

Point random_point(int d, Stream& rng) {
  std::array<std::uint64_t, kMaxDim> c{};
  for (int i = 0; i < d; ++i) c[static_cast<std::size_t>(i)] = rng.bits(kFracBits);
  return Point(d, c);
}

// Sum over the level-j classification of Leb(D) p(D), plus all inside cubes.
double resolved_volume(const Region& u, int j) {
  const auto levels = classify_levels(u, j);
  double v = 0.0;
  for (const auto& lvl : levels) {
    for (const auto& c : lvl.inside) v += c.volume();
  }
  for (const auto& c : levels.back().boundary) v += c.volume() * cube_region_fraction(c, u);
  return v;
}

}  // namespace

TEST_CASE("separation level of coincident and split points") {
  CHECK_FALSE(separation_level(pt({0.3}), pt({0.3})).has_value());
  CHECK(separation_level(pt({0.1}), pt({0.6})) == 1);
  CHECK(separation_level(pt({0.1}), pt({0.2})) == 3);
  CHECK(separation_level(pt({0.1, 0.1}), pt({0.1, 0.9})) == 1);
  CHECK(separation_level(pt({0.26, 0.26, 0.26}), pt({0.26, 0.26, 0.49})) == 3);
}

TEST_CASE("separation level agrees with the floor oracle on random pairs") {
  Stream rng(3);
  for (int d = 1; d <= 3; ++d) {
    for (int t = 0; t < 2000; ++t) {
      const Point x = random_point(d, rng);
      // share a random prefix so deep levels are exercised
      Point y = random_point(d, rng);
      const int keep = static_cast<int>(rng.below(50));
      for (int i = 0; i < d; ++i) {
        auto& yc = y.coords[static_cast<std::size_t>(i)];
        const auto xc = x.coords[static_cast<std::size_t>(i)];
        const std::uint64_t mask = keep == 0 ? 0 : (~std::uint64_t{0} << (kFracBits - keep)) & (kCoordLimit - 1);
        yc = (xc & mask) | (yc & ~mask & (kCoordLimit - 1));
      }
      REQUIRE(separation_level(x, y) == separation_by_floor(x, y));
    }
  }
}

TEST_CASE("potential follows the dimension convention") {
  CHECK(potential(pt({0.1, 0.1, 0.1}), pt({0.9, 0.1, 0.1})) == 2.0);
  CHECK(potential(pt({0.1, 0.1, 0.1}), pt({0.2, 0.1, 0.1})) == 8.0);
  CHECK(potential(pt({0.1, 0.1}), pt({0.2, 0.1})) == 3.0);
  CHECK(std::isinf(potential(pt({0.5}), pt({0.5}))));
  CHECK(potential_mean(3) == doctest::Approx(7.0 / 3.0));
  CHECK(potential_mean(2) == doctest::Approx(4.0 / 3.0));
  CHECK(potential_mean(1) == doctest::Approx(2.0));
}

TEST_CASE("potential mean matches Monte Carlo") {
  Stream rng(5);
  for (int d = 1; d <= 3; ++d) {
    double s = 0.0, s2 = 0.0;
    const int N = 200000;
    for (int t = 0; t < N; ++t) {
      const double w = potential(random_point(d, rng), random_point(d, rng));
      s += w;
      s2 += w * w;
    }
    const double m = s / N, se = std::sqrt((s2 / N - m * m) / N);
    CHECK(std::abs(m - potential_mean(d)) < 4 * se);
  }
}

TEST_CASE("children tile the parent in lexicographic order") {
  const DyadicCube c{2, {1, 2, 3}, 3};
  const auto kids = children(c);
  REQUIRE(kids.size() == 8);
  CHECK(kids[0].index == std::array<std::uint64_t, 3>{2, 4, 6});
  CHECK(kids[1].index == std::array<std::uint64_t, 3>{2, 4, 7});
  CHECK(kids[4].index == std::array<std::uint64_t, 3>{3, 4, 6});
  Stream rng(9);
  for (int t = 0; t < 500; ++t) {
    std::array<std::uint64_t, kMaxDim> coords{};
    for (std::size_t i = 0; i < 3; ++i) coords[i] = (c.index[i] << (kFracBits - 2)) | rng.bits(kFracBits - 2);
    const Point x(3, coords);
    REQUIRE(c.contains(x));
    int hits = 0;
    for (const auto& k : kids) hits += k.contains(x);
    CHECK(hits == 1);
    CHECK(cube_of(x, 3).parent() == c);
  }
}

TEST_CASE("half-open convention at dyadic boundaries") {
  const Point half = pt({0.5});
  CHECK(cube_of(half, 1).index[0] == 1);
  const Region left = Region::parse("box:0,0.5", 1);
  CHECK_FALSE(left.contains(half));
  CHECK(left.contains(pt({0.49999999999999994})));
  CHECK(Region::unit(2).contains(pt({0.0, 0.0})));
}

TEST_CASE("region parsing round-trips and rejects malformed text") {
  for (const char* s : {"unit", "box:0.1,0.2,0.6,0.9", "ball:0.5,0.5,0.25"}) {
    CHECK(Region::parse(s, 2).to_string() == s);
  }
  CHECK_THROWS_AS(Region::parse("box:0.1,0.2", 2), ConfigError);
  CHECK_THROWS_AS(Region::parse("box:0.6,0.2,0.5,0.9", 2), ConfigError);
  CHECK_THROWS_AS(Region::parse("ball:0.5,0.5,-1", 2), ConfigError);
  CHECK_THROWS_AS(Region::parse("ball:0.5,x,0.1", 2), ConfigError);
  CHECK_THROWS_AS(Region::parse("sphere:1", 2), ConfigError);
  CHECK_THROWS_AS(Region::parse("unit", 4), ConfigError);
}

TEST_CASE("region volumes against closed forms") {
  const double pi = std::numbers::pi;
  CHECK(region_volume(Region::parse("box:0.2,0.1,0.7,0.6", 2)) == doctest::Approx(0.25));
  CHECK(region_volume(Region::parse("ball:0.5,0.3", 1)) == doctest::Approx(0.6));
  CHECK(region_volume(Region::parse("ball:0.5,0.5,0.3", 2)) == doctest::Approx(pi * 0.09).epsilon(1e-12));
  CHECK(region_volume(Region::parse("ball:0.5,0.5,0.5,0.3", 3)) == doctest::Approx(4.0 / 3.0 * pi * 0.027).epsilon(1e-10));
  // quarter disc and eighth ball at a corner
  CHECK(region_volume(Region::parse("ball:0,0,0.5", 2)) == doctest::Approx(pi / 16).epsilon(1e-12));
  CHECK(region_volume(Region::parse("ball:0,0,0,0.5", 3)) == doctest::Approx(pi / 48).epsilon(1e-10));
  // ball covering the cube
  CHECK(region_volume(Region::parse("ball:0.5,0.5,0.5,1", 3)) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("disc/square overlap against Monte Carlo") {
  const Region u = Region::parse("ball:0.3,0.8,0.35", 2);
  const DyadicCube c{2, {1, 2}, 2};
  Stream rng(17);
  int in = 0;
  const int N = 400000;
  for (int t = 0; t < N; ++t) {
    const double x = c.lo(0) + rng.uniform() * c.side(), y = c.lo(1) + rng.uniform() * c.side();
    const double dx = x - 0.3, dy = y - 0.8;
    in += dx * dx + dy * dy < 0.35 * 0.35;
  }
  const double p = static_cast<double>(in) / N;
  CHECK(std::abs(cube_region_fraction(c, u) - p) < 4 * std::sqrt(p * (1 - p) / N));
}

TEST_CASE("classification accounts for the whole region volume") {
  // dyadic boxes resolve exactly at deep levels
  const Region dy = Region::parse("box:0.25,0.5,0.75,1", 2);
  CHECK(resolved_volume(dy, 20) == doctest::Approx(region_volume(dy)).epsilon(1e-12));
  CHECK(classify_cubes(dy, 2).boundary.empty());
  for (int d = 1; d <= 3; ++d) {
    const int j = d == 1 ? 12 : (d == 2 ? 6 : 4);
    const std::string box = d == 1 ? "box:0.2,0.7" : (d == 2 ? "box:0.2,0.1,0.7,0.6" : "box:0.2,0.1,0.1,0.7,0.6,0.6");
    std::string ball = "ball:";
    for (int i = 0; i < d; ++i) ball += "0.45,";
    ball += "0.3";
    for (const auto& text : {box, ball}) {
      const Region u = Region::parse(text, d);
      CAPTURE(text);
      for (int level = 0; level <= j; level += std::max(1, j / 4)) {
        CHECK(resolved_volume(u, level) == doctest::Approx(region_volume(u)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("inside cubes are maximal and boundary cubes straddle") {
  const Region u = Region::parse("ball:0.5,0.5,0.3", 2);
  const auto levels = classify_levels(u, 6);
  for (std::size_t i = 1; i < levels.size(); ++i) {
    for (const auto& c : levels[i].inside) {
      CHECK(cube_region_fraction(c, u) == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(cube_region_fraction(c.parent(), u) < 1.0);
    }
    for (const auto& c : levels[i].boundary) {
      const double p = cube_region_fraction(c, u);
      CHECK(p > 0.0);
      CHECK(p < 1.0);
    }
  }
}

TEST_CASE("blow-up maps shapes to shrunken copies") {
  const std::vector<double> x{0.5, 0.5, 0.5};
  const Region v = blowup_shape(3, x, 2.0, Region::parse("ball:0,0,0,0.5", 3).shape(), 1000.0);
  const auto& b = std::get<BallRegion>(v.shape());
  CHECK(b.radius == doctest::Approx(0.1));
  CHECK(b.center[0] == doctest::Approx(0.5));
  const Region unit_view = blowup_region(Point::from_doubles(std::vector<double>{0.25, 0.25}), 1.0, Region::unit(2), 16.0);
  CHECK(region_volume(unit_view) == doctest::Approx(1.0 / 16.0));
  CHECK_THROWS_AS(static_cast<void>(blowup_shape(3, x, 40.0, Region::parse("ball:0,0,0,0.5", 3).shape(), 1000.0)), ConfigError);
}

TEST_CASE("fixed-point conversion is exact on doubles") {
  Stream rng(21);
  for (int t = 0; t < 1000; ++t) {
    const double v = rng.uniform();
    CHECK(Point::from_doubles(std::vector<double>{v}).coord(0) == v);
  }
  CHECK_THROWS_AS(Point::from_doubles(std::vector<double>{1.0}), ConfigError);
  CHECK_THROWS_AS(Point::from_doubles(std::vector<double>{-0.1}), ConfigError);
}
