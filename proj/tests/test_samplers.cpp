#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <memory>

#include "hcg/energy.hpp"
#include "hcg/samplers.hpp"
#include "hcg/statistics.hpp"

using namespace hcg;

namespace {

std::shared_ptr<const LogZTable> table(int d, double beta, int n_max) {
  return std::make_shared<const LogZTable>(build_logz_table(d, beta, n_max));
}

// Law of the separation level of two particles: P(k) ∝ (2^d - 1) 2^{-dk} e^{-beta w_k}.
std::vector<double> two_point_law(int d, double beta, int k_max) {
  std::vector<double> p(static_cast<std::size_t>(k_max), 0.0);
  double total = 0.0;
  for (int k = 1; k < 200; ++k) {
    const double m = std::ldexp(1.0, d);
    const double t = (m - 1.0) * std::pow(m, -k) * std::exp(-beta * potential_at_level(d, k));
    total += t;
    p[static_cast<std::size_t>(std::min(k, k_max) - 1)] += t;
  }
  for (auto& v : p) v /= total;
  return p;
}

template <class Draw>
ChiSquare two_point_test(int d, double beta, int k_max, int N, Draw&& draw) {
  std::vector<double> hist(static_cast<std::size_t>(k_max), 0.0);
  for (int t = 0; t < N; ++t) {
    const Configuration c = draw();
    REQUIRE(c.size() == 2);
    const int k = *separation_level(c.points[0], c.points[1]);
    hist[static_cast<std::size_t>(std::min(k, k_max) - 1)] += 1.0;
  }
  return chi_square_gof(hist, two_point_law(d, beta, k_max));
}

}  // namespace

TEST_CASE("two-particle split matches the closed form") {
  for (int d = 1; d <= 3; ++d) {
    for (double beta : {0.5, 1.0, 2.0}) {
      const auto t = table(d, beta, 4);
      const SplitDistribution s = split_distribution(*t, 2, 0);
      std::vector<int> same(static_cast<std::size_t>(s.children()), 0);
      same[0] = 2;
      const double p_same = s.children() * std::exp(s.log_probability(same));
      const double p_split = two_point_law(d, beta, 2)[0];
      CAPTURE(d);
      CHECK(1.0 - p_same == doctest::Approx(p_split).epsilon(1e-10));
      if (d == 1) CHECK(1.0 - p_same == doctest::Approx(1.0 - std::exp(-beta) / 2.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("split probabilities are normalized and sampled faithfully") {
  const auto t = table(2, 1.0, 8);
  const SplitDistribution s = split_distribution(*t, 5, 0);
  // enumerate all compositions of 5 into 4 parts
  std::vector<std::vector<int>> comps;
  double total = 0.0;
  for (int a = 0; a <= 5; ++a)
    for (int b = 0; a + b <= 5; ++b)
      for (int c = 0; a + b + c <= 5; ++c) {
        comps.push_back({a, b, c, 5 - a - b - c});
        total += std::exp(s.log_probability(comps.back()));
      }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  Stream rng(7);
  std::map<std::vector<int>, double> seen;
  const int N = 100000;
  for (int i = 0; i < N; ++i) seen[sample_split(s, rng)] += 1.0;
  std::vector<double> obs, probs;
  for (const auto& c : comps) {
    obs.push_back(seen[c]);
    probs.push_back(std::exp(s.log_probability(c)));
  }
  CHECK(chi_square_gof(obs, probs).p_value > 1e-4);
}

TEST_CASE("empty and single-particle splits") {
  const auto t = table(3, 1.0, 4);
  const SplitDistribution s = split_distribution(*t, 4, 0);
  Stream rng(13);
  CHECK(sample_split(s, 0, rng) == std::vector<int>(8, 0));
  std::vector<double> hist(8, 0.0);
  for (int i = 0; i < 16000; ++i) {
    const auto c = sample_split(s, 1, rng);
    for (std::size_t j = 0; j < 8; ++j) hist[j] += c[j];
  }
  CHECK(chi_square_gof(hist, std::vector<double>(8, 0.125)).p_value > 1e-4);
}

TEST_CASE("near-zero temperature split is multinomial") {
  const auto t = table(2, 1e-9, 6);
  const SplitDistribution s = split_distribution(*t, 4, 0);
  CHECK(std::exp(s.log_probability(std::vector<int>{1, 1, 1, 1})) == doctest::Approx(24.0 / 256.0).epsilon(1e-6));
  CHECK(std::exp(s.log_probability(std::vector<int>{4, 0, 0, 0})) == doctest::Approx(1.0 / 256.0).epsilon(1e-6));
}

TEST_CASE("exact sampler reproduces the two-particle law") {
  for (int d = 1; d <= 3; ++d) {
    Stream rng(100 + static_cast<std::uint64_t>(d));
    const ExactSampler sampler(table(d, 1.0, 4));
    const ChiSquare c = two_point_test(d, 1.0, 6, 40000, [&] { return sampler.sample(2, rng); });
    CAPTURE(d);
    CHECK(c.p_value > 1e-4);
  }
}

TEST_CASE("rejection sampler reproduces the two-particle law") {
  Stream rng(5);
  const DyadicCube cube = unit_cube(2);
  const ChiSquare c = two_point_test(2, 1.0, 6, 40000, [&] {
    return Configuration{2, 1.0, sample_in_cube_rejection(cube, 2, 1.0, rng, 1000000)};
  });
  CHECK(c.p_value > 1e-4);
  CHECK_THROWS_AS(static_cast<void>(sample_in_cube_rejection(unit_cube(3), 40, 50.0, rng, 10)), ResolutionError);
}

TEST_CASE("MCMC reproduces the two-particle law") {
  for (int d = 1; d <= 3; ++d) {
    Stream rng(200 + static_cast<std::uint64_t>(d));
    McmcParams p = McmcParams::defaults(2, 1.0);
    p.steps = 200000;
    p.burn_in = 1000;
    p.thin = 10;
    std::vector<double> hist(6, 0.0);
    const McmcResult r = sample_mcmc(d, 2, 1.0, p, rng, [&](const Configuration& c) {
      const int k = *separation_level(c.points[0], c.points[1]);
      hist[static_cast<std::size_t>(std::min(k, 6) - 1)] += 1.0;
    });
    CHECK(r.diagnostics.kept == (p.steps - p.burn_in) / p.thin);
    // thinned chain: allow for residual correlation through tau
    const ChiSquare c = chi_square_gof(hist, two_point_law(d, 1.0, 6));
    CAPTURE(d);
    CHECK(c.statistic / std::max(1.0, r.diagnostics.tau_int) < 40.0);
  }
}

TEST_CASE("MCMC at zero temperature is uniform") {
  Stream rng(17);
  McmcParams p;
  p.steps = 20000;
  p.burn_in = 100;
  p.thin = 20;
  std::vector<double> xs;
  const McmcResult r = sample_mcmc(2, 1, 0.0, p, rng, [&](const Configuration& c) { xs.push_back(c.points[0].coord(1)); });
  CHECK(r.diagnostics.acceptance_rate == 1.0);
  CHECK(ks_uniform(xs).p_value > 1e-3);
}

TEST_CASE("MCMC parameter validation") {
  McmcParams p = McmcParams::defaults(10, 1.0);
  CHECK(p.burn_in == 50u * 10u * 2u);
  CHECK(p.thin == 10u);
  p.thin = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  Stream rng(1);
  p = McmcParams::defaults(10, 1.0);
  p.local_move_prob = 1.5;
  CHECK_THROWS_AS(static_cast<void>(sample_mcmc(2, 10, 1.0, p, rng)), ConfigError);
}

TEST_CASE("exact sampler: symmetric dyadic counts have mean n / 2^d") {
  for (int d = 1; d <= 3; ++d) {
    const int n = 24;
    const ExactSampler sampler(table(d, 1.0, n));
    const DyadicCube target = child(child(unit_cube(d), 1), 0);
    Stream rng(300 + static_cast<std::uint64_t>(d));
    double s = 0.0, s2 = 0.0;
    const int N = 4000;
    for (int t = 0; t < N; ++t) {
      const Configuration c = sampler.sample(n, rng);
      REQUIRE(c.size() == static_cast<std::size_t>(n));
      double k = 0;
      for (const auto& x : c.points) k += target.contains(x);
      s += k;
      s2 += k * k;
    }
    const double m = s / N, se = std::sqrt((s2 / N - m * m) / N);
    CHECK(std::abs(m - n * target.volume()) < 4.0 * se);
  }
}

TEST_CASE("exact sampler: one particle is uniform and order is exchangeable") {
  const ExactSampler sampler(table(3, 1.0, 8));
  Stream rng(41);
  std::vector<double> xs, first;
  for (int t = 0; t < 4000; ++t) {
    xs.push_back(sampler.sample(1, rng).points[0].coord(2));
    first.push_back(sampler.sample(8, rng).points[0].coord(0));
  }
  CHECK(ks_uniform(xs).p_value > 1e-3);
  CHECK(ks_uniform(first).p_value > 1e-3);
}

TEST_CASE("exact sampler is deterministic per stream and validates input") {
  const auto t = table(2, 1.0, 16);
  const ExactSampler sampler(t);
  Stream a(9, 1, 2), b(9, 1, 2);
  CHECK(sampler.sample(16, a).points == sampler.sample(16, b).points);
  Stream rng(1);
  CHECK_THROWS(static_cast<void>(sampler.sample(17, rng)));
  CHECK_THROWS_AS(static_cast<void>(sample_exact(3, 4, 1.0, *t, rng)), ConfigError);
  CHECK_THROWS_AS(static_cast<void>(sample_exact(2, 4, 2.0, *t, rng)), ConfigError);
}

TEST_CASE("exact sampler energies agree with the certified free energy") {
  // d/dbeta log Z = -E[H]; compare a finite difference with the sample mean.
  const int d = 2, n = 6;
  const double beta = 1.0, h = 1e-3;
  const double slope = (logz(build_logz_table(d, beta + h, n), n).mid() - logz(build_logz_table(d, beta - h, n), n).mid()) /
                       (2 * h);
  const ExactSampler sampler(table(d, beta, n));
  Stream rng(77);
  double s = 0.0, s2 = 0.0;
  const int N = 20000;
  for (int t = 0; t < N; ++t) {
    const double e = energy_fast(sampler.sample(n, rng));
    s += e;
    s2 += e * e;
  }
  const double m = s / N, se = std::sqrt((s2 / N - m * m) / N);
  CHECK(std::abs(m + slope) < 4.0 * se);
}

TEST_CASE("3D deep-level fallback keeps points distinct") {
  const ExactSampler sampler(table(3, 4.0, 64));
  Stream rng(3);
  ExactDiagnostics diag;
  for (int t = 0; t < 20; ++t) {
    const Configuration c = sampler.sample(64, rng, &diag);
    CHECK(std::isfinite(energy_fast(c)));
  }
  CHECK(diag.fallback_attempts >= diag.fallback_cubes);
}

TEST_CASE("iid counts are binomial") {
  Stream rng(61);
  const Region u = Region::parse("box:0.2,0.1,0.7,0.6", 2);
  const int n = 40, N = 20000;
  std::vector<double> ks;
  for (int t = 0; t < N; ++t) ks.push_back(static_cast<double>(count_in_region(sample_iid(2, n, rng), u)));
  const Moments m = compute_moments(ks);
  CHECK(std::abs(m.mean - n * 0.25) < 4 * m.se_mean);
  CHECK(std::abs(m.variance - n * 0.25 * 0.75) < 4 * m.se_variance);
}

TEST_CASE("autocorrelation time of an AR(1) chain") {
  Stream rng(71);
  const double phi = 0.8;
  std::vector<double> x(200000);
  double v = 0.0;
  for (auto& xi : x) {
    const double g = std::sqrt(-2 * std::log(rng.uniform_pos())) * std::cos(2 * std::numbers::pi * rng.uniform());
    v = phi * v + g;
    xi = v;
  }
  // tau = (1 + phi) / (1 - phi)
  CHECK(integrated_autocorrelation_time(x) == doctest::Approx(9.0).epsilon(0.1));
}
