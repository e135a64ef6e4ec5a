#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hcg/statistics.hpp"

using namespace hcg;

namespace {

Configuration points_at(int d, const std::vector<std::vector<double>>& xs) {
  Configuration c{d, 1.0, {}};
  for (const auto& x : xs) c.points.push_back(Point::from_doubles(x));
  return c;
}

}  // namespace

TEST_CASE("linear functions") {
  const std::vector<double> a{2.0, -3.0};
  const LinearFunction f = LinearFunction::make(2, a, 0.5);
  CHECK(f(Point::from_doubles(std::vector<double>{0.5, 0.25})) == doctest::Approx(0.75));
  CHECK(f.lipschitz() == doctest::Approx(std::sqrt(13.0)));
  CHECK_FALSE(f.is_constant());
  const std::vector<double> zero{0.0, 0.0};
  const LinearFunction g = LinearFunction::make(2, zero, 3.0);
  CHECK(g.is_constant());
  Stream rng(1);
  const Configuration c = sample_iid(2, 17, rng);
  CHECK(linear_statistic(c, g) == doctest::Approx(51.0));
  CHECK_THROWS_AS(LinearFunction::make(3, a, 0.0), ConfigError);
}

TEST_CASE("counts in regions and dyadic cells") {
  const Configuration c = points_at(2, {{0.1, 0.1}, {0.2, 0.2}, {0.6, 0.1}, {0.9, 0.9}});
  CHECK(count_in_region(c, Region::parse("box:0,0,0.5,0.5", 2)) == 2);
  CHECK(count_in_region(c, Region::parse("ball:0.15,0.15,0.1", 2)) == 2);
  const auto counts = level_counts(c, 1);
  CHECK(counts.size() == 3);
  CHECK(counts.at(pack_index(DyadicCube{1, {0, 0}, 2})) == 2);
  CHECK_THROWS_AS(static_cast<void>(pack_index(DyadicCube{22, {0, 0}, 2})), ResolutionError);
}

TEST_CASE("martingale starts at the mean and resolves dyadic regions") {
  Stream rng(3);
  const Region ball = Region::parse("ball:0.5,0.5,0.3", 2);
  const MartingaleFunctional m(ball, 8);
  for (int t = 0; t < 20; ++t) {
    const Configuration c = sample_iid(2, 30, rng);
    const auto v = m.values(c);
    CHECK(v[0] == doctest::Approx(30.0 * region_volume(ball)).epsilon(1e-12));
    // M_j approaches N(U) as j grows; the gap is bounded by boundary points
    CHECK(std::abs(v.back() - static_cast<double>(count_in_region(c, ball))) < 30.0);
  }
  const Region dy = Region::parse("box:0.25,0,0.75,0.5", 2);
  const MartingaleFunctional md(dy, 4);
  for (int t = 0; t < 20; ++t) {
    const Configuration c = sample_iid(2, 30, rng);
    CHECK(md.value(c, 2) == static_cast<double>(count_in_region(c, dy)));
    CHECK(martingale_value(c, dy, 3) == static_cast<double>(count_in_region(c, dy)));
  }
  CHECK_THROWS_AS(MartingaleFunctional(ball, 21), ConfigError);
}

TEST_CASE("martingale has mean N(U) under iid sampling at every level") {
  Stream rng(5);
  const Region u = Region::parse("box:0.2,0.1,0.7,0.6", 2);
  const MartingaleFunctional m(u, 5);
  const int N = 20000, n = 10;
  std::vector<double> inc;
  for (int t = 0; t < N; ++t) {
    const auto v = m.values(sample_iid(2, n, rng));
    inc.push_back(v[5] - v[2]);
  }
  const Moments mo = compute_moments(inc);
  CHECK(std::abs(mo.mean) < 4 * mo.se_mean);
}

TEST_CASE("moments and jackknife") {
  const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8};
  const Moments m = compute_moments(v);
  CHECK(m.mean == doctest::Approx(4.5));
  CHECK(m.variance == doctest::Approx(6.0));
  CHECK(m.se_mean == doctest::Approx(std::sqrt(6.0 / 8)));
  // brute-force delete-one jackknife
  double loo_mean = 0.0;
  std::vector<double> loo;
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::vector<double> w;
    for (std::size_t j = 0; j < v.size(); ++j)
      if (j != i) w.push_back(v[j]);
    double mu = 0.0;
    for (double x : w) mu += x;
    mu /= static_cast<double>(w.size());
    double s = 0.0;
    for (double x : w) s += (x - mu) * (x - mu);
    loo.push_back(s / static_cast<double>(w.size() - 1));
    loo_mean += loo.back();
  }
  loo_mean /= static_cast<double>(v.size());
  double jk = 0.0;
  for (double x : loo) jk += (x - loo_mean) * (x - loo_mean);
  jk *= static_cast<double>(v.size() - 1) / static_cast<double>(v.size());
  CHECK(m.se_variance == doctest::Approx(std::sqrt(jk)));
  CHECK_THROWS(static_cast<void>(compute_moments(std::vector<double>{1.0})));
}

TEST_CASE("scaling fit recovers exact power laws") {
  const std::vector<double> ns{16, 32, 64, 128, 256};
  for (double alpha : {1.0, 2.0 / 3.0, 0.5}) {
    std::vector<double> vars, ses;
    for (double n : ns) {
      vars.push_back(3.0 * std::pow(n, alpha));
      ses.push_back(0.05 * vars.back());
    }
    const ScalingFit f = fit_scaling_exponent(ns, vars, ses);
    CHECK(f.slope == doctest::Approx(alpha).epsilon(1e-12));
    CHECK(std::exp(f.intercept) == doctest::Approx(3.0));
    CHECK(f.weighted);
    CHECK(f.ci_lo < alpha);
    CHECK(f.ci_hi > alpha);
    // slope se for equal relative errors: 0.05 / sqrt(sum (x - xbar)^2)
    double xm = 0.0, sxx = 0.0;
    for (double n : ns) xm += std::log(n) / 5.0;
    for (double n : ns) sxx += (std::log(n) - xm) * (std::log(n) - xm);
    CHECK(f.slope_se == doctest::Approx(0.05 / std::sqrt(sxx)));
  }
  const std::vector<double> three{1, 2, 3};
  CHECK_THROWS_AS(static_cast<void>(fit_scaling_exponent(three, three, three)), ConfigError);
}

TEST_CASE("chi-square helpers") {
  const std::vector<double> obs{50, 50, 50, 50};
  const std::vector<double> p{0.25, 0.25, 0.25, 0.25};
  const ChiSquare a = chi_square_gof(obs, p);
  CHECK(a.statistic == doctest::Approx(0.0));
  CHECK(a.dof == 3);
  CHECK(a.p_value == doctest::Approx(1.0));
  const std::vector<double> skew{80, 40, 40, 40};
  const ChiSquare b = chi_square_gof(skew, p);
  CHECK(b.statistic == doctest::Approx(24.0));
  // chi2 survival with 3 dof: exact form
  const double x = 24.0;
  const double sf = std::erfc(std::sqrt(x / 2)) + std::sqrt(2 * x / std::numbers::pi) * std::exp(-x / 2);
  CHECK(b.p_value == doctest::Approx(sf).epsilon(1e-8));
  const ChiSquare c = chi_square_two_sample(obs, obs);
  CHECK(c.statistic == doctest::Approx(0.0));
  CHECK(c.p_value == doctest::Approx(1.0));
  CHECK(chi_square_two_sample(skew, obs).p_value < 0.05);
}

TEST_CASE("Kolmogorov-Smirnov against uniform") {
  CHECK(kolmogorov_tail(0.0) == doctest::Approx(1.0));
  CHECK(kolmogorov_tail(1.3581) == doctest::Approx(0.05).epsilon(1e-3));
  CHECK(kolmogorov_tail(1.6276) == doctest::Approx(0.01).epsilon(1e-3));
  Stream rng(7);
  std::vector<double> u, sq;
  for (int i = 0; i < 5000; ++i) {
    u.push_back(rng.uniform());
    sq.push_back(u.back() * u.back());
  }
  CHECK(ks_uniform(u).p_value > 1e-3);
  CHECK(ks_uniform(sq).p_value < 1e-6);
  const std::vector<double> grid{0.1, 0.3, 0.5, 0.7, 0.9};
  CHECK(ks_uniform(grid).statistic == doctest::Approx(0.1));
}

TEST_CASE("window frequency") {
  const std::vector<double> v{0.0, 0.1, 0.2, 1.0, 1.05, 1.1, 1.12, 5.0};
  CHECK(max_window_frequency(v, 0.15) == doctest::Approx(4.0 / 8.0));
  CHECK(max_window_frequency(v, 10.0) == doctest::Approx(1.0));
  CHECK(max_window_frequency(v, 0.0) == doctest::Approx(1.0 / 8.0));
}

TEST_CASE("method names round trip") {
  for (Method m : {Method::exact, Method::mcmc, Method::iid}) CHECK(parse_method(method_name(m)) == m);
  CHECK_THROWS_AS(static_cast<void>(parse_method("gibbs")), ConfigError);
}

TEST_CASE("replicates are independent of the thread count") {
  auto fn = [](std::size_t r, Stream& rng) { return static_cast<double>(r) + rng.uniform(); };
  const auto a = run_replicates(100, 5, 3, 1, fn);
  const auto b = run_replicates(100, 5, 3, 4, fn);
  CHECK(a == b);
  CHECK_THROWS(run_replicates(10, 1, 0, 2, [](std::size_t r, Stream&) -> int {
    if (r == 7) throw std::runtime_error("boom");
    return 0;
  }));
}

TEST_CASE("check reports") {
  CheckReport r{"x", {}, true};
  r.add_z("ok", 1.0, 1.1, 0.05);
  CHECK(r.pass);
  r.add_z("bad", 1.0, 2.0, 0.05);
  CHECK_FALSE(r.pass);
  CHECK(r.items.size() == 2);
}

TEST_CASE("property checks hold for iid and the Gibbs measure") {
  const SamplerSpec iid = SamplerSpec::make(2, 1.0, Method::iid, 16);
  CHECK(conditional_mean_check(iid, 12, 1, 4000, 9).pass);
  CHECK(independence_check(iid, 12, 4000, 9).pass);
  const SamplerSpec exact = SamplerSpec::make(2, 1.0, Method::exact, 16);
  CHECK(conditional_mean_check(exact, 12, 1, 4000, 9).pass);
  CHECK(independence_check(exact, 12, 4000, 9).pass);
  CHECK(repulsion_check(exact, 12, 1, 2000, 9).pass);
  CHECK(count_window_exponent(3) == doctest::Approx(1.0 / 3.0));
  CHECK(count_window_exponent(2) == doctest::Approx(0.25));
}

TEST_CASE("anticoncentration window") {
  const SamplerSpec exact = SamplerSpec::make(3, 1.0, Method::exact, 64);
  const Region u = Region::parse("ball:0.5,0.5,0.5,0.3", 3);
  const auto res = anticoncentration_check(
      exact, 64, [&](const Configuration& c) { return static_cast<double>(count_in_region(c, u)); }, 0.1,
      count_window_exponent(3), 1000, 11);
  CHECK(res.width == doctest::Approx(0.1 * std::pow(64.0, 1.0 / 3.0)));
  CHECK(res.max_frequency > 0.0);
  CHECK(res.max_frequency < 0.95);
  CHECK(res.moments.count == 1000);
}
