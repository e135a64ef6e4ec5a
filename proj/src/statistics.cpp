#include "hcg/statistics.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace hcg {

namespace {

constexpr int kPackBits = 21;

std::uint64_t pack_coords(const std::array<std::uint64_t, kMaxDim>& idx) {
  return idx[0] | (idx[1] << kPackBits) | (idx[2] << (2 * kPackBits));
}

double binom2(double m) { return 0.5 * m * (m - 1.0); }

}  // namespace

// ---- observables ------------------------------------------------------------

LinearFunction LinearFunction::make(int d, std::span<const double> coeffs, double intercept) {
  check_dim(d);
  if (coeffs.size() != static_cast<std::size_t>(d)) throw ConfigError("linear function: wrong number of coefficients");
  LinearFunction f;
  f.dim = d;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (!std::isfinite(coeffs[i])) throw ConfigError("linear function: non-finite coefficient");
    f.a[i] = coeffs[i];
  }
  if (!std::isfinite(intercept)) throw ConfigError("linear function: non-finite intercept");
  f.b = intercept;
  return f;
}

double LinearFunction::operator()(const Point& x) const {
  double v = b;
  for (int i = 0; i < dim; ++i) v += a[static_cast<std::size_t>(i)] * x.coord(i);
  return v;
}

double LinearFunction::lipschitz() const {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += a[static_cast<std::size_t>(i)] * a[static_cast<std::size_t>(i)];
  return std::sqrt(s);
}

bool LinearFunction::is_constant() const {
  for (int i = 0; i < dim; ++i) {
    if (a[static_cast<std::size_t>(i)] != 0.0) return false;
  }
  return true;
}

std::size_t count_in_region(const Configuration& c, const Region& u) {
  return static_cast<std::size_t>(
      std::count_if(c.points.begin(), c.points.end(), [&](const Point& x) { return u.contains(x); }));
}

double linear_statistic(const Configuration& c, const LinearFunction& f) {
  double s = 0.0;
  for (const Point& x : c.points) s += f(x);
  return s;
}

std::uint64_t pack_index(const DyadicCube& cube) {
  if (cube.level > kPackBits) throw ResolutionError("cube index packing supports levels up to 21");
  return pack_coords(cube.index);
}

std::unordered_map<std::uint64_t, int> level_counts(const Configuration& c, int k) {
  std::unordered_map<std::uint64_t, int> counts;
  for (const Point& x : c.points) ++counts[pack_index(cube_of(x, k))];
  return counts;
}

MartingaleFunctional::MartingaleFunctional(const Region& u, int j_max) : region_(u), j_max_(j_max) {
  if (j_max < 0 || j_max > kMaxMartingaleLevel) throw ConfigError("martingale level must lie in [0, 20]");
  const auto levels = classify_levels(u, j_max);
  inside_.resize(levels.size());
  boundary_.resize(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) {
    for (const DyadicCube& c : levels[i].inside) inside_[i].insert(pack_index(c));
    for (const DyadicCube& c : levels[i].boundary) boundary_[i].emplace(pack_index(c), cube_region_fraction(c, u));
  }
}

std::vector<double> MartingaleFunctional::values(const Configuration& c) const {
  const auto len = static_cast<std::size_t>(j_max_) + 1;
  // inside_count[j]: points in some U_i, i <= j; boundary_mass[j]: sum of p(D) over V_j
  std::vector<double> inside_count(len, 0.0), boundary_mass(len, 0.0);
  for (const Point& x : c.points) {
    std::size_t first_inside = len;
    for (std::size_t i = 0; i < len; ++i) {
      const std::uint64_t key = pack_index(cube_of(x, static_cast<int>(i)));
      if (inside_[i].contains(key)) {
        first_inside = i;
        break;
      }
      const auto it = boundary_[i].find(key);
      if (it == boundary_[i].end()) break;  // outside U from here on
      boundary_mass[i] += it->second;
    }
    if (first_inside < len) inside_count[first_inside] += 1.0;
  }
  std::vector<double> m(len);
  double running = 0.0;
  for (std::size_t j = 0; j < len; ++j) {
    running += inside_count[j];
    m[j] = running + boundary_mass[j];
  }
  return m;
}

double MartingaleFunctional::value(const Configuration& c, int j) const {
  if (j < 0 || j > j_max_) throw std::out_of_range("martingale level outside precomputed range");
  return values(c)[static_cast<std::size_t>(j)];
}

double martingale_value(const Configuration& c, const Region& u, int j) {
  return MartingaleFunctional(u, j).value(c, j);
}

// ---- moments and fits -------------------------------------------------------

Moments compute_moments(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) throw std::invalid_argument("moments need at least two values");
  Moments m;
  m.count = n;
  const double nd = static_cast<double>(n);
  m.mean = std::accumulate(values.begin(), values.end(), 0.0) / nd;
  // centered sums keep the leave-one-out formulas stable
  double s1 = 0.0, s2 = 0.0;
  for (double v : values) {
    const double c = v - m.mean;
    s1 += c;
    s2 += c * c;
  }
  m.variance = (s2 - s1 * s1 / nd) / (nd - 1.0);
  m.se_mean = std::sqrt(m.variance / nd);
  if (n < 3) return m;

  std::vector<double> loo(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = values[i] - m.mean;
    const double t1 = s1 - c, t2 = s2 - c * c;
    loo[i] = (t2 - t1 * t1 / (nd - 1.0)) / (nd - 2.0);
  }
  const double avg = std::accumulate(loo.begin(), loo.end(), 0.0) / nd;
  double ss = 0.0;
  for (double v : loo) ss += (v - avg) * (v - avg);
  m.se_variance = std::sqrt((nd - 1.0) / nd * ss);
  return m;
}

ScalingFit fit_scaling_exponent(std::span<const double> ns, std::span<const double> vars,
                                std::span<const double> ses) {
  const std::size_t k = ns.size();
  if (k < 4) throw ConfigError("scaling fit needs at least 4 grid points");
  if (vars.size() != k || ses.size() != k) throw ConfigError("scaling fit: mismatched input lengths");
  ScalingFit fit;
  std::vector<double> x(k), y(k), w(k, 1.0);
  for (std::size_t i = 0; i < k; ++i) {
    if (!(ns[i] > 0.0) || !(vars[i] > 0.0)) throw ConfigError("scaling fit: n and variances must be positive");
    x[i] = std::log(ns[i]);
    y[i] = std::log(vars[i]);
    if (!(ses[i] > 0.0)) fit.weighted = false;
  }
  if (fit.weighted) {
    for (std::size_t i = 0; i < k; ++i) {
      const double sigma = ses[i] / vars[i];
      w[i] = 1.0 / (sigma * sigma);
    }
  }
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double xm = sx / sw, ym = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += w[i] * (x[i] - xm) * (x[i] - xm);
    sxy += w[i] * (x[i] - xm) * (y[i] - ym);
  }
  if (!(sxx > 0.0)) throw ConfigError("scaling fit: degenerate n grid");
  fit.slope = sxy / sxx;
  fit.intercept = ym - fit.slope * xm;

  double chi2 = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    chi2 += w[i] * r * r;
  }
  const double dof = static_cast<double>(k) - 2.0;
  fit.reduced_chi2 = chi2 / dof;
  // unweighted fits have no external error scale: use the residuals alone
  const double scale = fit.weighted ? std::max(1.0, fit.reduced_chi2) : fit.reduced_chi2;
  fit.slope_se = std::sqrt(scale / sxx);
  const double t = boost::math::quantile(boost::math::students_t(dof), 0.975);
  fit.ci_lo = fit.slope - t * fit.slope_se;
  fit.ci_hi = fit.slope + t * fit.slope_se;
  return fit;
}

// ---- goodness of fit ----------------------------------------------------------

ChiSquare chi_square_two_sample(std::span<const double> a, std::span<const double> b, double min_pooled) {
  if (a.size() != b.size()) throw std::invalid_argument("chi-square: histograms differ in length");
  const double na = std::accumulate(a.begin(), a.end(), 0.0);
  const double nb = std::accumulate(b.begin(), b.end(), 0.0);
  if (!(na > 0.0) || !(nb > 0.0)) throw std::invalid_argument("chi-square: empty histogram");

  std::vector<std::pair<double, double>> bins;
  std::pair<double, double> tail{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] + b[i] >= min_pooled) {
      bins.emplace_back(a[i], b[i]);
    } else {
      tail.first += a[i];
      tail.second += b[i];
    }
  }
  if (tail.first + tail.second > 0.0) bins.push_back(tail);

  ChiSquare r;
  const double ka = std::sqrt(nb / na), kb = std::sqrt(na / nb);
  for (const auto& [x, y] : bins) {
    if (x + y > 0.0) r.statistic += (ka * x - kb * y) * (ka * x - kb * y) / (x + y);
  }
  r.dof = static_cast<int>(bins.size()) - 1;
  r.p_value = r.dof > 0 ? boost::math::gamma_q(0.5 * r.dof, 0.5 * r.statistic) : 1.0;
  return r;
}

ChiSquare chi_square_gof(std::span<const double> observed, std::span<const double> probs) {
  if (observed.size() != probs.size()) throw std::invalid_argument("chi-square: size mismatch");
  const double total = std::accumulate(observed.begin(), observed.end(), 0.0);
  ChiSquare r;
  double tail_o = 0.0, tail_e = 0.0;
  int bins = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = total * probs[i];
    if (e >= 5.0) {
      r.statistic += (observed[i] - e) * (observed[i] - e) / e;
      ++bins;
    } else {
      tail_o += observed[i];
      tail_e += e;
    }
  }
  if (tail_e > 0.0) {
    r.statistic += (tail_o - tail_e) * (tail_o - tail_e) / tail_e;
    ++bins;
  }
  r.dof = bins - 1;
  r.p_value = r.dof > 0 ? boost::math::gamma_q(0.5 * r.dof, 0.5 * r.statistic) : 1.0;
  return r;
}

double kolmogorov_tail(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KolmogorovSmirnov ks_uniform(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("ks: no values");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double dmax = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = std::clamp(values[i], 0.0, 1.0);
    dmax = std::max({dmax, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  const double rn = std::sqrt(n);
  return {dmax, kolmogorov_tail((rn + 0.12 + 0.11 / rn) * dmax)};
}

double max_window_frequency(std::vector<double> values, double width) {
  if (values.empty()) return 0.0;
  if (!(width >= 0.0)) throw std::invalid_argument("window width must be nonnegative");
  std::sort(values.begin(), values.end());
  std::size_t best = 0, lo = 0;
  for (std::size_t hi = 0; hi < values.size(); ++hi) {
    while (values[hi] - values[lo] > width) ++lo;
    best = std::max(best, hi - lo + 1);
  }
  return static_cast<double>(best) / static_cast<double>(values.size());
}

// ---- replicate machinery ------------------------------------------------------

Method parse_method(std::string_view s) {
  if (s == "exact") return Method::exact;
  if (s == "mcmc") return Method::mcmc;
  if (s == "iid") return Method::iid;
  throw ConfigError("unknown sampling method '" + std::string(s) + "' (expected exact, mcmc or iid)");
}

std::string_view method_name(Method m) {
  switch (m) {
    case Method::exact: return "exact";
    case Method::mcmc: return "mcmc";
    case Method::iid: return "iid";
  }
  return "?";
}

SamplerSpec SamplerSpec::make(int d, double beta, Method m, int n_max) {
  check_dim(d);
  SamplerSpec s;
  s.dim = d;
  s.beta = beta;
  s.method = m;
  if (m == Method::exact) {
    s.exact = std::make_shared<const ExactSampler>(
        std::make_shared<const LogZTable>(build_logz_table(d, beta, std::max(n_max, 2))));
  }
  return s;
}

Configuration SamplerSpec::draw(int n, Stream& rng) const {
  switch (method) {
    case Method::exact:
      if (!exact) throw std::logic_error("exact sampler spec without a table");
      return exact->sample(n, rng);
    case Method::mcmc: {
      const McmcParams p = mcmc.steps == 0 ? McmcParams::defaults(n, beta) : mcmc;
      return sample_mcmc(dim, n, beta, p, rng).state;
    }
    case Method::iid: {
      auto c = sample_iid(dim, n, rng);
      c.beta = beta;
      return c;
    }
  }
  throw std::logic_error("unreachable sampler method");
}

Moments replicate_moments(const SamplerSpec& sampler, int n, const Statistic& statistic, std::size_t R,
                          std::uint64_t seed, std::uint64_t job, int threads) {
  if (R < 2) throw ConfigError("replicate_moments needs R >= 2");
  const auto values =
      run_replicates(R, seed, job, threads, [&](std::size_t, Stream& rng) { return statistic(sampler.draw(n, rng)); });
  return compute_moments(values);
}

// ---- property checks ----------------------------------------------------------

void CheckReport::add(CheckItem item) {
  pass = pass && item.pass;
  items.push_back(std::move(item));
}

void CheckReport::add_z(std::string item_name, double value, double target, double se, double limit) {
  CheckItem it{std::move(item_name), value, target, se, limit, false};
  it.pass = se > 0.0 ? std::abs(value - target) <= limit * se : std::abs(value - target) <= 1e-12;
  add(std::move(it));
}

CheckReport conditional_mean_check(const SamplerSpec& sampler, int n, int k, std::size_t R, std::uint64_t seed,
                                   int threads, std::size_t min_bin) {
  if (k < 0 || k >= kPackBits) throw ConfigError("conditional_mean_check: level out of range");
  const int d = sampler.dim;
  const DyadicCube parent{k, {}, d};
  const DyadicCube kid = child(parent, 0);
  const auto pairs = run_replicates(R, seed, 0, threads, [&](std::size_t, Stream& rng) {
    const auto c = sampler.draw(n, rng);
    int np = 0, nc = 0;
    for (const Point& x : c.points) {
      if (parent.contains(x)) ++np;
      if (kid.contains(x)) ++nc;
    }
    return std::pair<int, int>{np, nc};
  });

  CheckReport rep{"conditional_mean", {}, true};
  const double r = static_cast<double>(1 << d);
  std::vector<double> diff;
  diff.reserve(pairs.size());
  std::map<int, std::vector<double>> bins;
  for (const auto& [np, nc] : pairs) {
    diff.push_back(nc - np / r);
    bins[np].push_back(nc);
  }
  const auto md = compute_moments(diff);
  rep.add_z("mean N(D') - N(D)/2^d", md.mean, 0.0, md.se_mean);
  for (const auto& [m, vals] : bins) {
    if (vals.size() < std::max<std::size_t>(min_bin, 2)) continue;
    const auto mb = compute_moments(vals);
    rep.add_z("E[N(D') | N(D)=" + std::to_string(m) + "]", mb.mean, m / r, mb.se_mean);
  }
  return rep;
}

CheckReport repulsion_check(const SamplerSpec& sampler, int n, int j, std::size_t R, std::uint64_t seed,
                            int threads) {
  const int d = sampler.dim;
  CheckReport rep{"repulsion", {}, true};
  if (d == 3) {
    if (j < 1 || j > kPackBits) throw ConfigError("repulsion_check: level out of range");
    // per replicate: packed keys of cubes holding >= 2 points
    const auto hits = run_replicates(R, seed, 0, threads, [&](std::size_t, Stream& rng) {
      std::vector<std::uint64_t> crowded;
      for (const auto& [key, cnt] : level_counts(sampler.draw(n, rng), j)) {
        if (cnt >= 2) crowded.push_back(key);
      }
      std::sort(crowded.begin(), crowded.end());
      return crowded;
    });
    std::map<std::uint64_t, std::size_t> freq;
    for (const auto& h : hits) {
      for (auto key : h) ++freq[key];
    }
    const double beta = sampler.beta;
    const double log_bound = -std::ldexp(beta, j + 1) + (7.0 * beta / 3.0) * binom2(n);
    const double bound = std::exp(std::min(log_bound, 0.0));
    const double Rd = static_cast<double>(R);
    double worst = 0.0;
    double worst_se = 0.0;
    for (const auto& [key, cnt] : freq) {
      const double p = static_cast<double>(cnt) / Rd;
      if (p > worst) {
        worst = p;
        worst_se = std::sqrt(p * (1.0 - p) / Rd);
      }
    }
    CheckItem it{"max_D P(N(D) >= 2)", worst, bound, worst_se, 4.0, false};
    it.pass = log_bound >= 0.0 || worst <= bound + 4.0 * worst_se;
    rep.add(it);
  } else {
    // a non-dyadic box, so the count is not pinned by the tree structure
    const std::array<double, 3> lo{0.2, 0.1, 0.1}, hi{0.7, 0.6, 0.6};
    const auto ud = static_cast<std::size_t>(d);
    const Region probe = Region::box(d, std::span(lo).first(ud), std::span(hi).first(ud));
    const auto m = replicate_moments(
        sampler, n, [&](const Configuration& c) { return static_cast<double>(count_in_region(c, probe)); }, R, seed,
        0, threads);
    CheckItem it{"Var N(A) > 0", m.variance, 0.0, m.se_variance, 0.0, m.variance > 0.0};
    rep.add(it);
  }
  return rep;
}

CheckReport independence_check(const SamplerSpec& sampler, int n, std::size_t R, std::uint64_t seed, int threads) {
  const int d = sampler.dim;
  const int kids = 1 << d;
  const double r = static_cast<double>(kids);
  // per replicate: centered first-child counts of every level-1 cube
  const auto rows = run_replicates(R, seed, 0, threads, [&](std::size_t, Stream& rng) {
    const auto c = sampler.draw(n, rng);
    std::vector<double> centered(static_cast<std::size_t>(kids), 0.0);
    std::vector<int> level1(static_cast<std::size_t>(kids), 0), first(static_cast<std::size_t>(kids), 0);
    for (const Point& x : c.points) {
      const auto l1 = cube_of(x, 1);
      const auto l2 = cube_of(x, 2);
      int t1 = 0, t2 = 0;
      for (int i = 0; i < d; ++i) {
        const auto s = static_cast<std::size_t>(i);
        t1 = (t1 << 1) | static_cast<int>(l1.index[s]);
        t2 = (t2 << 1) | static_cast<int>(l2.index[s] & 1U);
      }
      ++level1[static_cast<std::size_t>(t1)];
      if (t2 == 0) ++first[static_cast<std::size_t>(t1)];
    }
    for (std::size_t t = 0; t < centered.size(); ++t) centered[t] = first[t] - level1[t] / r;
    return centered;
  });

  CheckReport rep{"independence", {}, true};
  for (const auto& [a, b] : {std::pair{0, 1}, std::pair{0, kids - 1}}) {
    std::vector<double> prod;
    prod.reserve(rows.size());
    for (const auto& row : rows) {
      const double x = row[static_cast<std::size_t>(a)], y = row[static_cast<std::size_t>(b)];
      prod.push_back(x * y);
    }
    const auto m = compute_moments(prod);
    rep.add_z("E[(X_" + std::to_string(a) + " - N/2^d)(X_" + std::to_string(b) + " - N/2^d)]", m.mean, 0.0,
              m.se_mean);
  }
  return rep;
}

double count_window_exponent(int d) {
  check_dim(d);
  return d == 3 ? 1.0 / 3.0 : (d == 2 ? 0.25 : 0.0);
}

AnticoncentrationResult anticoncentration_check(const SamplerSpec& sampler, int n, const Statistic& statistic,
                                                double c1, double gamma, std::size_t R, std::uint64_t seed,
                                                int threads) {
  if (!(c1 >= 0.0)) throw ConfigError("anticoncentration: window coefficient must be nonnegative");
  const auto values =
      run_replicates(R, seed, 0, threads, [&](std::size_t, Stream& rng) { return statistic(sampler.draw(n, rng)); });
  AnticoncentrationResult res;
  res.width = c1 * std::pow(static_cast<double>(n), gamma);
  res.max_frequency = max_window_frequency(values, res.width);
  res.moments = compute_moments(values);
  return res;
}

}  // namespace hcg
