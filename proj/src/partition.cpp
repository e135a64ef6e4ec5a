#include "hcg/partition.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "hcg/geometry.hpp"
#include "hcg/logspace.hpp"

namespace hcg {

namespace {

using logspace::kNegInf;
using logspace::round_down;
using logspace::round_up;

constexpr double kEps = std::numeric_limits<double>::epsilon();

double pairs(int n) { return 0.5 * n * (n - 1.0); }

LogInterval point(double v, double abs_err) { return {v - abs_err, v + abs_err}; }

LogInterval add(const LogInterval& a, const LogInterval& b) {
  if (a.lo == kNegInf || b.lo == kNegInf) {
    return {kNegInf, (a.hi == kNegInf || b.hi == kNegInf) ? kNegInf : round_up(a.hi + b.hi)};
  }
  return {round_down(a.lo + b.lo), round_up(a.hi + b.hi)};
}

LogInterval neg(const LogInterval& a) { return {-a.hi, -a.lo}; }

// log m! with a generous error allowance for lgamma.
LogInterval log_factorial(int m) {
  if (m <= 1) return {0.0, 0.0};
  const double v = std::lgamma(m + 1.0);
  return point(v, 16.0 * kEps * std::abs(v) + 1e-300);
}

// Interval log-sum-exp over term lists.
struct IntervalAccumulator {
  std::vector<double> lo_terms, hi_terms;

  void add(const LogInterval& t) {
    if (t.hi == kNegInf) return;
    hi_terms.push_back(t.hi);
    if (t.lo != kNegInf) lo_terms.push_back(t.lo);
  }

  [[nodiscard]] LogInterval result() const {
    LogInterval r{kNegInf, kNegInf};
    if (!lo_terms.empty()) {
      const double v = logspace::log_sum_exp(lo_terms);
      r.lo = v - logspace::log_sum_exp_error(lo_terms.size(), v);
    }
    if (!hi_terms.empty()) {
      const double v = logspace::log_sum_exp(hi_terms);
      r.hi = v + logspace::log_sum_exp_error(hi_terms.size(), v);
    }
    return r;
  }

  void clear() {
    lo_terms.clear();
    hi_terms.clear();
  }
};

std::vector<LogInterval> convolve(const std::vector<LogInterval>& a, const std::vector<LogInterval>& b) {
  const std::size_t len = a.size();
  std::vector<LogInterval> c(len, LogInterval{kNegInf, kNegInf});
  IntervalAccumulator acc;
  for (std::size_t t = 0; t < len; ++t) {
    acc.clear();
    for (std::size_t m = 0; m <= t; ++m) acc.add(add(a[m], b[t - m]));
    c[t] = acc.result();
  }
  return c;
}

LogInterval intersect_bracket(const LogInterval& v, const LogInterval& bracket, int n, int level) {
  const LogInterval r{std::max(v.lo, bracket.lo), std::min(v.hi, bracket.hi)};
  if (r.lo > r.hi) {
    throw std::logic_error("log Z(" + std::to_string(n) + ") at level " + std::to_string(level) +
                           " falls outside its rigorous bracket");
  }
  return r;
}

void fill_three_dim(LogZTable& t) {
  const int K = t.level_cap;
  const auto len = static_cast<std::size_t>(t.n_max) + 1;
  t.entries.assign(static_cast<std::size_t>(K) + 1, std::vector<LogInterval>(len));

  auto& seed = t.entries[static_cast<std::size_t>(K)];
  for (int n = 0; n <= t.n_max; ++n) seed[static_cast<std::size_t>(n)] = logz_bracket(3, t.beta_at(K), n);

  const LogInterval log8 = point(std::log(8.0), kEps * 4.0);
  std::vector<LogInterval> a(len);
  for (int k = K - 1; k >= 0; --k) {
    const double bk = t.beta_at(k);
    const auto& below = t.entries[static_cast<std::size_t>(k) + 1];
    // a(m) = beta_k m^2 + log Z(m, 2 beta_k) - log m!
    for (int m = 0; m <= t.n_max; ++m) {
      const double q = bk * static_cast<double>(m) * static_cast<double>(m);
      const LogInterval tilt{round_down(q), round_up(q)};
      const LogInterval weight = add(tilt, below[static_cast<std::size_t>(m)]);
      if (m >= 2) {
        // combined log-weight must stay <= beta_k (2m - m^2) <= 0
        const double cap = bk * (2.0 * m - static_cast<double>(m) * m);
        if (weight.hi > cap + 64.0 * kEps * (std::abs(q) + 1.0)) {
          throw std::logic_error("tilted child weight exceeds its overflow guard");
        }
      }
      a[static_cast<std::size_t>(m)] = add(weight, neg(log_factorial(m)));
    }
    const auto a2 = convolve(a, a);
    const auto a4 = convolve(a2, a2);
    const auto a8 = convolve(a4, a4);

    auto& row = t.entries[static_cast<std::size_t>(k)];
    row[0] = {0.0, 0.0};
    if (len > 1) row[1] = {0.0, 0.0};
    for (int n = 2; n <= t.n_max; ++n) {
      const double q = bk * static_cast<double>(n) * static_cast<double>(n);
      const LogInterval tilt{round_down(q), round_up(q)};
      const double ln8 = static_cast<double>(n);
      const LogInterval scale{round_down(ln8 * log8.lo), round_up(ln8 * log8.hi)};
      LogInterval v = add(a8[static_cast<std::size_t>(n)], neg(tilt));
      v = add(v, neg(scale));
      v = add(v, log_factorial(n));
      row[static_cast<std::size_t>(n)] = intersect_bracket(v, logz_bracket(3, bk, n), n, k);
    }
  }
}

void fill_low_dim(LogZTable& t) {
  const int d = t.dim;
  const int R = 1 << d;
  const auto len = static_cast<std::size_t>(t.n_max) + 1;
  t.entries.assign(1, std::vector<LogInterval>(len));
  auto& row = t.entries[0];

  // b(m) = log Z(m) - log m!;  P[r](t) = log of the r-fold convolution of e^b at t.
  std::vector<LogInterval> b(len);
  std::vector<std::vector<LogInterval>> P(static_cast<std::size_t>(R) + 1, std::vector<LogInterval>(len));
  std::vector<LogInterval> rest(static_cast<std::size_t>(R) + 1);
  IntervalAccumulator acc;
  const double log_r_base = std::log(2.0) * d;

  for (int n = 0; n <= t.n_max; ++n) {
    const auto un = static_cast<std::size_t>(n);
    // rest[r] = r-fold convolution at n with every term containing b(n) removed
    rest[1] = {kNegInf, kNegInf};
    for (int r = 2; r <= R; ++r) {
      acc.clear();
      acc.add(rest[static_cast<std::size_t>(r) - 1]);  // b(0) = 1 paired with P[r-1](n) sans b(n)
      for (int m = 1; m < n; ++m) {
        acc.add(add(b[static_cast<std::size_t>(m)], P[static_cast<std::size_t>(r) - 1][un - static_cast<std::size_t>(m)]));
      }
      rest[static_cast<std::size_t>(r)] = acc.result();
    }

    if (n <= 1) {
      row[un] = {0.0, 0.0};
    } else {
      // Z(n) (1 - c) = 2^{-dn} e^{-beta C(n,2)} n! rest_R(n),  c = 2^{d(1-n)} e^{-beta C(n,2)}
      const double e = t.beta * pairs(n);
      const double log_c = -log_r_base * (n - 1.0) - e;
      const double c = std::exp(log_c);
      const double l1 = -std::log1p(-c);
      const double l1_err = 8.0 * kEps * (std::abs(l1) + c);
      const double pre = -log_r_base * n - e;
      const LogInterval prefactor = point(pre, 8.0 * kEps * (std::abs(pre) + 1.0));
      LogInterval v = add(prefactor, log_factorial(n));
      v = add(v, rest[static_cast<std::size_t>(R)]);
      v = add(v, point(l1, l1_err));
      row[un] = intersect_bracket(v, logz_bracket(d, t.beta, n), n, 0);
    }

    b[un] = add(row[un], neg(log_factorial(n)));
    for (int r = 1; r <= R; ++r) {
      // P[r](n) = rest[r] + r * b(n)
      const double lr = std::log(static_cast<double>(r));
      const LogInterval with_bn = add(point(lr, 4.0 * kEps * lr), b[un]);
      acc.clear();
      acc.add(rest[static_cast<std::size_t>(r)]);
      acc.add(with_bn);
      P[static_cast<std::size_t>(r)][un] = r == 1 ? b[un] : acc.result();
    }
  }
}

}  // namespace

double LogZTable::beta_at(int level) const { return dim == 3 ? std::ldexp(beta, level) : beta; }

bool LogZTable::certified(const LogInterval& v) const {
  return v.width() <= cert_tol * std::max(1.0, std::abs(v.mid()));
}

LogInterval logz_bracket(int d, double beta_eff, int n) {
  if (n <= 1) return {0.0, 0.0};
  const double p = pairs(n);
  const double lo = -potential_mean(d) * beta_eff * p;
  const double hi = -potential_min(d) * beta_eff * p;
  return {round_down(round_down(lo)), round_up(round_up(hi))};
}

LogZTable build_logz_table(int d, double beta, int n_max, int level_cap, double cert_tol) {
  check_dim(d);
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be positive");
  if (n_max < 0) throw ConfigError("n_max must be nonnegative");
  if (n_max > kMaxTableParticles) {
    throw ConfigError("n_max exceeds the table safety bound of " + std::to_string(kMaxTableParticles));
  }
  if (d == 3 && level_cap < 1) throw ConfigError("level cap must be at least 1 in 3D");
  if (!(cert_tol > 0.0)) throw ConfigError("certification tolerance must be positive");

  LogZTable t;
  t.dim = d;
  t.beta = beta;
  t.n_max = n_max;
  t.cert_tol = cert_tol;
  if (d < 3) {
    t.level_cap = 0;
    fill_low_dim(t);
    return t;
  }

  constexpr int kLevelCapLimit = 60;
  for (int K = level_cap;; K += 8) {
    t.level_cap = std::min(K, kLevelCapLimit);
    fill_three_dim(t);
    bool ok = true;
    for (const LogInterval& v : t.entries[0]) ok = ok && t.certified(v);
    if (ok) return t;
    if (t.level_cap == kLevelCapLimit) {
      throw ResolutionError("partition table could not be certified to the requested width");
    }
  }
}

LogInterval logz(const LogZTable& table, int n, int level) {
  if (n < 0 || n > table.n_max) throw std::out_of_range("logz: n outside table range");
  if (table.dim < 3) {
    if (level < 0) throw std::out_of_range("logz: negative level");
    return table.entries[0][static_cast<std::size_t>(n)];
  }
  if (level < 0 || level > table.level_cap) throw std::out_of_range("logz: level outside table range");
  return table.entries[static_cast<std::size_t>(level)][static_cast<std::size_t>(n)];
}

Z2Oracle z2_oracle(int d, double beta) {
  check_dim(d);
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  Z2Oracle out;
  const double q = std::ldexp(1.0, d);
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double w = potential_at_level(d, std::min(k, 62));
    sum += (q - 1.0) * std::ldexp(1.0, -d * k) * std::exp(-beta * w);
    out.terms = k;
    const double w_next = potential_at_level(d, std::min(k + 1, 62));
    const double tail = std::ldexp(1.0, -d * k) * std::exp(-beta * w_next);
    if (tail < 1e-15 * sum) break;
  }
  out.value = sum;
  if (d == 1) {
    const double h = 0.5 * std::exp(-beta);
    out.closed_form = h / (1.0 - h);
  }
  return out;
}

RatioBoundReport validate_ratio_lower_bounds(const LogZTable& table) {
  RatioBoundReport rep;
  rep.dim = table.dim;
  rep.beta = table.beta;
  const double mean_w = potential_mean(table.dim);
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (int n = 0; n < table.n_max; ++n) {
    const LogInterval a = logz(table, n, 0);
    const LogInterval b = logz(table, n + 1, 0);
    RatioBoundEntry e;
    e.n = n;
    e.log_ratio_lo = b.lo - a.hi;
    e.bound = -mean_w * table.beta * n;
    e.margin = e.log_ratio_lo - e.bound;
    e.ok = e.margin >= 0.0;
    rep.all_ok = rep.all_ok && e.ok;
    rep.min_margin = std::min(rep.min_margin, e.margin);
    if (n >= 1) {
      const double mid_ratio = b.mid() - a.mid();
      // 3D envelope C beta n^{1/3}; 1D/2D envelope C log(n+1)
      const double scale = table.dim == 3 ? table.beta * std::cbrt(n) : std::log(n + 1.0);
      rep.upper_envelope_coeff = std::max(rep.upper_envelope_coeff, (mid_ratio + mean_w * table.beta * n) / scale);
    }
    rep.entries.push_back(e);
  }
  if (rep.entries.empty()) rep.min_margin = 0.0;
  return rep;
}

}  // namespace hcg
