#include "hcg/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "hcg/energy.hpp"
#include "hcg/logspace.hpp"

namespace hcg {

namespace {

using logspace::kNegInf;

constexpr std::size_t kRejectionAttempts = 1'000'000;

// Draws an index with probability proportional to exp(logw[i]).
std::size_t draw_log_weights(std::span<const double> logw, Stream& rng) {
  const double top = *std::max_element(logw.begin(), logw.end());
  double total = 0.0;
  for (double w : logw) total += std::exp(w - top);
  double target = rng.uniform() * total;
  for (std::size_t i = 0; i < logw.size(); ++i) {
    const double w = std::exp(logw[i] - top);
    if (target < w) return i;
    target -= w;
  }
  // rounding left a sliver past the last positive weight
  for (std::size_t i = logw.size(); i-- > 0;) {
    if (logw[i] != kNegInf) return i;
  }
  return 0;
}

// Fisher-Yates with our own bounded draws, so the permutation does not
// depend on the standard library's distribution implementation.
void shuffle_points(std::vector<Point>& pts, Stream& rng) {
  for (std::size_t i = pts.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(pts[i - 1], pts[j]);
  }
}

}  // namespace

// ---- split distribution -----------------------------------------------------

double SplitDistribution::log_probability(std::span<const int> counts) const {
  if (static_cast<int>(counts.size()) != children()) throw std::invalid_argument("wrong number of child counts");
  int total = 0;
  double lw = 0.0;
  for (int c : counts) {
    if (c < 0 || c > n) return kNegInf;
    total += c;
    lw += u[static_cast<std::size_t>(c)];
  }
  if (total > n) throw std::invalid_argument("counts exceed the distribution size");
  return lw - suffix[static_cast<std::size_t>(children())][static_cast<std::size_t>(total)];
}

SplitDistribution split_distribution(const LogZTable& table, int n, int level) {
  if (n < 0 || n > table.n_max) throw std::out_of_range("split_distribution: n outside table range");
  if (level < 0) throw std::out_of_range("split_distribution: negative level");
  const int child_level = table.dim == 3 ? level + 1 : 0;
  if (child_level >= table.levels()) throw std::out_of_range("split_distribution: child level outside table");

  SplitDistribution s;
  s.dim = table.dim;
  s.level = level;
  s.n = n;
  const double beta_eff = table.beta_at(level);
  const auto len = static_cast<std::size_t>(n) + 1;

  s.u.resize(len);
  s.certified_limit = n;
  const auto& row = table.entries[static_cast<std::size_t>(child_level)];
  for (int m = 0; m <= n; ++m) {
    const LogInterval& z = row[static_cast<std::size_t>(m)];
    if (!table.certified(z) && s.certified_limit == n && m > 0) s.certified_limit = m - 1;
    const double md = static_cast<double>(m);
    const double tilt = table.dim == 3 ? beta_eff * md * md : 0.0;
    s.u[static_cast<std::size_t>(m)] = z.mid() + tilt - std::lgamma(md + 1.0);
  }

  const int r_max = s.children();
  s.suffix.assign(static_cast<std::size_t>(r_max) + 1, std::vector<double>(len, kNegInf));
  s.suffix[0][0] = 0.0;
  std::vector<double> terms;
  terms.reserve(len);
  for (int r = 1; r <= r_max; ++r) {
    const auto& prev = s.suffix[static_cast<std::size_t>(r) - 1];
    auto& cur = s.suffix[static_cast<std::size_t>(r)];
    for (std::size_t t = 0; t < len; ++t) {
      terms.clear();
      for (std::size_t c = 0; c <= t; ++c) {
        if (prev[t - c] != kNegInf) terms.push_back(s.u[c] + prev[t - c]);
      }
      cur[t] = logspace::log_sum_exp(terms);
    }
  }
  return s;
}

std::vector<int> sample_split(const SplitDistribution& dist, Stream& rng) { return sample_split(dist, dist.n, rng); }

std::vector<int> sample_split(const SplitDistribution& dist, int m, Stream& rng) {
  if (m < 0 || m > dist.n) throw std::out_of_range("sample_split: count outside distribution range");
  const int r_max = dist.children();
  std::vector<int> counts(static_cast<std::size_t>(r_max), 0);
  std::vector<double> logw;
  int left = m;
  for (int child = 0; child + 1 < r_max && left > 0; ++child) {
    const auto& rest = dist.suffix[static_cast<std::size_t>(r_max - child - 1)];
    logw.assign(static_cast<std::size_t>(left) + 1, kNegInf);
    for (int c = 0; c <= left; ++c) {
      logw[static_cast<std::size_t>(c)] = dist.u[static_cast<std::size_t>(c)] + rest[static_cast<std::size_t>(left - c)];
    }
    const int c = static_cast<int>(draw_log_weights(logw, rng));
    counts[static_cast<std::size_t>(child)] = c;
    left -= c;
  }
  counts.back() += left;
  return counts;
}

// ---- rejection fallback -------------------------------------------------------

std::vector<Point> sample_in_cube_rejection(const DyadicCube& cube, int m, double beta_eff, Stream& rng,
                                            std::size_t max_attempts, std::size_t* attempts) {
  const int d = cube.dim;
  const double floor_energy = potential_min(d) * 0.5 * m * (m - 1.0);
  std::vector<Point> pts(static_cast<std::size_t>(std::max(m, 0)));
  for (std::size_t a = 1; a <= max_attempts; ++a) {
    for (auto& p : pts) p = uniform_point_in(cube, rng);
    double h = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        const auto k = separation_level(pts[i], pts[j]);
        if (!k) {
          h = std::numeric_limits<double>::infinity();
          break;
        }
        h += potential_at_level(d, *k - cube.level);
      }
    }
    const double excess = h - floor_energy;
    if (std::isfinite(h) && (excess <= 0.0 || rng.uniform() < std::exp(-beta_eff * excess))) {
      if (attempts) *attempts = a;
      return pts;
    }
  }
  throw ResolutionError("rejection fallback exhausted " + std::to_string(max_attempts) + " proposals for " +
                        std::to_string(m) + " points at level " + std::to_string(cube.level));
}

// ---- exact sampler ----------------------------------------------------------

ExactSampler::ExactSampler(std::shared_ptr<const LogZTable> table) : table_(std::move(table)) {
  if (!table_) throw std::invalid_argument("ExactSampler needs a table");
  const int splittable = table_->dim == 3 ? table_->levels() - 1 : 1;
  cache_.resize(static_cast<std::size_t>(std::max(splittable, 0)));
}

const SplitDistribution& ExactSampler::split_at(int level) const {
  const int slot = table_->dim == 3 ? level : 0;
  if (slot < 0 || slot >= static_cast<int>(cache_.size())) throw std::out_of_range("split level outside table");
  std::lock_guard lock(mutex_);
  auto& entry = cache_[static_cast<std::size_t>(slot)];
  if (!entry) entry = std::make_unique<SplitDistribution>(split_distribution(*table_, table_->n_max, slot));
  return *entry;
}

void ExactSampler::fill(const DyadicCube& cube, int m, Stream& rng, std::vector<Point>& out,
                        ExactDiagnostics& diag) const {
  if (m == 0) return;
  if (m == 1) {
    out.push_back(uniform_point_in(cube, rng));
    return;
  }
  if (cube.level >= kFracBits) {
    throw ResolutionError("two points share a cube at the finest fixed-point level");
  }
  const bool at_cap = table_->dim == 3 && cube.level >= table_->level_cap;
  const SplitDistribution* dist = at_cap ? nullptr : &split_at(cube.level);
  if (dist == nullptr || m > dist->certified_limit) {
    std::size_t used = 0;
    auto pts = sample_in_cube_rejection(cube, m, table_->beta_at(cube.level), rng, kRejectionAttempts, &used);
    ++diag.fallback_cubes;
    diag.fallback_attempts += used;
    out.insert(out.end(), pts.begin(), pts.end());
    return;
  }
  const auto counts = sample_split(*dist, m, rng);
  for (std::size_t t = 0; t < counts.size(); ++t) {
    fill(child(cube, static_cast<int>(t)), counts[t], rng, out, diag);
  }
}

Configuration ExactSampler::sample(int n, Stream& rng, ExactDiagnostics* diag) const {
  if (n < 0 || n > table_->n_max) {
    throw ConfigError("n = " + std::to_string(n) + " is outside the partition table (n_max = " +
                      std::to_string(table_->n_max) + ")");
  }
  Configuration c{table_->dim, table_->beta, {}};
  c.points.reserve(static_cast<std::size_t>(n));
  ExactDiagnostics local;
  fill(unit_cube(table_->dim), n, rng, c.points, local);
  shuffle_points(c.points, rng);
  if (diag) {
    diag->fallback_cubes += local.fallback_cubes;
    diag->fallback_attempts += local.fallback_attempts;
  }
  return c;
}

Configuration sample_exact(int d, int n, double beta, const LogZTable& table, Stream& rng) {
  if (d != table.dim || beta != table.beta) throw ConfigError("sample_exact: table built for another (d, beta)");
  ExactSampler sampler(std::make_shared<const LogZTable>(table));
  return sampler.sample(n, rng);
}

// ---- MCMC -------------------------------------------------------------------

McmcParams McmcParams::defaults(int n, double beta, std::size_t kept) {
  McmcParams p;
  const auto nn = static_cast<std::size_t>(std::max(n, 1));
  p.burn_in = static_cast<std::size_t>(std::ceil(50.0 * static_cast<double>(nn) * (1.0 + beta)));
  p.thin = nn;
  p.steps = p.burn_in + p.thin * std::max<std::size_t>(kept, 1);
  return p;
}

void McmcParams::validate() const {
  if (steps <= burn_in) throw ConfigError("mcmc: steps must exceed burn_in");
  if (thin < 1) throw ConfigError("mcmc: thin must be at least 1");
  if (!(local_move_prob >= 0.0 && local_move_prob <= 1.0)) throw ConfigError("mcmc: local_move_prob not in [0,1]");
  if (!(local_level_mean >= 1.0)) throw ConfigError("mcmc: local_level_mean must be at least 1");
}

double integrated_autocorrelation_time(std::span<const double> trace) {
  const std::size_t n = trace.size();
  if (n < 4) return 1.0;
  const double mean = std::accumulate(trace.begin(), trace.end(), 0.0) / static_cast<double>(n);
  auto acov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (trace[i] - mean) * (trace[i + lag] - mean);
    return s / static_cast<double>(n);
  };
  const double c0 = acov(0);
  if (!(c0 > 0.0)) return 1.0;
  double tau = 1.0;
  for (std::size_t lag = 1; lag < n / 2; ++lag) {
    tau += 2.0 * acov(lag) / c0;
    if (static_cast<double>(lag) >= 5.0 * tau) break;
  }
  return std::max(tau, 1.0 / static_cast<double>(n));
}

McmcResult sample_mcmc(int d, int n, double beta, const McmcParams& params, Stream& rng,
                       const SampleCallback& on_sample) {
  check_dim(d);
  if (n < 0) throw ConfigError("mcmc: negative n");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("mcmc: beta must be finite and nonnegative");
  params.validate();

  McmcResult res;
  res.state = sample_iid(d, n, rng);
  res.state.beta = beta;
  auto& st = res.state;
  auto& diag = res.diagnostics;
  const DyadicCube root = unit_cube(d);
  const double p_level = 1.0 / params.local_level_mean;

  double h = energy_fast(st);
  std::vector<double> trace;
  for (std::size_t step = 1; step <= params.steps; ++step) {
    if (n > 0) {
      const std::size_t i = rng.below(static_cast<std::uint64_t>(n));
      Point y;
      if (rng.bernoulli(params.local_move_prob)) {
        const int lvl = std::min(rng.geometric(p_level), kFracBits);
        y = uniform_point_in(cube_of(st.points[i], lvl), rng);
      } else {
        y = uniform_point_in(root, rng);
      }
      const double delta = energy_delta(st, i, y);
      bool accept = false;
      if (beta == 0.0) {
        accept = true;
      } else if (delta <= 0.0) {
        accept = true;
      } else if (std::isfinite(delta)) {
        accept = rng.uniform() < std::exp(-beta * delta);
      }
      ++diag.proposals;
      if (accept) {
        st.points[i] = y;
        h = std::isfinite(delta) ? h + delta : energy_fast(st);
        ++diag.accepted;
      }
    }
    if (step > params.burn_in && (step - params.burn_in) % params.thin == 0) {
      trace.push_back(h);
      if (on_sample) on_sample(st);
    }
  }
  // incremental updates drift by rounding; report the exact final energy
  h = energy_fast(st);

  diag.acceptance_rate = diag.proposals ? static_cast<double>(diag.accepted) / static_cast<double>(diag.proposals) : 1.0;
  diag.kept = trace.size();
  diag.energy_final = h;
  if (!trace.empty()) {
    diag.energy_mean = std::accumulate(trace.begin(), trace.end(), 0.0) / static_cast<double>(trace.size());
    const auto [lo, hi] = std::minmax_element(trace.begin(), trace.end());
    diag.energy_min = *lo;
    diag.energy_max = *hi;
  }
  diag.tau_int = integrated_autocorrelation_time(trace);
  return res;
}

Configuration sample_iid(int d, int n, Stream& rng) {
  check_dim(d);
  if (n < 0) throw ConfigError("negative particle count");
  Configuration c{d, 0.0, {}};
  const DyadicCube root = unit_cube(d);
  c.points.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) c.points.push_back(uniform_point_in(root, rng));
  return c;
}

}  // namespace hcg
