#pragma once

// Observables of configurations, replicate moments and scaling fits, and
// the conditional-structure checks built on stratified exact samples.

#include <algorithm>
#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hcg/geometry.hpp"
#include "hcg/rng.hpp"
#include "hcg/samplers.hpp"

namespace hcg {

// ---- observables ------------------------------------------------------------

/// f(x) = sum_i a_i x_i + b.
struct LinearFunction {
  int dim = 0;
  std::array<double, kMaxDim> a{};
  double b = 0.0;

  /// Throws ConfigError on non-finite coefficients or a size mismatch.
  static LinearFunction make(int d, std::span<const double> coeffs, double intercept);

  [[nodiscard]] double operator()(const Point& x) const;
  [[nodiscard]] double lipschitz() const;
  [[nodiscard]] bool is_constant() const;
};

[[nodiscard]] std::size_t count_in_region(const Configuration& c, const Region& u);
[[nodiscard]] double linear_statistic(const Configuration& c, const LinearFunction& f);

/// Counts per occupied level-k cube, keyed by pack_index.
[[nodiscard]] std::unordered_map<std::uint64_t, int> level_counts(const Configuration& c, int k);
[[nodiscard]] std::uint64_t pack_index(const DyadicCube& cube);

/// Precomputed cube classification of U for levels 0..j_max, so that
///   M_j = sum_{i<=j} sum_{D in U_i} N(D) + sum_{D in V_j} p(D) N(D)
/// costs O(n j) per configuration.
class MartingaleFunctional {
 public:
  MartingaleFunctional(const Region& u, int j_max);

  [[nodiscard]] int max_level() const { return j_max_; }
  [[nodiscard]] const Region& region() const { return region_; }
  [[nodiscard]] double value(const Configuration& c, int j) const;
  /// M_0..M_{j_max} in one pass.
  [[nodiscard]] std::vector<double> values(const Configuration& c) const;

 private:
  Region region_;
  int j_max_;
  std::vector<std::unordered_set<std::uint64_t>> inside_;  // per level
  std::vector<std::unordered_map<std::uint64_t, double>> boundary_;
};

inline constexpr int kMaxMartingaleLevel = 20;

/// One-shot M_j; throws ConfigError for j outside [0, 20].
[[nodiscard]] double martingale_value(const Configuration& c, const Region& u, int j);

// ---- moments and fits -------------------------------------------------------

struct Moments {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;     ///< unbiased sample variance
  double se_mean = 0.0;
  double se_variance = 0.0;  ///< delete-one jackknife
};

/// Requires at least 3 values for the jackknife (2 for mean/variance).
[[nodiscard]] Moments compute_moments(std::span<const double> values);

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double ci_lo = 0.0;  ///< 95% interval for the slope
  double ci_hi = 0.0;
  double reduced_chi2 = 0.0;
  bool weighted = true;
};

/// Weighted least squares of log(var) on log(n) with sigma_i = se_i / var_i.
/// Standard errors are scaled by max(1, reduced chi^2) and the interval uses
/// Student's t with (points - 2) degrees of freedom. If any se is zero the
/// fit is unweighted. Throws ConfigError for fewer than 4 points, a
/// nonpositive variance, or fewer than two distinct n.
[[nodiscard]] ScalingFit fit_scaling_exponent(std::span<const double> ns, std::span<const double> vars,
                                              std::span<const double> ses);

// ---- goodness of fit ----------------------------------------------------------

struct ChiSquare {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Homogeneity test of two histograms over the same bins. Bins whose pooled
/// count is below `min_pooled` are merged into one tail bin.
[[nodiscard]] ChiSquare chi_square_two_sample(std::span<const double> a, std::span<const double> b,
                                              double min_pooled = 10.0);

/// Goodness of fit of counts against probabilities (expected < 5 merged).
[[nodiscard]] ChiSquare chi_square_gof(std::span<const double> observed, std::span<const double> probs);

struct KolmogorovSmirnov {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sample test against Uniform[0,1).
[[nodiscard]] KolmogorovSmirnov ks_uniform(std::vector<double> values);

/// Asymptotic Kolmogorov tail Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
[[nodiscard]] double kolmogorov_tail(double lambda);

/// Largest fraction of values in any closed window [a, a + width].
[[nodiscard]] double max_window_frequency(std::vector<double> values, double width);

// ---- replicate machinery ------------------------------------------------------

enum class Method { exact, mcmc, iid };

[[nodiscard]] Method parse_method(std::string_view s);
[[nodiscard]] std::string_view method_name(Method m);

/// How replicates are drawn. For mcmc every replicate is an independent
/// chain with `mcmc` (or the defaults for n and beta when steps == 0).
struct SamplerSpec {
  int dim = 0;
  double beta = 0.0;
  Method method = Method::exact;
  std::shared_ptr<const ExactSampler> exact;
  McmcParams mcmc{};

  /// Builds the partition table for exact sampling up to n_max.
  static SamplerSpec make(int d, double beta, Method m, int n_max);

  [[nodiscard]] Configuration draw(int n, Stream& rng) const;
};

/// Calls fn(r, rng_r) for r < count with rng_r = Stream(seed, job, r) and
/// returns the results in replicate order, whatever the thread schedule.
template <class Fn>
auto run_replicates(std::size_t count, std::uint64_t seed, std::uint64_t job, int threads, Fn&& fn)
    -> std::vector<decltype(fn(std::size_t{}, std::declval<Stream&>()))> {
  using T = decltype(fn(std::size_t{}, std::declval<Stream&>()));
  std::vector<T> out(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= count) return;
      try {
        Stream rng(seed, job, r);
        out[r] = fn(r, rng);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(std::max<std::size_t>(count, 1))));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

using Statistic = std::function<double(const Configuration&)>;

/// Moments of statistic(sample) across R independent replicates.
[[nodiscard]] Moments replicate_moments(const SamplerSpec& sampler, int n, const Statistic& statistic, std::size_t R,
                                        std::uint64_t seed, std::uint64_t job = 0, int threads = 1);

// ---- property checks ----------------------------------------------------------

/// One comparison inside a check report: |z| <= limit, or a bound.
struct CheckItem {
  std::string name;
  double value = 0.0;
  double target = 0.0;
  double se = 0.0;
  double limit = 4.0;  ///< in standard errors unless stated otherwise
  bool pass = true;
};

struct CheckReport {
  std::string name;
  std::vector<CheckItem> items;
  bool pass = true;

  void add(CheckItem item);
  /// Adds |value - target| <= limit * se; a zero se demands equality up
  /// to 1e-12.
  void add_z(std::string item_name, double value, double target, double se, double limit = 4.0);
};

/// Parent D = level-k cube with index 0 and its first child D'. Tests
/// E[N(D') - N(D)/2^d] = 0 and, for every N(D) = m bin with at least
/// `min_bin` samples, E[N(D') | N(D) = m] = m / 2^d.
[[nodiscard]] CheckReport conditional_mean_check(const SamplerSpec& sampler, int n, int k, std::size_t R,
                                                 std::uint64_t seed, int threads = 1, std::size_t min_bin = 100);

/// 3D: frequency of N(D) >= 2 for every sampled D in D_j against
/// exp(-2^{j+1} beta + (7 beta / 3) C(n,2)). 1D/2D: Var N(A) > 0 for the
/// box `probe`.
[[nodiscard]] CheckReport repulsion_check(const SamplerSpec& sampler, int n, int j, std::size_t R, std::uint64_t seed,
                                          int threads = 1);

/// Conditional on the level-1 counts, the first-child counts X_A, X_B of
/// two distinct level-1 cubes satisfy E[X_A | F_1] = N(A)/2^d, so the
/// centered product (X_A - N(A)/2^d)(X_B - N(B)/2^d) has mean 0 under
/// conditional independence. Tested for the pairs (0,1) and (0, 2^d - 1).
[[nodiscard]] CheckReport independence_check(const SamplerSpec& sampler, int n, std::size_t R, std::uint64_t seed,
                                             int threads = 1);

struct AnticoncentrationResult {
  double width = 0.0;
  double max_frequency = 0.0;
  Moments moments;
};

/// Max window frequency of `statistic` at window width c1 * n^gamma.
[[nodiscard]] AnticoncentrationResult anticoncentration_check(const SamplerSpec& sampler, int n,
                                                              const Statistic& statistic, double c1, double gamma,
                                                              std::size_t R, std::uint64_t seed, int threads = 1);

/// Fluctuation exponent gamma_d for counts: 1/3 in 3D, 1/4 in 2D, 0 in 1D.
[[nodiscard]] double count_window_exponent(int d);

}  // namespace hcg
