#pragma once

// Samplers for mu_{n,beta}: the exact top-down sampler driven by a certified
// LogZTable, a Metropolis chain used as an independent oracle, and the i.i.d.
// baseline.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <vector>

#include "hcg/geometry.hpp"
#include "hcg/partition.hpp"
#include "hcg/rng.hpp"

namespace hcg {

/// Law of the child occupation counts (n_1, .., n_{2^d}) of a cube at a
/// given level, product form conditioned on the total:
///   P(n_1..n_r) ∝ prod_i exp(u(n_i)).
struct SplitDistribution {
  int dim = 0;
  int level = 0;
  int n = 0;
  std::vector<double> u;  ///< u(m), m = 0..n
  /// suffix[r][t] = log of the r-fold convolution of exp(u) at t, r = 0..2^d.
  std::vector<std::vector<double>> suffix;
  /// Largest m whose child-level entries are all certified; a cube holding
  /// more points than this is handed to the rejection fallback.
  int certified_limit = 0;

  [[nodiscard]] int children() const { return 1 << dim; }
  /// log P(counts); counts must have 2^d entries summing to at most n.
  [[nodiscard]] double log_probability(std::span<const int> counts) const;
};

/// Throws std::out_of_range when n or level + 1 is outside the table.
[[nodiscard]] SplitDistribution split_distribution(const LogZTable& table, int n, int level);

/// Counts for a cube holding dist.n points.
[[nodiscard]] std::vector<int> sample_split(const SplitDistribution& dist, Stream& rng);
/// Counts for a cube holding m <= dist.n points; the suffix tables only
/// depend on the child level, so one distribution serves every m.
[[nodiscard]] std::vector<int> sample_split(const SplitDistribution& dist, int m, Stream& rng);

struct ExactDiagnostics {
  std::size_t fallback_cubes = 0;     ///< cubes resolved by rejection
  std::size_t fallback_attempts = 0;  ///< proposals spent there
};

/// Depth-first exact sampler. Split distributions are built lazily per
/// level (sized to the table's n_max) and shared between threads.
class ExactSampler {
 public:
  explicit ExactSampler(std::shared_ptr<const LogZTable> table);

  [[nodiscard]] const LogZTable& table() const { return *table_; }

  /// Throws ConfigError for n > n_max and ResolutionError when a cube at
  /// the finest fixed-point level still holds two points or the rejection
  /// fallback exhausts its attempts.
  [[nodiscard]] Configuration sample(int n, Stream& rng, ExactDiagnostics* diag = nullptr) const;

  /// Cached distribution for splitting a cube at this level.
  [[nodiscard]] const SplitDistribution& split_at(int level) const;

 private:
  void fill(const DyadicCube& cube, int m, Stream& rng, std::vector<Point>& out, ExactDiagnostics& diag) const;

  std::shared_ptr<const LogZTable> table_;
  mutable std::mutex mutex_;
  mutable std::vector<std::unique_ptr<SplitDistribution>> cache_;
};

/// One-shot convenience wrapper; d and beta must match the table.
[[nodiscard]] Configuration sample_exact(int d, int n, double beta, const LogZTable& table, Stream& rng);

/// Draws m points inside `cube` from the Gibbs law at inverse temperature
/// beta_eff relative to the cube, by rejection from i.i.d. uniforms:
/// accept with probability exp(-beta_eff (H' - w_min C(m,2))), H' being the
/// energy after rescaling the cube to the unit cube.
[[nodiscard]] std::vector<Point> sample_in_cube_rejection(const DyadicCube& cube, int m, double beta_eff,
                                                          Stream& rng, std::size_t max_attempts,
                                                          std::size_t* attempts = nullptr);

struct McmcParams {
  std::size_t steps = 0;    ///< total proposals, burn-in included
  std::size_t burn_in = 0;
  std::size_t thin = 1;
  double local_move_prob = 0.5;
  double local_level_mean = 2.0;

  /// burn_in = 50 n (1 + beta), thin = n, room for `kept` thinned samples.
  [[nodiscard]] static McmcParams defaults(int n, double beta, std::size_t kept = 1);
  /// Throws ConfigError unless steps > burn_in, thin >= 1 and the move
  /// parameters are in range.
  void validate() const;
};

struct McmcDiagnostics {
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  double acceptance_rate = 0.0;
  std::size_t kept = 0;
  double energy_mean = 0.0;
  double energy_min = 0.0;
  double energy_max = 0.0;
  double energy_final = 0.0;
  /// Integrated autocorrelation time of H over the thinned trace, in units
  /// of kept samples (Sokal windowing).
  double tau_int = 1.0;
};

struct McmcResult {
  Configuration state;
  McmcDiagnostics diagnostics;
};

using SampleCallback = std::function<void(const Configuration&)>;

/// Metropolis chain started from i.i.d. uniforms. Each proposal moves one
/// uniformly chosen point either to a global uniform position or to a
/// uniform position in its own level-j cube, j ~ Geometric(mean
/// local_level_mean). `on_sample` sees every kept (post burn-in, thinned)
/// state.
[[nodiscard]] McmcResult sample_mcmc(int d, int n, double beta, const McmcParams& params, Stream& rng,
                                     const SampleCallback& on_sample = {});

[[nodiscard]] Configuration sample_iid(int d, int n, Stream& rng);

/// Sokal's self-consistent window (c = 5) estimate of the integrated
/// autocorrelation time; 1 for traces that are too short or constant.
[[nodiscard]] double integrated_autocorrelation_time(std::span<const double> trace);

}  // namespace hcg
