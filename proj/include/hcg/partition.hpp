#pragma once

// Certified log-space tables of the partition function Z(n, beta).
//
// 3D: children of a level-k cube see the doubled inverse temperature, so the
// table is indexed by (n, level) with beta_eff = 2^level * beta. The
// composition recursion couples Z(n, beta) to Z(n, 2 beta), so the deepest
// level K is seeded with the rigorous bracket
//     -(7/3) beta_eff C(n,2) <= log Z <= -2 beta_eff C(n,2)
// and filled upward to level 0 with outward-rounded interval arithmetic.
//
// 1D/2D: beta is level independent; the all-in-one-child term is moved to
// the left-hand side and the recursion is solved for increasing n.

#include <cstddef>
#include <optional>
#include <vector>

namespace hcg {

struct LogInterval {
  double lo = 0.0;
  double hi = 0.0;

  [[nodiscard]] double mid() const { return 0.5 * (lo + hi); }
  [[nodiscard]] double width() const { return hi - lo; }
  [[nodiscard]] bool contains(double v) const { return lo <= v && v <= hi; }
};

struct LogZTable {
  int dim = 0;
  double beta = 0.0;
  int n_max = 0;
  int level_cap = 0;  ///< K; 0 for d in {1,2}
  double cert_tol = 1e-10;
  /// entries[level][n]; a single level for d in {1,2}.
  std::vector<std::vector<LogInterval>> entries;

  [[nodiscard]] int levels() const { return static_cast<int>(entries.size()); }
  /// Inverse temperature seen by the measure inside a level-k cube.
  [[nodiscard]] double beta_at(int level) const;
  /// Certification test used both by the builder and by samplers:
  /// width <= cert_tol * max(1, |mid|).
  [[nodiscard]] bool certified(const LogInterval& v) const;
};

inline constexpr int kDefaultLevelCap = 40;
inline constexpr int kMaxTableParticles = 4096;

/// Throws ConfigError for nonpositive beta or n_max beyond kMaxTableParticles.
[[nodiscard]] LogZTable build_logz_table(int d, double beta, int n_max, int level_cap = kDefaultLevelCap,
                                         double cert_tol = 1e-10);

/// Stored interval for log Z(n, beta_at(level)); level is ignored for d < 3.
[[nodiscard]] LogInterval logz(const LogZTable& table, int n, int level = 0);

/// Rigorous bracket from Jensen (lower) and H >= w_min C(n,2) (upper).
[[nodiscard]] LogInterval logz_bracket(int d, double beta_eff, int n);

struct Z2Oracle {
  double value = 0.0;  ///< series sum for Z(2, beta)
  int terms = 0;
  std::optional<double> closed_form;  ///< d = 1 only
};

/// Z(2, beta) from the level-set measures (2^d - 1) 2^{-dk} of {w = w_k}.
[[nodiscard]] Z2Oracle z2_oracle(int d, double beta);

struct RatioBoundEntry {
  int n = 0;
  double log_ratio_lo = 0.0;  ///< lo log Z(n+1) - hi log Z(n)
  double bound = 0.0;         ///< -mean_w * beta * n
  double margin = 0.0;        ///< log_ratio_lo - bound
  bool ok = false;
};

struct RatioBoundReport {
  int dim = 0;
  double beta = 0.0;
  std::vector<RatioBoundEntry> entries;
  bool all_ok = true;
  double min_margin = 0.0;
  /// Informational only: max_n (log ratio + mean_w beta n) / (beta n^{1/3}),
  /// an empirical stand-in for the nonexplicit upper-bound constant.
  double upper_envelope_coeff = 0.0;
};

/// Checks log Z(n+1) - log Z(n) >= -mean_w * beta * n on the certified
/// level-0 intervals: the lower end of the ratio interval must clear the bound.
[[nodiscard]] RatioBoundReport validate_ratio_lower_bounds(const LogZTable& table);

}  // namespace hcg
