#pragma once

// The acceptance suite: fourteen numbered criteria with pinned tolerances.
// Each criterion yields one pass/fail line; the JSON report carries only
// seeded, deterministic quantities.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace hcg {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string summary;
  nlohmann::json metrics;
  double seconds = 0.0;  ///< wall clock; printed, never serialized
  double budget_seconds = 0.0;
};

struct AcceptanceOptions {
  bool quick = false;
  std::uint64_t seed = 20170321;
  int jobs = 1;
  /// Subset of criteria to run (empty: all). Criterion 14 reruns the quick
  /// suite over criteria 1..13 regardless of this filter.
  std::vector<int> only;
  std::function<void(const CriterionResult&)> on_result;
};

struct AcceptanceReport {
  bool quick = false;
  std::uint64_t seed = 0;
  std::vector<CriterionResult> criteria;

  [[nodiscard]] bool pass() const;
  [[nodiscard]] nlohmann::json to_json() const;
};

[[nodiscard]] AcceptanceReport run_acceptance(const AcceptanceOptions& options);

/// "PASS  [ 3] title: summary (1.2 s)"
[[nodiscard]] std::string format_criterion_line(const CriterionResult& r);

/// Z(3, beta) in 1D by exact summation over a 2^L dyadic grid of cells:
/// distinct cells have constant energy, a shared cell contributes
/// h^2 e^{-beta L} Z(2), and the all-in-one-cell term is solved for.
[[nodiscard]] double dyadic_quadrature_z3_d1(double beta, int L);

}  // namespace hcg
