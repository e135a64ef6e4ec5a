#pragma once

// Named replicate experiments driven by a JSON config, producing a JSON
// report and a tidy per-replicate CSV.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hcg/statistics.hpp"

namespace hcg {

struct ExperimentConfig {
  std::string experiment;  ///< variance-scaling | martingale | conditional | repulsion |
                           ///< anticoncentration | linear-stats | microscopic
  int dim = 3;
  double beta = 1.0;
  std::string region;  ///< empty: centered ball of radius 0.3 (0.5 at the origin for microscopic)
  std::vector<int> ns{16, 32, 64, 128, 256};
  std::size_t replicates = 400;
  Method method = Method::exact;
  std::uint64_t seed = 1;
  std::string out;  ///< report path; empty means the CLI default

  int jobs = 1;
  bool baseline = true;           ///< run the i.i.d. contrast where it applies
  std::optional<int> level;       ///< j for martingale/repulsion, k for conditional
  std::vector<double> linear;     ///< coefficients of f; default all ones
  double c1 = 0.1;                ///< anticoncentration window coefficient
  std::vector<double> lambdas{1.5, 2.0, 3.0, 4.0, 6.0};  ///< microscopic scales
  std::vector<double> center;     ///< microscopic blow-up point; default cube center
  bool record_runtime = false;    ///< wall-clock time makes reports non-reproducible

  /// Throws ConfigError on unknown keys, wrong types or invalid values.
  static ExperimentConfig from_json(const nlohmann::json& j);
  [[nodiscard]] nlohmann::json to_json() const;
  [[nodiscard]] Region resolved_region() const;
};

/// Moments of one statistic at one grid point.
struct GridRow {
  std::string statistic;
  std::string sampler;
  int n = 0;
  double param = 0.0;  ///< lambda (microscopic), level (martingale), else 0
  Moments moments;
};

struct SlopeSummary {
  std::string statistic;
  std::string sampler;
  ScalingFit fit;
};

struct Verdict {
  std::string name;
  bool pass = true;
  std::string detail;
};

/// One tidy CSV row.
struct SampleRow {
  std::string statistic;
  std::string sampler;
  int n = 0;
  double param = 0.0;
  std::size_t replicate = 0;
  double value = 0.0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<GridRow> rows;
  std::vector<SlopeSummary> fits;
  std::vector<CheckReport> checks;
  std::vector<Verdict> verdicts;
  std::vector<SampleRow> samples;
  std::optional<double> runtime_seconds;

  [[nodiscard]] bool pass() const;
  [[nodiscard]] nlohmann::json to_json() const;
  void write_csv(std::ostream& os) const;
};

[[nodiscard]] ExperimentReport run_experiment(const ExperimentConfig& config);

[[nodiscard]] std::string version_string();

/// Shortest round-trip decimal form of a double.
[[nodiscard]] std::string format_double(double v);

[[nodiscard]] nlohmann::json to_json(const Moments& m);
[[nodiscard]] nlohmann::json to_json(const ScalingFit& f);
[[nodiscard]] nlohmann::json to_json(const CheckReport& r);

}  // namespace hcg
