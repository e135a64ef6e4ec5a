// hcg: sampling, partition-table checks, experiments and the acceptance
// suite for the hierarchical Coulomb gas.
//
// Exit codes: 0 success, 1 acceptance failure (or unexpected error),
// 2 malformed configuration, 3 resolution failure. Errors are reported as
// one JSON object on stderr.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hcg/acceptance.hpp"
#include "hcg/experiments.hpp"
#include "hcg/partition.hpp"
#include "hcg/samplers.hpp"
#include "hcg/statistics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitAcceptance = 1;
constexpr int kExitConfig = 2;
constexpr int kExitResolution = 3;

struct SampleArgs {
  int dim = 0;
  int n = 0;
  double beta = 0.0;
  std::string method = "exact";
  std::uint64_t seed = 1;
  std::size_t count = 1;
  std::string out;
  int jobs = 1;
  std::size_t steps = 0;
  std::optional<std::size_t> burn_in;
  std::optional<std::size_t> thin;
};

struct ZcheckArgs {
  int dim = 0;
  double beta = 0.0;
  int n_max = 0;
  int level_cap = hcg::kDefaultLevelCap;
  std::string out;
  std::string report;
};

struct ExperimentArgs {
  std::string config;
  std::string out;
  std::string csv;
  std::optional<int> jobs;
  std::optional<std::uint64_t> seed;
};

struct VerifyArgs {
  bool quick = false;
  std::uint64_t seed = hcg::AcceptanceOptions{}.seed;
  int jobs = 1;
  std::string out;
  std::vector<int> only;
};

void fail(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

// Default artifact location: $HCG_OUTPUT_DIR if set, else the working directory.
fs::path default_path(const std::string& name) {
  if (const char* dir = std::getenv("HCG_OUTPUT_DIR"); dir && *dir) return fs::path(dir) / name;
  return fs::path(name);
}

std::ofstream open_output(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw hcg::ConfigError("cannot open output file " + p.string());
  return os;
}

fs::path with_extension(fs::path p, const char* ext) { return p.replace_extension(ext); }

int run_sample(const SampleArgs& a) {
  const hcg::Method method = hcg::parse_method(a.method);
  hcg::check_dim(a.dim);
  if (a.n < 0) throw hcg::ConfigError("--n must be nonnegative");
  if (!(a.beta >= 0.0) || (method != hcg::Method::iid && method != hcg::Method::mcmc && !(a.beta > 0.0))) {
    throw hcg::ConfigError("--beta must be positive for exact sampling and nonnegative otherwise");
  }
  if (a.count < 1) throw hcg::ConfigError("--count must be at least 1");

  hcg::SamplerSpec spec;
  if (method == hcg::Method::exact) {
    spec = hcg::SamplerSpec::make(a.dim, a.beta, method, a.n);
  } else {
    spec.dim = a.dim;
    spec.beta = a.beta;
    spec.method = method;
    if (method == hcg::Method::mcmc && (a.steps || a.burn_in || a.thin)) {
      spec.mcmc = hcg::McmcParams::defaults(a.n, a.beta);
      if (a.burn_in) spec.mcmc.burn_in = *a.burn_in;
      if (a.thin) spec.mcmc.thin = *a.thin;
      spec.mcmc.steps = a.steps ? a.steps : spec.mcmc.burn_in + spec.mcmc.thin;
      spec.mcmc.validate();
    }
  }
  const auto configs = hcg::run_replicates(a.count, a.seed, 0, a.jobs,
                                           [&](std::size_t, hcg::Stream& rng) { return spec.draw(a.n, rng); });

  const fs::path out = a.out.empty() ? default_path("points.csv") : fs::path(a.out);
  auto os = open_output(out);
  os << "replicate_id,point_index";
  for (int i = 1; i <= a.dim; ++i) os << ",coord_" << i;
  os << '\n';
  for (std::size_t r = 0; r < configs.size(); ++r) {
    const auto& pts = configs[r].points;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      os << r << ',' << i;
      for (int k = 0; k < a.dim; ++k) os << ',' << hcg::format_double(pts[i].coord(k));
      os << '\n';
    }
  }
  json summary{{"command", "sample"},
               {"version", hcg::version_string()},
               {"seed", a.seed},
               {"config",
                {{"dim", a.dim}, {"n", a.n}, {"beta", a.beta}, {"method", a.method}, {"count", a.count}}},
               {"out", out.string()}};
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int run_zcheck(const ZcheckArgs& a) {
  const auto table = hcg::build_logz_table(a.dim, a.beta, a.n_max, a.level_cap);
  const fs::path out = a.out.empty() ? default_path("zcheck.csv") : fs::path(a.out);
  {
    auto os = open_output(out);
    os << "d,beta,n,level,log_lo,log_hi,certified\n";
    for (int level = 0; level < table.levels(); ++level) {
      for (int n = 0; n <= table.n_max; ++n) {
        const auto& v = table.entries[static_cast<std::size_t>(level)][static_cast<std::size_t>(n)];
        os << a.dim << ',' << hcg::format_double(a.beta) << ',' << n << ',' << level << ','
           << hcg::format_double(v.lo) << ',' << hcg::format_double(v.hi) << ',' << (table.certified(v) ? 1 : 0)
           << '\n';
      }
    }
  }

  const auto ratios = hcg::validate_ratio_lower_bounds(table);
  json entries = json::array();
  for (const auto& e : ratios.entries) {
    entries.push_back({{"n", e.n}, {"log_ratio_lo", e.log_ratio_lo}, {"bound", e.bound}, {"margin", e.margin}, {"ok", e.ok}});
  }
  bool level0_certified = true;
  for (const auto& v : table.entries[0]) level0_certified = level0_certified && table.certified(v);
  json report{{"command", "zcheck"},
              {"version", hcg::version_string()},
              {"config", {{"dim", a.dim}, {"beta", a.beta}, {"n_max", a.n_max}, {"level_cap", a.level_cap}}},
              {"level_cap_used", table.level_cap},
              {"cert_tol", table.cert_tol},
              {"level0_certified", level0_certified},
              {"ratio_bounds",
               {{"all_ok", ratios.all_ok},
                {"min_margin", ratios.min_margin},
                {"upper_envelope_coeff", ratios.upper_envelope_coeff},
                {"entries", entries}}}};
  if (a.n_max >= 2) {
    const auto z2 = hcg::z2_oracle(a.dim, a.beta);
    const auto iv = hcg::logz(table, 2);
    report["z2_oracle"] = {{"value", z2.value},
                           {"log_value", std::log(z2.value)},
                           {"terms", z2.terms},
                           {"log_lo", iv.lo},
                           {"log_hi", iv.hi},
                           {"contains", iv.contains(std::log(z2.value))}};
    if (z2.closed_form) report["z2_oracle"]["closed_form"] = *z2.closed_form;
  }
  const fs::path rpath = a.report.empty() ? with_extension(out, ".json") : fs::path(a.report);
  open_output(rpath) << report.dump(2) << '\n';
  std::cout << json{{"csv", out.string()}, {"report", rpath.string()}, {"ratio_bounds_ok", ratios.all_ok}}.dump() << '\n';
  return 0;
}

int run_experiment_cmd(const ExperimentArgs& a) {
  std::ifstream in(a.config);
  if (!in) throw hcg::ConfigError("cannot read config file " + a.config);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw hcg::ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  auto cfg = hcg::ExperimentConfig::from_json(j);
  if (a.jobs) {
    if (*a.jobs < 1) throw hcg::ConfigError("--jobs must be at least 1");
    cfg.jobs = *a.jobs;
  }
  if (a.seed) cfg.seed = *a.seed;
  const auto rep = hcg::run_experiment(cfg);

  fs::path out = !a.out.empty() ? fs::path(a.out) : !cfg.out.empty() ? fs::path(cfg.out) : default_path(cfg.experiment + ".json");
  const fs::path csv = a.csv.empty() ? with_extension(out, ".csv") : fs::path(a.csv);
  open_output(out) << rep.to_json().dump(2) << '\n';
  {
    auto os = open_output(csv);
    rep.write_csv(os);
  }
  for (const auto& v : rep.verdicts) std::cout << (v.pass ? "PASS " : "FAIL ") << v.name << ": " << v.detail << '\n';
  for (const auto& f : rep.fits) {
    std::cout << "slope " << f.statistic << " [" << f.sampler << "] = " << hcg::format_double(f.fit.slope) << " CI95 ["
              << hcg::format_double(f.fit.ci_lo) << ", " << hcg::format_double(f.fit.ci_hi) << "]\n";
  }
  std::cout << "report " << out.string() << "\ncsv " << csv.string() << '\n';
  return 0;
}

int run_verify(const VerifyArgs& a) {
  hcg::AcceptanceOptions opt;
  opt.quick = a.quick;
  opt.seed = a.seed;
  opt.jobs = a.jobs;
  opt.only = a.only;
  opt.on_result = [](const hcg::CriterionResult& r) { std::cout << hcg::format_criterion_line(r) << std::endl; };
  const auto rep = hcg::run_acceptance(opt);
  const fs::path out = a.out.empty() ? default_path("verify.json") : fs::path(a.out);
  open_output(out) << rep.to_json().dump(2) << '\n';
  std::cout << (rep.pass() ? "all criteria passed" : "some criteria failed") << "; report " << out.string() << '\n';
  return rep.pass() ? 0 : kExitAcceptance;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical Coulomb gas: exact sampling, certified partition tables and fluctuation experiments"};
  app.set_version_flag("--version", hcg::version_string());
  app.require_subcommand(1);

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "draw configurations and write them as CSV");
  sample->add_option("--dim", sa.dim, "dimension (1, 2 or 3)")->required();
  sample->add_option("--n", sa.n, "number of particles")->required();
  sample->add_option("--beta", sa.beta, "inverse temperature")->required();
  sample->add_option("--method", sa.method, "exact | mcmc | iid")->capture_default_str();
  sample->add_option("--seed", sa.seed, "64-bit seed")->capture_default_str();
  sample->add_option("--count", sa.count, "number of independent replicates")->capture_default_str();
  sample->add_option("--out", sa.out, "output CSV (default $HCG_OUTPUT_DIR/points.csv)");
  sample->add_option("--jobs", sa.jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  sample->add_option("--steps", sa.steps, "mcmc: total proposals per replicate");
  sample->add_option("--burn-in", sa.burn_in, "mcmc: discarded prefix");
  sample->add_option("--thin", sa.thin, "mcmc: keep every thin-th state");

  ZcheckArgs za;
  auto* zcheck = app.add_subcommand("zcheck", "build the certified log Z table and check the ratio bounds");
  zcheck->add_option("--dim", za.dim, "dimension (1, 2 or 3)")->required();
  zcheck->add_option("--beta", za.beta, "inverse temperature")->required();
  zcheck->add_option("--n-max", za.n_max, "largest particle count")->required();
  zcheck->add_option("--level-cap", za.level_cap, "3D: initial depth K of the table")->capture_default_str();
  zcheck->add_option("--out", za.out, "table CSV (default $HCG_OUTPUT_DIR/zcheck.csv)");
  zcheck->add_option("--report", za.report, "JSON report (default: CSV path with .json)");

  ExperimentArgs ea;
  auto* experiment = app.add_subcommand("experiment", "run a named experiment from a JSON config");
  experiment->add_option("--config", ea.config, "JSON config file")->required();
  experiment->add_option("--out", ea.out, "report path (overrides the config)");
  experiment->add_option("--csv", ea.csv, "tidy CSV path (default: report path with .csv)");
  experiment->add_option("--jobs", ea.jobs, "worker threads (overrides the config)");
  experiment->add_option("--seed", ea.seed, "seed (overrides the config)");

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  verify->add_flag("--quick", va.quick, "reduced replicate counts");
  verify->add_option("--seed", va.seed, "64-bit seed")->capture_default_str();
  verify->add_option("--jobs", va.jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  verify->add_option("--out", va.out, "JSON report (default $HCG_OUTPUT_DIR/verify.json)");
  verify->add_option("--only", va.only, "run only these criteria (1-14)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail("config", e.what());
    return kExitConfig;
  }

  try {
    if (*sample) return run_sample(sa);
    if (*zcheck) return run_zcheck(za);
    if (*experiment) return run_experiment_cmd(ea);
    if (*verify) return run_verify(va);
  } catch (const hcg::ConfigError& e) {
    fail("config", e.what());
    return kExitConfig;
  } catch (const hcg::ResolutionError& e) {
    fail("resolution", e.what());
    return kExitResolution;
  } catch (const std::exception& e) {
    fail("runtime", e.what());
    return kExitAcceptance;
  }
  return 0;
}
