#include "hcg/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#ifndef HCG_VERSION
#define HCG_VERSION "0.0.0"
#endif

namespace hcg {

using nlohmann::json;

namespace {

const std::set<std::string> kExperiments{"variance-scaling", "martingale", "conditional", "repulsion",
                                         "anticoncentration", "linear-stats", "microscopic"};

const std::set<std::string> kConfigKeys{"experiment", "dim",    "beta",     "region",   "ns",     "replicates",
                                        "method",     "seed",   "out",      "jobs",     "baseline", "level",
                                        "linear",     "c1",     "lambdas",  "center",   "record_runtime"};

template <class T>
T get_field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

std::string default_region_text(int d, bool microscopic) {
  std::string s = "ball:";
  for (int i = 0; i < d; ++i) s += microscopic ? "0," : "0.5,";
  return s + (microscopic ? "0.5" : "0.3");
}

// Distinct stream families for each (group, grid index) pair.
std::uint64_t job_id(std::uint64_t group, std::size_t index) { return group * 4096 + index; }

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t group, std::size_t index) {
  return mix64(seed ^ mix64(job_id(group, index) + 0xA5A5A5A5ULL));
}

struct Context {
  const ExperimentConfig& cfg;
  ExperimentReport& rep;
  SamplerSpec hier;
  std::optional<SamplerSpec> iid;

  // Moments of each named statistic over R replicates of `spec` at n,
  // recording rows and tidy samples.
  template <class Fn>
  std::vector<Moments> grid_point(const SamplerSpec& spec, std::uint64_t group, std::size_t index, int n,
                                  double param, const std::vector<std::string>& names, Fn&& statistics) {
    const auto per_rep = run_replicates(cfg.replicates, cfg.seed, job_id(group, index), cfg.jobs,
                                        [&](std::size_t, Stream& rng) { return statistics(spec.draw(n, rng)); });
    std::vector<Moments> out;
    const std::string sampler(method_name(spec.method));
    for (std::size_t s = 0; s < names.size(); ++s) {
      std::vector<double> vals(per_rep.size());
      for (std::size_t r = 0; r < per_rep.size(); ++r) {
        vals[r] = per_rep[r][s];
        rep.samples.push_back({names[s], sampler, n, param, r, vals[r]});
      }
      out.push_back(compute_moments(vals));
      rep.rows.push_back({names[s], sampler, n, param, out.back()});
    }
    return out;
  }

  void unbiased(const std::string& what, const Moments& m, double target) {
    const bool ok = m.se_mean > 0.0 ? std::abs(m.mean - target) <= 4.0 * m.se_mean
                                    : std::abs(m.mean - target) <= 1e-9 * std::max(1.0, std::abs(target));
    rep.verdicts.push_back({what, ok,
                            "mean " + format_double(m.mean) + " vs " + format_double(target) + " (se " +
                                format_double(m.se_mean) + ")"});
  }

  std::optional<ScalingFit> fit(const std::string& statistic, const std::string& sampler, std::span<const double> xs,
                                std::span<const Moments> ms) {
    if (xs.size() < 4) return std::nullopt;
    std::vector<double> v, se;
    for (const auto& m : ms) {
      if (!(m.variance > 0.0)) return std::nullopt;
      v.push_back(m.variance);
      se.push_back(m.se_variance);
    }
    const auto f = fit_scaling_exponent(xs, v, se);
    rep.fits.push_back({statistic, sampler, f});
    return f;
  }

  void contrast(const std::string& what, const std::optional<ScalingFit>& low, const std::optional<ScalingFit>& high,
                double gap, bool need_disjoint) {
    if (!low || !high) return;
    bool ok = low->slope < high->slope - gap;
    if (need_disjoint) ok = ok && low->ci_hi < high->ci_lo;
    rep.verdicts.push_back({what, ok,
                            "slopes " + format_double(low->slope) + " vs " + format_double(high->slope) +
                                ", required gap " + format_double(gap)});
  }
};

std::vector<double> as_doubles(const std::vector<int>& ns) { return {ns.begin(), ns.end()}; }

void run_variance_scaling(Context& cx) {
  const auto& cfg = cx.cfg;
  const Region u = cfg.resolved_region();
  const double vol = region_volume(u);
  const auto stat = [&](const Configuration& c) { return std::vector<double>{double(count_in_region(c, u))}; };
  std::vector<Moments> h, b;
  for (std::size_t i = 0; i < cfg.ns.size(); ++i) {
    const int n = cfg.ns[i];
    h.push_back(cx.grid_point(cx.hier, 0, i, n, 0.0, {"N(U)"}, stat)[0]);
    cx.unbiased("E N(U) = Leb(U) n, n=" + std::to_string(n), h.back(), vol * n);
    if (cx.iid) b.push_back(cx.grid_point(*cx.iid, 1, i, n, 0.0, {"N(U)"}, stat)[0]);
  }
  const auto xs = as_doubles(cfg.ns);
  const auto fh = cx.fit("N(U)", std::string(method_name(cfg.method)), xs, h);
  if (cx.iid) {
    const auto fb = cx.fit("N(U)", "iid", xs, b);
    cx.contrast("variance slope below i.i.d. baseline by 0.15, disjoint CIs", fh, fb, 0.15, true);
  }
}

void run_linear_stats(Context& cx) {
  const auto& cfg = cx.cfg;
  const Region u = cfg.resolved_region();
  std::vector<double> coeffs = cfg.linear;
  if (coeffs.empty()) coeffs.assign(static_cast<std::size_t>(cfg.dim), 1.0);
  const LinearFunction f = LinearFunction::make(cfg.dim, coeffs, 0.0);
  const auto stat = [&](const Configuration& c) {
    return std::vector<double>{linear_statistic(c, f), double(count_in_region(c, u))};
  };
  std::vector<Moments> mf, mu;
  for (std::size_t i = 0; i < cfg.ns.size(); ++i) {
    const int n = cfg.ns[i];
    const auto m = cx.grid_point(cx.hier, 0, i, n, 0.0, {"X(f)", "N(U)"}, stat);
    mf.push_back(m[0]);
    mu.push_back(m[1]);
    double fmean = f.b * n;
    for (int k = 0; k < cfg.dim; ++k) fmean += f.a[static_cast<std::size_t>(k)] * 0.5 * n;
    cx.unbiased("E X(f) = n * mean f, n=" + std::to_string(n), m[0], fmean);
  }
  const auto xs = as_doubles(cfg.ns);
  const std::string sampler(method_name(cfg.method));
  const auto ff = cx.fit("X(f)", sampler, xs, mf);
  const auto fu = cx.fit("N(U)", sampler, xs, mu);
  // the 3D gap between the two is an open question: report only
  if (cfg.dim <= 2) cx.contrast("Var X(f) slope at least 0.1 below Var N(U) slope", ff, fu, 0.1, false);
}

void run_martingale(Context& cx) {
  const auto& cfg = cx.cfg;
  const Region u = cfg.resolved_region();
  const int J = cfg.level.value_or(6);
  const MartingaleFunctional mart(u, J);
  const double vol = region_volume(u);
  std::vector<std::string> names{"N(U)"};
  for (int j = 0; j <= J; ++j) names.push_back("M_" + std::to_string(j));
  const auto stat = [&](const Configuration& c) {
    std::vector<double> v{double(count_in_region(c, u))};
    const auto m = mart.values(c);
    v.insert(v.end(), m.begin(), m.end());
    return v;
  };
  for (std::size_t i = 0; i < cfg.ns.size(); ++i) {
    const int n = cfg.ns[i];
    const std::size_t first_sample = cx.rep.samples.size();
    const auto ms = cx.grid_point(cx.hier, 0, i, n, 0.0, names, stat);
    cx.unbiased("E N(U) = Leb(U) n, n=" + std::to_string(n), ms[0], vol * n);

    // regroup the tidy samples into per-level columns for the increments
    const std::size_t R = cfg.replicates;
    std::vector<std::vector<double>> level(static_cast<std::size_t>(J) + 1, std::vector<double>(R));
    for (int j = 0; j <= J; ++j) {
      for (std::size_t r = 0; r < R; ++r) {
        level[static_cast<std::size_t>(j)][r] = cx.rep.samples[first_sample + (static_cast<std::size_t>(j) + 1) * R + r].value;
      }
    }
    CheckReport inc{"martingale increments n=" + std::to_string(n), {}, true};
    CheckReport bins{"martingale conditional increments n=" + std::to_string(n), {}, true};
    for (int j = 1; j <= J; ++j) {
      const auto& prev = level[static_cast<std::size_t>(j) - 1];
      const auto& cur = level[static_cast<std::size_t>(j)];
      std::vector<double> d(R);
      std::map<long long, std::vector<double>> by_bin;
      for (std::size_t r = 0; r < R; ++r) {
        d[r] = cur[r] - prev[r];
        by_bin[static_cast<long long>(std::floor(prev[r]))].push_back(d[r]);
      }
      const auto md = compute_moments(d);
      inc.add_z("E(M_" + std::to_string(j) + " - M_" + std::to_string(j - 1) + ")", md.mean, 0.0, md.se_mean);
      for (const auto& [b, vals] : by_bin) {
        if (vals.size() < 100) continue;
        const auto mb = compute_moments(vals);
        bins.add_z("E(M_" + std::to_string(j) + " - M_" + std::to_string(j - 1) + " | floor M_" +
                       std::to_string(j - 1) + " = " + std::to_string(b) + ")",
                   mb.mean, 0.0, mb.se_mean);
      }
    }
    cx.rep.verdicts.push_back({inc.name, inc.pass, std::to_string(inc.items.size()) + " increments"});
    cx.rep.verdicts.push_back({bins.name, bins.pass, std::to_string(bins.items.size()) + " bins"});
    cx.rep.checks.push_back(std::move(inc));
    cx.rep.checks.push_back(std::move(bins));
  }
}

void run_conditional(Context& cx) {
  const auto& cfg = cx.cfg;
  const int k = cfg.level.value_or(1);
  for (std::size_t i = 0; i < cfg.ns.size(); ++i) {
    const int n = cfg.ns[i];
    auto cm = conditional_mean_check(cx.hier, n, k, cfg.replicates, sub_seed(cfg.seed, 0, i), cfg.jobs);
    cm.name += " n=" + std::to_string(n);
    auto ind = independence_check(cx.hier, n, cfg.replicates, sub_seed(cfg.seed, 1, i), cfg.jobs);
    ind.name += " n=" + std::to_string(n);
    cx.rep.verdicts.push_back({cm.name, cm.pass, std::to_string(cm.items.size()) + " comparisons"});
    cx.rep.verdicts.push_back({ind.name, ind.pass, std::to_string(ind.items.size()) + " comparisons"});
    cx.rep.checks.push_back(std::move(cm));
    cx.rep.checks.push_back(std::move(ind));
  }
}

void run_repulsion(Context& cx) {
  const auto& cfg = cx.cfg;
  const int j = cfg.level.value_or(4);
  for (std::size_t i = 0; i < cfg.ns.size(); ++i) {
    const int n = cfg.ns[i];
    auto r = repulsion_check(cx.hier, n, j, cfg.replicates, sub_seed(cfg.seed, 0, i), cfg.jobs);
    r.name += " n=" + std::to_string(n);
    const auto& it = r.items.front();
    cx.rep.verdicts.push_back({r.name, r.pass, it.name + " = " + format_double(it.value) + ", bound " +
                                                   format_double(it.target)});
    cx.rep.checks.push_back(std::move(r));
  }
}

void run_anticoncentration(Context& cx) {
  const auto& cfg = cx.cfg;
  const Region u = cfg.resolved_region();
  const double gamma = count_window_exponent(cfg.dim);
  for (std::size_t i = 0; i < cfg.ns.size(); ++i) {
    const int n = cfg.ns[i];
    const auto res = anticoncentration_check(
        cx.hier, n, [&](const Configuration& c) { return double(count_in_region(c, u)); }, cfg.c1, gamma,
        cfg.replicates, sub_seed(cfg.seed, 0, i), cfg.jobs);
    cx.rep.rows.push_back({"N(U)", std::string(method_name(cfg.method)), n, res.width, res.moments});
    CheckReport r{"anticoncentration n=" + std::to_string(n), {}, true};
    r.add({"max window frequency, width " + format_double(res.width), res.max_frequency, 0.95, 0.0, 0.0,
           res.max_frequency <= 0.95});
    cx.rep.verdicts.push_back({r.name, r.pass, "max frequency " + format_double(res.max_frequency)});
    cx.rep.checks.push_back(std::move(r));
  }
}

void run_microscopic(Context& cx) {
  const auto& cfg = cx.cfg;
  const Region shape = cfg.resolved_region();
  const int n = cfg.ns.back();
  std::vector<double> x = cfg.center;
  if (x.empty()) x.assign(static_cast<std::size_t>(cfg.dim), 0.5);
  std::vector<Region> views;
  std::vector<double> xs;
  for (double lam : cfg.lambdas) {
    views.push_back(blowup_shape(cfg.dim, x, lam, shape.shape(), n));
    xs.push_back(std::pow(lam, cfg.dim));
  }
  std::vector<Moments> h, b;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const Region& v = views[i];
    const auto stat = [&](const Configuration& c) { return std::vector<double>{double(count_in_region(c, v))}; };
    h.push_back(cx.grid_point(cx.hier, 0, i, n, cfg.lambdas[i], {"N_x(lambda U)"}, stat)[0]);
    cx.unbiased("E N_x(lambda U) = n Leb(V), lambda=" + format_double(cfg.lambdas[i]), h.back(), n * region_volume(v));
    if (cx.iid) b.push_back(cx.grid_point(*cx.iid, 1, i, n, cfg.lambdas[i], {"N_x(lambda U)"}, stat)[0]);
  }
  // slopes against lambda^d, so i.i.d. counts scale with exponent 1
  const auto fh = cx.fit("N_x(lambda U)", std::string(method_name(cfg.method)), xs, h);
  if (cx.iid) {
    const auto fb = cx.fit("N_x(lambda U)", "iid", xs, b);
    cx.contrast("microscopic variance slope below i.i.d. baseline by 0.15", fh, fb, 0.15, false);
  }
}

}  // namespace

std::string version_string() { return HCG_VERSION; }

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

// ---- config -------------------------------------------------------------------

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kConfigKeys.contains(key)) throw ConfigError("unknown config field '" + key + "'");
  }
  ExperimentConfig c;
  c.experiment = get_field<std::string>(j, "experiment");
  if (!kExperiments.contains(c.experiment)) throw ConfigError("unknown experiment '" + c.experiment + "'");
  if (j.contains("dim")) c.dim = get_field<int>(j, "dim");
  check_dim(c.dim);
  if (j.contains("beta")) c.beta = get_field<double>(j, "beta");
  if (!(c.beta > 0.0) || !std::isfinite(c.beta)) throw ConfigError("beta must be positive and finite");
  if (j.contains("region")) c.region = get_field<std::string>(j, "region");
  if (j.contains("ns")) c.ns = get_field<std::vector<int>>(j, "ns");
  if (c.ns.empty()) throw ConfigError("ns must not be empty");
  for (int n : c.ns) {
    if (n < 0 || n > kMaxTableParticles) throw ConfigError("each n must lie in [0, 4096]");
  }
  if (j.contains("replicates")) c.replicates = get_field<std::size_t>(j, "replicates");
  if (c.replicates < 3) throw ConfigError("replicates must be at least 3");
  if (j.contains("method")) c.method = parse_method(get_field<std::string>(j, "method"));
  if (j.contains("seed")) c.seed = get_field<std::uint64_t>(j, "seed");
  if (j.contains("out")) c.out = get_field<std::string>(j, "out");
  if (j.contains("jobs")) c.jobs = get_field<int>(j, "jobs");
  if (c.jobs < 1) throw ConfigError("jobs must be at least 1");
  if (j.contains("baseline")) c.baseline = get_field<bool>(j, "baseline");
  if (j.contains("level")) c.level = get_field<int>(j, "level");
  if (j.contains("linear")) c.linear = get_field<std::vector<double>>(j, "linear");
  if (j.contains("c1")) c.c1 = get_field<double>(j, "c1");
  if (!(c.c1 >= 0.0)) throw ConfigError("c1 must be nonnegative");
  if (j.contains("lambdas")) c.lambdas = get_field<std::vector<double>>(j, "lambdas");
  if (j.contains("center")) c.center = get_field<std::vector<double>>(j, "center");
  if (j.contains("record_runtime")) c.record_runtime = get_field<bool>(j, "record_runtime");
  if (!c.linear.empty() && c.linear.size() != static_cast<std::size_t>(c.dim)) {
    throw ConfigError("linear needs one coefficient per dimension");
  }
  if (!c.center.empty() && c.center.size() != static_cast<std::size_t>(c.dim)) {
    throw ConfigError("center needs one coordinate per dimension");
  }
  if (c.experiment == "microscopic" && c.lambdas.empty()) throw ConfigError("microscopic needs lambdas");
  (void)c.resolved_region();  // validate early
  return c;
}

json ExperimentConfig::to_json() const {
  json j{{"experiment", experiment},
         {"dim", dim},
         {"beta", beta},
         {"region", resolved_region().to_string()},
         {"ns", ns},
         {"replicates", replicates},
         {"method", std::string(method_name(method))},
         {"seed", seed},
         {"jobs", jobs},
         {"baseline", baseline},
         {"c1", c1},
         {"record_runtime", record_runtime}};
  if (level) j["level"] = *level;
  if (!linear.empty()) j["linear"] = linear;
  if (experiment == "microscopic") {
    j["lambdas"] = lambdas;
    if (!center.empty()) j["center"] = center;
  }
  return j;
}

Region ExperimentConfig::resolved_region() const {
  return Region::parse(region.empty() ? default_region_text(dim, experiment == "microscopic") : region, dim);
}

// ---- report -------------------------------------------------------------------

bool ExperimentReport::pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

json to_json(const Moments& m) {
  return {{"replicates", m.count}, {"mean", m.mean},   {"variance", m.variance},
          {"se_mean", m.se_mean},  {"se_variance", m.se_variance}};
}

json to_json(const ScalingFit& f) {
  return {{"slope", f.slope},
          {"intercept", f.intercept},
          {"slope_se", f.slope_se},
          {"ci95", {f.ci_lo, f.ci_hi}},
          {"reduced_chi2", f.reduced_chi2},
          {"weighted", f.weighted}};
}

json to_json(const CheckReport& r) {
  json items = json::array();
  for (const auto& it : r.items) {
    items.push_back({{"name", it.name},
                     {"value", it.value},
                     {"target", it.target},
                     {"se", it.se},
                     {"limit", it.limit},
                     {"pass", it.pass}});
  }
  return {{"name", r.name}, {"pass", r.pass}, {"items", items}};
}

json ExperimentReport::to_json() const {
  json rows_j = json::array();
  for (const auto& r : rows) {
    json row = hcg::to_json(r.moments);
    row["statistic"] = r.statistic;
    row["sampler"] = r.sampler;
    row["n"] = r.n;
    row["param"] = r.param;
    rows_j.push_back(std::move(row));
  }
  json fits_j = json::array();
  for (const auto& f : fits) {
    json fj = hcg::to_json(f.fit);
    fj["statistic"] = f.statistic;
    fj["sampler"] = f.sampler;
    fits_j.push_back(std::move(fj));
  }
  json checks_j = json::array();
  for (const auto& c : checks) checks_j.push_back(hcg::to_json(c));
  json verdicts_j = json::array();
  for (const auto& v : verdicts) verdicts_j.push_back({{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});

  json j{{"experiment", config.experiment},
         {"version", version_string()},
         {"seed", config.seed},
         {"config", config.to_json()},
         {"rows", rows_j},
         {"fits", fits_j},
         {"checks", checks_j},
         {"verdicts", verdicts_j},
         {"pass", pass()}};
  if (runtime_seconds) j["runtime_seconds"] = *runtime_seconds;
  return j;
}

void ExperimentReport::write_csv(std::ostream& os) const {
  os << "statistic,sampler,n,param,replicate,value\n";
  for (const auto& s : samples) {
    os << s.statistic << ',' << s.sampler << ',' << s.n << ',' << format_double(s.param) << ',' << s.replicate << ','
       << format_double(s.value) << '\n';
  }
}

// ---- driver -------------------------------------------------------------------

ExperimentReport run_experiment(const ExperimentConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentReport rep;
  rep.config = config;
  const int n_max = *std::max_element(config.ns.begin(), config.ns.end());
  Context cx{config, rep, SamplerSpec::make(config.dim, config.beta, config.method, n_max), std::nullopt};
  const bool contrast = config.experiment == "variance-scaling" || config.experiment == "microscopic";
  if (config.baseline && contrast && config.method != Method::iid) {
    cx.iid = SamplerSpec::make(config.dim, config.beta, Method::iid, n_max);
  }

  const auto& e = config.experiment;
  if (e == "variance-scaling") {
    run_variance_scaling(cx);
  } else if (e == "linear-stats") {
    run_linear_stats(cx);
  } else if (e == "martingale") {
    run_martingale(cx);
  } else if (e == "conditional") {
    run_conditional(cx);
  } else if (e == "repulsion") {
    run_repulsion(cx);
  } else if (e == "anticoncentration") {
    run_anticoncentration(cx);
  } else if (e == "microscopic") {
    run_microscopic(cx);
  } else {
    throw ConfigError("unknown experiment '" + e + "'");
  }
  if (config.record_runtime) {
    rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return rep;
}

}  // namespace hcg
