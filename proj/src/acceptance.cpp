#include "hcg/acceptance.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "hcg/energy.hpp"
#include "hcg/experiments.hpp"
#include "hcg/partition.hpp"
#include "hcg/samplers.hpp"
#include "hcg/statistics.hpp"

namespace hcg {

using nlohmann::json;

namespace {

// Pinned tolerances.
constexpr double kClosedFormTol = 1e-12;
constexpr double kQuadratureTol = 1e-9;
constexpr double kEnergyTol = 1e-9;
constexpr double kTwoPointSe = 3.0;
constexpr double kChiSquareLevel = 1e-3;
constexpr double kWindowCap = 0.95;

struct Sizes {
  std::size_t two_point = 100000;
  std::size_t cross = 20000;
  std::size_t mean_counts = 10000;
  std::size_t scaling3 = 4000;
  std::size_t scaling12 = 20000;
  std::size_t linear = 20000;
  std::size_t conditional = 10000;
  std::size_t repulsion = 100000;
  std::size_t window = 10000;
};

Sizes sizes_for(bool quick) {
  Sizes s;
  if (quick) {
    s.cross = 10000;
    s.scaling3 = 1000;
    s.scaling12 = 4000;
    s.linear = 4000;
    s.repulsion = 20000;
    s.window = 2000;
  }
  return s;
}

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

std::string ball_text(int d, double r) {
  std::string s = "ball:";
  for (int i = 0; i < d; ++i) s += "0.5,";
  return s + format_double(r);
}

std::string generic_box_text(int d) {
  static const char* boxes[] = {"box:0.2,0.7", "box:0.2,0.1,0.7,0.6", "box:0.2,0.1,0.1,0.7,0.6,0.6"};
  return boxes[d - 1];
}

struct Suite {
  const AcceptanceOptions& opt;
  Sizes sz;

  std::uint64_t seed_for(int id) const { return mix64(opt.seed + static_cast<std::uint64_t>(id)); }

  // ---- 1 ----------------------------------------------------------------------
  CriterionResult partition_oracle() const {
    CriterionResult r{1, "partition oracle agreement", true, {}, json::array(), 0.0, 60.0};
    int contained = 0, total = 0;
    double worst_cf = 0.0;
    for (int d = 1; d <= 3; ++d) {
      for (double beta : {0.5, 1.0, 2.0, 4.0}) {
        const auto t = build_logz_table(d, beta, 2);
        const auto iv = logz(t, 2);
        const auto z2 = z2_oracle(d, beta);
        const bool in = iv.contains(std::log(z2.value));
        json m{{"dim", d}, {"beta", beta}, {"log_lo", iv.lo}, {"log_hi", iv.hi}, {"oracle", z2.value}, {"contains", in}};
        ++total;
        contained += in;
        r.pass = r.pass && in;
        if (z2.closed_form) {
          const double rel = std::abs(std::exp(iv.mid()) - *z2.closed_form) / *z2.closed_form;
          m["closed_form"] = *z2.closed_form;
          m["closed_form_rel_err"] = rel;
          worst_cf = std::max(worst_cf, rel);
          r.pass = r.pass && rel <= kClosedFormTol;
        }
        r.metrics.push_back(m);
      }
    }
    r.summary = std::to_string(contained) + "/" + std::to_string(total) + " intervals contain the series oracle; 1D closed form rel err " +
                fmt(worst_cf, 3) + " (tol 1e-12)";
    return r;
  }

  // ---- 2 ----------------------------------------------------------------------
  CriterionResult quadrature() const {
    CriterionResult r{2, "quadrature oracle (d=1, n=3, beta=1)", true, {}, {}, 0.0, 60.0};
    const auto t = build_logz_table(1, 1.0, 3);
    const double table_z = std::exp(logz(t, 3).mid());
    const double quad = dyadic_quadrature_z3_d1(1.0, 10);
    const double rel = std::abs(table_z - quad) / quad;
    r.pass = rel <= kQuadratureTol;
    r.metrics = {{"table", table_z}, {"quadrature", quad}, {"rel_err", rel}, {"grid_level", 10}};
    r.summary = "Z(3) table " + fmt(table_z, 12) + " vs grid " + fmt(quad, 12) + ", rel err " + fmt(rel, 3) + " (tol 1e-9)";
    return r;
  }

  // ---- 3 ----------------------------------------------------------------------
  CriterionResult ratio_bounds() const {
    CriterionResult r{3, "ratio lower bounds, n <= 20", true, {}, json::array(), 0.0, 60.0};
    double worst = std::numeric_limits<double>::infinity();
    for (int d = 1; d <= 3; ++d) {
      for (double beta : {0.5, 1.0, 2.0}) {
        const auto t = build_logz_table(d, beta, 21);
        const auto rep = validate_ratio_lower_bounds(t);
        double min_pos = std::numeric_limits<double>::infinity();
        for (const auto& e : rep.entries) {
          if (e.n >= 1) min_pos = std::min(min_pos, e.margin);
        }
        r.pass = r.pass && rep.all_ok;
        worst = std::min(worst, min_pos);
        r.metrics.push_back({{"dim", d}, {"beta", beta}, {"all_ok", rep.all_ok}, {"min_margin_n_ge_1", min_pos}});
      }
    }
    r.summary = "all certified ratios clear the bound; smallest margin over n>=1 is " + fmt(worst, 4);
    return r;
  }

  // ---- 4 ----------------------------------------------------------------------
  CriterionResult two_point() const {
    CriterionResult r{4, "two-point law (d=1, n=2)", true, {}, json::array(), 0.0, 60.0};
    const double beta = 1.0;
    const double p = 1.0 - 0.5 * std::exp(-beta);
    const std::size_t R = sz.two_point;
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(R));
    std::string text;
    for (Method m : {Method::exact, Method::mcmc}) {
      const auto spec = SamplerSpec::make(1, beta, m, 2);
      const auto hits = run_replicates(R, seed_for(4), static_cast<std::uint64_t>(m), opt.jobs, [&](std::size_t, Stream& rng) {
        const auto c = spec.draw(2, rng);
        return (c.points[0].coord(0) < 0.5) != (c.points[1].coord(0) < 0.5) ? 1 : 0;
      });
      double k = 0.0;
      for (int h : hits) k += h;
      const double phat = k / static_cast<double>(R);
      const double z = (phat - p) / se;
      const bool ok = std::abs(z) <= kTwoPointSe;
      r.pass = r.pass && ok;
      r.metrics.push_back({{"method", std::string(method_name(m))}, {"p_hat", phat}, {"p", p}, {"z", z}, {"samples", R}});
      text += std::string(method_name(m)) + " " + fmt(phat, 5) + " (z=" + fmt(z, 3) + ") ";
    }
    r.summary = text + "vs " + fmt(p, 5);
    return r;
  }

  // ---- 5 ----------------------------------------------------------------------
  CriterionResult cross_sampler() const {
    CriterionResult r{5, "cross-sampler equality (d=3, n=8, beta=1)", true, {}, {}, 0.0, 600.0};
    const int n = 8;
    const std::size_t R = sz.cross;
    // per replicate: N(first octant) and the sorted occupancy pattern
    std::map<std::string, std::array<double, 2>> patterns;
    std::array<std::vector<double>, 2> octant{std::vector<double>(n + 1, 0.0), std::vector<double>(n + 1, 0.0)};
    double tau_sum = 0.0;
    for (int s = 0; s < 2; ++s) {
      const Method m = s == 0 ? Method::exact : Method::mcmc;
      const auto spec = SamplerSpec::make(3, 1.0, m, n);
      const auto rows = run_replicates(R, seed_for(5), static_cast<std::uint64_t>(s), opt.jobs, [&](std::size_t, Stream& rng) {
        const auto c = spec.draw(n, rng);
        std::array<int, 8> cnt{};
        for (const auto& x : c.points) {
          const auto cube = cube_of(x, 1);
          ++cnt[static_cast<std::size_t>((cube.index[0] << 2) | (cube.index[1] << 1) | cube.index[2])];
        }
        return cnt;
      });
      for (const auto& cnt : rows) {
        octant[static_cast<std::size_t>(s)][static_cast<std::size_t>(cnt[0])] += 1.0;
        auto sorted = cnt;
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        std::string key;
        for (int v : sorted) key += static_cast<char>('0' + v);
        patterns[key][static_cast<std::size_t>(s)] += 1.0;
      }
    }
    {
      // one long chain for the autocorrelation diagnostic
      Stream rng(seed_for(5), 99);
      const auto res = sample_mcmc(3, n, 1.0, McmcParams::defaults(n, 1.0, 2000), rng);
      tau_sum = res.diagnostics.tau_int;
      r.metrics["mcmc_acceptance_rate"] = res.diagnostics.acceptance_rate;
      r.metrics["mcmc_tau_int_thinned"] = res.diagnostics.tau_int;
    }
    std::vector<double> pa, pb;
    for (const auto& [key, v] : patterns) {
      pa.push_back(v[0]);
      pb.push_back(v[1]);
    }
    const auto c_oct = chi_square_two_sample(octant[0], octant[1]);
    const auto c_pat = chi_square_two_sample(pa, pb);
    r.pass = c_oct.p_value > kChiSquareLevel && c_pat.p_value > kChiSquareLevel;
    r.metrics["samples_per_sampler"] = R;
    r.metrics["octant_chi2"] = {{"statistic", c_oct.statistic}, {"dof", c_oct.dof}, {"p", c_oct.p_value}};
    r.metrics["pattern_chi2"] = {{"statistic", c_pat.statistic}, {"dof", c_pat.dof}, {"p", c_pat.p_value}};
    r.summary = "N(octant) p=" + fmt(c_oct.p_value, 3) + ", occupancy pattern p=" + fmt(c_pat.p_value, 3) + " with " +
                std::to_string(R) + " independent chains (tau_int " + fmt(tau_sum, 3) + ")";
    return r;
  }

  // ---- 6 ----------------------------------------------------------------------
  CriterionResult energy_identity() const {
    CriterionResult r{6, "energy identity fast = naive", true, {}, json::array(), 0.0, 60.0};
    double worst = 0.0;
    for (int d = 1; d <= 3; ++d) {
      Stream rng(seed_for(6), static_cast<std::uint64_t>(d));
      double worst_d = 0.0;
      for (int rep = 0; rep < 1000; ++rep) {
        const int n = 2 + static_cast<int>(rng.below(120));
        Configuration c = sample_iid(d, n, rng);
        // clustered points: copies that share a random-length prefix
        for (std::size_t i = 1; i < c.points.size(); i += 2) {
          if (rng.bernoulli(0.5)) c.points[i] = uniform_point_in(cube_of(c.points[i - 1], 1 + int(rng.below(40))), rng);
        }
        const double a = energy_naive(c), b = energy_fast(c);
        const double rel = std::abs(a - b) / std::max(1.0, std::abs(a));
        worst_d = std::max(worst_d, rel);
      }
      worst = std::max(worst, worst_d);
      r.metrics.push_back({{"dim", d}, {"configurations", 1000}, {"max_rel_err", worst_d}});
    }
    r.pass = worst <= kEnergyTol;
    r.summary = "3000 configurations, max rel err " + fmt(worst, 3) + " (tol 1e-9)";
    return r;
  }

  // ---- 7 ----------------------------------------------------------------------
  CriterionResult mean_counts() const {
    CriterionResult r{7, "mean counts and martingale increments", true, {}, json::array(), 0.0, 900.0};
    int checks = 0, failed = 0;
    for (int d = 1; d <= 3; ++d) {
      for (const std::string& region : {generic_box_text(d), ball_text(d, 0.3)}) {
        ExperimentConfig cfg;
        cfg.experiment = "martingale";
        cfg.dim = d;
        cfg.beta = 1.0;
        cfg.region = region;
        cfg.ns = {16, 64};
        cfg.replicates = sz.mean_counts;
        cfg.seed = seed_for(7) + static_cast<std::uint64_t>(d * 10 + (region[1] == 'a' ? 1 : 0));
        cfg.jobs = opt.jobs;
        cfg.level = 6;
        const auto rep = run_experiment(cfg);
        bool ok = true;
        for (const auto& v : rep.verdicts) {
          if (v.name.starts_with("E N(U)")) {
            ++checks;
            ok = ok && v.pass;
            failed += !v.pass;
          }
        }
        for (const auto& c : rep.checks) {
          if (!c.name.starts_with("martingale increments")) continue;
          for (const auto& it : c.items) {
            ++checks;
            failed += !it.pass;
            ok = ok && it.pass;
          }
        }
        r.pass = r.pass && ok;
        json m{{"dim", d}, {"region", region}, {"pass", ok}};
        json worst = json::array();
        for (const auto& c : rep.checks) {
          if (!c.name.starts_with("martingale increments")) continue;
          double zmax = 0.0;
          for (const auto& it : c.items) zmax = std::max(zmax, it.se > 0 ? std::abs(it.value) / it.se : 0.0);
          worst.push_back({{"check", c.name}, {"max_abs_z", zmax}});
        }
        m["increments"] = worst;
        r.metrics.push_back(m);
      }
    }
    r.summary = std::to_string(checks - failed) + "/" + std::to_string(checks) + " mean and increment checks within 4 SE (" +
                std::to_string(sz.mean_counts) + " replicates each)";
    return r;
  }

  // ---- 8 ----------------------------------------------------------------------
  CriterionResult hyperuniform_3d() const {
    CriterionResult r{8, "3D variance exponent, half-cube", true, {}, {}, 0.0, 1800.0};
    ExperimentConfig cfg;
    cfg.experiment = "variance-scaling";
    cfg.dim = 3;
    cfg.beta = 1.0;
    cfg.region = "box:0,0,0,0.5,1,1";
    cfg.replicates = sz.scaling3;
    cfg.seed = seed_for(8);
    cfg.jobs = opt.jobs;
    const auto rep = run_experiment(cfg);
    const ScalingFit* h = nullptr;
    const ScalingFit* b = nullptr;
    for (const auto& f : rep.fits) (f.sampler == "iid" ? b : h) = &f.fit;
    if (!h || !b) {
      r.pass = false;
      r.summary = "variance fit unavailable (zero variance at some n)";
      return r;
    }
    const bool in_band = h->slope >= 0.45 && h->slope <= 0.85;
    const bool base_ok = b->slope >= 0.9 && b->slope <= 1.1;
    const bool disjoint = h->ci_hi < b->ci_lo;
    r.pass = in_band && base_ok && disjoint;
    r.metrics = {{"region", cfg.region}, {"slope", to_json(*h)}, {"iid_slope", to_json(*b)}};
    json vars = json::array();
    for (const auto& row : rep.rows) vars.push_back({{"sampler", row.sampler}, {"n", row.n}, {"variance", row.moments.variance}});
    r.metrics["variances"] = vars;

    // reported alongside, never part of the verdict: a smooth-boundary region
    ExperimentConfig ball = cfg;
    ball.region = ball_text(3, 0.3);
    ball.baseline = false;
    const auto brep = run_experiment(ball);
    std::string ball_note;
    if (!brep.fits.empty()) {
      r.metrics["ball_slope_informational"] = to_json(brep.fits.front().fit);
      ball_note = "; ball r=0.3 slope " + fmt(brep.fits.front().fit.slope, 3) + " (informational)";
    }
    r.summary = "slope " + fmt(h->slope, 3) + " CI [" + fmt(h->ci_lo, 3) + ", " + fmt(h->ci_hi, 3) + "] (want [0.45, 0.85]); iid " +
                fmt(b->slope, 3) + " CI [" + fmt(b->ci_lo, 3) + ", " + fmt(b->ci_hi, 3) + "]" + ball_note;
    return r;
  }

  // ---- 9 ----------------------------------------------------------------------
  CriterionResult exponents_12() const {
    CriterionResult r{9, "2D and 1D variance exponents", true, {}, json::object(), 0.0, 1200.0};
    std::string text;
    for (int d : {2, 1}) {
      ExperimentConfig cfg;
      cfg.experiment = "variance-scaling";
      cfg.dim = d;
      cfg.beta = 1.0;
      cfg.region = ball_text(d, 0.3);
      cfg.replicates = sz.scaling12;
      cfg.seed = seed_for(9) + static_cast<std::uint64_t>(d);
      cfg.jobs = opt.jobs;
      cfg.baseline = false;
      const auto rep = run_experiment(cfg);
      if (rep.fits.empty()) {
        r.pass = false;
        text += "d=" + std::to_string(d) + " fit unavailable; ";
        continue;
      }
      const auto& f = rep.fits.front().fit;
      const bool ok = d == 2 ? (f.slope >= 0.30 && f.slope <= 0.70) : f.slope <= 0.2;
      r.pass = r.pass && ok;
      r.metrics["d" + std::to_string(d)] = {{"region", cfg.region}, {"fit", to_json(f)}, {"pass", ok}};
      text += "d=" + std::to_string(d) + " slope " + fmt(f.slope, 3) + (d == 2 ? " (want [0.30, 0.70]); " : " (want <= 0.2)");
    }
    r.summary = text;
    return r;
  }

  // ---- 10 ---------------------------------------------------------------------
  CriterionResult linear_contrast() const {
    CriterionResult r{10, "linear statistic contrast (d=2)", true, {}, {}, 0.0, 1200.0};
    ExperimentConfig cfg;
    cfg.experiment = "linear-stats";
    cfg.dim = 2;
    cfg.beta = 1.0;
    cfg.region = generic_box_text(2);
    cfg.linear = {1.0, 1.0};
    cfg.replicates = sz.linear;
    cfg.seed = seed_for(10);
    cfg.jobs = opt.jobs;
    const auto rep = run_experiment(cfg);
    const ScalingFit* ff = nullptr;
    const ScalingFit* fu = nullptr;
    for (const auto& f : rep.fits) (f.statistic == "X(f)" ? ff : fu) = &f.fit;
    if (!ff || !fu) {
      r.pass = false;
      r.summary = "fit unavailable";
      return r;
    }
    r.pass = ff->slope <= 0.25 && ff->slope <= fu->slope - 0.1;
    r.metrics = {{"region", cfg.region}, {"linear_fit", to_json(*ff)}, {"count_fit", to_json(*fu)}};
    r.summary = "Var X(f) slope " + fmt(ff->slope, 3) + " (want <= 0.25), Var N(box) slope " + fmt(fu->slope, 3) +
                " (gap " + fmt(fu->slope - ff->slope, 3) + ", want >= 0.1)";
    return r;
  }

  // ---- 11 ---------------------------------------------------------------------
  CriterionResult conditional() const {
    CriterionResult r{11, "conditional mean and independence", true, {}, json::array(), 0.0, 600.0};
    int total = 0, ok = 0;
    for (int d : {2, 3}) {
      ExperimentConfig cfg;
      cfg.experiment = "conditional";
      cfg.dim = d;
      cfg.beta = 1.0;
      cfg.ns = {12, 16};
      cfg.replicates = sz.conditional;
      cfg.seed = seed_for(11) + static_cast<std::uint64_t>(d);
      cfg.jobs = opt.jobs;
      cfg.level = 1;
      const auto rep = run_experiment(cfg);
      for (const auto& c : rep.checks) {
        ++total;
        ok += c.pass;
        r.pass = r.pass && c.pass;
        r.metrics.push_back({{"dim", d}, {"check", to_json(c)}});
      }
    }
    r.summary = std::to_string(ok) + "/" + std::to_string(total) + " checks pass (d in {2,3}, n in {12,16}, " +
                std::to_string(sz.conditional) + " replicates)";
    return r;
  }

  // ---- 12 ---------------------------------------------------------------------
  CriterionResult repulsion() const {
    CriterionResult r{12, "repulsion (d=3, n=2, beta=2, j=4)", true, {}, {}, 0.0, 600.0};
    const auto spec = SamplerSpec::make(3, 2.0, Method::exact, 2);
    const auto rep = repulsion_check(spec, 2, 4, sz.repulsion, seed_for(12), opt.jobs);
    const auto& it = rep.items.front();
    r.pass = rep.pass;
    r.metrics = to_json(rep);
    r.summary = "max_D P(N(D)>=2) = " + fmt(it.value, 3) + " vs bound " + fmt(it.target, 3) + " + 4 SE over " +
                std::to_string(sz.repulsion) + " samples";
    return r;
  }

  // ---- 13 ---------------------------------------------------------------------
  CriterionResult anticoncentration() const {
    CriterionResult r{13, "anti-concentration at n=64", true, {}, json::array(), 0.0, 600.0};
    std::string text;
    for (int d : {2, 3}) {
      ExperimentConfig cfg;
      cfg.experiment = "anticoncentration";
      cfg.dim = d;
      cfg.beta = 1.0;
      cfg.region = ball_text(d, 0.3);
      cfg.ns = {64};
      cfg.replicates = sz.window;
      cfg.c1 = 0.1;
      cfg.seed = seed_for(13) + static_cast<std::uint64_t>(d);
      cfg.jobs = opt.jobs;
      const auto rep = run_experiment(cfg);
      const auto& it = rep.checks.front().items.front();
      const bool ok = it.value <= kWindowCap;
      r.pass = r.pass && ok;
      r.metrics.push_back({{"dim", d}, {"region", cfg.region}, {"c1", cfg.c1}, {"max_frequency", it.value}});
      text += "d=" + std::to_string(d) + " max window frequency " + fmt(it.value, 3) + "; ";
    }
    r.summary = text + "cap 0.95, c1 = 0.1";
    return r;
  }
};

std::vector<CriterionResult> run_criteria(const AcceptanceOptions& opt, const std::vector<int>& ids) {
  Suite s{opt, sizes_for(opt.quick)};
  std::vector<CriterionResult> out;
  for (int id : ids) {
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    switch (id) {
      case 1: r = s.partition_oracle(); break;
      case 2: r = s.quadrature(); break;
      case 3: r = s.ratio_bounds(); break;
      case 4: r = s.two_point(); break;
      case 5: r = s.cross_sampler(); break;
      case 6: r = s.energy_identity(); break;
      case 7: r = s.mean_counts(); break;
      case 8: r = s.hyperuniform_3d(); break;
      case 9: r = s.exponents_12(); break;
      case 10: r = s.linear_contrast(); break;
      case 11: r = s.conditional(); break;
      case 12: r = s.repulsion(); break;
      case 13: r = s.anticoncentration(); break;
      default: continue;
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (r.seconds > r.budget_seconds) {
      r.pass = false;
      r.summary += " [over time budget]";
    }
    if (opt.on_result) opt.on_result(r);
    out.push_back(std::move(r));
  }
  return out;
}

json criteria_json(const std::vector<CriterionResult>& rs) {
  json arr = json::array();
  for (const auto& r : rs) {
    arr.push_back({{"id", r.id}, {"title", r.title}, {"pass", r.pass}, {"summary", r.summary}, {"metrics", r.metrics}});
  }
  return arr;
}

}  // namespace

double dyadic_quadrature_z3_d1(double beta, int L) {
  if (L < 1 || L > 12) throw std::invalid_argument("grid level must lie in [1, 12]");
  const std::uint64_t cells = std::uint64_t{1} << L;
  const double h = std::ldexp(1.0, -L);
  const double h3 = h * h * h;
  const double z2 = z2_oracle(1, beta).closed_form.value();
  // separation level of two distinct level-L cells
  auto sep = [&](std::uint64_t a, std::uint64_t b) { return L - std::bit_width(a ^ b) + 1; };
  std::vector<double> boltz(static_cast<std::size_t>(L) + 1);
  for (int k = 1; k <= L; ++k) boltz[static_cast<std::size_t>(k)] = std::exp(-beta * k);

  long double distinct = 0.0L, shared = 0.0L;
  for (std::uint64_t a = 0; a < cells; ++a) {
    long double row = 0.0L;
    for (std::uint64_t b = a + 1; b < cells; ++b) {
      const double wab = boltz[static_cast<std::size_t>(sep(a, b))];
      double inner = 0.0;
      for (std::uint64_t c = b + 1; c < cells; ++c) {
        inner += boltz[static_cast<std::size_t>(sep(a, c))] * boltz[static_cast<std::size_t>(sep(b, c))];
      }
      row += static_cast<long double>(wab * inner);
      // two points in cell a and one in b, or the reverse
      const double wab2 = wab * wab;
      shared += 2.0L * static_cast<long double>(wab2);
    }
    distinct += row;
  }
  const double pair_cell = h * h * std::exp(-beta * L) * z2;
  const long double s = 6.0L * h3 * distinct + 3.0L * h * pair_cell * shared;
  const double self = static_cast<double>(cells) * h3 * std::exp(-3.0 * beta * L);
  return static_cast<double>(s) / (1.0 - self);
}

bool AcceptanceReport::pass() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const CriterionResult& r) { return r.pass; });
}

json AcceptanceReport::to_json() const {
  return {{"suite", "acceptance"},
          {"version", version_string()},
          {"mode", quick ? "quick" : "full"},
          {"seed", seed},
          {"criteria", criteria_json(criteria)},
          {"pass", pass()}};
}

AcceptanceReport run_acceptance(const AcceptanceOptions& options) {
  AcceptanceReport rep;
  rep.quick = options.quick;
  rep.seed = options.seed;
  std::vector<int> ids;
  for (int id = 1; id <= 13; ++id) {
    if (options.only.empty() || std::find(options.only.begin(), options.only.end(), id) != options.only.end()) {
      ids.push_back(id);
    }
  }
  const bool want_14 = options.only.empty() || std::find(options.only.begin(), options.only.end(), 14) != options.only.end();
  rep.criteria = run_criteria(options, ids);
  if (!want_14) return rep;

  const auto t0 = std::chrono::steady_clock::now();
  AcceptanceOptions quick = options;
  quick.quick = true;
  quick.only.clear();
  quick.on_result = nullptr;
  std::vector<int> all(13);
  for (int i = 0; i < 13; ++i) all[static_cast<std::size_t>(i)] = i + 1;
  const bool reuse = options.quick && ids.size() == 13;
  const std::string first = criteria_json(reuse ? rep.criteria : run_criteria(quick, all)).dump();
  const std::string second = criteria_json(run_criteria(quick, all)).dump();
  CriterionResult r{14, "determinism of quick verify reports", first == second, {}, {}, 0.0, 3600.0};
  std::uint64_t h1 = 0xcbf29ce484222325ULL;
  for (unsigned char ch : first) h1 = (h1 ^ ch) * 0x100000001b3ULL;
  r.metrics = {{"bytes", first.size()}, {"fnv1a", h1}, {"identical", first == second}};
  r.summary = std::string(first == second ? "two quick runs produced byte-identical reports" : "reports differ") + " (" +
              std::to_string(first.size()) + " bytes)";
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (options.on_result) options.on_result(r);
  rep.criteria.push_back(std::move(r));
  return rep;
}

std::string format_criterion_line(const CriterionResult& r) {
  char head[32];
  std::snprintf(head, sizeof head, "%s [%2d] ", r.pass ? "PASS" : "FAIL", r.id);
  std::ostringstream os;
  os << head << r.title << ": " << r.summary << " (" << fmt(r.seconds, 3) << " s)";
  return os.str();
}

}  // namespace hcg
