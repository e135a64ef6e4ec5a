#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "hcg/acceptance.hpp"
#include "hcg/experiments.hpp"

using namespace hcg;
using nlohmann::json;

namespace {

ExperimentConfig small(const std::string& name, int d) {
  return ExperimentConfig::from_json(
      json{{"experiment", name}, {"dim", d}, {"ns", {8, 12, 16, 24}}, {"replicates", 200}, {"seed", 4}});
}

}  // namespace

TEST_CASE("config parsing applies defaults and rejects bad fields") {
  const ExperimentConfig c = ExperimentConfig::from_json(json{{"experiment", "variance-scaling"}});
  CHECK(c.dim == 3);
  CHECK(c.beta == 1.0);
  CHECK(c.ns == std::vector<int>{16, 32, 64, 128, 256});
  CHECK(c.resolved_region().to_string() == "ball:0.5,0.5,0.5,0.3");
  CHECK(ExperimentConfig::from_json(json{{"experiment", "microscopic"}, {"dim", 2}}).resolved_region().to_string() ==
        "ball:0,0,0.5");

  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"experiment", "nope"}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"dim", 2}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"experiment", "martingale"}, {"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"experiment", "martingale"}, {"beta", -1}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"experiment", "martingale"}, {"dim", "3"}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"experiment", "martingale"}, {"ns", json::array()}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"experiment", "martingale"}, {"region", "box:0,1"}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"experiment", "linear-stats"}, {"dim", 2}, {"linear", {1}}}),
                  ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"experiment", "martingale"}, {"method", "gibbs"}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json::array()), ConfigError);
}

TEST_CASE("config serialization round-trips") {
  ExperimentConfig c = small("linear-stats", 2);
  c.linear = {1.0, -0.5};
  const ExperimentConfig back = ExperimentConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK_FALSE(c.to_json().contains("out"));
}

TEST_CASE("variance scaling run produces rows, fits and a CSV") {
  const ExperimentReport r = run_experiment(small("variance-scaling", 2));
  CHECK_FALSE(r.rows.empty());
  CHECK_FALSE(r.fits.empty());
  CHECK_FALSE(r.runtime_seconds.has_value());
  for (const auto& row : r.rows) {
    CHECK(row.moments.count == 200);
    CHECK(row.moments.variance > 0.0);
  }
  std::ostringstream os;
  r.write_csv(os);
  const std::string csv = os.str();
  CHECK(csv.rfind("statistic,sampler,n,param,replicate,value\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(r.samples.size()) + 1);
  const json j = r.to_json();
  CHECK(j.contains("config"));
  CHECK(j.contains("version"));
}

TEST_CASE("reports are reproducible and thread-count independent") {
  ExperimentConfig c = small("variance-scaling", 1);
  const json a = run_experiment(c).to_json();
  c.jobs = 3;
  json b = run_experiment(c).to_json();
  b["config"]["jobs"] = 1;
  CHECK(a == b);
}

TEST_CASE("every experiment runs on a small grid") {
  for (std::string name : {"martingale", "conditional", "repulsion", "anticoncentration", "linear-stats", "microscopic"}) {
    ExperimentConfig c = small(name, 2);
    if (name == "conditional") c.ns = {8, 12};
    if (name == "microscopic") c.lambdas = {1.0, 2.0, 3.0};
    CAPTURE(name);
    const ExperimentReport r = run_experiment(c);
    CHECK((!r.rows.empty() || !r.checks.empty()));
    CHECK(r.to_json().at("config").at("experiment") == name);
  }
}

TEST_CASE("microscopic windows must fit in the cube") {
  ExperimentConfig c = small("microscopic", 2);
  c.lambdas = {10.0};
  CHECK_THROWS_AS(static_cast<void>(run_experiment(c)), ConfigError);
}

TEST_CASE("number formatting is shortest round-trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(2.0) == "2");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("dyadic quadrature is independent of the grid depth") {
  const double fine = dyadic_quadrature_z3_d1(1.0, 10);
  CHECK(dyadic_quadrature_z3_d1(1.0, 6) == doctest::Approx(fine).epsilon(1e-12));
}

TEST_CASE("acceptance criteria can be run individually") {
  AcceptanceOptions o;
  o.quick = true;
  o.only = {1, 6};
  const AcceptanceReport r = run_acceptance(o);
  REQUIRE(r.criteria.size() == 2);
  CHECK(r.criteria[0].id == 1);
  CHECK(r.pass());
  const std::string line = format_criterion_line(r.criteria[1]);
  CHECK(line.rfind("PASS", 0) == 0);
  CHECK_FALSE(r.to_json().dump().empty());
}
