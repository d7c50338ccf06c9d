#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "qsim/scenario.hpp"

using namespace qsim;

namespace {

ScenarioConfig make(Scenario s) {
  ScenarioConfig c;
  c.scenario = s;
  return c;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("scenario names round-trip") {
  CHECK(scenario_names().size() == 6);
  for (const auto& n : scenario_names()) {
    const auto s = parse_scenario(n);
    REQUIRE(s.has_value());
    CHECK(scenario_name(*s) == n);
  }
  CHECK_FALSE(parse_scenario("bogus").has_value());
}

TEST_CASE("config validation") {
  auto c = make(Scenario::SecondLaw);
  CHECK_NOTHROW(c.validate());
  c.dims = {1, 2};
  CHECK_THROWS_AS(c.validate(), UsageError);
  c.dims = {8, 9};
  CHECK_THROWS_AS(c.validate(), CapacityError);
  c.dims = {2, 2};
  c.trials = 0;
  CHECK_THROWS_AS(c.validate(), UsageError);
  c.trials = 3;
  c.epsilon = -0.1;
  CHECK_THROWS_AS(c.validate(), UsageError);
  c.epsilon = 0.1;
  c.epsilon_sweep = std::vector<double>{0.1, 0.05};
  CHECK_THROWS_AS(c.validate(), UsageError);
  c.epsilon_sweep = std::vector<double>{};
  CHECK_THROWS_AS(c.validate(), UsageError);
  c.epsilon_sweep.reset();
  c.weights = "skewed";
  CHECK_THROWS_AS(c.validate(), UsageError);
  c.weights = "uniform";
  c.threads = 0;
  CHECK_THROWS_AS(c.validate(), UsageError);

  auto copy = make(Scenario::CopyDemo);
  copy.dims = {3, 2};
  CHECK_THROWS_AS(copy.validate(), UsageError);
  copy.dims = {2, 2, 2};
  CHECK_THROWS_AS(copy.validate(), UsageError);
  CHECK_THROWS_AS(run_scenario(copy), UsageError);
}

TEST_CASE("config JSON round trip and strict keys") {
  ScenarioConfig c = make(Scenario::SecondLaw);
  c.seed = 18446744073709551615ULL;
  c.dims = {3, 2};
  c.trials = 17;
  c.epsilon = 0.125;
  c.epsilon_sweep = std::vector<double>{0.0, 0.5};
  c.weights = "uniform";
  c.threads = 2;
  c.output_path = "out.json";
  c.format = OutputFormat::Csv;
  const Json j = c.to_json();
  const auto back = ScenarioConfig::from_json(j, ScenarioConfig{});
  CHECK(back.to_json() == j);
  CHECK(back.seed == c.seed);

  CHECK_THROWS_AS(ScenarioConfig::from_json(Json{{"scenaro", "copy-demo"}}, {}), UsageError);
  CHECK_THROWS_AS(ScenarioConfig::from_json(Json{{"scenario", "bogus"}}, {}), UsageError);
  CHECK_THROWS_AS(ScenarioConfig::from_json(Json{{"seed", -1}}, {}), UsageError);
  CHECK_THROWS_AS(ScenarioConfig::from_json(Json{{"trials", 0}}, {}), UsageError);
  CHECK_THROWS_AS(ScenarioConfig::from_json(Json{{"format", "xml"}}, {}), UsageError);
  CHECK_THROWS_AS(ScenarioConfig::from_json(Json{{"dims", "2,2"}}, {}), UsageError);
  try {
    ScenarioConfig::from_json(Json{{"scenario", "bogus"}}, {});
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("second-law") != std::string::npos);
  }

  // Missing keys keep the base values.
  ScenarioConfig base = make(Scenario::PayoffDemo);
  base.seed = 5;
  const auto merged = ScenarioConfig::from_json(Json{{"trials", 9}}, base);
  CHECK(merged.seed == 5);
  CHECK(merged.scenario == Scenario::PayoffDemo);
  CHECK(merged.trials == std::optional<std::size_t>(9));
}

TEST_CASE("copy-demo on qubits reports CNOT phases and the computational family") {
  auto c = make(Scenario::CopyDemo);
  c.seed = 1;
  c.trials = 10;
  const auto r = run_scenario(c);
  const auto& res = r.results;
  REQUIRE(res["spectral_phases"].size() == 2);
  CHECK(res["spectral_phases"][0].get<double>() == 0.0);
  CHECK(std::abs(res["spectral_phases"][1].get<double>() - M_PI) <= 1e-12);
  CHECK(res["copied_family_computational"].get<bool>());
  CHECK(res["copiable_families"].size() == 1);
  CHECK(res["random_instances"]["max_invariance_residual"].get<double>() <= 1e-9);
  CHECK(res["random_instances"]["max_dyadic_residual"].get<double>() <= 1e-9);
  CHECK(r.config["seed"] == 1);
  CHECK(r.csv.rfind("key,value\n", 0) == 0);
}

TEST_CASE("payoff-demo default reports one half") {
  const auto r = run_scenario(make(Scenario::PayoffDemo));
  CHECK(std::abs(r.results["expected_payoff"].get<double>() - 0.5) <= 1e-12);
  CHECK(r.results["frequency"]["n_trials"] == 10000);
}

TEST_CASE("decoherence-demo and no-cloning payloads") {
  auto d = make(Scenario::DecoherenceDemo);
  d.trials = 50;
  const auto r = run_scenario(d);
  CHECK(r.results["branches"].size() == 2);
  CHECK(r.results["cross_branch_norm"].get<double>() <= 1e-12);
  CHECK(r.results["monte_carlo"]["violations"] == 0);
  CHECK(std::abs(r.results["S1_after"].get<double>() - 1.0) <= 1e-12);

  const auto n = run_scenario(make(Scenario::NoCloning));
  CHECK(std::abs(n.results["fidelity_superposition"][0].get<double>() - 0.5) <= 1e-10);
  CHECK(std::abs(n.results["fidelity_basis"][1].get<double>() - 1.0) <= 1e-10);

  auto q = make(Scenario::NoCloning);
  q.dims = {3, 3};
  const auto n3 = run_scenario(q);
  CHECK(std::abs(n3.results["fidelity_superposition"][0].get<double>() - 1.0 / 3.0) <= 1e-10);
}

TEST_CASE("second-law at epsilon 0 changes no entropy") {
  for (std::uint64_t seed : {1ULL, 2ULL, 99ULL, 18446744073709551615ULL}) {
    auto c = make(Scenario::SecondLaw);
    c.seed = seed;
    c.epsilon = 0.0;
    c.trials = 20;
    const auto r = run_scenario(c);
    for (const auto& row : r.results["rows"]) {
      CHECK(std::abs(row["dS1"].get<double>()) <= 1e-9);
      CHECK(std::abs(row["dS2"].get<double>()) <= 1e-9);
    }
    CHECK(r.results["summary"]["violation_fraction_1"].get<double>() == 0.0);
  }
}

TEST_CASE("second-law reports the counterexample and per-trial rows") {
  auto c = make(Scenario::SecondLaw);
  c.trials = 1;
  c.epsilon = 0.1;
  const auto r = run_scenario(c);
  CHECK(r.results["counterexample"]["dS1"].get<double>() == doctest::Approx(-1.0).epsilon(1e-12));
  REQUIRE(r.results["rows"].size() == 1);
  const auto again = run_scenario(c);
  CHECK(again.results["rows"][0].dump() == r.results["rows"][0].dump());
  CHECK(r.csv == again.csv);
  CHECK(second_law_trial(c, 0.1, 0).row.dump() == r.results["rows"][0].dump());
}

TEST_CASE("epsilon sweep rows") {
  auto c = make(Scenario::SecondLaw);
  c.epsilon_sweep = std::vector<double>{0.0, 0.05, 0.1, 0.2};
  c.trials = 30;
  const auto sweep = run_second_law_sweep(c);
  REQUIRE(sweep.rows.size() == 4);
  CHECK(std::abs(sweep.rows[0].mean_ds1) <= 1e-9);
  CHECK(std::abs(sweep.rows[0].mean_ds2) <= 1e-9);
  CHECK(sweep.rows[0].violation_fraction_1 == 0.0);
  CHECK(sweep.rows[0].violation_fraction_2 == 0.0);
  CHECK(sweep.to_csv().rfind("epsilon,trials,mean_dS1,mean_dS2,violation_fraction_1,violation_fraction_2\n", 0) == 0);

  c.weights = "uniform";
  const auto uniform = run_second_law_sweep(c);
  for (std::size_t k = 1; k < uniform.rows.size(); ++k) {
    CHECK(uniform.rows[k].mean_ds1 >= uniform.rows[k - 1].mean_ds1 - 1e-12);
  }
  auto bad = c;
  bad.epsilon_sweep.reset();
  CHECK_THROWS_AS(run_second_law_sweep(bad), UsageError);
}

TEST_CASE("shipped sweep golden files regenerate byte-identically") {
  auto c = make(Scenario::SecondLaw);
  c.epsilon_sweep = std::vector<double>{0.0, 0.05, 0.1, 0.2};
  c.weights = "uniform";
  CHECK(run_second_law_sweep(c).to_csv() == read_file(std::string(QSIM_GOLDEN_DIR) + "/second_law_sweep_uniform.csv"));
  c.weights = "random";
  CHECK(run_second_law_sweep(c).to_csv() == read_file(std::string(QSIM_GOLDEN_DIR) + "/second_law_sweep_random.csv"));
}

TEST_CASE("identical configs give identical payloads; threads do not matter") {
  for (const auto& name : scenario_names()) {
    auto c = make(*parse_scenario(name));
    c.trials = 3;
    if (c.scenario == Scenario::PayoffDemo) c.trials = 500;
    const auto a = run_scenario(c);
    const auto b = run_scenario(c);
    CHECK_MESSAGE(a.results.dump() == b.results.dump(), name);
    CHECK(a.config.dump() == b.config.dump());
    CHECK(a.csv == b.csv);
    auto threaded = c;
    threaded.threads = 3;
    const auto t = run_scenario(threaded);
    CHECK_MESSAGE(t.results.dump() == a.results.dump(), name);
  }
}

TEST_CASE("report envelope") {
  auto c = make(Scenario::NoCloning);
  const auto r = run_scenario(c);
  const Json j = r.to_json();
  for (const char* key : {"scenario", "config", "results", "tool_version", "wall_time_ms"}) CHECK(j.contains(key));
  CHECK(j["scenario"] == "no-cloning");
  CHECK(j["tool_version"] == QSIM_VERSION);
  CHECK(r.render(OutputFormat::Json).back() == '\n');
  CHECK(r.render(OutputFormat::Csv) == r.csv);
}

TEST_CASE("property suite passes by default") {
  const auto report = run_property_suite({});
  CHECK(report.passed());
  CHECK(report.properties.size() == 20);
  CHECK_FALSE(report.reduced_confidence);
  for (const auto& p : report.properties) {
    CHECK_MESSAGE(p.passed(), p.id);
    CHECK(p.trials >= 5);
  }
}

TEST_CASE("property suite with one trial notes reduced confidence") {
  PropertySuiteOptions opt;
  opt.trials = 1;
  const auto report = run_property_suite(opt);
  CHECK(report.passed());
  CHECK(report.reduced_confidence);
  CHECK(report.to_json().contains("note"));
  for (const auto& p : report.properties) CHECK(p.trials == 1);
}

TEST_CASE("a sign-flipped entropy is caught by named entropy properties") {
  PropertySuiteOptions opt;
  opt.trials = 20;
  opt.seed = 77;
  opt.entropy = [](const DensityMatrix& rho) { return -von_neumann_entropy(rho); };
  const auto report = run_property_suite(opt);
  CHECK_FALSE(report.passed());
  std::vector<std::string> failed;
  for (const auto& p : report.properties) {
    if (p.passed()) continue;
    failed.push_back(p.id);
    CHECK(p.id.rfind("entropy.", 0) == 0);
    REQUIRE(p.first_failing_trial.has_value());
    CHECK(p.reproduction["seed"] == 77);
    CHECK(p.reproduction["property"] == p.id);
    CHECK(p.reproduction["trials"].get<std::size_t>() == *p.first_failing_trial + 1);
  }
  CHECK(std::find(failed.begin(), failed.end(), "entropy.bounds") != failed.end());
  CHECK(std::find(failed.begin(), failed.end(), "entropy.decoherence_monotone") != failed.end());

  auto c = make(Scenario::PropertySuite);
  c.trials = 2;
  CHECK(run_scenario(c).passed);
}
