#include "qsim/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "qsim/decision_payoff.hpp"
#include "qsim/heisenberg_flow.hpp"

#ifndef QSIM_VERSION
#define QSIM_VERSION "0.0.0"
#endif

namespace qsim {

namespace {

constexpr double kViolation = 1e-9;

const std::vector<std::pair<Scenario, std::string>>& scenario_table() {
  static const std::vector<std::pair<Scenario, std::string>> table = {
      {Scenario::CopyDemo, "copy-demo"},     {Scenario::DecoherenceDemo, "decoherence-demo"},
      {Scenario::PayoffDemo, "payoff-demo"}, {Scenario::NoCloning, "no-cloning"},
      {Scenario::SecondLaw, "second-law"},   {Scenario::PropertySuite, "property-suite"},
  };
  return table;
}

std::string joined_names() {
  std::string out;
  for (const auto& n : scenario_names()) out += (out.empty() ? "" : ", ") + n;
  return out;
}

// Rank-1 diagonal 0/1 projectors: the family is the computational basis.
bool is_computational(const ProjectorSet& ps) {
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (ps.rank(i) != 1) return false;
    const auto& p = ps[i];
    ComplexMatrix diag = p.diagonal().asDiagonal();
    if (max_abs(p - diag) > tol::kProjector) return false;
  }
  return true;
}

Json invariance_json(const InvarianceResult& r) { return {{"invariant", r.invariant}, {"residual", r.residual}}; }

std::vector<double> iota_values(std::size_t n) {
  std::vector<double> v(n);
  std::iota(v.begin(), v.end(), 0.0);
  return v;
}

std::string kv_csv(const std::vector<std::pair<std::string, double>>& rows) {
  std::string out = "key,value\n";
  for (const auto& [k, v] : rows) out += csv_escape(k) + "," + csv_real(v) + "\n";
  return out;
}

// ---------------------------------------------------------------------------

std::pair<Json, std::string> run_copy_demo(const ScenarioConfig& cfg) {
  const std::size_t d1 = cfg.dims[0];
  const std::size_t d2 = cfg.dims[1];
  const CopyInteraction ci = controlled_shift_interaction(d1, d2);
  const SpectralDecomposition sd = spectral_decompose_unitary(ci.unitary);
  const CopiableFamilies fam = copiable_projector_families(ci.unitary);
  const CopyReport report = analyze_copy(ci);

  Json phases = Json::array();
  Json ranks = Json::array();
  for (std::size_t k = 0; k < sd.phases.size(); ++k) {
    phases.push_back(sd.phases[k]);
    ranks.push_back(sd.projectors.rank(k));
  }

  Json families = Json::array();
  bool computational = false;
  for (const auto& f : fam.families) {
    Json fj;
    fj["labels"] = f.labels();
    Json fr = Json::array();
    for (std::size_t i = 0; i < f.size(); ++i) fr.push_back(f.rank(i));
    fj["ranks"] = fr;
    fj["computational"] = is_computational(f);
    computational = computational || is_computational(f);
    families.push_back(fj);
  }

  const auto on_proj1 = check_invariance(ObservableSpec(iota_values(d1), ci.proj1), ci);
  const auto on_fourier =
      check_invariance(ObservableSpec(iota_values(d1), ProjectorSet::from_basis(fourier_basis(d1))), ci);

  const std::size_t n = cfg.effective_trials();
  struct Residuals {
    double invariance;
    double dyadic;
  };
  const CounterRng base(cfg.seed);
  const auto per_trial = parallel_map<Residuals>(n, cfg.threads, [&](std::size_t t) {
    CounterRng rng = base.substream(t);
    const CopyInteraction r = random_copy_interaction(d1, d2, rng);
    std::vector<double> alphas(r.proj1.size());
    for (auto& a : alphas) a = rng.normal();
    return Residuals{check_invariance(ObservableSpec(alphas, r.proj1), r).residual, analyze_copy(r).max_residual};
  });
  double inv_max = 0.0;
  double dyadic_max = 0.0;
  for (const auto& r : per_trial) {
    inv_max = std::max(inv_max, r.invariance);
    dyadic_max = std::max(dyadic_max, r.dyadic);
  }

  Json results;
  results["interaction"] = ci.id;
  results["unitary"] = matrix_to_json(ci.unitary.matrix());
  results["spectral_phases"] = phases;
  results["spectral_ranks"] = ranks;
  results["copiable_families"] = families;
  results["copied_family_computational"] = computational;
  results["family_unique"] = fam.unique;
  results["invariant_algebra_dim"] = fam.algebra_dim;
  results["no_interaction"] = fam.no_interaction;
  results["copy_report"] = report.to_json();
  results["invariance"] = {{"proj1_observable", invariance_json(on_proj1)},
                           {"fourier_observable", invariance_json(on_fourier)}};
  results["random_instances"] = {{"count", n}, {"max_invariance_residual", inv_max}, {"max_dyadic_residual", dyadic_max}};

  std::vector<std::pair<std::string, double>> rows;
  for (std::size_t k = 0; k < sd.phases.size(); ++k) rows.emplace_back("spectral_phase_" + std::to_string(k), sd.phases[k]);
  rows.emplace_back("copied_family_computational", computational ? 1.0 : 0.0);
  rows.emplace_back("proj1_invariance_residual", on_proj1.residual);
  rows.emplace_back("fourier_invariance_residual", on_fourier.residual);
  rows.emplace_back("dyadic_residual", report.max_residual);
  rows.emplace_back("random_max_invariance_residual", inv_max);
  rows.emplace_back("random_max_dyadic_residual", dyadic_max);
  return {results, kv_csv(rows)};
}

std::pair<Json, std::string> run_decoherence_demo(const ScenarioConfig& cfg) {
  const std::size_t d1 = cfg.dims[0];
  const std::size_t d2 = cfg.dims[1];
  const CopyInteraction ci = controlled_shift_interaction(d1, d2);
  const SubsystemLayout layout({d1, d2});
  const Ket plus = Ket::Constant(static_cast<Eigen::Index>(d1), Complex(1.0 / std::sqrt(static_cast<double>(d1)), 0.0));
  const DensityMatrix rho0 = DensityMatrix::pure(tensor_product(plus, basis_ket(d2, 0)), layout);
  const BranchDecomposition bd = branch_decomposition(rho0, ci);

  Json branches = Json::array();
  std::string csv = "label,weight,relative_state_purity\n";
  for (const auto& b : bd.branches) {
    branches.push_back({{"label", b.label}, {"weight", b.weight}, {"relative_state_purity", b.relative_state.purity()}});
    csv += csv_escape(b.label) + "," + csv_real(b.weight) + "," + csv_real(b.relative_state.purity()) + "\n";
  }
  const double s1_before = von_neumann_entropy(partial_trace(rho0, {0}));
  const double s1_after = von_neumann_entropy(partial_trace(bd.evolved, {0}));

  // Monte Carlo over random states and projective measurements.
  struct Pair {
    double margin;
    double equality_gap;
  };
  const std::size_t n = cfg.effective_trials();
  const CounterRng base(cfg.seed);
  const auto pairs = parallel_map<Pair>(n, cfg.threads, [&](std::size_t t) {
    CounterRng rng = base.substream(t);
    const std::size_t d = 2 + static_cast<std::size_t>(rng.uniform() * 7.0);
    const std::size_t rank = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(d));
    const DensityMatrix rho = random_density(d, rank, rng);
    const auto blocks = random_composition(d, rng);
    const ProjectorSet ps = random_projector_set(d, blocks, rng);
    const double margin = entropy_after_decoherence_geq(rho, ps).margin;
    const EigenSystem es = hermitian_eigendecomposition(rho.matrix());
    const double gap = std::abs(entropy_after_decoherence_geq(rho, ProjectorSet::from_basis(es.vectors)).margin);
    return Pair{margin, gap};
  });
  std::size_t violations = 0;
  double min_margin = pairs.empty() ? 0.0 : pairs.front().margin;
  double max_gap = 0.0;
  for (const auto& p : pairs) {
    if (p.margin < -kViolation) ++violations;
    min_margin = std::min(min_margin, p.margin);
    max_gap = std::max(max_gap, p.equality_gap);
  }

  Json results;
  results["interaction"] = ci.id;
  results["copied"] = bd.copied;
  results["branches"] = branches;
  results["cross_branch_norm"] = bd.cross_branch_norm;
  results["record_overlap"] = bd.record_overlap;
  results["S1_before"] = s1_before;
  results["S1_after"] = s1_after;
  results["monte_carlo"] = {{"pairs", n},
                            {"violations", violations},
                            {"min_margin", min_margin},
                            {"max_eigenbasis_equality_gap", max_gap}};
  return {results, csv};
}

std::pair<Json, std::string> run_payoff_demo(const ScenarioConfig& cfg) {
  const ComplexMatrix zero = outer(basis_ket(2, 0), basis_ket(2, 0));
  const RelativeState v = RelativeState::from_projector(zero);
  ComplexMatrix pm = fourier_basis(2);
  const PayoffObservable a({1.0, 0.0}, ProjectorSet::from_basis(pm, {"+", "-"}));
  const double payoff = expected_payoff(v, a);
  const ComplexMatrix product = payoff_operator(v, a);
  const FrequencyReport freq = frequency_experiment(v, a, cfg.effective_trials(), CounterRng(cfg.seed));

  Json rows = Json::array();
  for (const auto& r : freq.rows) {
    rows.push_back({{"outcome_label", r.outcome_label},
                    {"weight", r.weight},
                    {"count", r.count},
                    {"frequency", r.frequency},
                    {"abs_deviation", r.abs_deviation}});
  }
  Json results;
  results["state"] = matrix_to_json(v.state().matrix());
  results["observable"] = matrix_to_json(a.matrix());
  results["expected_payoff"] = payoff;
  results["payoff_operator"] = matrix_to_json(product);
  results["frequency"] = {{"n_trials", freq.n_trials},
                          {"rows", rows},
                          {"expected_payoff", freq.expected_payoff},
                          {"empirical_payoff", freq.empirical_payoff},
                          {"max_abs_deviation", freq.max_abs_deviation}};
  return {results, freq.to_csv()};
}

std::pair<Json, std::string> run_no_cloning(const ScenarioConfig& cfg) {
  const std::size_t d1 = cfg.dims[0];
  const std::size_t d2 = cfg.dims[1];
  const CopyInteraction cnot = controlled_shift_interaction(d1, d2);
  const Ket blank = basis_ket(d2, 0);
  const ComplexMatrix f = fourier_basis(d1);
  const std::array<Ket, 2> basis_sources = {basis_ket(d1, 0), basis_ket(d1, 1)};
  const std::array<Ket, 2> super_sources = {f.col(0), f.col(1)};
  const auto basis_fid = no_cloning_demo(basis_sources, cnot, blank);
  const auto super_fid = no_cloning_demo(super_sources, cnot, blank);
  const CopyInteraction idle =
      build_copy_unitary(RealMatrix::Zero(static_cast<Eigen::Index>(d1), static_cast<Eigen::Index>(d2)),
                         ProjectorSet::computational(d1), ProjectorSet::computational(d2), "IDENTITY");
  const auto idle_fid = no_cloning_demo(super_sources, idle, blank);

  auto pair_json = [](const FidelityPair& p) { return Json::array({p.first, p.second}); };
  Json results;
  results["interaction"] = cnot.id;
  results["sources"] = {{"basis", {"|0>", "|1>"}}, {"superposition", {"|f0>", "|f1>"}}};
  results["fidelity_basis"] = pair_json(basis_fid);
  results["fidelity_superposition"] = pair_json(super_fid);
  results["fidelity_identity_copier"] = pair_json(idle_fid);
  results["superposition_bound"] = 1.0 / static_cast<double>(d1);

  const std::string csv = "copier,source,fidelity\n" + cnot.id + ",|0>," + csv_real(basis_fid.first) + "\n" + cnot.id +
                          ",|1>," + csv_real(basis_fid.second) + "\n" + cnot.id + ",|f0>," +
                          csv_real(super_fid.first) + "\n" + cnot.id + ",|f1>," + csv_real(super_fid.second) +
                          "\n" + idle.id + ",|f0>," + csv_real(idle_fid.first) + "\n" + idle.id + ",|f1>," +
                          csv_real(idle_fid.second) + "\n";
  return {results, csv};
}

struct EpsilonAggregate {
  SweepRow row;
  double mean_ds1_measured = 0.0;
  double mean_ds2_measured = 0.0;
  std::vector<SecondLawTrial> trials;
};

EpsilonAggregate aggregate_epsilon(const ScenarioConfig& cfg, double epsilon) {
  const std::size_t n = cfg.effective_trials();
  EpsilonAggregate agg;
  agg.trials = parallel_map<SecondLawTrial>(n, cfg.threads,
                                            [&](std::size_t t) { return second_law_trial(cfg, epsilon, t); });
  std::size_t v1 = 0;
  std::size_t v2 = 0;
  double s1 = 0, s2 = 0, m1 = 0, m2 = 0;
  for (const auto& t : agg.trials) {
    s1 += t.ds1;
    s2 += t.ds2;
    m1 += t.ds1_measured;
    m2 += t.ds2_measured;
    if (t.ds1 < -kViolation) ++v1;
    if (t.ds2 < -kViolation) ++v2;
  }
  const double dn = static_cast<double>(n);
  agg.row = SweepRow{epsilon, n, s1 / dn, s2 / dn, static_cast<double>(v1) / dn, static_cast<double>(v2) / dn};
  agg.mean_ds1_measured = m1 / dn;
  agg.mean_ds2_measured = m2 / dn;
  return agg;
}

Json sweep_row_json(const SweepRow& r) {
  return {{"epsilon", r.epsilon},
          {"trials", r.trials},
          {"mean_dS1", r.mean_ds1},
          {"mean_dS2", r.mean_ds2},
          {"violation_fraction_1", r.violation_fraction_1},
          {"violation_fraction_2", r.violation_fraction_2}};
}

Json counterexample_json() {
  const SelectionFixture fx = relabeling_counterexample();
  const SelectionReport r = apply_selection_process(fx.state, fx.theta);
  return {{"S1_t1", r.s1_t1}, {"S2_t1", r.s2_t1}, {"S1_t2", r.s1_t2},
          {"S2_t2", r.s2_t2}, {"dS1", r.ds1},     {"dS2", r.ds2}};
}

std::pair<Json, std::string> run_second_law(const ScenarioConfig& cfg) {
  Json results;
  results["weights"] = cfg.weights;
  results["counterexample"] = counterexample_json();
  if (cfg.epsilon_sweep) {
    const SweepReport sweep = run_second_law_sweep(cfg);
    results["sweep"] = sweep.to_json();
    return {results, sweep.to_csv()};
  }
  const EpsilonAggregate agg = aggregate_epsilon(cfg, cfg.epsilon);
  results["summary"] = sweep_row_json(agg.row);
  results["summary"]["mean_dS1_measured"] = agg.mean_ds1_measured;
  results["summary"]["mean_dS2_measured"] = agg.mean_ds2_measured;
  Json rows = Json::array();
  std::string csv = "trial,epsilon,S1_t1,S2_t1,S1_t2,S2_t2,dS1,dS2,S_global,dS1_measured,dS2_measured\n";
  for (std::size_t t = 0; t < agg.trials.size(); ++t) {
    const auto& tr = agg.trials[t];
    rows.push_back(tr.row);
    const Json& r = tr.row;
    csv += std::to_string(t) + "," + csv_real(cfg.epsilon) + "," + csv_real(r["S1_t1"].get<double>()) + "," +
           csv_real(r["S2_t1"].get<double>()) + "," + csv_real(r["S1_t2"].get<double>()) + "," +
           csv_real(r["S2_t2"].get<double>()) + "," + csv_real(tr.ds1) + "," + csv_real(tr.ds2) + "," +
           csv_real(r["S_global"].get<double>()) + "," + csv_real(tr.ds1_measured) + "," +
           csv_real(tr.ds2_measured) + "\n";
  }
  results["rows"] = rows;
  return {results, csv};
}

std::pair<Json, std::string> run_suite(const ScenarioConfig& cfg, bool& passed) {
  PropertySuiteOptions opt;
  opt.seed = cfg.seed;
  opt.trials = cfg.trials;
  opt.threads = cfg.threads;
  const PropertySuiteReport report = run_property_suite(opt);
  passed = report.passed();
  std::string csv = "id,trials,violations,worst,passed\n";
  for (const auto& p : report.properties) {
    csv += p.id + "," + std::to_string(p.trials) + "," + std::to_string(p.violations) + "," + csv_real(p.worst) + "," +
           (p.passed() ? "true" : "false") + "\n";
  }
  return {report.to_json(), csv};
}

}  // namespace

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [s, n] : scenario_table()) out.push_back(n);
    return out;
  }();
  return names;
}

std::string scenario_name(Scenario s) {
  for (const auto& [k, n] : scenario_table()) {
    if (k == s) return n;
  }
  throw UsageError("unknown scenario enum value");
}

std::optional<Scenario> parse_scenario(std::string_view name) {
  for (const auto& [k, n] : scenario_table()) {
    if (n == name) return k;
  }
  return std::nullopt;
}

void ScenarioConfig::validate() const {
  if (dims.empty()) throw UsageError("dims must not be empty");
  std::size_t total = 1;
  for (std::size_t d : dims) {
    if (d < 2) throw UsageError("every entry of dims must be >= 2");
    if (d > kMaxTotalDim || total * d > kMaxTotalDim) {
      throw CapacityError("total dimension exceeds " + std::to_string(kMaxTotalDim));
    }
    total *= d;
  }
  if (trials && *trials < 1) throw UsageError("trials must be >= 1");
  if (!std::isfinite(epsilon) || epsilon < 0.0) throw UsageError("epsilon must be a finite real >= 0");
  if (epsilon_sweep) {
    if (epsilon_sweep->empty()) throw UsageError("epsilon_sweep must be nonempty");
    for (std::size_t i = 0; i < epsilon_sweep->size(); ++i) {
      const double e = (*epsilon_sweep)[i];
      if (!std::isfinite(e) || e < 0.0) throw UsageError("epsilon_sweep entries must be finite reals >= 0");
      if (i > 0 && !(e > (*epsilon_sweep)[i - 1])) throw UsageError("epsilon_sweep must be strictly ascending");
    }
  }
  if (weights != "random" && weights != "uniform") throw UsageError("weights must be 'random' or 'uniform'");
  if (threads < 1) throw UsageError("threads must be >= 1");

  switch (scenario) {
    case Scenario::CopyDemo:
    case Scenario::DecoherenceDemo:
    case Scenario::NoCloning:
      if (dims.size() != 2 || dims[0] > dims[1]) {
        throw UsageError(scenario_name(scenario) + " requires dims d1,d2 with d1 <= d2");
      }
      break;
    case Scenario::SecondLaw:
      if (dims.size() != 2) throw UsageError("second-law requires two dims");
      break;
    case Scenario::PayoffDemo:
    case Scenario::PropertySuite:
      break;
  }
}

std::size_t ScenarioConfig::effective_trials() const {
  if (trials) return *trials;
  switch (scenario) {
    case Scenario::CopyDemo:
      return 100;
    case Scenario::DecoherenceDemo:
      return 1000;
    case Scenario::PayoffDemo:
      return 10000;
    case Scenario::SecondLaw:
      return 200;
    case Scenario::NoCloning:
    case Scenario::PropertySuite:
      return 1;
  }
  return 1;
}

Json ScenarioConfig::to_json() const {
  Json j;
  j["scenario"] = scenario_name(scenario);
  j["seed"] = seed;
  j["dims"] = dims;
  j["trials"] = trials ? Json(*trials) : Json(nullptr);
  j["epsilon"] = epsilon;
  j["epsilon_sweep"] = epsilon_sweep ? Json(*epsilon_sweep) : Json(nullptr);
  j["weights"] = weights;
  j["threads"] = threads;
  j["output_path"] = output_path;
  j["format"] = format == OutputFormat::Json ? "json" : "csv";
  return j;
}

ScenarioConfig ScenarioConfig::from_json(const Json& j, ScenarioConfig base) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  static const std::vector<std::string> known = {"scenario", "seed",    "dims",    "trials",      "epsilon",
                                                 "epsilon_sweep", "weights", "threads", "output_path", "format"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) throw UsageError("unknown config key: " + key);
  }
  try {
    if (j.contains("scenario")) {
      const auto name = j.at("scenario").get<std::string>();
      const auto s = parse_scenario(name);
      if (!s) throw UsageError("unknown scenario '" + name + "'; expected one of: " + joined_names());
      base.scenario = *s;
    }
    if (j.contains("seed")) {
      const Json& s = j.at("seed");
      if (!s.is_number_unsigned()) throw UsageError("seed must be a non-negative integer");
      base.seed = s.get<std::uint64_t>();
    }
    if (j.contains("dims")) {
      base.dims.clear();
      for (const auto& d : j.at("dims")) {
        if (!d.is_number_unsigned()) throw UsageError("dims must be non-negative integers");
        base.dims.push_back(d.get<std::size_t>());
      }
    }
    if (j.contains("trials")) {
      const Json& t = j.at("trials");
      if (t.is_null()) {
        base.trials.reset();
      } else {
        if (!t.is_number_integer() || t.get<long long>() < 1) throw UsageError("trials must be a positive integer");
        base.trials = t.get<std::size_t>();
      }
    }
    if (j.contains("epsilon")) base.epsilon = j.at("epsilon").get<double>();
    if (j.contains("epsilon_sweep")) {
      const Json& e = j.at("epsilon_sweep");
      if (e.is_null()) {
        base.epsilon_sweep.reset();
      } else {
        base.epsilon_sweep = e.get<std::vector<double>>();
      }
    }
    if (j.contains("weights")) base.weights = j.at("weights").get<std::string>();
    if (j.contains("threads")) {
      const Json& t = j.at("threads");
      if (!t.is_number_integer() || t.get<long long>() < 1) throw UsageError("threads must be a positive integer");
      base.threads = t.get<std::size_t>();
    }
    if (j.contains("output_path")) base.output_path = j.at("output_path").get<std::string>();
    if (j.contains("format")) {
      const auto f = j.at("format").get<std::string>();
      if (f == "json") {
        base.format = OutputFormat::Json;
      } else if (f == "csv") {
        base.format = OutputFormat::Csv;
      } else {
        throw UsageError("format must be 'json' or 'csv'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed config: ") + e.what());
  }
  return base;
}

Json RunReport::to_json() const {
  return {{"scenario", scenario},
          {"config", config},
          {"results", results},
          {"tool_version", tool_version},
          {"wall_time_ms", wall_time_ms}};
}

std::string RunReport::render(OutputFormat format) const {
  if (format == OutputFormat::Csv) return csv;
  return to_json().dump(2) + "\n";
}

RunReport run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.scenario = scenario_name(cfg.scenario);
  report.config = cfg.to_json();
  report.tool_version = QSIM_VERSION;

  std::pair<Json, std::string> out;
  switch (cfg.scenario) {
    case Scenario::CopyDemo:
      out = run_copy_demo(cfg);
      break;
    case Scenario::DecoherenceDemo:
      out = run_decoherence_demo(cfg);
      break;
    case Scenario::PayoffDemo:
      out = run_payoff_demo(cfg);
      break;
    case Scenario::NoCloning:
      out = run_no_cloning(cfg);
      break;
    case Scenario::SecondLaw:
      out = run_second_law(cfg);
      break;
    case Scenario::PropertySuite:
      out = run_suite(cfg, report.passed);
      break;
  }
  report.results = std::move(out.first);
  report.csv = std::move(out.second);
  report.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return report;
}

Json SweepReport::to_json() const {
  Json rows_json = Json::array();
  for (const auto& r : rows) rows_json.push_back(sweep_row_json(r));
  return rows_json;
}

std::string SweepReport::to_csv() const {
  std::string out = "epsilon,trials,mean_dS1,mean_dS2,violation_fraction_1,violation_fraction_2\n";
  for (const auto& r : rows) {
    out += csv_real(r.epsilon) + "," + std::to_string(r.trials) + "," + csv_real(r.mean_ds1) + "," +
           csv_real(r.mean_ds2) + "," + csv_real(r.violation_fraction_1) + "," + csv_real(r.violation_fraction_2) +
           "\n";
  }
  return out;
}

SweepReport run_second_law_sweep(const ScenarioConfig& cfg) {
  if (!cfg.epsilon_sweep || cfg.epsilon_sweep->empty()) throw UsageError("epsilon_sweep must be nonempty");
  cfg.validate();
  SweepReport report;
  for (double eps : *cfg.epsilon_sweep) report.rows.push_back(aggregate_epsilon(cfg, eps).row);
  return report;
}

SecondLawTrial second_law_trial(const ScenarioConfig& cfg, double epsilon, std::size_t trial) {
  if (cfg.dims.size() != 2) throw UsageError("second-law requires two dims");
  const std::size_t d1 = cfg.dims[0];
  const std::size_t d2 = cfg.dims[1];
  CounterRng rng = CounterRng(cfg.seed).substream(trial);

  RealMatrix p(static_cast<Eigen::Index>(d1), static_cast<Eigen::Index>(d2));
  if (cfg.weights == "uniform") {
    p.setConstant(1.0 / static_cast<double>(d1 * d2));
  } else {
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.cols(); ++c) p(r, c) = rng.uniform();
    }
    p /= p.sum();
  }
  const KnowledgeState ks = build_knowledge_state(p, cfg.dims);
  const ThetaFamily theta = perturb_selection(d1, d2, epsilon, rng);
  const SelectionReport rep = apply_selection_process(ks, theta);

  // A later measurement in the product basis keeps only the diagonals.
  auto diagonal_entropy = [](const DensityMatrix& rho) {
    std::vector<double> diag(static_cast<std::size_t>(rho.dim()));
    for (std::size_t i = 0; i < diag.size(); ++i) diag[i] = rho.matrix()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
    return shannon_entropy(diag);
  };

  SecondLawTrial out;
  out.ds1 = rep.ds1;
  out.ds2 = rep.ds2;
  out.ds1_measured = diagonal_entropy(rep.rho1_t2) - rep.s1_t1;
  out.ds2_measured = diagonal_entropy(rep.rho2_t2) - rep.s2_t1;
  out.row = rep.to_json(ks, epsilon, cfg.seed);
  out.row["trial"] = trial;
  out.row["dS1_measured"] = out.ds1_measured;
  out.row["dS2_measured"] = out.ds2_measured;
  return out;
}

}  // namespace qsim
