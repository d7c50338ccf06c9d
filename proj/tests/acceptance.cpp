// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "qsim/decision_payoff.hpp"
#include "qsim/heisenberg_flow.hpp"
#include "qsim/knowledge_entropy.hpp"
#include "qsim/scenario.hpp"

using namespace qsim;

namespace {

namespace tolerance {
constexpr double kPayoff = 1e-12;
constexpr double kInvariance = 1e-9;
constexpr double kDyadic = 1e-9;
constexpr double kRoundTrip = 1e-9;
constexpr double kDecoherence = 1e-9;
constexpr double kEigenEquality = 1e-10;
constexpr double kFidelity = 1e-10;
constexpr double kBranch = 1e-12;
constexpr double kEntropyZero = 1e-9;
constexpr double kCounterexample = 1e-12;
constexpr double kMarginal = 1e-10;
}  // namespace tolerance

namespace budget_s {
constexpr double kPayoff = 1.0;
constexpr double kInvariance = 10.0;
constexpr double kDecoherence = 60.0;
}  // namespace budget_s

constexpr std::uint64_t kSeed = 20240917;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::size_t pick(CounterRng& rng, std::size_t lo, std::size_t hi) {
  return lo + std::min(hi - lo, static_cast<std::size_t>(rng.uniform() * static_cast<double>(hi - lo + 1)));
}

std::vector<CopyInteraction> copy_instances() {
  std::vector<CopyInteraction> out;
  const CounterRng base(kSeed);
  for (std::size_t t = 0; t < 100; ++t) {
    CounterRng rng = base.substream(t);
    const std::size_t d1 = pick(rng, 2, 4);
    const std::size_t d2 = pick(rng, 2, 4);
    out.push_back(random_copy_interaction(d1, d2, rng));
  }
  return out;
}

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto v = RelativeState::from_projector(outer(basis_ket(2, 0), basis_ket(2, 0)));
  const ComplexMatrix a = 0.5 * ComplexMatrix::Ones(2, 2);
  const auto obs = PayoffObservable::from_hermitian(a);
  const double payoff = expected_payoff(v, obs);
  ComplexMatrix product(2, 2);
  product << 0.5, 0.5, 0.0, 0.0;
  const double prod_err = max_abs(payoff_operator(v, obs) - product);
  const double dt = seconds_since(t0);
  const double err = std::abs(payoff - 0.5);
  return {err <= tolerance::kPayoff && prod_err <= tolerance::kPayoff && dt < budget_s::kPayoff,
          "payoff=" + fmt("%.17g", payoff) + " product_err=" + fmt("%.3g", prod_err) + " time=" + fmt("%.3fs", dt)};
}

Outcome criterion2(const std::vector<CopyInteraction>& cis) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  CounterRng rng(kSeed + 2);
  for (const auto& ci : cis) {
    std::vector<double> alphas(ci.proj1.size());
    for (auto& x : alphas) x = rng.normal();
    const ObservableSpec obs(alphas, ci.proj1);
    const auto d2 = static_cast<Eigen::Index>(ci.proj2.dim());
    const ComplexMatrix big = oracle::kron(obs.matrix(), ComplexMatrix::Identity(d2, d2));
    worst = std::max(worst, oracle::max_abs(ci.unitary.adjoint() * big * ci.unitary.matrix() - big));
    worst = std::max(worst, check_invariance(obs, ci).residual);
  }
  const double dt = seconds_since(t0);
  return {worst <= tolerance::kInvariance && dt < budget_s::kInvariance,
          "instances=" + std::to_string(cis.size()) + " max_residual=" + fmt("%.3g", worst) + " time=" + fmt("%.3fs", dt)};
}

Outcome criterion3(const std::vector<CopyInteraction>& cis) {
  double worst = 0.0;
  double lib = 0.0;
  for (const auto& ci : cis) {
    const auto b2 = build_dyadic_basis(ci.proj2);
    const auto d1 = static_cast<Eigen::Index>(ci.proj1.dim());
    const auto n = static_cast<Eigen::Index>(ci.unitary.dim());
    for (std::size_t c = 0; c < b2.dim(); ++c) {
      for (std::size_t d = 0; d < b2.dim(); ++d) {
        ComplexMatrix formula = ComplexMatrix::Zero(n, n);
        for (std::size_t a = 0; a < ci.proj1.size(); ++a) {
          const double ph = ci.phases(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b2.block(d))) -
                            ci.phases(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b2.block(c)));
          formula += std::polar(1.0, ph) * oracle::kron(ci.proj1[a], b2.element(c, d));
        }
        const ComplexMatrix brute = ci.unitary.adjoint() *
                                    oracle::kron(ComplexMatrix::Identity(d1, d1), b2.element(c, d)) *
                                    ci.unitary.matrix();
        worst = std::max(worst, oracle::max_abs(brute - formula));
      }
    }
    lib = std::max(lib, analyze_copy(ci).max_residual);
  }
  return {worst <= tolerance::kDyadic && lib <= tolerance::kDyadic,
          "max_entry_err=" + fmt("%.3g", worst) + " analyze_copy_residual=" + fmt("%.3g", lib)};
}

Outcome criterion4() {
  const CounterRng base(kSeed + 4);
  double rec = 0.0;
  double fam = 0.0;
  for (std::size_t t = 0; t < 200; ++t) {
    CounterRng rng = base.substream(t);
    const auto u = random_unitary(pick(rng, 2, 8), rng);
    const auto sd = spectral_decompose_unitary(u);
    rec = std::max(rec, max_abs(u.matrix() - sd.reconstruct()));
    fam = std::max(fam, projector_family_residual(sd.projectors.projectors()));
  }
  return {rec <= tolerance::kRoundTrip && fam <= tolerance::kRoundTrip,
          "unitaries=200 max_reconstruction_err=" + fmt("%.3g", rec) + " max_projector_residual=" + fmt("%.3g", fam)};
}

Outcome criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  const CounterRng base(kSeed + 5);
  std::size_t violations = 0;
  double min_margin = 1e300;
  double max_gap = 0.0;
  for (std::size_t t = 0; t < 1000; ++t) {
    CounterRng rng = base.substream(t);
    const std::size_t d = pick(rng, 2, 8);
    const auto rho = random_density(d, pick(rng, 1, d), rng);
    const auto ps = random_projector_set(d, random_composition(d, rng), rng);
    const double margin = entropy_after_decoherence_geq(rho, ps).margin;
    min_margin = std::min(min_margin, margin);
    if (margin < -tolerance::kDecoherence) ++violations;
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho.matrix());
    max_gap = std::max(max_gap, std::abs(entropy_after_decoherence_geq(rho, ProjectorSet::from_basis(es.eigenvectors())).margin));
  }
  const double dt = seconds_since(t0);
  return {violations == 0 && max_gap <= tolerance::kEigenEquality && dt < budget_s::kDecoherence,
          "pairs=1000 violations=" + std::to_string(violations) + " min_margin=" + fmt("%.3g", min_margin) +
              " eigenbasis_gap=" + fmt("%.3g", max_gap) + " time=" + fmt("%.3fs", dt)};
}

Outcome criterion6() {
  const SubsystemLayout l({2, 2});
  const auto cnot = copiable_projector_families(UnitaryOperator(l, oracle::cnot()));
  bool cnot_ok = cnot.families.size() == 1 && cnot.families[0].size() == 2;
  if (cnot_ok) {
    for (std::size_t k = 0; k < 2; ++k) {
      cnot_ok = cnot_ok && max_abs(cnot.families[0][k] - outer(basis_ket(2, k), basis_ket(2, k))) <= 1e-9;
    }
  }
  const auto swap = copiable_projector_families(UnitaryOperator(l, oracle::swap2()));
  const bool swap_ok = swap.families.size() == 1 && swap.families[0].size() == 1 &&
                       max_abs(swap.families[0][0] - ComplexMatrix::Identity(2, 2)) <= 1e-9;
  const Ket plus = Ket::Constant(2, Complex(1.0 / std::sqrt(2.0), 0.0));
  const auto fid = no_cloning_demo({plus, basis_ket(2, 0)}, controlled_shift_interaction(2, 2), basis_ket(2, 0));
  const bool fid_ok = std::abs(fid.first - 0.5) <= tolerance::kFidelity;
  return {cnot_ok && swap_ok && fid_ok, std::string("cnot_family_computational=") + (cnot_ok ? "yes" : "no") +
                                            " swap_trivial=" + (swap_ok ? "yes" : "no") +
                                            " plus_fidelity=" + fmt("%.17g", fid.first)};
}

Outcome criterion7() {
  const Ket plus = Ket::Constant(2, Complex(1.0 / std::sqrt(2.0), 0.0));
  const Ket psi = oracle::kron(oracle::CV(plus), oracle::CV(basis_ket(2, 0)));
  const auto bd = branch_decomposition(DensityMatrix::pure(psi, SubsystemLayout({2, 2})),
                                       controlled_shift_interaction(2, 2));
  bool ok = bd.branches.size() == 2 && bd.cross_branch_norm <= tolerance::kBranch;
  std::string weights;
  for (const auto& b : bd.branches) {
    ok = ok && std::abs(b.weight - 0.5) <= tolerance::kBranch;
    weights += fmt("%.17g,", b.weight);
  }
  return {ok, "branches=" + std::to_string(bd.branches.size()) + " weights=" + weights +
                  " cross_branch_norm=" + fmt("%.3g", bd.cross_branch_norm)};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion8() {
  double worst_zero = 0.0;
  for (std::uint64_t seed : std::initializer_list<std::uint64_t>{1, 7, kSeed, 18446744073709551615ULL}) {
    ScenarioConfig c;
    c.scenario = Scenario::SecondLaw;
    c.seed = seed;
    c.epsilon = 0.0;
    c.trials = 25;
    for (std::size_t t = 0; t < 25; ++t) {
      const auto tr = second_law_trial(c, 0.0, t);
      worst_zero = std::max({worst_zero, std::abs(tr.ds1), std::abs(tr.ds2)});
    }
  }
  const auto fx = relabeling_counterexample();
  const auto rep = apply_selection_process(fx.state, fx.theta);
  const double ce_err = std::abs(rep.ds1 + 1.0);

  ScenarioConfig sweep;
  sweep.scenario = Scenario::SecondLaw;
  sweep.epsilon_sweep = std::vector<double>{0.0, 0.05, 0.1, 0.2};
  bool golden_ok = true;
  for (const char* weights : {"uniform", "random"}) {
    sweep.weights = weights;
    const std::string first = run_second_law_sweep(sweep).to_csv();
    const std::string second = run_second_law_sweep(sweep).to_csv();
    const std::string golden = read_file(std::string(QSIM_GOLDEN_DIR) + "/second_law_sweep_" + weights + ".csv");
    golden_ok = golden_ok && first == second && first == golden;
  }
  return {worst_zero <= tolerance::kEntropyZero && ce_err <= tolerance::kCounterexample && golden_ok,
          "eps0_max_abs_dS=" + fmt("%.3g", worst_zero) + " counterexample_dS1=" + fmt("%.17g", rep.ds1) +
              " sweep_golden_match=" + (golden_ok ? "yes" : "no")};
}

Outcome criterion9() {
  const CounterRng base(kSeed + 9);
  double worst = 0.0;
  for (std::size_t t = 0; t < 200; ++t) {
    CounterRng rng = base.substream(t);
    const std::size_t d1 = pick(rng, 2, 4);
    const std::size_t d2 = pick(rng, 2, 4);
    RealMatrix w(static_cast<Eigen::Index>(d1), static_cast<Eigen::Index>(d2));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform();
    w /= w.sum();
    const auto ks = build_knowledge_state(w, std::vector<std::size_t>{d1, d2});
    const auto theta = perturb_selection(d1, d2, rng.uniform(), rng);
    const auto rep = apply_selection_process(ks, theta);
    const auto formula = selection_marginals_by_formula(ks, theta);
    const auto n1 = static_cast<Eigen::Index>(d1);
    const auto n2 = static_cast<Eigen::Index>(d2);
    worst = std::max(worst, oracle::max_abs(formula.rho1 - oracle::trace_out_second(rep.rho_t2.matrix(), n1, n2)));
    worst = std::max(worst, oracle::max_abs(formula.rho2 - oracle::trace_out_first(rep.rho_t2.matrix(), n1, n2)));
    worst = std::max(worst, max_abs(formula.rho1 - partial_trace(rep.rho_t2, {0}).matrix()));
    worst = std::max(worst, max_abs(formula.rho2 - partial_trace(rep.rho_t2, {1}).matrix()));
  }
  return {worst <= tolerance::kMarginal, "processes=200 max_entry_err=" + fmt("%.3g", worst)};
}

Outcome criterion10() {
  std::string failed;
  for (const auto& name : scenario_names()) {
    ScenarioConfig c;
    c.scenario = *parse_scenario(name);
    if (c.scenario == Scenario::PropertySuite) c.trials = 5;
    const auto a = run_scenario(c);
    const auto b = run_scenario(c);
    if (a.results.dump() != b.results.dump() || a.csv != b.csv) failed += name + " ";
  }
  return {failed.empty(), failed.empty() ? "all six scenarios byte-identical" : "differs: " + failed};
}

}  // namespace

int main() {
  const auto cis = copy_instances();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"qubit payoff example", criterion1},
      {"invariance of proj1 observables", [&] { return criterion2(cis); }},
      {"phase-restored dyadic formula", [&] { return criterion3(cis); }},
      {"unitary spectral round trip", criterion4},
      {"decoherence entropy inequality", criterion5},
      {"copying is digital", criterion6},
      {"decoherence removes interference", criterion7},
      {"second-law scenario", criterion8},
      {"marginal index formula vs partial trace", criterion9},
      {"scenario determinism", criterion10},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o{false, ""};
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("[%s] criterion %zu: %s :: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                o.detail.c_str());
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
