#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qsim/decision_payoff.hpp"
#include "qsim/heisenberg_flow.hpp"
#include "qsim/knowledge_entropy.hpp"
#include "qsim/scenario.hpp"

namespace py = pybind11;
using namespace qsim;

namespace {

py::object to_python(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Json from_python(const py::object& o) {
  return Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

SubsystemLayout layout_for(const ComplexMatrix& m, const std::vector<std::size_t>& dims) {
  return dims.empty() ? SubsystemLayout::single(static_cast<std::size_t>(m.rows())) : SubsystemLayout(dims);
}

std::vector<ComplexMatrix> projectors_of(const ProjectorSet& ps) { return ps.projectors(); }

py::dict copy_dict(const CopyInteraction& ci) {
  py::dict d;
  d["id"] = ci.id;
  d["unitary"] = ci.unitary.matrix();
  d["phases"] = ci.phases;
  d["proj1"] = projectors_of(ci.proj1);
  d["proj2"] = projectors_of(ci.proj2);
  d["labels1"] = ci.proj1.labels();
  d["labels2"] = ci.proj2.labels();
  return d;
}

CopyInteraction interaction_from(const RealMatrix& phases, const std::vector<ComplexMatrix>& p1,
                                 const std::vector<ComplexMatrix>& p2) {
  return build_copy_unitary(phases, ProjectorSet(p1), ProjectorSet(p2));
}

}  // namespace

PYBIND11_MODULE(_qsim, m) {
  m.doc() = "Seeded quantum information-flow toolkit";
  m.attr("__version__") = QSIM_VERSION;

  auto base = py::register_exception<Error>(m, "QsimError");
  py::register_exception<UsageError>(m, "UsageError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<CapacityError>(m, "CapacityError", base.ptr());
  py::register_exception<AnalysisError>(m, "AnalysisError", base.ptr());
  py::register_exception<ImpossibleOutcomeError>(m, "ImpossibleOutcomeError", base.ptr());

  // Operator core
  m.def("tensor_product", py::overload_cast<const ComplexMatrix&, const ComplexMatrix&>(&tensor_product), py::arg("a"),
        py::arg("b"));
  m.def(
      "partial_trace",
      [](const ComplexMatrix& rho, const std::vector<std::size_t>& dims, const std::vector<std::size_t>& keep) {
        return partial_trace(DensityMatrix(SubsystemLayout(dims), rho), keep).matrix();
      },
      py::arg("rho"), py::arg("dims"), py::arg("keep"));
  m.def(
      "hermitian_eigendecomposition",
      [](const ComplexMatrix& h) {
        const auto es = hermitian_eigendecomposition(h);
        return py::make_tuple(es.values, es.vectors);
      },
      py::arg("h"), "Ascending eigenvalues and eigenvector columns.");
  m.def(
      "spectral_decompose_unitary",
      [](const ComplexMatrix& u) {
        const auto sd = spectral_decompose_unitary(UnitaryOperator(u));
        return py::make_tuple(sd.phases, projectors_of(sd.projectors));
      },
      py::arg("u"), "Distinct eigenphases in [0, 2pi) and their projectors.");
  m.def(
      "evolve_state",
      [](const ComplexMatrix& rho, const ComplexMatrix& u) {
        return evolve_state(DensityMatrix(rho), UnitaryOperator(u)).matrix();
      },
      py::arg("rho"), py::arg("u"));
  m.def(
      "random_unitary", [](std::size_t dim, std::uint64_t seed) {
        CounterRng rng(seed);
        return random_unitary(dim, rng).matrix();
      },
      py::arg("dim"), py::arg("seed"));
  m.def(
      "random_density",
      [](std::size_t dim, std::size_t rank, std::uint64_t seed) {
        CounterRng rng(seed);
        return random_density(dim, rank, rng).matrix();
      },
      py::arg("dim"), py::arg("rank"), py::arg("seed"));
  m.def(
      "range_projector",
      [](const ComplexMatrix& observable, double lo, double hi) {
        const auto r = range_projector(observable, lo, hi);
        return py::make_tuple(r.projector, r.rank, r.degenerate);
      },
      py::arg("observable"), py::arg("lo"), py::arg("hi"));

  // Heisenberg flow
  m.def("controlled_shift_interaction", [](std::size_t d1, std::size_t d2) {
    return copy_dict(controlled_shift_interaction(d1, d2));
  });
  m.def(
      "build_copy_unitary",
      [](const RealMatrix& phases, const std::vector<ComplexMatrix>& p1, const std::vector<ComplexMatrix>& p2) {
        return copy_dict(interaction_from(phases, p1, p2));
      },
      py::arg("phases"), py::arg("proj1"), py::arg("proj2"));
  m.def(
      "check_invariance",
      [](const std::vector<double>& coeffs, const RealMatrix& phases, const std::vector<ComplexMatrix>& p1,
         const std::vector<ComplexMatrix>& p2) {
        const auto ci = interaction_from(phases, p1, p2);
        const auto r = check_invariance(ObservableSpec(coeffs, ci.proj1), ci);
        return py::make_tuple(r.invariant, r.residual);
      },
      py::arg("coefficients"), py::arg("phases"), py::arg("proj1"), py::arg("proj2"),
      "Invariance of sum_a c_a P1_a under the copy interaction.");
  m.def(
      "analyze_copy",
      [](const RealMatrix& phases, const std::vector<ComplexMatrix>& p1, const std::vector<ComplexMatrix>& p2) {
        return to_python(analyze_copy(interaction_from(phases, p1, p2)).to_json());
      },
      py::arg("phases"), py::arg("proj1"), py::arg("proj2"));
  m.def(
      "copiable_projector_families",
      [](const ComplexMatrix& u, std::size_t d1, std::size_t d2) {
        const auto fam = copiable_projector_families(UnitaryOperator(SubsystemLayout({d1, d2}), u));
        py::list families;
        for (const auto& f : fam.families) families.append(projectors_of(f));
        py::dict d;
        d["families"] = families;
        d["algebra_dim"] = fam.algebra_dim;
        d["unique"] = fam.unique;
        d["no_interaction"] = fam.no_interaction;
        return d;
      },
      py::arg("u"), py::arg("d1"), py::arg("d2"));
  m.def(
      "no_cloning_demo",
      [](const Ket& a, const Ket& b, std::size_t d1, std::size_t d2) {
        const auto f = no_cloning_demo({a, b}, controlled_shift_interaction(d1, d2), basis_ket(d2, 0));
        return py::make_tuple(f.first, f.second);
      },
      py::arg("source_a"), py::arg("source_b"), py::arg("d1") = 2, py::arg("d2") = 2,
      "Copy fidelities of two S1 kets under the controlled-shift copier with blank |0>.");
  m.def(
      "branch_decomposition",
      [](const ComplexMatrix& rho, std::size_t d1, std::size_t d2) {
        const auto ci = controlled_shift_interaction(d1, d2);
        const auto bd = branch_decomposition(DensityMatrix(SubsystemLayout({d1, d2}), rho), ci);
        py::list branches;
        for (const auto& b : bd.branches) {
          py::dict bj;
          bj["label"] = b.label;
          bj["weight"] = b.weight;
          bj["relative_state"] = b.relative_state.matrix();
          branches.append(bj);
        }
        py::dict d;
        d["evolved"] = bd.evolved.matrix();
        d["branches"] = branches;
        d["copied"] = bd.copied;
        d["cross_branch_norm"] = bd.cross_branch_norm;
        d["record_overlap"] = bd.record_overlap;
        return d;
      },
      py::arg("rho"), py::arg("d1") = 2, py::arg("d2") = 2, "Branches under the controlled-shift interaction.");

  // Decision payoff
  m.def(
      "expected_payoff",
      [](const ComplexMatrix& rho, const ComplexMatrix& observable) {
        return expected_payoff(RelativeState(DensityMatrix(rho)), PayoffObservable::from_hermitian(observable));
      },
      py::arg("rho"), py::arg("observable"));
  m.def(
      "payoff_operator",
      [](const ComplexMatrix& rho, const ComplexMatrix& observable) {
        return payoff_operator(RelativeState(DensityMatrix(rho)), PayoffObservable::from_hermitian(observable));
      },
      py::arg("rho"), py::arg("observable"));
  m.def(
      "frequency_experiment",
      [](const ComplexMatrix& rho, const ComplexMatrix& observable, std::size_t n, std::uint64_t seed) {
        const auto r = frequency_experiment(RelativeState(DensityMatrix(rho)),
                                            PayoffObservable::from_hermitian(observable), n, CounterRng(seed));
        py::dict d;
        d["expected_payoff"] = r.expected_payoff;
        d["empirical_payoff"] = r.empirical_payoff;
        d["max_abs_deviation"] = r.max_abs_deviation;
        d["csv"] = r.to_csv();
        return d;
      },
      py::arg("rho"), py::arg("observable"), py::arg("n_trials"), py::arg("seed"));

  // Knowledge and entropy
  m.def(
      "von_neumann_entropy", [](const ComplexMatrix& rho) { return von_neumann_entropy(DensityMatrix(rho)); },
      py::arg("rho"), "Entropy in bits.");
  m.def(
      "shannon_entropy", [](const std::vector<double>& p) { return shannon_entropy(p); }, py::arg("p"));
  m.def(
      "free_energy",
      [](double e, double t, double s) { return free_energy({e, t, s}); }, py::arg("energy"), py::arg("temperature"),
      py::arg("entropy"));
  m.def(
      "knowledge_form_test",
      [](const ComplexMatrix& rho, std::size_t d1, std::size_t d2) {
        const auto r = knowledge_form_test(DensityMatrix(SubsystemLayout({d1, d2}), rho));
        return py::make_tuple(r.knowledge_form, r.residual);
      },
      py::arg("rho"), py::arg("d1"), py::arg("d2"));
  m.def(
      "perturb_selection",
      [](std::size_t d1, std::size_t d2, double epsilon, std::uint64_t seed) {
        CounterRng rng(seed);
        return perturb_selection(d1, d2, epsilon, rng).columns();
      },
      py::arg("d1"), py::arg("d2"), py::arg("epsilon"), py::arg("seed"),
      "Orthogonal matrix whose column a*d2+b holds theta_ab.");
  m.def(
      "apply_selection_process",
      [](const RealMatrix& weights, const RealMatrix& columns, double epsilon, std::uint64_t seed) {
        const std::vector<std::size_t> dims = {static_cast<std::size_t>(weights.rows()),
                                               static_cast<std::size_t>(weights.cols())};
        const auto ks = build_knowledge_state(weights, dims);
        const ThetaFamily theta(dims[0], dims[1], columns);
        const auto r = apply_selection_process(ks, theta);
        py::dict d;
        d["report"] = to_python(r.to_json(ks, epsilon, seed));
        d["rho_t2"] = r.rho_t2.matrix();
        d["rho1_t2"] = r.rho1_t2.matrix();
        d["rho2_t2"] = r.rho2_t2.matrix();
        return d;
      },
      py::arg("weights"), py::arg("columns"), py::arg("epsilon") = 0.0, py::arg("seed") = 0);
  m.def("relabeling_counterexample", []() {
    const auto fx = relabeling_counterexample();
    return py::make_tuple(fx.state.weights(), fx.theta.columns());
  });

  // Scenarios
  m.def("scenario_names", &scenario_names);
  m.def(
      "run_scenario",
      [](const py::dict& config) {
        ScenarioConfig cfg = ScenarioConfig::from_json(from_python(config), ScenarioConfig{});
        RunReport report;
        {
          py::gil_scoped_release release;
          report = run_scenario(cfg);
        }
        py::dict d = to_python(report.to_json());
        d["csv"] = report.csv;
        d["passed"] = report.passed;
        return d;
      },
      py::arg("config"), "Runs a scenario from a config dict with the CLI config-file keys.");
  m.def(
      "run_property_suite",
      [](std::uint64_t seed, std::optional<std::size_t> trials, std::size_t threads,
         std::optional<std::function<double(const ComplexMatrix&)>> entropy) {
        PropertySuiteOptions opt;
        opt.seed = seed;
        opt.trials = trials;
        opt.threads = threads;
        if (entropy) {
          auto fn = *entropy;
          opt.entropy = [fn](const DensityMatrix& rho) {
            py::gil_scoped_acquire acquire;
            return fn(rho.matrix());
          };
          opt.threads = 1;
        }
        return to_python(run_property_suite(opt).to_json());
      },
      py::arg("seed") = kDefaultSeed, py::arg("trials") = py::none(), py::arg("threads") = 1,
      py::arg("entropy") = py::none());
}
