#include "qsim/decision_payoff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qsim/serialize.hpp"

namespace qsim {

RelativeState::RelativeState(DensityMatrix state, LabelPath path)
    : state_(std::move(state)), path_(std::move(path)) {}

RelativeState RelativeState::from_projector(const ComplexMatrix& projector, SubsystemLayout layout, LabelPath path) {
  require_operator(projector, "RelativeState projector");
  if (hermiticity_residual(projector) > tol::kProjector ||
      max_abs(projector * projector - projector) > tol::kProjector) {
    throw ValidationError("RelativeState: not a projector");
  }
  const double rank = projector.trace().real();
  if (rank < 0.5) throw ValidationError("RelativeState: zero projector");
  ComplexMatrix rho = projector / rank;
  return RelativeState(DensityMatrix(std::move(layout), 0.5 * (rho + rho.adjoint())), std::move(path));
}

RelativeState RelativeState::from_projector(const ComplexMatrix& projector, LabelPath path) {
  return from_projector(projector, SubsystemLayout::single(static_cast<std::size_t>(projector.rows())),
                        std::move(path));
}

RelativeState RelativeState::from_ket(const Ket& psi, SubsystemLayout layout, LabelPath path) {
  return RelativeState(DensityMatrix::pure(psi, std::move(layout)), std::move(path));
}

PayoffObservable::PayoffObservable(std::vector<double> payoffs, ProjectorSet projectors)
    : payoffs_(std::move(payoffs)), projectors_(std::move(projectors)) {
  if (payoffs_.size() != projectors_.size()) {
    throw UsageError("PayoffObservable: payoff count does not match projector count");
  }
  for (double p : payoffs_) {
    if (!std::isfinite(p)) throw ValidationError("PayoffObservable: non-finite payoff");
  }
}

PayoffObservable PayoffObservable::from_hermitian(const ComplexMatrix& m) {
  const auto es = hermitian_eigendecomposition(m);
  const Eigen::Index n = m.rows();
  std::vector<double> payoffs;
  std::vector<ComplexMatrix> projectors;
  for (std::size_t k = 0; k < es.values.size(); ++k) {
    if (payoffs.empty() || es.values[k] - es.values[k - 1] > 1e-9) {
      payoffs.push_back(es.values[k]);
      projectors.push_back(ComplexMatrix::Zero(n, n));
    }
    const auto v = es.vectors.col(static_cast<Eigen::Index>(k));
    projectors.back() += v * v.adjoint();
  }
  return PayoffObservable(std::move(payoffs), ProjectorSet(std::move(projectors)));
}

ComplexMatrix PayoffObservable::matrix() const {
  const auto n = static_cast<Eigen::Index>(projectors_.dim());
  ComplexMatrix a = ComplexMatrix::Zero(n, n);
  for (std::size_t k = 0; k < payoffs_.size(); ++k) a += payoffs_[k] * projectors_[k];
  return a;
}

ComplexMatrix payoff_operator(const RelativeState& v, const PayoffObservable& a) {
  if (v.dim() != a.dim()) throw UsageError("expected_payoff: dimension mismatch");
  return v.state().matrix() * a.matrix();
}

double expected_payoff(const RelativeState& v, const PayoffObservable& a) {
  return payoff_operator(v, a).trace().real();
}

RelativeUpdate relative_state_update(const RelativeState& v, const CopyInteraction& ci,
                                     const std::string& outcome_label) {
  if (v.dim() != ci.unitary.dim()) throw UsageError("relative_state_update: dimension mismatch");
  const auto idx = ci.proj1.index_of(outcome_label);
  if (!idx) throw UsageError("relative_state_update: unknown outcome label '" + outcome_label + "'");

  const DensityMatrix evolved =
      evolve_state(DensityMatrix(ci.unitary.layout(), v.state().matrix()), ci.unitary);
  const auto d2 = static_cast<Eigen::Index>(ci.proj2.dim());
  const ComplexMatrix p = tensor_product(ci.proj1[*idx], ComplexMatrix::Identity(d2, d2));
  const ComplexMatrix block = p * evolved.matrix() * p;
  const double weight = block.trace().real();
  if (weight <= tol::kZeroEigen) {
    throw ImpossibleOutcomeError("relative_state_update: outcome '" + outcome_label + "' has zero weight");
  }
  ComplexMatrix rho = block / weight;
  LabelPath path = v.path();
  path.emplace_back(ci.id, outcome_label);
  return {RelativeState(DensityMatrix(ci.unitary.layout(), 0.5 * (rho + rho.adjoint())), std::move(path)),
          weight};
}

FrequencyReport frequency_experiment(const RelativeState& v, const PayoffObservable& a, std::size_t n_trials,
                                     const CounterRng& rng) {
  if (n_trials == 0) throw UsageError("frequency_experiment: n_trials must be positive");
  if (v.dim() != a.dim()) throw UsageError("frequency_experiment: dimension mismatch");

  const auto& ps = a.projectors();
  std::vector<double> weights(ps.size());
  double total = 0.0;
  for (std::size_t k = 0; k < ps.size(); ++k) {
    weights[k] = std::max(0.0, (v.state().matrix() * ps[k]).trace().real());
    total += weights[k];
  }
  for (auto& w : weights) w /= total;
  std::vector<double> cumulative(weights.size());
  double run = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) cumulative[k] = (run += weights[k]);

  std::vector<std::size_t> counts(ps.size(), 0);
  for (std::size_t t = 0; t < n_trials; ++t) {
    const double u = rng.substream(t).uniform();
    std::size_t k = 0;
    while (k + 1 < cumulative.size() && !(u < cumulative[k])) ++k;
    // Skip trailing zero-weight outcomes that only absorb rounding.
    while (weights[k] == 0.0 && k > 0) --k;
    ++counts[k];
  }

  FrequencyReport report;
  report.n_trials = n_trials;
  report.expected_payoff = expected_payoff(v, a);
  for (std::size_t k = 0; k < ps.size(); ++k) {
    FrequencyRow row;
    row.outcome_label = ps.label(k);
    row.weight = weights[k];
    row.count = counts[k];
    row.frequency = static_cast<double>(counts[k]) / static_cast<double>(n_trials);
    row.abs_deviation = std::abs(row.frequency - row.weight);
    report.empirical_payoff += a.payoffs()[k] * row.frequency;
    report.max_abs_deviation = std::max(report.max_abs_deviation, row.abs_deviation);
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string FrequencyReport::to_csv() const {
  std::ostringstream os;
  os << "outcome_label,weight,count,frequency,abs_deviation\n";
  for (const auto& r : rows) {
    os << csv_escape(r.outcome_label) << ',' << csv_real(r.weight) << ',' << r.count << ','
       << csv_real(r.frequency) << ',' << csv_real(r.abs_deviation) << '\n';
  }
  return os.str();
}

}  // namespace qsim
