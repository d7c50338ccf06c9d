#pragma once

// Decision-theoretic weights for a relative state rho_v: the value of a bet
// on an observable is tr(rho_v A), and branch weights are the same quantity
// for outcome projectors.

#include <string>
#include <utility>
#include <vector>

#include "qsim/heisenberg_flow.hpp"
#include "qsim/operator_core.hpp"
#include "qsim/rng.hpp"

namespace qsim {

// Ordered (interaction id, outcome label) pairs identifying one version.
using LabelPath = std::vector<std::pair<std::string, std::string>>;

class RelativeState {
 public:
  RelativeState(DensityMatrix state, LabelPath path = {});

  // A projector of rank r is used as the state P / r.
  static RelativeState from_projector(const ComplexMatrix& projector, SubsystemLayout layout, LabelPath path = {});
  static RelativeState from_projector(const ComplexMatrix& projector, LabelPath path = {});
  static RelativeState from_ket(const Ket& psi, SubsystemLayout layout, LabelPath path = {});

  const DensityMatrix& state() const { return state_; }
  const LabelPath& path() const { return path_; }
  std::size_t dim() const { return state_.dim(); }

 private:
  DensityMatrix state_;
  LabelPath path_;
};

/// Observable whose eigenvalues are payoffs.
class PayoffObservable {
 public:
  PayoffObservable(std::vector<double> payoffs, ProjectorSet projectors);
  // Spectral form of a Hermitian matrix (eigenvalues within 1e-9 merged).
  static PayoffObservable from_hermitian(const ComplexMatrix& m);

  const std::vector<double>& payoffs() const { return payoffs_; }
  const ProjectorSet& projectors() const { return projectors_; }
  std::size_t dim() const { return projectors_.dim(); }
  ComplexMatrix matrix() const;

 private:
  std::vector<double> payoffs_;
  ProjectorSet projectors_;
};

// rho_v A, whose trace is the payoff.
ComplexMatrix payoff_operator(const RelativeState& v, const PayoffObservable& a);
double expected_payoff(const RelativeState& v, const PayoffObservable& a);

struct RelativeUpdate {
  RelativeState state;
  double weight = 0.0;
};

// Evolves v through the interaction and conditions on the copied S1 label
// `outcome_label` (a proj1 label). v must live on the interaction's space.
RelativeUpdate relative_state_update(const RelativeState& v, const CopyInteraction& ci,
                                     const std::string& outcome_label);

struct FrequencyRow {
  std::string outcome_label;
  double weight = 0.0;
  std::size_t count = 0;
  double frequency = 0.0;
  double abs_deviation = 0.0;
};

struct FrequencyReport {
  std::vector<FrequencyRow> rows;
  std::size_t n_trials = 0;
  double expected_payoff = 0.0;   // tr(rho_v A)
  double empirical_payoff = 0.0;  // sum_k payoff_k * frequency_k
  double max_abs_deviation = 0.0;

  // outcome_label,weight,count,frequency,abs_deviation
  std::string to_csv() const;
};

// Trial t draws its outcome from rng.substream(t), so the report does not
// depend on evaluation order.
FrequencyReport frequency_experiment(const RelativeState& v, const PayoffObservable& a, std::size_t n_trials,
                                     const CounterRng& rng);

}  // namespace qsim
