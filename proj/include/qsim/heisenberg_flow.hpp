#pragma once

// Heisenberg-picture information flow between two subsystems S1 (x) S2.
//
// Descriptors evolve as O -> U^H O U. A copy interaction has the form
//   U = sum_ab exp(i phi_ab) P1_a (x) P2_b,
// which leaves every observable built on the P1_a fixed and writes the P1_a
// label into the S2 dyadics:
//   U^H (I (x) X2_cd) U = sum_a exp(i (phi_{a,b(d)} - phi_{a,b(c)})) P1_a (x) X2_cd
// where b(c) is the P2 block containing |c>.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "qsim/operator_core.hpp"
#include "qsim/serialize.hpp"

namespace qsim {

struct NamedOperator {
  std::string name;
  ComplexMatrix op;  // acts on the full composite space
};

class DescriptorSet {
 public:
  DescriptorSet(SubsystemLayout layout, std::vector<std::vector<NamedOperator>> per_subsystem,
                long time_tag = 0);

  // Embeds local operators (one list per factor) into the composite space.
  static DescriptorSet from_local(SubsystemLayout layout,
                                  const std::vector<std::vector<NamedOperator>>& local);

  const SubsystemLayout& layout() const { return layout_; }
  const std::vector<std::vector<NamedOperator>>& descriptors() const { return descriptors_; }
  const NamedOperator& at(std::size_t subsystem, std::size_t k) const {
    return descriptors_.at(subsystem).at(k);
  }
  long time_tag() const { return time_tag_; }

 private:
  SubsystemLayout layout_;
  std::vector<std::vector<NamedOperator>> descriptors_;
  long time_tag_;
};

// I (x) ... (x) local (x) ... (x) I with `local` on factor `factor`.
ComplexMatrix embed_operator(const ComplexMatrix& local, const SubsystemLayout& layout, std::size_t factor);

DescriptorSet evolve_descriptor(const DescriptorSet& d, const UnitaryOperator& u);

// Largest deviation of evolved pairwise products and commutators from the
// conjugated products and commutators of the originals.
double descriptor_algebra_residual(const DescriptorSet& before, const DescriptorSet& after,
                                   const UnitaryOperator& u);

// U^H X_cd U for the dyadic |c><d|. Both kets must lie in ranges of sd's
// projectors (AnalysisError otherwise); the result is exp(i(phi_d - phi_c)) X_cd.
ComplexMatrix conjugate_dyadic(const Ket& c, const Ket& d, const SpectralDecomposition& sd);
ComplexMatrix conjugate_dyadic(const DyadicBasis& basis, std::size_t c, std::size_t d,
                               const SpectralDecomposition& sd);

/// A_1 = sum_a alpha_a P_a.
class ObservableSpec {
 public:
  ObservableSpec(std::vector<double> coefficients, ProjectorSet projectors);

  const std::vector<double>& coefficients() const { return coefficients_; }
  const ProjectorSet& projectors() const { return projectors_; }
  ComplexMatrix matrix() const;

 private:
  std::vector<double> coefficients_;
  ProjectorSet projectors_;
};

struct CopyInteraction {
  RealMatrix phases;  // rows: S1 labels, cols: S2 labels; phases(0, 0) == 0
  ProjectorSet proj1;
  ProjectorSet proj2;
  UnitaryOperator unitary;
  std::string id = "U";
};

// Phases are shifted so that phi_00 = 0; this changes U by a global phase only.
CopyInteraction build_copy_unitary(const RealMatrix& phases, const ProjectorSet& p1,
                                   const ProjectorSet& p2, std::string id = "U");

// The qudit CNOT form on d1 (x) d2 (d1 <= d2): P1 computational, P2 the
// Fourier basis, phi_ab = 2 pi a b / d2. For d1 = d2 = 2 this is CNOT.
CopyInteraction controlled_shift_interaction(std::size_t d1, std::size_t d2);

// Random projector families on each factor (random block partitions of
// Haar-random bases) with independent phases in [0, 2 pi).
CopyInteraction random_copy_interaction(std::size_t d1, std::size_t d2, CounterRng& rng);

struct InvarianceResult {
  bool invariant = false;
  double residual = 0.0;  // max |U^H (A (x) I) U - A (x) I|
};

InvarianceResult check_invariance(const ObservableSpec& obs, const CopyInteraction& ci);

struct DyadicEntry {
  std::size_t c = 0;
  std::size_t d = 0;
  std::size_t block_c = 0;
  std::size_t block_d = 0;
  std::vector<double> phases_by_a;  // phi_{a,b(d)} - phi_{a,b(c)}, wrapped to (-pi, pi]
  bool depends = false;             // phases differ across a
  double residual = 0.0;            // corrected formula vs direct conjugation
};

struct CopyReport {
  std::vector<DyadicEntry> dyadic_table;  // S2 dyadics in the proj2-adapted basis
  bool copied_into_s2 = false;            // S2 descriptors now depend on proj1
  bool copied_into_s1 = false;            // S1 descriptors now depend on proj2
  std::vector<std::string> s1_labels;
  std::vector<std::string> s2_labels;
  double max_residual = 0.0;

  Json to_json() const;
};

CopyReport analyze_copy(const CopyInteraction& ci);

struct CopiableFamilies {
  std::vector<ProjectorSet> families;
  std::size_t algebra_dim = 0;  // complex dimension of {A : [A (x) I, U] = 0}
  bool unique = true;           // invariant algebra is abelian: a single finest family
  bool no_interaction = false;  // every S1 observable is invariant
};

// Hermitian basis of the S1 algebra left fixed by U. `u` must act on a
// two-factor layout.
std::vector<ComplexMatrix> invariant_s1_algebra(const UnitaryOperator& u);

// Finest family of S1 projectors P with U^H (P (x) I) U = P (x) I. When the
// invariant algebra is not abelian the family is one of many maximal ones
// (unique == false).
CopiableFamilies copiable_projector_families(const UnitaryOperator& u);

struct FidelityPair {
  double first = 0.0;
  double second = 0.0;
};

// Fidelity |<psi (x) copy(psi)| U |psi (x) blank>|^2 for each source. `copy_map`
// maps an S1 ket to the intended S2 copy; by default amplitudes are carried
// over index by index.
FidelityPair no_cloning_demo(const std::array<Ket, 2>& sources, const CopyInteraction& copier,
                             const Ket& blank, const std::optional<ComplexMatrix>& copy_map = std::nullopt);

struct Branch {
  std::string label;  // proj1 label, empty when nothing was copied
  double weight = 0.0;
  DensityMatrix relative_state;
};

struct BranchDecomposition {
  DensityMatrix evolved;
  std::vector<Branch> branches;  // nonzero-weight branches only
  bool copied = false;
  // max |P1_a rho_1 P1_a'| over a != a', rho_1 the evolved S1 marginal.
  double cross_branch_norm = 0.0;
  // max |tr(sigma2_a sigma2_a')| between branch records held by S2.
  double record_overlap = 0.0;
};

BranchDecomposition branch_decomposition(const DensityMatrix& rho_initial, const CopyInteraction& ci);

}  // namespace qsim
