#pragma once

// Entropy bookkeeping for two knowledge-bearing subsystems.
//
// A knowledge state is classically correlated,
//   rho(t1) = sum_ab p_ab |a><a| (x) |b><b|,
// and a selection process maps the product basis to an orthonormal family
//   |theta_ab> = sum_cd lambda_abcd |c> (x) |d>     (lambda real),
// giving rho(t2) = sum_ab p_ab |theta_ab><theta_ab| with marginals
//   rho1(t2) = sum_abcde p_ab lambda_abcd lambda_abed |c><e|
//   rho2(t2) = sum_abcdf p_ab lambda_abcd lambda_abcf |d><f|.
// Entropies are in bits.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qsim/operator_core.hpp"
#include "qsim/rng.hpp"
#include "qsim/serialize.hpp"

namespace qsim {

// S = -tr(rho log2 rho). Eigenvalues below tol::kZeroEigen contribute 0.
double von_neumann_entropy(const DensityMatrix& rho);
double shannon_entropy(std::span<const double> probabilities);

struct FreeEnergyParams {
  double energy = 0.0;
  double temperature = 0.0;
  double entropy = 0.0;
};

// F = E - T S. Throws ValidationError for T < 0 or S < 0.
double free_energy(const FreeEnergyParams& params);

class KnowledgeState {
 public:
  // `weights` is d1 x d2 (smaller matrices are zero-padded by
  // build_knowledge_state); bases are unitaries whose columns are |a>, |b>.
  KnowledgeState(RealMatrix weights, ComplexMatrix basis1, ComplexMatrix basis2);

  const RealMatrix& weights() const { return weights_; }
  const ComplexMatrix& basis1() const { return basis1_; }
  const ComplexMatrix& basis2() const { return basis2_; }
  const SubsystemLayout& layout() const { return layout_; }

  DensityMatrix density() const;
  std::vector<double> marginal1() const;  // row sums
  std::vector<double> marginal2() const;  // column sums

 private:
  RealMatrix weights_;
  ComplexMatrix basis1_;
  ComplexMatrix basis2_;
  SubsystemLayout layout_;
};

// Computational bases on dims {d1, d2}.
KnowledgeState build_knowledge_state(const RealMatrix& weights, std::span<const std::size_t> dims);

/// Orthonormal family theta_ab stored as a real orthogonal matrix whose
/// column a*d2 + b holds the coefficients lambda_ab(c*d2 + d).
class ThetaFamily {
 public:
  ThetaFamily(std::size_t d1, std::size_t d2, RealMatrix columns);

  static ThetaFamily ideal(std::size_t d1, std::size_t d2);
  // theta_{a,b} = |perm(a*d2+b)> in the product basis.
  static ThetaFamily from_permutation(std::size_t d1, std::size_t d2, std::span<const std::size_t> perm);

  std::size_t d1() const { return d1_; }
  std::size_t d2() const { return d2_; }
  double lambda(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const;
  const RealMatrix& columns() const { return columns_; }
  ProjectorSet projectors() const;

 private:
  std::size_t d1_;
  std::size_t d2_;
  RealMatrix columns_;
};

/// Real orthogonal xi with |nu_c> = sum_d xi_cd |d>.
class XiRotation {
 public:
  explicit XiRotation(RealMatrix xi);

  const RealMatrix& xi() const { return xi_; }
  ProjectorSet nu_projectors() const;

 private:
  RealMatrix xi_;
};

DensityMatrix projective_decoherence(const DensityMatrix& rho, const ProjectorSet& ps);

struct EntropyComparison {
  double before = 0.0;
  double after = 0.0;
  double margin = 0.0;  // after - before
};

EntropyComparison entropy_after_decoherence_geq(const DensityMatrix& rho, const ProjectorSet& ps);

struct KnowledgeFormResult {
  bool knowledge_form = false;
  double residual = 0.0;  // max |D(rho) - rho| under marginal-basis dephasing
  bool degenerate_marginals = false;
  ComplexMatrix basis1;  // certifying marginal eigenbases (columns)
  ComplexMatrix basis2;
};

// Is rho unchanged by dephasing in the eigenbases of both marginals? Inside
// degenerate eigenspaces the basis diagonalizes diag(0, 1, ..., d-1).
KnowledgeFormResult knowledge_form_test(const DensityMatrix& rho);

struct ReducedPair {
  ComplexMatrix rho1;
  ComplexMatrix rho2;
};

// Marginals of sum_ab p_ab |theta_ab><theta_ab| by the lambda index sums,
// expressed in the knowledge-state bases.
ReducedPair selection_marginals_by_formula(const KnowledgeState& ks, const ThetaFamily& theta);

struct SelectionReport {
  DensityMatrix rho_t2;
  DensityMatrix rho1_t1, rho2_t1, rho1_t2, rho2_t2;
  double s1_t1 = 0.0, s2_t1 = 0.0, s1_t2 = 0.0, s2_t2 = 0.0;
  double ds1 = 0.0, ds2 = 0.0;
  double s_global_t1 = 0.0, s_global_t2 = 0.0;

  // {epsilon, seed, p_ab, S1_t1, S2_t1, S1_t2, S2_t2, dS1, dS2, S_global}
  Json to_json(const KnowledgeState& ks, double epsilon, std::uint64_t seed) const;
};

SelectionReport apply_selection_process(const KnowledgeState& ks, const ThetaFamily& theta);

// theta_ab = exp(epsilon G) (|a> (x) |b>) with G real antisymmetric and
// Frobenius-normalized, drawn from rng.
ThetaFamily perturb_selection(std::size_t d1, std::size_t d2, double epsilon, CounterRng& rng);

struct SelectionFixture {
  KnowledgeState state;
  ThetaFamily theta;
};

// p = diag(1/2, 1/2) on 2 x 2 with the relabeling |00> -> |00>, |11> -> |01>
// (|01> -> |11>, |10> -> |10>). S(rho1) drops from 1 bit to 0.
SelectionFixture relabeling_counterexample();

}  // namespace qsim
