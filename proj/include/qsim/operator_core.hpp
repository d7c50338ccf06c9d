#pragma once

// Dense complex operators and quantum-state primitives.
//
// Conventions: kets are dim x 1 columns, the dyadic |a><b| is an outer
// product, and in a tensor product the leftmost factor is the most
// significant index.

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qsim/errors.hpp"
#include "qsim/rng.hpp"

namespace qsim {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using Ket = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;

inline constexpr std::size_t kMaxTotalDim = 64;

namespace tol {
inline constexpr double kHermitian = 1e-9;
inline constexpr double kUnitary = 1e-9;
inline constexpr double kProjector = 1e-9;
inline constexpr double kTrace = 1e-10;
inline constexpr double kReconstruct = 1e-9;
inline constexpr double kPhase = 1e-8;
inline constexpr double kPsd = 1e-9;
inline constexpr double kOrthonormal = 1e-9;
// Eigenvalues below this are treated as exact zeros.
inline constexpr double kZeroEigen = 1e-12;
}  // namespace tol

// Largest absolute entry.
template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : static_cast<double>(m.cwiseAbs().maxCoeff());
}

// Throws ValidationError unless m is square, non-empty and finite, and
// CapacityError if its dimension exceeds kMaxTotalDim.
void require_operator(const ComplexMatrix& m, const char* what);

double hermiticity_residual(const ComplexMatrix& m);
double unitarity_residual(const ComplexMatrix& m);

ComplexMatrix outer(const Ket& a, const Ket& b);
Ket basis_ket(std::size_t dim, std::size_t index);

class SubsystemLayout {
 public:
  SubsystemLayout() : SubsystemLayout(std::vector<std::size_t>{1}) {}
  explicit SubsystemLayout(std::vector<std::size_t> factor_dims);
  static SubsystemLayout single(std::size_t dim) { return SubsystemLayout({dim}); }

  const std::vector<std::size_t>& factor_dims() const { return dims_; }
  std::size_t factor_dim(std::size_t i) const { return dims_.at(i); }
  std::size_t factors() const { return dims_.size(); }
  std::size_t total_dim() const { return total_; }

  // Mixed-radix digits of a flat index, leftmost factor most significant.
  std::vector<std::size_t> digits(std::size_t flat) const;
  std::size_t flat(std::span<const std::size_t> digits) const;

  // Layout of the listed factors, in their original order.
  SubsystemLayout subset(std::span<const std::size_t> keep) const;

  bool operator==(const SubsystemLayout&) const = default;

 private:
  std::vector<std::size_t> dims_;
  std::size_t total_ = 1;
};

class DensityMatrix {
 public:
  DensityMatrix(SubsystemLayout layout, ComplexMatrix mat);
  explicit DensityMatrix(ComplexMatrix mat);

  static DensityMatrix pure(const Ket& psi, SubsystemLayout layout);
  static DensityMatrix pure(const Ket& psi);

  const SubsystemLayout& layout() const { return layout_; }
  const ComplexMatrix& matrix() const { return mat_; }
  std::size_t dim() const { return layout_.total_dim(); }
  double purity() const;

 private:
  SubsystemLayout layout_;
  ComplexMatrix mat_;
};

class UnitaryOperator {
 public:
  UnitaryOperator(SubsystemLayout layout, ComplexMatrix mat);
  explicit UnitaryOperator(ComplexMatrix mat);

  static UnitaryOperator identity(SubsystemLayout layout);

  const SubsystemLayout& layout() const { return layout_; }
  const ComplexMatrix& matrix() const { return mat_; }
  ComplexMatrix adjoint() const { return mat_.adjoint(); }
  std::size_t dim() const { return layout_.total_dim(); }

 private:
  SubsystemLayout layout_;
  ComplexMatrix mat_;
};

// Largest violation among Hermiticity, idempotence, pairwise orthogonality
// and completeness of a projector family.
double projector_family_residual(std::span<const ComplexMatrix> projectors);

/// Complete family of pairwise-orthogonal projectors with opaque labels.
/// Construction validates every invariant within tol::kProjector; labels
/// default to "0", "1", ...
class ProjectorSet {
 public:
  explicit ProjectorSet(std::vector<ComplexMatrix> projectors,
                        std::vector<std::string> labels = {});

  // Rank-1 projectors onto the columns of an orthonormal basis.
  static ProjectorSet from_basis(const ComplexMatrix& basis, std::vector<std::string> labels = {});
  static ProjectorSet computational(std::size_t dim);
  static ProjectorSet trivial(std::size_t dim);

  std::size_t size() const { return projectors_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(projectors_.front().rows()); }
  const ComplexMatrix& operator[](std::size_t i) const { return projectors_.at(i); }
  const std::vector<ComplexMatrix>& projectors() const { return projectors_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  std::optional<std::size_t> index_of(const std::string& label) const;
  std::size_t rank(std::size_t i) const;

 private:
  std::vector<ComplexMatrix> projectors_;
  std::vector<std::string> labels_;
};

/// U = sum_a exp(i phase_a) P_a over distinct eigenphases in [0, 2 pi).
struct SpectralDecomposition {
  std::vector<double> phases;
  ProjectorSet projectors;

  ComplexMatrix reconstruct() const;
};

/// Orthonormal basis {|a>} with dyadics X_ab = |a><b|, so that
/// X_ab X_cd = delta_bc X_ad and the X_aa form a ProjectorSet. `block[a]`
/// records which projector of the source family contains |a>.
class DyadicBasis {
 public:
  explicit DyadicBasis(ComplexMatrix basis, std::vector<std::size_t> block = {});

  std::size_t dim() const { return static_cast<std::size_t>(basis_.cols()); }
  Ket ket(std::size_t a) const { return basis_.col(static_cast<Eigen::Index>(a)); }
  ComplexMatrix element(std::size_t a, std::size_t b) const;
  const ComplexMatrix& basis() const { return basis_; }
  std::size_t block(std::size_t a) const { return block_.at(a); }
  ProjectorSet projectors() const;

 private:
  ComplexMatrix basis_;
  std::vector<std::size_t> block_;
};

// Basis adapted to a projector family: an orthonormal basis of each range,
// concatenated in projector order.
DyadicBasis build_dyadic_basis(const ProjectorSet& projectors);
DyadicBasis build_dyadic_basis(const SpectralDecomposition& sd);

struct EigenSystem {
  std::vector<double> values;  // ascending
  ComplexMatrix vectors;       // column k belongs to values[k]
};

ComplexMatrix tensor_product(const ComplexMatrix& a, const ComplexMatrix& b);
Ket tensor_product(const Ket& a, const Ket& b);

// Reduced state on the factors listed in `keep`.
DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::size_t> keep);
DensityMatrix partial_trace(const DensityMatrix& rho, std::initializer_list<std::size_t> keep);

// Cyclic complex Jacobi. Throws ValidationError if m is not Hermitian
// within tol::kHermitian.
EigenSystem hermitian_eigendecomposition(const ComplexMatrix& m);
std::vector<double> hermitian_eigenvalues(const ComplexMatrix& m);

SpectralDecomposition spectral_decompose_unitary(const UnitaryOperator& u);

DensityMatrix evolve_state(const DensityMatrix& rho, const UnitaryOperator& u);

struct RangeProjection {
  ComplexMatrix projector;
  std::size_t rank = 0;
  bool degenerate = false;  // no eigenvalue inside the range
};

// Projector onto the eigenvectors of a Hermitian observable whose
// eigenvalues lie in [lo, hi).
RangeProjection range_projector(const ComplexMatrix& observable, double lo, double hi);
// Same for a discretized position observable diag(grid).
RangeProjection range_projector(std::span<const double> grid, double lo, double hi);

UnitaryOperator random_unitary(std::size_t dim, CounterRng& rng);
DensityMatrix random_density(std::size_t dim, std::size_t rank, CounterRng& rng);
ProjectorSet random_projector_set(std::size_t dim, std::span<const std::size_t> block_sizes,
                                  CounterRng& rng);
ComplexMatrix random_hermitian(std::size_t dim, CounterRng& rng);
// Random ordered block sizes summing to dim: each of the dim - 1 gaps between
// consecutive basis vectors is a block boundary with probability 1/2.
std::vector<std::size_t> random_composition(std::size_t dim, CounterRng& rng);

// Columns |f_b> = d^{-1/2} sum_k exp(2 pi i b k / d) |k>.
ComplexMatrix fourier_basis(std::size_t dim);

}  // namespace qsim
