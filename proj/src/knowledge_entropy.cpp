#include "qsim/knowledge_entropy.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

namespace qsim {

namespace {

double entropy_of_spectrum(std::span<const double> values) {
  double s = 0.0;
  for (double v : values) {
    if (v > tol::kZeroEigen) s -= v * std::log2(v);
  }
  return std::max(0.0, s);
}

ComplexMatrix to_complex(const RealMatrix& m) { return m.cast<Complex>(); }

void require_orthonormal_columns(const ComplexMatrix& m, const char* what) {
  if (m.rows() != m.cols() || unitarity_residual(m) > tol::kOrthonormal) {
    throw ValidationError(std::string(what) + ": basis is not orthonormal");
  }
}

// Eigenbasis of a Hermitian matrix, made unique inside degenerate eigenspaces
// by diagonalizing diag(0, 1, ..., d-1) there, with each vector's largest
// entry made real and positive.
std::pair<ComplexMatrix, bool> canonical_eigenbasis(const ComplexMatrix& m) {
  const auto es = hermitian_eigendecomposition(m);
  const Eigen::Index n = m.rows();
  ComplexMatrix basis = es.vectors;
  bool degenerate = false;

  ComplexMatrix reference = ComplexMatrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) reference(k, k) = static_cast<double>(k);

  std::size_t start = 0;
  for (std::size_t k = 1; k <= es.values.size(); ++k) {
    if (k < es.values.size() && es.values[k] - es.values[k - 1] <= 1e-8) continue;
    const auto size = static_cast<Eigen::Index>(k - start);
    if (size > 1) {
      degenerate = true;
      const ComplexMatrix q = basis.middleCols(static_cast<Eigen::Index>(start), size);
      ComplexMatrix restricted = q.adjoint() * reference * q;
      restricted = 0.5 * (restricted + restricted.adjoint());
      const auto inner = hermitian_eigendecomposition(restricted);
      basis.middleCols(static_cast<Eigen::Index>(start), size) = q * inner.vectors;
    }
    start = k;
  }

  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index arg = 0;
    basis.col(k).cwiseAbs().maxCoeff(&arg);
    const Complex lead = basis(arg, k);
    if (std::abs(lead) > 0.0) basis.col(k) *= std::conj(lead) / std::abs(lead);
  }
  return {basis, degenerate};
}

}  // namespace

double von_neumann_entropy(const DensityMatrix& rho) {
  const auto values = hermitian_eigenvalues(rho.matrix());
  return entropy_of_spectrum(values);
}

double shannon_entropy(std::span<const double> probabilities) { return entropy_of_spectrum(probabilities); }

double free_energy(const FreeEnergyParams& params) {
  if (!(params.temperature >= 0.0)) throw ValidationError("free_energy: temperature must be >= 0");
  if (!(params.entropy >= 0.0)) throw ValidationError("free_energy: entropy must be >= 0");
  return params.energy - params.temperature * params.entropy;
}

// ---------------------------------------------------------------------------
// Knowledge states and selection families

KnowledgeState::KnowledgeState(RealMatrix weights, ComplexMatrix basis1, ComplexMatrix basis2)
    : weights_(std::move(weights)),
      basis1_(std::move(basis1)),
      basis2_(std::move(basis2)),
      layout_({static_cast<std::size_t>(basis1_.rows()), static_cast<std::size_t>(basis2_.rows())}) {
  require_orthonormal_columns(basis1_, "KnowledgeState basis1");
  require_orthonormal_columns(basis2_, "KnowledgeState basis2");
  if (weights_.rows() != basis1_.cols() || weights_.cols() != basis2_.cols()) {
    throw UsageError("KnowledgeState: weight matrix shape does not match the bases");
  }
  if (!weights_.allFinite() || weights_.minCoeff() < 0.0) {
    throw ValidationError("KnowledgeState: weights must be finite and non-negative");
  }
  if (std::abs(weights_.sum() - 1.0) > 1e-10) throw ValidationError("KnowledgeState: weights must sum to 1");
}

DensityMatrix KnowledgeState::density() const {
  const auto d1 = basis1_.cols();
  const auto d2 = basis2_.cols();
  ComplexMatrix rho = ComplexMatrix::Zero(d1 * d2, d1 * d2);
  for (Eigen::Index a = 0; a < d1; ++a) {
    for (Eigen::Index b = 0; b < d2; ++b) {
      if (weights_(a, b) == 0.0) continue;
      const Ket v = tensor_product(Ket(basis1_.col(a)), Ket(basis2_.col(b)));
      rho += weights_(a, b) * outer(v, v);
    }
  }
  return DensityMatrix(layout_, std::move(rho));
}

std::vector<double> KnowledgeState::marginal1() const {
  std::vector<double> out(static_cast<std::size_t>(weights_.rows()));
  for (Eigen::Index a = 0; a < weights_.rows(); ++a) out[static_cast<std::size_t>(a)] = weights_.row(a).sum();
  return out;
}

std::vector<double> KnowledgeState::marginal2() const {
  std::vector<double> out(static_cast<std::size_t>(weights_.cols()));
  for (Eigen::Index b = 0; b < weights_.cols(); ++b) out[static_cast<std::size_t>(b)] = weights_.col(b).sum();
  return out;
}

KnowledgeState build_knowledge_state(const RealMatrix& weights, std::span<const std::size_t> dims) {
  if (dims.size() != 2) throw UsageError("build_knowledge_state: expected two subsystem dimensions");
  const auto d1 = static_cast<Eigen::Index>(dims[0]);
  const auto d2 = static_cast<Eigen::Index>(dims[1]);
  if (weights.rows() > d1 || weights.cols() > d2) {
    throw UsageError("build_knowledge_state: more labels than basis states");
  }
  SubsystemLayout check({dims[0], dims[1]});
  RealMatrix padded = RealMatrix::Zero(d1, d2);
  padded.topLeftCorner(weights.rows(), weights.cols()) = weights;
  return KnowledgeState(std::move(padded), ComplexMatrix::Identity(d1, d1), ComplexMatrix::Identity(d2, d2));
}

ThetaFamily::ThetaFamily(std::size_t d1, std::size_t d2, RealMatrix columns)
    : d1_(d1), d2_(d2), columns_(std::move(columns)) {
  SubsystemLayout check({d1, d2});
  const auto n = static_cast<Eigen::Index>(d1 * d2);
  if (columns_.rows() != n || columns_.cols() != n) throw UsageError("ThetaFamily: shape does not match dims");
  if (!columns_.allFinite()) throw ValidationError("ThetaFamily: non-finite coefficients");
  if (max_abs(RealMatrix(columns_.transpose() * columns_ - RealMatrix::Identity(n, n))) > tol::kOrthonormal) {
    throw ValidationError("ThetaFamily: family is not orthonormal");
  }
}

ThetaFamily ThetaFamily::ideal(std::size_t d1, std::size_t d2) {
  const auto n = static_cast<Eigen::Index>(d1 * d2);
  return ThetaFamily(d1, d2, RealMatrix::Identity(n, n));
}

ThetaFamily ThetaFamily::from_permutation(std::size_t d1, std::size_t d2, std::span<const std::size_t> perm) {
  const auto n = static_cast<Eigen::Index>(d1 * d2);
  if (static_cast<Eigen::Index>(perm.size()) != n) throw UsageError("ThetaFamily: permutation has the wrong length");
  RealMatrix cols = RealMatrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto target = static_cast<Eigen::Index>(perm[static_cast<std::size_t>(k)]);
    if (target >= n) throw UsageError("ThetaFamily: permutation entry out of range");
    cols(target, k) = 1.0;
  }
  return ThetaFamily(d1, d2, std::move(cols));
}

double ThetaFamily::lambda(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
  return columns_(static_cast<Eigen::Index>(c * d2_ + d), static_cast<Eigen::Index>(a * d2_ + b));
}

ProjectorSet ThetaFamily::projectors() const { return ProjectorSet::from_basis(to_complex(columns_)); }

XiRotation::XiRotation(RealMatrix xi) : xi_(std::move(xi)) {
  if (xi_.rows() == 0 || xi_.rows() != xi_.cols()) throw UsageError("XiRotation: expected a square matrix");
  const auto n = xi_.rows();
  if (max_abs(RealMatrix(xi_ * xi_.transpose() - RealMatrix::Identity(n, n))) > tol::kOrthonormal) {
    throw ValidationError("XiRotation: xi is not orthogonal");
  }
}

ProjectorSet XiRotation::nu_projectors() const {
  // Row c of xi holds the components of |nu_c>.
  return ProjectorSet::from_basis(to_complex(RealMatrix(xi_.transpose())));
}

// ---------------------------------------------------------------------------
// Decoherence

DensityMatrix projective_decoherence(const DensityMatrix& rho, const ProjectorSet& ps) {
  if (ps.dim() != rho.dim()) throw UsageError("projective_decoherence: dimension mismatch");
  const auto n = static_cast<Eigen::Index>(rho.dim());
  ComplexMatrix out = ComplexMatrix::Zero(n, n);
  for (const auto& p : ps.projectors()) out += p * rho.matrix() * p;
  return DensityMatrix(rho.layout(), 0.5 * (out + out.adjoint()));
}

EntropyComparison entropy_after_decoherence_geq(const DensityMatrix& rho, const ProjectorSet& ps) {
  EntropyComparison out;
  out.before = von_neumann_entropy(rho);
  out.after = von_neumann_entropy(projective_decoherence(rho, ps));
  out.margin = out.after - out.before;
  return out;
}

KnowledgeFormResult knowledge_form_test(const DensityMatrix& rho) {
  if (rho.layout().factors() != 2) throw UsageError("knowledge_form_test: expected a bipartite layout");
  const auto [b1, deg1] = canonical_eigenbasis(partial_trace(rho, {0}).matrix());
  const auto [b2, deg2] = canonical_eigenbasis(partial_trace(rho, {1}).matrix());

  const ComplexMatrix w = tensor_product(b1, b2);
  const ComplexMatrix rotated = w.adjoint() * rho.matrix() * w;
  const ComplexMatrix dephased = w * ComplexMatrix(rotated.diagonal().asDiagonal()) * w.adjoint();

  KnowledgeFormResult out;
  out.residual = max_abs(dephased - rho.matrix());
  out.knowledge_form = out.residual <= 1e-9;
  out.degenerate_marginals = deg1 || deg2;
  out.basis1 = b1;
  out.basis2 = b2;
  return out;
}

// ---------------------------------------------------------------------------
// Selection

ReducedPair selection_marginals_by_formula(const KnowledgeState& ks, const ThetaFamily& theta) {
  const std::size_t d1 = theta.d1();
  const std::size_t d2 = theta.d2();
  const RealMatrix& p = ks.weights();
  ComplexMatrix r1 = ComplexMatrix::Zero(static_cast<Eigen::Index>(d1), static_cast<Eigen::Index>(d1));
  ComplexMatrix r2 = ComplexMatrix::Zero(static_cast<Eigen::Index>(d2), static_cast<Eigen::Index>(d2));
  for (std::size_t a = 0; a < d1; ++a) {
    for (std::size_t b = 0; b < d2; ++b) {
      const double pab = p(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      if (pab == 0.0) continue;
      for (std::size_t c = 0; c < d1; ++c) {
        for (std::size_t d = 0; d < d2; ++d) {
          const double lcd = theta.lambda(a, b, c, d);
          if (lcd == 0.0) continue;
          for (std::size_t e = 0; e < d1; ++e) {
            r1(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(e)) += pab * lcd * theta.lambda(a, b, e, d);
          }
          for (std::size_t f = 0; f < d2; ++f) {
            r2(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(f)) += pab * lcd * theta.lambda(a, b, c, f);
          }
        }
      }
    }
  }
  return {ks.basis1() * r1 * ks.basis1().adjoint(), ks.basis2() * r2 * ks.basis2().adjoint()};
}

SelectionReport apply_selection_process(const KnowledgeState& ks, const ThetaFamily& theta) {
  if (static_cast<Eigen::Index>(theta.d1()) != ks.basis1().cols() ||
      static_cast<Eigen::Index>(theta.d2()) != ks.basis2().cols()) {
    throw UsageError("apply_selection_process: selection family does not match the knowledge state");
  }
  const auto n = static_cast<Eigen::Index>(theta.d1() * theta.d2());
  Eigen::VectorXd p(n);
  for (Eigen::Index a = 0; a < ks.weights().rows(); ++a)
    for (Eigen::Index b = 0; b < ks.weights().cols(); ++b) p(a * ks.weights().cols() + b) = ks.weights()(a, b);

  const ComplexMatrix w = tensor_product(ks.basis1(), ks.basis2()) * to_complex(theta.columns());
  ComplexMatrix rho2 = w * p.cast<Complex>().asDiagonal() * w.adjoint();
  rho2 = 0.5 * (rho2 + rho2.adjoint());

  const DensityMatrix rho_t1 = ks.density();
  const auto marg = selection_marginals_by_formula(ks, theta);
  const SubsystemLayout l1 = ks.layout().subset(std::vector<std::size_t>{0});
  const SubsystemLayout l2 = ks.layout().subset(std::vector<std::size_t>{1});

  SelectionReport r{DensityMatrix(ks.layout(), std::move(rho2)),
                    partial_trace(rho_t1, {0}),
                    partial_trace(rho_t1, {1}),
                    DensityMatrix(l1, 0.5 * (marg.rho1 + marg.rho1.adjoint())),
                    DensityMatrix(l2, 0.5 * (marg.rho2 + marg.rho2.adjoint()))};
  r.s1_t1 = von_neumann_entropy(r.rho1_t1);
  r.s2_t1 = von_neumann_entropy(r.rho2_t1);
  r.s1_t2 = von_neumann_entropy(r.rho1_t2);
  r.s2_t2 = von_neumann_entropy(r.rho2_t2);
  r.ds1 = r.s1_t2 - r.s1_t1;
  r.ds2 = r.s2_t2 - r.s2_t1;
  r.s_global_t1 = von_neumann_entropy(rho_t1);
  r.s_global_t2 = von_neumann_entropy(r.rho_t2);
  return r;
}

Json SelectionReport::to_json(const KnowledgeState& ks, double epsilon, std::uint64_t seed) const {
  return Json{{"epsilon", epsilon}, {"seed", seed},   {"p_ab", real_matrix_to_json(ks.weights())},
              {"S1_t1", s1_t1},     {"S2_t1", s2_t1}, {"S1_t2", s1_t2},
              {"S2_t2", s2_t2},     {"dS1", ds1},     {"dS2", ds2},
              {"S_global", s_global_t2}};
}

ThetaFamily perturb_selection(std::size_t d1, std::size_t d2, double epsilon, CounterRng& rng) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw UsageError("perturb_selection: epsilon must be >= 0");
  SubsystemLayout check({d1, d2});
  const auto n = static_cast<Eigen::Index>(d1 * d2);
  RealMatrix g = RealMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      g(i, j) = rng.normal();
      g(j, i) = -g(i, j);
    }
  }
  if (epsilon == 0.0) return ThetaFamily::ideal(d1, d2);
  const double norm = g.norm();
  if (norm == 0.0) return ThetaFamily::ideal(d1, d2);
  const RealMatrix generator = (epsilon / norm) * g;
  RealMatrix rotation = generator.exp();
  return ThetaFamily(d1, d2, std::move(rotation));
}

SelectionFixture relabeling_counterexample() {
  RealMatrix p(2, 2);
  p << 0.5, 0.0, 0.0, 0.5;
  const std::size_t dims[] = {2, 2};
  const std::size_t perm[] = {0, 3, 2, 1};
  return {build_knowledge_state(p, dims), ThetaFamily::from_permutation(2, 2, perm)};
}

}  // namespace qsim
