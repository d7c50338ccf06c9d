#include "qsim/operator_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace qsim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<std::string> default_labels(std::size_t n) {
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i));
  return labels;
}

void require_capacity(std::size_t dim, const char* what) {
  if (dim > kMaxTotalDim) {
    throw CapacityError(std::string(what) + ": dimension " + std::to_string(dim) +
                        " exceeds the maximum of " + std::to_string(kMaxTotalDim));
  }
}

}  // namespace

void require_operator(const ComplexMatrix& m, const char* what) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    throw ValidationError(std::string(what) + ": expected a non-empty square matrix");
  }
  if (!m.allFinite()) throw ValidationError(std::string(what) + ": non-finite entries");
  require_capacity(static_cast<std::size_t>(m.rows()), what);
}

double hermiticity_residual(const ComplexMatrix& m) { return max_abs(m - m.adjoint()); }

double unitarity_residual(const ComplexMatrix& m) {
  return max_abs(m.adjoint() * m - ComplexMatrix::Identity(m.rows(), m.cols()));
}

ComplexMatrix outer(const Ket& a, const Ket& b) { return a * b.adjoint(); }

Ket basis_ket(std::size_t dim, std::size_t index) {
  if (index >= dim) throw UsageError("basis_ket: index out of range");
  Ket k = Ket::Zero(static_cast<Eigen::Index>(dim));
  k(static_cast<Eigen::Index>(index)) = 1.0;
  return k;
}

// ---------------------------------------------------------------------------
// SubsystemLayout

SubsystemLayout::SubsystemLayout(std::vector<std::size_t> factor_dims) : dims_(std::move(factor_dims)) {
  if (dims_.empty()) throw UsageError("SubsystemLayout: no factors");
  total_ = 1;
  for (auto d : dims_) {
    if (d == 0) throw UsageError("SubsystemLayout: factor dimension must be positive");
    if (d > kMaxTotalDim || total_ * d > kMaxTotalDim) {
      throw CapacityError("SubsystemLayout: total dimension exceeds " + std::to_string(kMaxTotalDim));
    }
    total_ *= d;
  }
}

std::vector<std::size_t> SubsystemLayout::digits(std::size_t flat) const {
  std::vector<std::size_t> out(dims_.size());
  for (std::size_t k = dims_.size(); k-- > 0;) {
    out[k] = flat % dims_[k];
    flat /= dims_[k];
  }
  return out;
}

std::size_t SubsystemLayout::flat(std::span<const std::size_t> digits) const {
  std::size_t idx = 0;
  for (std::size_t k = 0; k < dims_.size(); ++k) idx = idx * dims_[k] + digits[k];
  return idx;
}

SubsystemLayout SubsystemLayout::subset(std::span<const std::size_t> keep) const {
  std::vector<std::size_t> dims;
  for (auto k : keep) dims.push_back(dims_.at(k));
  return SubsystemLayout(std::move(dims));
}

// ---------------------------------------------------------------------------
// DensityMatrix / UnitaryOperator

DensityMatrix::DensityMatrix(SubsystemLayout layout, ComplexMatrix mat)
    : layout_(std::move(layout)), mat_(std::move(mat)) {
  require_operator(mat_, "DensityMatrix");
  if (static_cast<std::size_t>(mat_.rows()) != layout_.total_dim()) {
    throw UsageError("DensityMatrix: matrix dimension does not match layout");
  }
  if (hermiticity_residual(mat_) > tol::kHermitian) {
    throw ValidationError("DensityMatrix: not Hermitian");
  }
  if (std::abs(mat_.trace() - Complex(1.0)) > tol::kTrace) {
    throw ValidationError("DensityMatrix: trace differs from 1");
  }
  const auto values = hermitian_eigenvalues(mat_);
  if (values.front() < -tol::kPsd) throw ValidationError("DensityMatrix: not positive semidefinite");
}

DensityMatrix::DensityMatrix(ComplexMatrix mat)
    : DensityMatrix(SubsystemLayout::single(static_cast<std::size_t>(mat.rows())), ComplexMatrix(mat)) {}

DensityMatrix DensityMatrix::pure(const Ket& psi, SubsystemLayout layout) {
  const double n = psi.norm();
  if (!(n > 0.0)) throw ValidationError("DensityMatrix::pure: zero vector");
  const Ket unit = psi / n;
  return DensityMatrix(std::move(layout), outer(unit, unit));
}

DensityMatrix DensityMatrix::pure(const Ket& psi) {
  return pure(psi, SubsystemLayout::single(static_cast<std::size_t>(psi.size())));
}

double DensityMatrix::purity() const { return (mat_ * mat_).trace().real(); }

UnitaryOperator::UnitaryOperator(SubsystemLayout layout, ComplexMatrix mat)
    : layout_(std::move(layout)), mat_(std::move(mat)) {
  require_operator(mat_, "UnitaryOperator");
  if (static_cast<std::size_t>(mat_.rows()) != layout_.total_dim()) {
    throw UsageError("UnitaryOperator: matrix dimension does not match layout");
  }
  if (unitarity_residual(mat_) > tol::kUnitary) throw ValidationError("UnitaryOperator: not unitary");
}

UnitaryOperator::UnitaryOperator(ComplexMatrix mat)
    : UnitaryOperator(SubsystemLayout::single(static_cast<std::size_t>(mat.rows())), ComplexMatrix(mat)) {}

UnitaryOperator UnitaryOperator::identity(SubsystemLayout layout) {
  const auto n = static_cast<Eigen::Index>(layout.total_dim());
  return UnitaryOperator(std::move(layout), ComplexMatrix::Identity(n, n));
}

// ---------------------------------------------------------------------------
// ProjectorSet

double projector_family_residual(std::span<const ComplexMatrix> projectors) {
  if (projectors.empty()) return std::numeric_limits<double>::infinity();
  const Eigen::Index n = projectors.front().rows();
  double worst = 0.0;
  ComplexMatrix sum = ComplexMatrix::Zero(n, n);
  for (std::size_t a = 0; a < projectors.size(); ++a) {
    const auto& p = projectors[a];
    if (p.rows() != n || p.cols() != n) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, hermiticity_residual(p));
    worst = std::max(worst, max_abs(p * p - p));
    for (std::size_t b = a + 1; b < projectors.size(); ++b) {
      worst = std::max(worst, max_abs(p * projectors[b]));
    }
    sum += p;
  }
  return std::max(worst, max_abs(sum - ComplexMatrix::Identity(n, n)));
}

ProjectorSet::ProjectorSet(std::vector<ComplexMatrix> projectors, std::vector<std::string> labels)
    : projectors_(std::move(projectors)), labels_(std::move(labels)) {
  if (projectors_.empty()) throw ValidationError("ProjectorSet: empty family");
  for (const auto& p : projectors_) require_operator(p, "ProjectorSet member");
  if (labels_.empty()) labels_ = default_labels(projectors_.size());
  if (labels_.size() != projectors_.size()) {
    throw UsageError("ProjectorSet: label count does not match projector count");
  }
  if (std::set<std::string>(labels_.begin(), labels_.end()).size() != labels_.size()) {
    throw UsageError("ProjectorSet: duplicate labels");
  }
  if (projector_family_residual(projectors_) > tol::kProjector) {
    throw ValidationError(
        "ProjectorSet: family is not a complete set of orthogonal Hermitian projectors");
  }
}

ProjectorSet ProjectorSet::from_basis(const ComplexMatrix& basis, std::vector<std::string> labels) {
  std::vector<ComplexMatrix> ps;
  for (Eigen::Index k = 0; k < basis.cols(); ++k) ps.push_back(outer(basis.col(k), basis.col(k)));
  return ProjectorSet(std::move(ps), std::move(labels));
}

ProjectorSet ProjectorSet::computational(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return from_basis(ComplexMatrix::Identity(n, n));
}

ProjectorSet ProjectorSet::trivial(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return ProjectorSet({ComplexMatrix::Identity(n, n)}, {"I"});
}

std::optional<std::size_t> ProjectorSet::index_of(const std::string& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

std::size_t ProjectorSet::rank(std::size_t i) const {
  return static_cast<std::size_t>(std::lround(projectors_.at(i).trace().real()));
}

ComplexMatrix SpectralDecomposition::reconstruct() const {
  const auto n = static_cast<Eigen::Index>(projectors.dim());
  ComplexMatrix u = ComplexMatrix::Zero(n, n);
  for (std::size_t a = 0; a < phases.size(); ++a) u += std::polar(1.0, phases[a]) * projectors[a];
  return u;
}

// ---------------------------------------------------------------------------
// DyadicBasis

DyadicBasis::DyadicBasis(ComplexMatrix basis, std::vector<std::size_t> block)
    : basis_(std::move(basis)), block_(std::move(block)) {
  require_operator(basis_, "DyadicBasis");
  if (unitarity_residual(basis_) > tol::kOrthonormal) {
    throw ValidationError("DyadicBasis: basis is not orthonormal");
  }
  if (block_.empty()) {
    block_.resize(static_cast<std::size_t>(basis_.cols()));
    std::iota(block_.begin(), block_.end(), std::size_t{0});
  }
  if (block_.size() != static_cast<std::size_t>(basis_.cols())) {
    throw UsageError("DyadicBasis: block list does not match basis size");
  }
}

ComplexMatrix DyadicBasis::element(std::size_t a, std::size_t b) const { return outer(ket(a), ket(b)); }

ProjectorSet DyadicBasis::projectors() const { return ProjectorSet::from_basis(basis_); }

DyadicBasis build_dyadic_basis(const ProjectorSet& projectors) {
  const auto n = static_cast<Eigen::Index>(projectors.dim());
  ComplexMatrix basis(n, n);
  std::vector<std::size_t> block;
  Eigen::Index col = 0;
  for (std::size_t k = 0; k < projectors.size(); ++k) {
    const auto es = hermitian_eigendecomposition(projectors[k]);
    for (std::size_t j = 0; j < es.values.size(); ++j) {
      if (es.values[j] > 0.5) {
        basis.col(col++) = es.vectors.col(static_cast<Eigen::Index>(j));
        block.push_back(k);
      }
    }
  }
  if (col != n) throw AnalysisError("build_dyadic_basis: projector ranks do not sum to the dimension");
  return DyadicBasis(std::move(basis), std::move(block));
}

DyadicBasis build_dyadic_basis(const SpectralDecomposition& sd) { return build_dyadic_basis(sd.projectors); }

// ---------------------------------------------------------------------------
// Operations

ComplexMatrix tensor_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  const std::size_t total = static_cast<std::size_t>(a.rows()) * static_cast<std::size_t>(b.rows());
  require_capacity(total, "tensor_product");
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Ket tensor_product(const Ket& a, const Ket& b) {
  require_capacity(static_cast<std::size_t>(a.size() * b.size()), "tensor_product");
  Ket out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::size_t> keep) {
  const auto& layout = rho.layout();
  if (keep.empty()) throw UsageError("partial_trace: keep set is empty");
  std::vector<std::size_t> kept(keep.begin(), keep.end());
  std::sort(kept.begin(), kept.end());
  if (std::adjacent_find(kept.begin(), kept.end()) != kept.end()) {
    throw UsageError("partial_trace: duplicate factor index");
  }
  if (kept.back() >= layout.factors()) throw UsageError("partial_trace: factor index out of range");

  std::vector<bool> is_kept(layout.factors(), false);
  for (auto k : kept) is_kept[k] = true;
  const SubsystemLayout out_layout = layout.subset(kept);

  const std::size_t n = layout.total_dim();
  // For every flat index: its position in the kept space and in the traced space.
  std::vector<std::size_t> kept_index(n), traced_index(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto d = layout.digits(i);
    std::size_t ki = 0, ti = 0;
    for (std::size_t f = 0; f < d.size(); ++f) {
      if (is_kept[f]) {
        ki = ki * layout.factor_dim(f) + d[f];
      } else {
        ti = ti * layout.factor_dim(f) + d[f];
      }
    }
    kept_index[i] = ki;
    traced_index[i] = ti;
  }

  const auto m = static_cast<Eigen::Index>(out_layout.total_dim());
  ComplexMatrix out = ComplexMatrix::Zero(m, m);
  const auto& r = rho.matrix();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (traced_index[i] == traced_index[j]) {
        out(static_cast<Eigen::Index>(kept_index[i]), static_cast<Eigen::Index>(kept_index[j])) +=
            r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
  }
  return DensityMatrix(out_layout, std::move(out));
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::initializer_list<std::size_t> keep) {
  return partial_trace(rho, std::span<const std::size_t>(keep.begin(), keep.size()));
}

SpectralDecomposition spectral_decompose_unitary(const UnitaryOperator& u) {
  // The Schur form of a normal matrix is diagonal, so the Schur vectors are
  // an orthonormal eigenbasis even inside degenerate eigenspaces.
  Eigen::ComplexSchur<ComplexMatrix> schur(u.matrix());
  if (schur.info() != Eigen::Success) throw AnalysisError("spectral_decompose_unitary: Schur failed");
  const ComplexMatrix& t = schur.matrixT();
  const ComplexMatrix& q = schur.matrixU();
  const Eigen::Index n = t.rows();

  std::vector<double> raw(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    double phi = std::arg(t(k, k));
    if (phi < 0.0) phi += kTwoPi;
    raw[static_cast<std::size_t>(k)] = phi;
  }
  std::vector<std::size_t> order(raw.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return raw[i] < raw[j]; });

  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k > 0 && raw[order[k]] - raw[order[k - 1]] <= tol::kPhase) {
      clusters.back().push_back(order[k]);
    } else {
      clusters.push_back({order[k]});
    }
  }
  // Phases just below 2 pi belong with the cluster at 0.
  if (clusters.size() > 1 && raw[clusters.back().back()] - kTwoPi + tol::kPhase >= raw[clusters.front().front()]) {
    auto tail = std::move(clusters.back());
    clusters.pop_back();
    clusters.front().insert(clusters.front().begin(), tail.begin(), tail.end());
  }

  std::vector<std::pair<double, ComplexMatrix>> parts;
  for (const auto& cluster : clusters) {
    Complex mean = 0.0;
    ComplexMatrix p = ComplexMatrix::Zero(n, n);
    for (auto k : cluster) {
      mean += std::polar(1.0, raw[k]);
      const auto col = q.col(static_cast<Eigen::Index>(k));
      p += col * col.adjoint();
    }
    double phi = std::arg(mean);
    if (phi < 0.0) phi += kTwoPi;
    if (kTwoPi - phi <= tol::kReconstruct || phi <= tol::kReconstruct) phi = 0.0;
    parts.emplace_back(phi, std::move(p));
  }
  std::sort(parts.begin(), parts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<double> phases;
  std::vector<ComplexMatrix> projectors;
  for (auto& [phi, p] : parts) {
    phases.push_back(phi);
    projectors.push_back(std::move(p));
  }
  SpectralDecomposition sd{std::move(phases), ProjectorSet(std::move(projectors))};
  if (max_abs(sd.reconstruct() - u.matrix()) > tol::kReconstruct) {
    throw AnalysisError("spectral_decompose_unitary: reconstruction residual too large");
  }
  return sd;
}

DensityMatrix evolve_state(const DensityMatrix& rho, const UnitaryOperator& u) {
  if (rho.dim() != u.dim()) throw UsageError("evolve_state: dimension mismatch");
  const ComplexMatrix out = u.matrix() * rho.matrix() * u.adjoint();
  return DensityMatrix(rho.layout(), 0.5 * (out + out.adjoint()));
}

RangeProjection range_projector(const ComplexMatrix& observable, double lo, double hi) {
  if (!(lo < hi)) throw UsageError("range_projector: require lo < hi");
  const auto es = hermitian_eigendecomposition(observable);
  const Eigen::Index n = observable.rows();
  RangeProjection out{ComplexMatrix::Zero(n, n), 0, false};
  for (std::size_t k = 0; k < es.values.size(); ++k) {
    if (es.values[k] >= lo && es.values[k] < hi) {
      const auto v = es.vectors.col(static_cast<Eigen::Index>(k));
      out.projector += v * v.adjoint();
      ++out.rank;
    }
  }
  out.degenerate = out.rank == 0;
  return out;
}

RangeProjection range_projector(std::span<const double> grid, double lo, double hi) {
  if (grid.empty()) throw UsageError("range_projector: empty grid");
  const auto n = static_cast<Eigen::Index>(grid.size());
  ComplexMatrix obs = ComplexMatrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) obs(k, k) = grid[static_cast<std::size_t>(k)];
  return range_projector(obs, lo, hi);
}

// ---------------------------------------------------------------------------
// Random generation

namespace {

ComplexMatrix gaussian_matrix(std::size_t rows, std::size_t cols, CounterRng& rng) {
  ComplexMatrix g(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  // Row-major draw order so the stream layout is easy to reproduce elsewhere.
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = rng.complex_normal();
  }
  return g;
}

ComplexMatrix haar_matrix(std::size_t dim, CounterRng& rng) {
  const ComplexMatrix z = gaussian_matrix(dim, dim, rng);
  Eigen::HouseholderQR<ComplexMatrix> qr(z);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix& r = qr.matrixQR();
  // Fix the column phases so that Q is Haar distributed.
  for (Eigen::Index k = 0; k < q.cols(); ++k) {
    const Complex d = r(k, k);
    const double mag = std::abs(d);
    if (mag > 0.0) q.col(k) *= d / mag;
  }
  return q;
}

}  // namespace

UnitaryOperator random_unitary(std::size_t dim, CounterRng& rng) {
  if (dim == 0) throw UsageError("random_unitary: dim must be positive");
  require_capacity(dim, "random_unitary");
  return UnitaryOperator(haar_matrix(dim, rng));
}

DensityMatrix random_density(std::size_t dim, std::size_t rank, CounterRng& rng) {
  if (dim == 0 || rank == 0 || rank > dim) throw UsageError("random_density: require 1 <= rank <= dim");
  require_capacity(dim, "random_density");
  const ComplexMatrix g = gaussian_matrix(dim, rank, rng);
  ComplexMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix(0.5 * (rho + rho.adjoint()));
}

ProjectorSet random_projector_set(std::size_t dim, std::span<const std::size_t> block_sizes,
                                  CounterRng& rng) {
  if (block_sizes.empty()) throw UsageError("random_projector_set: no blocks");
  std::size_t total = 0;
  for (auto b : block_sizes) {
    if (b == 0) throw UsageError("random_projector_set: empty block");
    total += b;
  }
  if (total != dim) throw UsageError("random_projector_set: block sizes must sum to dim");
  const ComplexMatrix u = random_unitary(dim, rng).matrix();
  std::vector<ComplexMatrix> ps;
  Eigen::Index col = 0;
  for (auto b : block_sizes) {
    const auto cols = u.middleCols(col, static_cast<Eigen::Index>(b));
    ps.push_back(cols * cols.adjoint());
    col += static_cast<Eigen::Index>(b);
  }
  return ProjectorSet(std::move(ps));
}

ComplexMatrix random_hermitian(std::size_t dim, CounterRng& rng) {
  require_capacity(dim, "random_hermitian");
  const ComplexMatrix z = gaussian_matrix(dim, dim, rng);
  return 0.5 * (z + z.adjoint());
}

std::vector<std::size_t> random_composition(std::size_t dim, CounterRng& rng) {
  if (dim == 0) throw UsageError("random_composition: dim must be positive");
  std::vector<std::size_t> blocks{1};
  for (std::size_t k = 1; k < dim; ++k) {
    if (rng.uniform() < 0.5) {
      blocks.push_back(1);
    } else {
      ++blocks.back();
    }
  }
  return blocks;
}

ComplexMatrix fourier_basis(std::size_t dim) {
  require_capacity(dim, "fourier_basis");
  const auto n = static_cast<Eigen::Index>(dim);
  ComplexMatrix f(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index b = 0; b < n; ++b) {
      f(k, b) = std::polar(1.0 / std::sqrt(static_cast<double>(dim)),
                           kTwoPi * static_cast<double>((b * k) % n) / static_cast<double>(dim));
    }
  }
  return f;
}

}  // namespace qsim
