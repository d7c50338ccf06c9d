#include "qsim/heisenberg_flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/SVD>

namespace qsim {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInvariance = 1e-9;
constexpr double kPhaseDependence = 1e-9;

double wrap_phase(double x) {
  x = std::remainder(x, 2.0 * kPi);  // [-pi, pi]
  if (x <= -kPi) x += 2.0 * kPi;
  return x;
}

void require_bipartite(const SubsystemLayout& layout, const char* what) {
  if (layout.factors() != 2) throw UsageError(std::string(what) + ": expected a two-factor layout");
}

std::size_t containing_projector(const Ket& v, const ProjectorSet& ps) {
  const double n = v.norm();
  for (std::size_t a = 0; a < ps.size(); ++a) {
    if ((ps[a] * v - v).norm() <= 1e-9 * std::max(n, 1.0)) return a;
  }
  throw AnalysisError("dyadic ket is not aligned with the spectral projectors");
}

}  // namespace

// ---------------------------------------------------------------------------
// Descriptors

DescriptorSet::DescriptorSet(SubsystemLayout layout, std::vector<std::vector<NamedOperator>> per_subsystem,
                             long time_tag)
    : layout_(std::move(layout)), descriptors_(std::move(per_subsystem)), time_tag_(time_tag) {
  if (descriptors_.size() != layout_.factors()) {
    throw UsageError("DescriptorSet: one descriptor list per subsystem is required");
  }
  const auto n = static_cast<Eigen::Index>(layout_.total_dim());
  for (const auto& list : descriptors_) {
    for (const auto& d : list) {
      if (d.op.rows() != n || d.op.cols() != n) {
        throw UsageError("DescriptorSet: descriptor '" + d.name + "' has the wrong dimension");
      }
    }
  }
}

DescriptorSet DescriptorSet::from_local(SubsystemLayout layout,
                                        const std::vector<std::vector<NamedOperator>>& local) {
  if (local.size() != layout.factors()) throw UsageError("DescriptorSet: one list per subsystem");
  std::vector<std::vector<NamedOperator>> embedded(local.size());
  for (std::size_t f = 0; f < local.size(); ++f) {
    for (const auto& op : local[f]) embedded[f].push_back({op.name, embed_operator(op.op, layout, f)});
  }
  return DescriptorSet(std::move(layout), std::move(embedded));
}

ComplexMatrix embed_operator(const ComplexMatrix& local, const SubsystemLayout& layout, std::size_t factor) {
  if (factor >= layout.factors()) throw UsageError("embed_operator: factor out of range");
  if (static_cast<std::size_t>(local.rows()) != layout.factor_dim(factor)) {
    throw UsageError("embed_operator: operator does not match factor dimension");
  }
  ComplexMatrix out = ComplexMatrix::Identity(1, 1);
  for (std::size_t f = 0; f < layout.factors(); ++f) {
    const auto d = static_cast<Eigen::Index>(layout.factor_dim(f));
    out = tensor_product(out, f == factor ? local : ComplexMatrix::Identity(d, d));
  }
  return out;
}

DescriptorSet evolve_descriptor(const DescriptorSet& d, const UnitaryOperator& u) {
  if (d.layout().total_dim() != u.dim()) throw UsageError("evolve_descriptor: dimension mismatch");
  const ComplexMatrix uh = u.adjoint();
  auto evolved = d.descriptors();
  for (auto& list : evolved) {
    for (auto& op : list) op.op = uh * op.op * u.matrix();
  }
  return DescriptorSet(d.layout(), std::move(evolved), d.time_tag() + 1);
}

double descriptor_algebra_residual(const DescriptorSet& before, const DescriptorSet& after,
                                   const UnitaryOperator& u) {
  std::vector<const ComplexMatrix*> b, a;
  for (const auto& list : before.descriptors())
    for (const auto& op : list) b.push_back(&op.op);
  for (const auto& list : after.descriptors())
    for (const auto& op : list) a.push_back(&op.op);
  if (a.size() != b.size()) throw UsageError("descriptor_algebra_residual: descriptor counts differ");

  const ComplexMatrix uh = u.adjoint();
  double worst = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const ComplexMatrix prod = uh * ((*b[i]) * (*b[j])) * u.matrix();
      const ComplexMatrix comm = uh * ((*b[i]) * (*b[j]) - (*b[j]) * (*b[i])) * u.matrix();
      worst = std::max(worst, max_abs((*a[i]) * (*a[j]) - prod));
      worst = std::max(worst, max_abs((*a[i]) * (*a[j]) - (*a[j]) * (*a[i]) - comm));
    }
  }
  return worst;
}

ComplexMatrix conjugate_dyadic(const Ket& c, const Ket& d, const SpectralDecomposition& sd) {
  const std::size_t pc = containing_projector(c, sd.projectors);
  const std::size_t pd = containing_projector(d, sd.projectors);
  return std::polar(1.0, sd.phases[pd] - sd.phases[pc]) * outer(c, d);
}

ComplexMatrix conjugate_dyadic(const DyadicBasis& basis, std::size_t c, std::size_t d,
                               const SpectralDecomposition& sd) {
  return conjugate_dyadic(basis.ket(c), basis.ket(d), sd);
}

// ---------------------------------------------------------------------------
// Copy interactions

ObservableSpec::ObservableSpec(std::vector<double> coefficients, ProjectorSet projectors)
    : coefficients_(std::move(coefficients)), projectors_(std::move(projectors)) {
  if (coefficients_.size() != projectors_.size()) {
    throw UsageError("ObservableSpec: coefficient count does not match projector count");
  }
  for (double a : coefficients_) {
    if (!std::isfinite(a)) throw ValidationError("ObservableSpec: non-finite coefficient");
  }
}

ComplexMatrix ObservableSpec::matrix() const {
  const auto n = static_cast<Eigen::Index>(projectors_.dim());
  ComplexMatrix a = ComplexMatrix::Zero(n, n);
  for (std::size_t k = 0; k < coefficients_.size(); ++k) a += coefficients_[k] * projectors_[k];
  return a;
}

CopyInteraction build_copy_unitary(const RealMatrix& phases, const ProjectorSet& p1, const ProjectorSet& p2,
                                   std::string id) {
  if (static_cast<std::size_t>(phases.rows()) != p1.size() ||
      static_cast<std::size_t>(phases.cols()) != p2.size()) {
    throw UsageError("build_copy_unitary: phase matrix shape does not match projector counts");
  }
  if (!phases.allFinite()) throw ValidationError("build_copy_unitary: non-finite phase");
  const RealMatrix normalized = phases.array() - phases(0, 0);

  SubsystemLayout layout({p1.dim(), p2.dim()});
  const auto n = static_cast<Eigen::Index>(layout.total_dim());
  ComplexMatrix u = ComplexMatrix::Zero(n, n);
  for (std::size_t a = 0; a < p1.size(); ++a) {
    for (std::size_t b = 0; b < p2.size(); ++b) {
      u += std::polar(1.0, normalized(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))) *
           tensor_product(p1[a], p2[b]);
    }
  }
  return CopyInteraction{normalized, p1, p2, UnitaryOperator(std::move(layout), std::move(u)), std::move(id)};
}

CopyInteraction controlled_shift_interaction(std::size_t d1, std::size_t d2) {
  if (d1 < 2 || d2 < 2 || d1 > d2) throw UsageError("controlled_shift_interaction: require 2 <= d1 <= d2");
  const auto n2 = static_cast<Eigen::Index>(d2);
  RealMatrix phases(static_cast<Eigen::Index>(d1), n2);
  for (Eigen::Index a = 0; a < phases.rows(); ++a) {
    for (Eigen::Index b = 0; b < n2; ++b) {
      phases(a, b) = 2.0 * kPi * static_cast<double>((a * b) % n2) / static_cast<double>(d2);
    }
  }
  return build_copy_unitary(phases, ProjectorSet::computational(d1), ProjectorSet::from_basis(fourier_basis(d2)),
                            "CSHIFT");
}

CopyInteraction random_copy_interaction(std::size_t d1, std::size_t d2, CounterRng& rng) {
  const auto b1 = random_composition(d1, rng);
  const auto b2 = random_composition(d2, rng);
  const ProjectorSet p1 = random_projector_set(d1, b1, rng);
  const ProjectorSet p2 = random_projector_set(d2, b2, rng);
  RealMatrix phases(static_cast<Eigen::Index>(b1.size()), static_cast<Eigen::Index>(b2.size()));
  for (Eigen::Index a = 0; a < phases.rows(); ++a)
    for (Eigen::Index b = 0; b < phases.cols(); ++b) phases(a, b) = 2.0 * kPi * rng.uniform();
  return build_copy_unitary(phases, p1, p2, "RANDOM");
}

InvarianceResult check_invariance(const ObservableSpec& obs, const CopyInteraction& ci) {
  if (obs.projectors().dim() != ci.proj1.dim()) throw UsageError("check_invariance: S1 dimension mismatch");
  const auto d2 = static_cast<Eigen::Index>(ci.proj2.dim());
  const ComplexMatrix a = tensor_product(obs.matrix(), ComplexMatrix::Identity(d2, d2));
  const auto& u = ci.unitary.matrix();
  const double residual = max_abs(u.adjoint() * a * u - a);
  return {residual <= kInvariance, residual};
}

CopyReport analyze_copy(const CopyInteraction& ci) {
  CopyReport report;
  report.s1_labels = ci.proj1.labels();
  report.s2_labels = ci.proj2.labels();
  const auto& u = ci.unitary.matrix();
  const ComplexMatrix uh = u.adjoint();
  const auto d1 = static_cast<Eigen::Index>(ci.proj1.dim());
  const auto d2 = static_cast<Eigen::Index>(ci.proj2.dim());
  const ComplexMatrix id1 = ComplexMatrix::Identity(d1, d1);
  const ComplexMatrix id2 = ComplexMatrix::Identity(d2, d2);
  const auto phi = [&](std::size_t a, std::size_t b) {
    return ci.phases(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  };

  const DyadicBasis basis2 = build_dyadic_basis(ci.proj2);
  for (std::size_t c = 0; c < basis2.dim(); ++c) {
    for (std::size_t d = 0; d < basis2.dim(); ++d) {
      DyadicEntry e;
      e.c = c;
      e.d = d;
      e.block_c = basis2.block(c);
      e.block_d = basis2.block(d);
      const ComplexMatrix x = basis2.element(c, d);
      ComplexMatrix formula = ComplexMatrix::Zero(d1 * d2, d1 * d2);
      for (std::size_t a = 0; a < ci.proj1.size(); ++a) {
        const double ph = phi(a, e.block_d) - phi(a, e.block_c);
        e.phases_by_a.push_back(wrap_phase(ph));
        formula += std::polar(1.0, ph) * tensor_product(ci.proj1[a], x);
      }
      for (double ph : e.phases_by_a) {
        if (std::abs(wrap_phase(ph - e.phases_by_a.front())) > kPhaseDependence) e.depends = true;
      }
      const ComplexMatrix brute = uh * tensor_product(id1, x) * u;
      e.residual = max_abs(brute - formula);
      report.max_residual = std::max(report.max_residual, e.residual);
      report.copied_into_s2 = report.copied_into_s2 || e.depends;
      report.dyadic_table.push_back(std::move(e));
    }
  }

  // Reverse direction: do the S1 dyadics pick up a dependence on proj2?
  const DyadicBasis basis1 = build_dyadic_basis(ci.proj1);
  for (std::size_t c = 0; c < basis1.dim(); ++c) {
    for (std::size_t d = 0; d < basis1.dim(); ++d) {
      const std::size_t bc = basis1.block(c);
      const std::size_t bd = basis1.block(d);
      const ComplexMatrix x = basis1.element(c, d);
      ComplexMatrix formula = ComplexMatrix::Zero(d1 * d2, d1 * d2);
      const double first = phi(bd, 0) - phi(bc, 0);
      for (std::size_t b = 0; b < ci.proj2.size(); ++b) {
        const double ph = phi(bd, b) - phi(bc, b);
        if (std::abs(wrap_phase(ph - first)) > kPhaseDependence) report.copied_into_s1 = true;
        formula += std::polar(1.0, ph) * tensor_product(x, ci.proj2[b]);
      }
      const ComplexMatrix brute = uh * tensor_product(x, id2) * u;
      report.max_residual = std::max(report.max_residual, max_abs(brute - formula));
    }
  }
  return report;
}

Json CopyReport::to_json() const {
  Json families = Json::array();
  if (copied_into_s2) families.push_back({{"from", "S1"}, {"to", "S2"}, {"labels", s1_labels}});
  if (copied_into_s1) families.push_back({{"from", "S2"}, {"to", "S1"}, {"labels", s2_labels}});
  Json table = Json::array();
  for (const auto& e : dyadic_table) {
    table.push_back({{"c", e.c},
                     {"d", e.d},
                     {"block_c", e.block_c},
                     {"block_d", e.block_d},
                     {"phases_by_a", e.phases_by_a},
                     {"depends", e.depends},
                     {"residual", e.residual}});
  }
  return Json{{"copied_families", std::move(families)},
              {"dyadic_table", std::move(table)},
              {"residuals", {{"max", max_residual}}}};
}

// ---------------------------------------------------------------------------
// Invariant families

std::vector<ComplexMatrix> invariant_s1_algebra(const UnitaryOperator& u) {
  require_bipartite(u.layout(), "invariant_s1_algebra");
  const auto d1 = static_cast<Eigen::Index>(u.layout().factor_dim(0));
  const auto d2 = static_cast<Eigen::Index>(u.layout().factor_dim(1));
  const auto n = d1 * d2;
  const ComplexMatrix id2 = ComplexMatrix::Identity(d2, d2);

  // Columns: vec([E_ij (x) I, U]) for the matrix units E_ij of S1.
  ComplexMatrix lin(n * n, d1 * d1);
  for (Eigen::Index i = 0; i < d1; ++i) {
    for (Eigen::Index j = 0; j < d1; ++j) {
      ComplexMatrix e = ComplexMatrix::Zero(d1, d1);
      e(i, j) = 1.0;
      const ComplexMatrix big = tensor_product(e, id2);
      const ComplexMatrix comm = big * u.matrix() - u.matrix() * big;
      lin.col(i * d1 + j) = comm.reshaped();
    }
  }
  Eigen::JacobiSVD<ComplexMatrix> svd(lin, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cutoff = 1e-8 * std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);

  std::vector<ComplexMatrix> basis;
  for (Eigen::Index k = 0; k < d1 * d1; ++k) {
    const double s = k < sv.size() ? sv(k) : 0.0;
    if (s > cutoff) continue;
    ComplexMatrix a(d1, d1);
    for (Eigen::Index i = 0; i < d1; ++i)
      for (Eigen::Index j = 0; j < d1; ++j) a(i, j) = svd.matrixV()(i * d1 + j, k);
    // The algebra is closed under adjoints, so both Hermitian parts belong to it.
    basis.push_back(0.5 * (a + a.adjoint()));
    basis.push_back(Complex(0.0, -0.5) * (a - a.adjoint()));
  }
  return basis;
}

CopiableFamilies copiable_projector_families(const UnitaryOperator& u) {
  const auto hermitian_parts = invariant_s1_algebra(u);
  const auto d1 = static_cast<Eigen::Index>(u.layout().factor_dim(0));
  const auto d2 = static_cast<Eigen::Index>(u.layout().factor_dim(1));
  const ComplexMatrix id2 = ComplexMatrix::Identity(d2, d2);

  CopiableFamilies out;
  out.algebra_dim = hermitian_parts.size() / 2;
  out.no_interaction = out.algebra_dim == static_cast<std::size_t>(d1 * d1);

  // A generic Hermitian element of the algebra; its eigenprojectors are the
  // minimal projectors of a maximal abelian subalgebra.
  CounterRng rng(0x5EEDC0FFEEULL);
  ComplexMatrix generic = ComplexMatrix::Zero(d1, d1);
  for (const auto& h : hermitian_parts) generic += (2.0 * rng.uniform() - 1.0) * h;
  generic = 0.5 * (generic + generic.adjoint());

  std::vector<ComplexMatrix> projectors;
  if (max_abs(generic) < 1e-12) {
    projectors.push_back(ComplexMatrix::Identity(d1, d1));
  } else {
    const auto es = hermitian_eigendecomposition(generic);
    const double scale = std::max(std::abs(es.values.front()), std::abs(es.values.back()));
    ComplexMatrix current = ComplexMatrix::Zero(d1, d1);
    for (std::size_t k = 0; k < es.values.size(); ++k) {
      if (k > 0 && es.values[k] - es.values[k - 1] > 1e-7 * scale) {
        projectors.push_back(current);
        current.setZero();
      }
      const auto v = es.vectors.col(static_cast<Eigen::Index>(k));
      current += v * v.adjoint();
    }
    projectors.push_back(current);
  }

  // Canonical order: by the first basis index each projector touches.
  const auto lead = [](const ComplexMatrix& p) {
    for (Eigen::Index k = 0; k < p.rows(); ++k)
      if (p(k, k).real() > 1e-9) return k;
    return p.rows();
  };
  std::stable_sort(projectors.begin(), projectors.end(),
                   [&](const ComplexMatrix& a, const ComplexMatrix& b) { return lead(a) < lead(b); });

  for (const auto& p : projectors) {
    const ComplexMatrix big = tensor_product(p, id2);
    if (max_abs(u.adjoint() * big * u.matrix() - big) > kInvariance) {
      throw AnalysisError("copiable_projector_families: extracted projector is not invariant");
    }
  }
  out.unique = out.algebra_dim == projectors.size();
  out.families.emplace_back(std::move(projectors));
  return out;
}

// ---------------------------------------------------------------------------
// Copying demonstrations

FidelityPair no_cloning_demo(const std::array<Ket, 2>& sources, const CopyInteraction& copier, const Ket& blank,
                             const std::optional<ComplexMatrix>& copy_map) {
  const auto d1 = static_cast<Eigen::Index>(copier.proj1.dim());
  const auto d2 = static_cast<Eigen::Index>(copier.proj2.dim());
  if (blank.size() != d2) throw UsageError("no_cloning_demo: blank state has the wrong dimension");
  ComplexMatrix map;
  if (copy_map) {
    map = *copy_map;
  } else {
    if (d1 > d2) throw UsageError("no_cloning_demo: S2 is smaller than S1; supply a copy map");
    map = ComplexMatrix::Identity(d2, d1);
  }
  if (map.rows() != d2 || map.cols() != d1) throw UsageError("no_cloning_demo: copy map has the wrong shape");

  const Ket b0 = blank / blank.norm();
  std::array<double, 2> fid{};
  for (std::size_t k = 0; k < 2; ++k) {
    if (sources[k].size() != d1) throw UsageError("no_cloning_demo: source state has the wrong dimension");
    const Ket psi = sources[k] / sources[k].norm();
    Ket copy = map * psi;
    copy /= copy.norm();
    const Ket out = copier.unitary.matrix() * tensor_product(psi, b0);
    const Ket target = tensor_product(psi, copy);
    fid[k] = std::norm(target.dot(out));
  }
  return {fid[0], fid[1]};
}

BranchDecomposition branch_decomposition(const DensityMatrix& rho_initial, const CopyInteraction& ci) {
  if (rho_initial.dim() != ci.unitary.dim()) throw UsageError("branch_decomposition: dimension mismatch");
  const SubsystemLayout layout = ci.unitary.layout();
  DensityMatrix evolved = evolve_state(DensityMatrix(layout, rho_initial.matrix()), ci.unitary);
  BranchDecomposition out{evolved, {}, analyze_copy(ci).copied_into_s2, 0.0, 0.0};

  if (!out.copied) {
    out.branches.push_back({"", 1.0, evolved});
    return out;
  }

  const auto d2 = static_cast<Eigen::Index>(ci.proj2.dim());
  const ComplexMatrix id2 = ComplexMatrix::Identity(d2, d2);
  const DensityMatrix rho1 = partial_trace(evolved, {0});
  for (std::size_t a = 0; a < ci.proj1.size(); ++a) {
    for (std::size_t b = 0; b < ci.proj1.size(); ++b) {
      if (a != b) {
        out.cross_branch_norm =
            std::max(out.cross_branch_norm, max_abs(ci.proj1[a] * rho1.matrix() * ci.proj1[b]));
      }
    }
  }

  std::vector<ComplexMatrix> records;
  for (std::size_t a = 0; a < ci.proj1.size(); ++a) {
    const ComplexMatrix p = tensor_product(ci.proj1[a], id2);
    const ComplexMatrix block = p * evolved.matrix() * p;
    const double w = block.trace().real();
    if (w <= tol::kZeroEigen) continue;
    ComplexMatrix state = block / w;
    state = 0.5 * (state + state.adjoint());
    DensityMatrix rel(layout, std::move(state));
    records.push_back(partial_trace(rel, {1}).matrix());
    out.branches.push_back({ci.proj1.label(a), w, std::move(rel)});
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t j = i + 1; j < records.size(); ++j) {
      out.record_overlap = std::max(out.record_overlap, std::abs((records[i] * records[j]).trace()));
    }
  }
  return out;
}

}  // namespace qsim
