#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qsim/decision_payoff.hpp"

using namespace qsim;

namespace {

Ket plus_ket() { return Ket::Constant(2, Complex(1.0 / std::sqrt(2.0), 0.0)); }

}  // namespace

TEST_CASE("qubit bet: |0><0| against the |+> projector") {
  const RelativeState v = RelativeState::from_projector(outer(basis_ket(2, 0), basis_ket(2, 0)));
  const ComplexMatrix a = 0.5 * ComplexMatrix::Ones(2, 2);  // (1/2)(|0>+|1>)(<0|+<1|)
  const auto obs = PayoffObservable::from_hermitian(a);
  CHECK(std::abs(expected_payoff(v, obs) - 0.5) <= 1e-12);
  ComplexMatrix product(2, 2);
  product << 0.5, 0.5, 0.0, 0.0;  // (1/2)|0>(<0|+<1|)
  CHECK(max_abs(payoff_operator(v, obs) - product) <= 1e-12);
  CHECK(max_abs(obs.matrix() - a) <= 1e-12);
}

TEST_CASE("PayoffObservable from a Hermitian matrix merges repeated eigenvalues") {
  const auto obs = PayoffObservable::from_hermitian(ComplexMatrix::Identity(3, 3) * 2.0);
  REQUIRE(obs.payoffs().size() == 1);
  CHECK(obs.payoffs()[0] == doctest::Approx(2.0));
  CHECK(obs.projectors().rank(0) == 3);
  ComplexMatrix non_herm = ComplexMatrix::Zero(2, 2);
  non_herm(0, 1) = 1.0;
  CHECK_THROWS_AS(PayoffObservable::from_hermitian(non_herm), ValidationError);
  CHECK_THROWS_AS(PayoffObservable({1.0}, ProjectorSet::computational(2)), UsageError);
}

TEST_CASE("payoff is linear in the observable") {
  CounterRng rng(31);
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 2 + static_cast<std::size_t>(t % 5);
    const RelativeState v(random_density(d, d, rng));
    const auto a = random_hermitian(d, rng);
    const auto b = random_hermitian(d, rng);
    const double al = rng.normal();
    const double be = rng.normal();
    const double lhs = expected_payoff(v, PayoffObservable::from_hermitian(al * a + be * b));
    const double rhs = al * expected_payoff(v, PayoffObservable::from_hermitian(a)) +
                       be * expected_payoff(v, PayoffObservable::from_hermitian(b));
    CHECK(std::abs(lhs - rhs) <= 1e-10);
    // Oracle: tr(rho A) directly.
    CHECK(std::abs(expected_payoff(v, PayoffObservable::from_hermitian(a)) - (v.state().matrix() * a).trace().real()) <=
          1e-10);
  }
}

TEST_CASE("relative states from projectors") {
  ComplexMatrix p = ComplexMatrix::Zero(3, 3);
  p(0, 0) = p(2, 2) = 1.0;
  const auto v = RelativeState::from_projector(p, LabelPath{{"U", "0"}});
  CHECK(max_abs(v.state().matrix() - p / 2.0) <= 1e-15);
  CHECK(v.path().size() == 1);
  ComplexMatrix not_proj = ComplexMatrix::Identity(2, 2) * 0.5;
  CHECK_THROWS_AS(RelativeState::from_projector(not_proj), ValidationError);
  CHECK_THROWS_AS(RelativeState::from_projector(ComplexMatrix::Zero(2, 2)), ValidationError);
}

TEST_CASE("updating |+>|0> through CNOT on outcome 0 gives |00>") {
  const auto ci = controlled_shift_interaction(2, 2);
  const auto v = RelativeState::from_ket(oracle::kron(oracle::CV(plus_ket()), oracle::CV(basis_ket(2, 0))),
                                         SubsystemLayout({2, 2}));
  const auto upd = relative_state_update(v, ci, "0");
  CHECK(std::abs(upd.weight - 0.5) <= 1e-12);
  CHECK(max_abs(upd.state.state().matrix() - outer(basis_ket(4, 0), basis_ket(4, 0))) <= 1e-12);
  REQUIRE(upd.state.path().size() == 1);
  CHECK(upd.state.path()[0] == std::make_pair(std::string("CSHIFT"), std::string("0")));

  const auto one = relative_state_update(v, ci, "1");
  CHECK(max_abs(one.state.state().matrix() - outer(basis_ket(4, 3), basis_ket(4, 3))) <= 1e-12);

  CHECK_THROWS_AS(relative_state_update(v, ci, "7"), UsageError);
  const auto zero = RelativeState::from_ket(basis_ket(4, 0), SubsystemLayout({2, 2}));
  CHECK_THROWS_AS(relative_state_update(zero, ci, "1"), ImpossibleOutcomeError);
  CHECK_THROWS_AS(relative_state_update(RelativeState(DensityMatrix(ComplexMatrix::Identity(3, 3) / 3.0)), ci, "0"),
                  UsageError);
}

TEST_CASE("update weights equal the payoff of the outcome projector; chain rule") {
  CounterRng rng(32);
  for (int t = 0; t < 30; ++t) {
    const auto ci = random_copy_interaction(2 + t % 2, 2 + t % 3, rng);
    const std::size_t d = ci.unitary.dim();
    const auto d1 = static_cast<Eigen::Index>(ci.proj1.dim());
    const auto d2 = static_cast<Eigen::Index>(ci.proj2.dim());
    const RelativeState v(DensityMatrix(ci.unitary.layout(), random_density(d, d, rng).matrix()));
    const ComplexMatrix out = ci.unitary.matrix() * v.state().matrix() * ci.unitary.adjoint();
    const ComplexMatrix b = oracle::kron(ComplexMatrix::Identity(d1, d1), random_hermitian(ci.proj2.dim(), rng));
    const double before = (out * b).trace().real();
    double chained = 0.0;
    double total = 0.0;
    for (std::size_t k = 0; k < ci.proj1.size(); ++k) {
      const auto upd = relative_state_update(v, ci, ci.proj1.label(k));
      const ComplexMatrix pk = oracle::kron(ci.proj1[k], ComplexMatrix::Identity(d2, d2));
      CHECK(std::abs(upd.weight - (out * pk).trace().real()) <= 1e-10);
      chained += upd.weight * expected_payoff(upd.state, PayoffObservable::from_hermitian(b));
      total += upd.weight;
    }
    CHECK(std::abs(total - 1.0) <= 1e-10);
    CHECK(std::abs(chained - before) <= 1e-9);
  }
}

TEST_CASE("frequency experiment") {
  const RelativeState v = RelativeState::from_projector(outer(basis_ket(2, 0), basis_ket(2, 0)));
  const auto obs = PayoffObservable({1.0, 0.0}, ProjectorSet::from_basis(fourier_basis(2), {"+", "-"}));
  const auto r = frequency_experiment(v, obs, 10000, CounterRng(5));
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].outcome_label == "+");
  CHECK(r.rows[0].count + r.rows[1].count == 10000);
  CHECK(std::abs(r.rows[0].weight - 0.5) <= 1e-12);
  CHECK(r.max_abs_deviation < 0.03);
  CHECK(std::abs(r.empirical_payoff - r.rows[0].frequency) <= 1e-15);
  CHECK(r.expected_payoff == doctest::Approx(0.5).epsilon(1e-12));

  const auto again = frequency_experiment(v, obs, 10000, CounterRng(5));
  CHECK(again.to_csv() == r.to_csv());
  CHECK(r.to_csv().rfind("outcome_label,weight,count,frequency,abs_deviation\n", 0) == 0);
  CHECK_THROWS_AS(frequency_experiment(v, obs, 0, CounterRng(5)), UsageError);
}

TEST_CASE("frequency deviations shrink from 10^2 to 10^4 draws on shipped seeds") {
  for (std::uint64_t seed : {11u, 12u, 13u, 14u, 15u, 16u}) {
    CounterRng rng(seed);
    const std::size_t d = 2 + seed % 3;
    const RelativeState v(random_density(d, d, rng));
    const auto obs = PayoffObservable::from_hermitian(random_hermitian(d, rng));
    const CounterRng sampler = rng.substream(0);
    const double small = frequency_experiment(v, obs, 100, sampler).max_abs_deviation;
    const double large = frequency_experiment(v, obs, 10000, sampler).max_abs_deviation;
    CHECK(large < small);
  }
}
