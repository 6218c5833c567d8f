#include <cmath>

#include "doctest.h"
#include "gkp/evolve.hpp"
#include "gkp/fock.hpp"
#include "gkp/quadrature.hpp"

using namespace gkp;

namespace {

double vec_distance(const Vector& a, const Vector& b) { return (a - b).norm(); }

// <n| D(alpha) |0> = e^{-|b|^2/2} b^n / sqrt(n!), b = alpha / sqrt(2).
Vector coherent_column(cplx alpha, int levels) {
  const cplx b = alpha / std::sqrt(2.0);
  Vector v(levels);
  for (int n = 0; n < levels; ++n)
    v(n) = std::exp(-0.5 * std::norm(b)) * std::pow(b, n) / std::sqrt(std::tgamma(n + 1.0));
  return v;
}

}  // namespace

TEST_CASE("ladder operators obey the canonical commutator below the cutoff") {
  const int dim = 40;
  auto [a, ad] = ladder(dim);
  Matrix comm = a.entries * ad.entries - ad.entries * a.entries;
  CHECK(interior_distance(comm, Matrix::Identity(dim, dim), dim - 1) < 1e-12);
  CHECK(std::abs(comm(dim - 1, dim - 1) + (dim - 1.0)) < 1e-12);
  CHECK((ad.entries * a.entries - number_operator(dim).entries).norm() < 1e-12);
  auto [q, p] = quadratures(dim);
  Matrix qp = q.entries * p.entries - p.entries * q.entries;
  CHECK(interior_distance(qp, cplx(0, 1) * Matrix::Identity(dim, dim), dim - 1) < 1e-12);
}

TEST_CASE("invalid dimensions are rejected") {
  CHECK_THROWS_AS(ladder(1), Error);
  CHECK_THROWS_AS(vacuum(0), Error);
  try {
    displacement(1.0, 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_dimension);
  }
  CHECK_THROWS_AS(fock_state(5, 5), Error);
}

TEST_CASE("displacement matches coherent-state amplitudes and the composition law") {
  const int dim = 120;
  const cplx alpha(1.3, -0.8), beta(-0.6, 1.1);
  const Matrix da = displacement(alpha, dim).entries;
  CHECK(vec_distance(da.col(0).head(40), coherent_column(alpha, 40)) < 1e-12);
  CHECK(vec_distance(coherent_state(alpha, dim).amplitudes.head(40), coherent_column(alpha, 40)) < 1e-12);

  const Matrix prod = da * displacement(beta, dim).entries;
  const cplx phase = std::polar(1.0, std::imag(alpha * std::conj(beta)) / 2.0);
  const Matrix sum = phase * displacement(alpha + beta, dim).entries;
  CHECK(interior_distance(prod, sum, 40) < 1e-10);

  // Real alpha translates q by alpha; imaginary alpha translates p.
  auto [q, p] = quadratures(dim);
  const OscState moved = apply(displacement(cplx(0.7, -0.4), dim), vacuum(dim));
  CHECK(std::abs(expectation(moved, q) - 0.7) < 1e-12);
  CHECK(std::abs(expectation(moved, p) + 0.4) < 1e-12);
}

TEST_CASE("unitary builders keep the retained block unitary") {
  const int dim = 150;
  for (cplx alpha : {cplx(2.0 * kSqrtPi, 0), cplx(0, 2.0 * kSqrtPi), cplx(kSqrtPi, kSqrtPi), cplx(0, 0.25)}) {
    CHECK(unitarity_defect(displacement(alpha, dim), 10) < 1e-8);
  }
  // The padded variant is cropped, so only its low block is meaningful: it must
  // agree with a much larger padded computation there.
  const cplx big(2.0 * kSqrtPi, kSqrtPi);
  CHECK(interior_distance(displacement_padded(big, dim, 60).entries, displacement_padded(big, dim, 200).entries, 80) <
        1e-10);
  CHECK(unitarity_defect(squeeze(cplx(std::log(1 / 0.3), 0), dim), 10) < 1e-8);
  CHECK(unitarity_defect(rotation(0.37, dim), 1) < 1e-14);
}

TEST_CASE("squeezing operator and analytic squeezed vacuum agree") {
  const int dim = 150;
  const double r = std::log(1 / 0.3);
  const OscState numeric = apply(squeeze(cplx(r, 0), dim), vacuum(dim));
  const OscState analytic = squeezed_vacuum(cplx(r, 0), dim);
  CHECK(fidelity(numeric, analytic) > 1 - 1e-10);
  auto [q, p] = quadratures(dim);
  const FockOperator q2 = q * q, p2 = p * p;
  // S(r) with r > 0 compresses q: <q^2> = e^{-2r}/2.
  CHECK(std::abs(expectation(analytic, q2).real() - std::exp(-2 * r) / 2) < 1e-8);
  CHECK(std::abs(expectation(analytic, p2).real() - std::exp(2 * r) / 2) < 1e-6);
}

TEST_CASE("rotation conjugates the annihilation operator by a phase") {
  const int dim = 30;
  const double phi = 0.81;
  auto [a, ad] = ladder(dim);
  const Matrix r = rotation(phi, dim).entries;
  CHECK((r.adjoint() * a.entries * r - std::polar(1.0, -phi) * a.entries).norm() < 1e-12);
}

TEST_CASE("matrix exponentials agree with the eigendecomposition oracle") {
  const int dim = 25;
  const Matrix r = Matrix::Random(dim, dim);
  const Matrix h = 0.5 * (r + r.adjoint());
  const Matrix u1 = expm(cplx(0, -0.7) * h);
  const Matrix u2 = expm_hermitian(h, 0.7);
  CHECK((u1 - u2).norm() < 1e-11);
}

TEST_CASE("tensor products, embedding and partial trace") {
  const OscState a = coherent_state(cplx(0.5, 0.2), 6);
  const OscState b = fock_state(2, 5);
  const OscState ab = tensor({a, b});
  CHECK(ab.dim() == 30);
  CHECK(fidelity(partial_trace(ab, {0}), a) > 1 - 1e-12);
  CHECK(fidelity(reduce_to_mode(ab), b) > 1 - 1e-12);
  CHECK(fidelity(reduce_to_mode(ab, 0), a) > 1 - 1e-12);

  const Matrix n5 = number_operator(5).entries;
  const FockOperator emb = embed(n5, 1, ab.shape);
  CHECK(std::abs(expectation(ab, emb) - 2.0) < 1e-12);
  const FockOperator t = tensor({identity_operator(6), number_operator(5)});
  CHECK((t.entries - emb.entries).norm() < 1e-14);
}

TEST_CASE("fidelity of coherent states follows the Gaussian overlap") {
  const int dim = 80;
  const cplx x(0.9, -0.3), y(-0.2, 0.5);
  const double expected = std::exp(-std::norm(x - y) / 2);
  CHECK(std::abs(fidelity(coherent_state(x, dim), coherent_state(y, dim)) - expected) < 1e-12);
  CHECK(std::abs(fidelity(coherent_state(x, dim).as_mixed(), coherent_state(y, dim)) - expected) < 1e-9);
}

TEST_CASE("state contract validation") {
  Vector v = Vector::Zero(4);
  v(0) = 2.0;
  OscState bad = OscState::pure(v, ModeShape::single(4));
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.normalize();
  CHECK_NOTHROW(bad.validate());

  Matrix rho = Matrix::Zero(3, 3);
  rho(0, 0) = 0.5;
  rho(1, 1) = 0.5;
  rho(0, 1) = cplx(0, 0.2);  // not Hermitian
  CHECK_THROWS_AS(OscState::mixed(rho, ModeShape::single(3)).validate(), Error);
}

TEST_CASE("leakage measures the top guard band") {
  Vector v = Vector::Zero(10);
  v(0) = std::sqrt(0.9);
  v(9) = std::sqrt(0.1);
  const OscState s = OscState::pure(v, ModeShape::single(10));
  CHECK(std::abs(leakage(s, 3) - 0.1) < 1e-14);
  CHECK(leakage(vacuum(10), 3) == 0.0);
}

TEST_CASE("Gauss-Hermite position functions reproduce polynomial matrix elements") {
  const int dim = 30;
  auto [q, p] = quadratures(dim);
  const Matrix one = position_function([](double) { return cplx(1.0); }, dim);
  CHECK((one - Matrix::Identity(dim, dim)).norm() < 1e-11);
  const Matrix qq = position_function([](double x) { return cplx(x * x); }, dim);
  CHECK(interior_distance(qq, (q * q).entries, dim - 1) < 1e-10);
}

TEST_CASE("Hermite functions stay finite and orthonormal far from the origin") {
  const int dim = 60;
  const int n = 4001;
  RVector x = RVector::LinSpaced(n, -20.0, 20.0);
  const double dx = x(1) - x(0);
  const RMatrix h = hermite_functions(x, dim);
  CHECK(h.allFinite());
  const RMatrix gram = h.transpose() * h * dx;
  CHECK((gram - RMatrix::Identity(dim, dim)).cwiseAbs().maxCoeff() < 1e-10);
  // psi_0(x) = pi^{-1/4} e^{-x^2/2}
  CHECK(std::abs(h(n / 2, 0) - std::pow(kPi, -0.25)) < 1e-14);
}

TEST_CASE("displacement expectations keep exponentially small values") {
  const int dim = 60;
  // <0|D(alpha)|0> = exp(-|alpha|^2 / 4)
  for (double mag : {1.0, 2.0 * kSqrtPi, 6.0 * kSqrtPi}) {
    const cplx t = displacement_expectation(vacuum(dim), cplx(0, mag));
    CHECK(std::abs(t.real() / std::exp(-mag * mag / 4) - 1.0) < 1e-8);
    CHECK(std::abs(t.imag()) < 1e-12 + 1e-8 * std::exp(-mag * mag / 4));
  }
  // Generic state: compare with the Fock-basis trace where no cancellation occurs.
  const OscState c = coherent_state(cplx(0.6, -0.9), dim);
  const cplx b(0.8, 0.5);
  const cplx fock_trace = expectation(c, displacement(b, dim));
  CHECK(std::abs(displacement_expectation(c, b) - fock_trace) < 1e-10);
  CHECK(std::abs(displacement_expectation(c.as_mixed(), b) - fock_trace) < 1e-10);
}

TEST_CASE("product operators apply like their dense form") {
  const ModeShape shape{true, {3, 4}};
  KronOperator k(shape);
  Matrix m1 = Matrix::Random(3, 3), m2 = Matrix::Random(4, 4);
  k.set(1, m1).set(2, m2);
  const Matrix dense = k.dense();
  CHECK((dense - tensor({identity_operator(2), FockOperator(m1), FockOperator(m2)}).entries).norm() < 1e-12);
  const Matrix in = Matrix::Random(24, 3);
  Matrix out(24, 3);
  k.apply(in.data(), out.data(), 3);
  CHECK((out - dense * in).norm() < 1e-12);
}

TEST_CASE("Hamiltonian rejects non-Hermitian terms") {
  Matrix m = Matrix::Zero(3, 3);
  m(0, 1) = 1.0;
  Hamiltonian h(ModeShape::single(3));
  CHECK_THROWS_AS(h.add(FockOperator(m)), Error);
}

TEST_CASE("constant-Hamiltonian evolution matches the exact propagator") {
  const int dim = 60;
  auto [q, p] = quadratures(dim);
  const FockOperator h = number_operator(dim) + cplx(0.7) * q;
  const OscState psi = coherent_state(cplx(0.4, 0.3), dim);
  const double t = 2.3;
  EvolutionConfig cfg;
  cfg.max_step = 0.5;  // dimensionless time here
  const Matrix u = expm_hermitian(h.entries, t);
  const EvolutionResult pure = evolve(psi, h, t, cfg);
  CHECK(std::abs(pure.state.amplitudes.dot(u * psi.amplitudes)) > 1 - 1e-10);

  const OscState rho = psi.as_mixed();
  const EvolutionResult mixed = evolve(rho, h, t, cfg);
  const Matrix expected = u * rho.density * u.adjoint();
  CHECK((mixed.state.density - expected).norm() < 1e-9);
  CHECK(std::abs(mixed.state.trace() - 1.0) < 1e-10);
}

TEST_CASE("time-dependent evolution matches a commuting closed form") {
  // H(t) = (1 + cos t) q commutes with itself: U = exp(-i theta q), theta = T + sin T,
  // which is the displacement D(-i theta).
  const int dim = 60;
  auto [q, p] = quadratures(dim);
  Hamiltonian h(ModeShape::single(dim));
  h.add(q, [](double t) { return 1.0 + std::cos(t); });
  const double T = 1.9;
  const OscState psi = vacuum(dim);
  EvolutionConfig cfg;
  cfg.max_step = 0.5;
  const EvolutionResult r = evolve(psi, h, 0.0, T, cfg);
  const double theta = T + std::sin(T);
  const OscState expected = coherent_state(cplx(0, -theta), dim);
  CHECK(fidelity(r.state, expected) > 1 - 1e-9);
  CHECK(r.steps > 1);
}

TEST_CASE("Krylov propagation of a random Hermitian matrix") {
  const int n = 80;
  const Matrix r = Matrix::Random(n, n);
  const Matrix h = 0.5 * (r + r.adjoint());
  Vector v = Vector::Random(n);
  v.normalize();
  const Vector expected = expm_hermitian(h, 3.0) * v;
  krylov_propagate([&](const Vector& in, Vector& out) { out = h * in; }, 3.0, v, 1e-12, 30, h.norm());
  CHECK((v - expected).norm() < 1e-9);
}
