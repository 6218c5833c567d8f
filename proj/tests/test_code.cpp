#include <cmath>
#include <vector>

#include "doctest.h"
#include "gkp/code.hpp"

using namespace gkp;

namespace {

// Slope of log(y) against log(x) by least squares.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("braiding phases of the square code") {
  const GkpCode c = GkpCode::square();
  CHECK(std::abs(braiding_phase(c.stab_x_amp, c.stab_z_amp) - 4 * kPi) < 1e-12);
  CHECK(std::abs(braiding_phase(c.logical_x_amp, c.logical_z_amp) - kPi) < 1e-12);
  CHECK_NOTHROW(c.validate());
  CHECK_NOTHROW(GkpCode::rectangular(1.7).validate());
  GkpCode broken = c;
  broken.stab_z_amp = cplx(0, 1.5 * kSqrtPi);
  CHECK_THROWS_AS(broken.validate(), Error);
}

TEST_CASE("braiding relation holds for displacement operators") {
  // D(a) D(b) = exp(-i braiding(a, b)) D(b) D(a)
  const int dim = 120;
  const cplx a(0.9, 0.4), b(-0.3, 1.2);
  const Matrix ab = displacement(a, dim).entries * displacement(b, dim).entries;
  const Matrix ba = displacement(b, dim).entries * displacement(a, dim).entries;
  CHECK(interior_distance(ab, std::polar(1.0, -braiding_phase(a, b)) * ba, 40) < 1e-10);
}

TEST_CASE("stabilizers commute and logicals anticommute on the interior") {
  const int dim = 150;
  auto [sx, sz] = stabilizers(GkpCode::square(), dim);
  auto [lx, lz] = logicals(GkpCode::square(), dim);
  const Matrix comm = sx.entries * sz.entries - sz.entries * sx.entries;
  CHECK(interior_distance(comm, Matrix::Zero(dim, dim), 30) < 1e-6);
  const Matrix anti = lx.entries * lz.entries + lz.entries * lx.entries;
  CHECK(interior_distance(anti, Matrix::Zero(dim, dim), 30) < 1e-6);
}

TEST_CASE("effective squeezing is invariant under a stabilizer") {
  const int dim = 150;
  const OscState psi = finite_gkp_superposition(Logical::zero, 0.3, -1, dim);
  auto [sx, sz] = stabilizers(GkpCode::square(), dim);
  const EffectiveSqueezing before = effective_squeezing(psi);
  for (const FockOperator* s : {&sx, &sz}) {
    OscState moved = apply(*s, psi);
    moved.normalize();
    const EffectiveSqueezing after = effective_squeezing(moved);
    CHECK(std::abs(after.delta_x - before.delta_x) < 1e-4);
    CHECK(std::abs(after.delta_z - before.delta_z) < 1e-4);
  }
}

TEST_CASE("logical states are eigenstates of the logical Paulis up to the envelope") {
  const int dim = 150;
  auto [lx, lz] = logicals(GkpCode::square(), dim);
  const double d = 0.25;
  CHECK(expectation(finite_gkp_superposition(Logical::zero, d, -1, dim), lz).real() > 0.95);
  CHECK(expectation(finite_gkp_superposition(Logical::one, d, -1, dim), lz).real() < -0.95);
  CHECK(expectation(finite_gkp_superposition(Logical::plus, d, -1, dim), lx).real() > 0.95);
  CHECK(expectation(finite_gkp_superposition(Logical::minus, d, -1, dim), lx).real() < -0.95);
  CHECK(parse_logical("plus") == Logical::plus);
  for (Logical l : {Logical::zero, Logical::one, Logical::plus, Logical::minus}) CHECK(parse_logical(to_string(l)) == l);
  CHECK_THROWS_AS(parse_logical("two"), Error);
}

TEST_CASE("default comb cutoff is the smallest one meeting the tail bound") {
  for (double d : {0.2, 0.3, 0.45}) {
    const int k = default_sum_cutoff(d);
    CHECK(std::exp(-2 * kPi * d * d * (k + 1.0) * (k + 1.0)) < 1e-8);
    if (k > 0) CHECK(std::exp(-2 * kPi * d * d * k * k) >= 1e-8);
  }
  Diagnostics diag;
  finite_gkp_superposition(Logical::zero, 0.3, 0, 100, &diag);
  CHECK(!diag.warnings.empty());
}

TEST_CASE("effective squeezing anchors") {
  const EffectiveSqueezing vac = effective_squeezing(vacuum(60));
  CHECK(std::abs(vac.delta_x - 1.0) < 1e-6);
  CHECK(std::abs(vac.delta_z - 1.0) < 1e-6);

  // q-squeezed vacuum S(-ln 0.3)|0>: compressed value at a modest cutoff.
  const EffectiveSqueezing sq60 = effective_squeezing(squeezed_vacuum(cplx(std::log(1 / 0.3), 0), 60));
  CHECK(std::abs(sq60.delta_z - 0.3) < 0.003);
  // Both values need the anti-squeezed tail to be represented.
  const EffectiveSqueezing sq = effective_squeezing(squeezed_vacuum(cplx(std::log(1 / 0.3), 0), 480));
  CHECK(std::abs(sq.delta_z - 0.3) < 0.003);
  CHECK(std::abs(sq.delta_x - 1 / 0.3) < 0.01 / 0.3);
  // The opposite sign swaps the pair.
  const EffectiveSqueezing anti = effective_squeezing(squeezed_vacuum(cplx(std::log(0.3), 0), 480));
  CHECK(std::abs(anti.delta_x - 0.3) < 0.003);
  CHECK(std::abs(anti.delta_z - 1 / 0.3) < 0.01 / 0.3);

  CHECK(std::isinf(effective_squeezing_from_trace(0.0)));
  CHECK(std::abs(effective_squeezing_from_trace(std::exp(-kPi * 0.09)) - 0.3) < 1e-12);
  CHECK(std::abs(squeezing_db(0.3) - 10.457574905606752) < 1e-9);
}

TEST_CASE("finite code state has the requested envelope") {
  const OscState s = finite_gkp_superposition(Logical::zero, 0.3, -1, 150);
  const EffectiveSqueezing e = effective_squeezing(s);
  CHECK(std::abs(e.delta_x - 0.3) < 0.01);
  CHECK(std::abs(e.delta_z - 0.3) < 0.01);
}

TEST_CASE("the two finite-code constructions agree to fourth order in the envelope") {
  const int dim = 150;
  std::vector<double> ds, infid;
  for (double d = 0.2; d <= 0.4001; d += 0.05) {
    const OscState a = finite_gkp_exact(Logical::zero, d, dim);
    const OscState b = finite_gkp_superposition(Logical::zero, d, -1, dim);
    ds.push_back(d);
    infid.push_back(1.0 - fidelity(a, b));
  }
  const double slope = loglog_slope(ds, infid);
  MESSAGE("infidelity slope " << slope);
  CHECK(slope == doctest::Approx(4.0).epsilon(0.7 / 4.0));
}

TEST_CASE("Wigner function conventions") {
  const int dim = 40;
  const std::vector<double> origin{0.0};
  CHECK(std::abs(wigner(vacuum(dim), origin, origin).values(0, 0) - 1 / kPi) < 1e-12);
  CHECK(std::abs(wigner(fock_state(1, dim), origin, origin).values(0, 0) + 1 / kPi) < 1e-12);

  // Coherent state: W = exp(-(q - q0)^2 - (p - p0)^2) / pi with (q0, p0) = (Re a, Im a).
  const cplx a(0.8, -0.5);
  const std::vector<double> q{0.8, 1.3}, p{-0.5, 0.1};
  const WignerGrid g = wigner(coherent_state(a, dim), q, p);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double expected = std::exp(-std::pow(q[j] - 0.8, 2) - std::pow(p[i] + 0.5, 2)) / kPi;
      CHECK(std::abs(g.values(i, j) - expected) < 1e-10);
    }

  const auto axis = linspace(-9, 9, 181);
  const WignerGrid full = wigner(finite_gkp_superposition(Logical::zero, 0.35, -1, 100), axis, axis);
  const double step = axis[1] - axis[0];
  CHECK(std::abs(full.values.sum() * step * step - 1.0) < 1e-3);
  CHECK(full.values.minCoeff() < 0.0);
}
