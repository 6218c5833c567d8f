#pragma once

#include <functional>

#include "gkp/fock.hpp"

namespace gkp {

// Hermite functions psi_n(x), n < dim, sampled at x: result is (x.size() x dim).
// Scaled recurrence, safe for |x| far beyond the classical turning point.
RMatrix hermite_functions(const RVector& x, int dim);

// <m| f(q) |n> for m, n < dim by Gauss-Hermite quadrature with dim + pad nodes.
Matrix position_function(const std::function<cplx(double)>& f, int dim, int pad = 64);

// Position-representation samples of a single-mode Fock-basis vector.
Vector position_wavefunction(const Vector& fock, const RVector& x);

// Tr(D(alpha) rho) for a single-mode state, evaluated as an overlap integral of
// wavefunctions (position or momentum representation, whichever keeps the
// phase factor slow). Retains accuracy for exponentially small values that a
// Fock-basis trace loses to cancellation.
cplx displacement_expectation(const OscState& single_mode, cplx alpha);

}  // namespace gkp
