#include "gkp/quadrature.hpp"

#include <cmath>

namespace gkp {

RMatrix hermite_functions(const RVector& x, int dim) {
  require(dim >= 1, ErrorCode::invalid_dimension, "Hermite dimension must be positive");
  constexpr double kBig = 1e150;
  const double log_big = std::log(kBig);
  const double norm0 = std::pow(kPi, -0.25);
  RMatrix out(x.size(), dim);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x(i);
    double log_scale = -0.5 * xi * xi;
    double prev = 0.0;
    double cur = norm0;
    out(i, 0) = cur * std::exp(log_scale);
    for (int n = 0; n + 1 < dim; ++n) {
      const double next = std::sqrt(2.0 / (n + 1.0)) * xi * cur - std::sqrt(n / (n + 1.0)) * prev;
      prev = cur;
      cur = next;
      if (std::abs(cur) > kBig) {
        cur /= kBig;
        prev /= kBig;
        log_scale += log_big;
      }
      out(i, n + 1) = cur * std::exp(log_scale);
    }
  }
  return out;
}

Matrix position_function(const std::function<cplx(double)>& f, int dim, int pad) {
  require(dim >= 1 && pad >= 0, ErrorCode::invalid_dimension, "bad dimension for position function");
  const int n = dim + pad;
  RVector diag = RVector::Zero(n);
  RVector sub(n - 1);
  for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<RMatrix> es;
  es.computeFromTridiagonal(diag, sub);
  require(es.info() == Eigen::Success, ErrorCode::numeric_failure, "Gauss-Hermite node computation failed");
  Vector fv(n);
  for (int k = 0; k < n; ++k) fv(k) = f(es.eigenvalues()(k));
  Matrix v = es.eigenvectors().topRows(dim).cast<cplx>();
  return v * fv.asDiagonal() * v.transpose();
}

Vector position_wavefunction(const Vector& fock, const RVector& x) {
  return hermite_functions(x, static_cast<int>(fock.size())).cast<cplx>() * fock;
}

namespace {

// sum_k w_k * integral conj(phi_k(u + s/2)) e^{i k u} phi_k(u - s/2) du, with
// phi_k given by Fock coefficient columns.
cplx overlap_integral(const Matrix& coeffs, const RVector& weights, double shift, double freq) {
  const int dim = static_cast<int>(coeffs.rows());
  const double reach = std::sqrt(2.0 * dim + 1.0) + 7.0;
  const double half = reach - 0.5 * std::abs(shift);
  if (half <= 0) return 0.0;
  const double band = 2.0 * (std::sqrt(2.0 * dim + 1.0) + 5.0) + std::abs(freq);
  const double h = 2.0 * kPi / band / 1.5;
  const int npts = 2 * static_cast<int>(std::ceil(half / h)) + 1;
  const double step = 2.0 * half / (npts - 1);
  RVector u(npts), up(npts), um(npts);
  for (int i = 0; i < npts; ++i) {
    u(i) = -half + i * step;
    up(i) = u(i) + 0.5 * shift;
    um(i) = u(i) - 0.5 * shift;
  }
  const Matrix a = hermite_functions(up, dim).cast<cplx>() * coeffs;
  const Matrix b = hermite_functions(um, dim).cast<cplx>() * coeffs;
  cplx total = 0.0;
  for (int i = 0; i < npts; ++i) {
    cplx row = 0.0;
    for (Eigen::Index k = 0; k < coeffs.cols(); ++k) row += weights(k) * std::conj(a(i, k)) * b(i, k);
    total += row * std::polar(1.0, freq * u(i));
  }
  return total * step;
}

}  // namespace

cplx displacement_expectation(const OscState& state, cplx alpha) {
  require(!state.shape.ancilla && state.shape.modes.size() == 1, ErrorCode::invalid_input,
          "displacement_expectation needs a single-mode state");
  Matrix coeffs;
  RVector weights;
  if (state.is_pure()) {
    coeffs = state.amplitudes;
    weights = RVector::Ones(1);
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (state.density + state.density.adjoint()));
    require(es.info() == Eigen::Success, ErrorCode::numeric_failure, "density eigendecomposition failed");
    const double top = es.eigenvalues().maxCoeff();
    std::vector<int> keep;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
      if (es.eigenvalues()(k) > 1e-18 * top) keep.push_back(static_cast<int>(k));
    coeffs.resize(state.dim(), keep.size());
    weights.resize(keep.size());
    for (size_t j = 0; j < keep.size(); ++j) {
      coeffs.col(j) = es.eigenvectors().col(keep[j]);
      weights(j) = es.eigenvalues()(keep[j]);
    }
  }
  const double x = alpha.real();
  const double y = alpha.imag();
  if (std::abs(x) >= std::abs(y)) return overlap_integral(coeffs, weights, x, y);
  // Momentum representation: <p|n> = (-i)^n psi_n(p).
  Matrix pc = coeffs;
  cplx ph = 1.0;
  for (Eigen::Index n = 0; n < pc.rows(); ++n) {
    pc.row(n) *= ph;
    ph *= cplx(0, -1);
  }
  return overlap_integral(pc, weights, y, -x);
}

}  // namespace gkp
