#include <cmath>

#include <algorithm>

#include "gkp/code.hpp"
#include "gkp/quadrature.hpp"

namespace gkp {

std::vector<double> linspace(double lo, double hi, int n) {
  require(n >= 1, ErrorCode::invalid_parameters, "grid needs at least one point");
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1.0);
  return v;
}

// W(q, p) = (1/pi) int <q - y| rho |q + y> e^{2 i p y} dy with rho = sum_k w_k |f_k><f_k|.
// The wavefunctions come from the scaled Hermite recurrence, so the result stays
// accurate at cutoffs where Fock-space Laguerre recurrences cancel catastrophically.
// The integrand is band-limited by the cutoff and the p range; the trapezoid rule
// on a step well below that limit converges spectrally.
WignerGrid wigner(const OscState& state, const std::vector<double>& q, const std::vector<double>& p, int mode) {
  require(!q.empty() && !p.empty(), ErrorCode::invalid_input, "Wigner grid must not be empty");
  for (size_t i = 0; i < q.size(); ++i) {
    require(std::isfinite(q[i]), ErrorCode::invalid_input, "q grid must be finite");
    if (i) require(q[i] > q[i - 1], ErrorCode::invalid_input, "q grid must be strictly increasing");
  }
  for (size_t i = 0; i < p.size(); ++i) {
    require(std::isfinite(p[i]), ErrorCode::invalid_input, "p grid must be finite");
    if (i) require(p[i] > p[i - 1], ErrorCode::invalid_input, "p grid must be strictly increasing");
  }
  const OscState single = reduce_to_mode(state, mode);
  const int dim = single.dim();

  // Pure components in the Fock basis, columns scaled by sqrt(weight).
  Matrix comps;
  if (single.is_pure()) {
    comps = single.amplitudes;
  } else {
    const Matrix rho = 0.5 * (single.density + single.density.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
    require(es.info() == Eigen::Success, ErrorCode::numeric_failure, "density eigendecomposition failed");
    const double top = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = 0; k < dim; ++k)
      if (es.eigenvalues()(k) > 1e-15 * top) keep.push_back(k);  // negative ones are rounding noise
    comps.resize(dim, static_cast<Eigen::Index>(keep.size()));
    for (size_t c = 0; c < keep.size(); ++c) {
      const double w = es.eigenvalues()(keep[c]);
      comps.col(static_cast<Eigen::Index>(c)) = std::sqrt(w) * es.eigenvectors().col(keep[c]);
    }
  }

  double pmax = 0.0;
  for (double v : p) pmax = std::max(pmax, std::abs(v));
  const double kcut = std::sqrt(2.0 * dim + 1.0);
  double h = kPi / (4.0 * kcut + 2.0 * pmax + 8.0);
  const double ymax = kcut + 8.0;

  const Eigen::Index nq = static_cast<Eigen::Index>(q.size());
  const Eigen::Index np = static_cast<Eigen::Index>(p.size());
  // On a uniform q grid, shrink h so the q step is a multiple of it; then every
  // q +- y lies on one shared x grid and the wavefunctions are evaluated once.
  int stride = 0;
  if (nq > 1) {
    const double dq = (q.back() - q.front()) / (nq - 1.0);
    bool uniform = true;
    for (Eigen::Index j = 0; j < nq && uniform; ++j)
      uniform = std::abs(q[j] - (q.front() + j * dq)) <= 1e-12 * std::max(1.0, std::abs(q.back() - q.front()));
    if (uniform) {
      stride = static_cast<int>(std::ceil(dq / h));
      h = dq / stride;
    }
  }
  const int half = static_cast<int>(std::ceil(ymax / h));
  const int ny = 2 * half + 1;
  RVector y(ny);
  for (int i = 0; i < ny; ++i) y(i) = (i - half) * h;

  // Fourier kernel e^{2 i p y} h / pi, (np x ny).
  Matrix kernel(np, ny);
  for (Eigen::Index i = 0; i < np; ++i)
    for (int j = 0; j < ny; ++j) kernel(i, j) = std::polar(h / kPi, 2.0 * p[i] * y(j));

  RMatrix values(np, nq);
  if (stride > 0) {
    // x_k = q_0 + (k - half) h covers every q_j - y and q_j + y.
    const int nx = static_cast<int>((nq - 1) * stride) + ny;
    RVector x(nx);
    for (int k = 0; k < nx; ++k) x(k) = q.front() + (k - half) * h;
    const Matrix f = hermite_functions(x, dim).cast<cplx>() * comps;
    for (Eigen::Index j = 0; j < nq; ++j) {
      const Eigen::Index c = j * stride + half;  // index of q_j
      Vector overlap(ny);
      for (int i = 0; i < ny; ++i) overlap(i) = f.row(c - (i - half)).dot(f.row(c + (i - half)));
      // dot() conjugates its left argument: overlap = sum_k conj(f_k(q - y)) f_k(q + y).
      values.col(j) = (kernel * overlap.conjugate()).real();
    }
  } else {
    for (Eigen::Index j = 0; j < nq; ++j) {
      const RVector xm = (q[j] - y.array()).matrix();
      const RVector xp = (q[j] + y.array()).matrix();
      const Matrix fm = hermite_functions(xm, dim).cast<cplx>() * comps;  // f_k(q - y)
      const Matrix fp = hermite_functions(xp, dim).cast<cplx>() * comps;  // f_k(q + y)
      const Vector overlap = fm.cwiseProduct(fp.conjugate()).rowwise().sum();
      values.col(j) = (kernel * overlap).real();
    }
  }
  WignerGrid g;
  g.q = q;
  g.p = p;
  g.values = std::move(values);
  return g;
}

}  // namespace gkp
