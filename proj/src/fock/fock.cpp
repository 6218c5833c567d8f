#include "gkp/fock.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace gkp {

namespace {

constexpr int kDefaultGuard = 5;
constexpr double kBuilderLeakWarn = 1e-6;

void check_dim(int dim) {
  require(dim >= 2, ErrorCode::invalid_dimension, "Fock dimension must be at least 2, got " + std::to_string(dim));
}

void warn_if_column_leaks(const Matrix& u, Diagnostics* diag, const char* what) {
  if (!diag) return;
  const int dim = static_cast<int>(u.rows());
  const int guard = std::min(kDefaultGuard, dim - 1);
  const double top = u.col(0).tail(guard).squaredNorm();
  if (top > kBuilderLeakWarn) {
    std::ostringstream os;
    os << what << ": vacuum image has population " << top << " in the top " << guard << " levels of dim " << dim;
    diag->warn(os.str());
  }
}

// Strides for row-major multi-indices (first subsystem slowest).
std::vector<int> strides_of(const std::vector<int>& dims) {
  std::vector<int> s(dims.size(), 1);
  for (int k = static_cast<int>(dims.size()) - 2; k >= 0; --k) s[k] = s[k + 1] * dims[k + 1];
  return s;
}

}  // namespace

// ModeShape ------------------------------------------------------------------

std::vector<int> ModeShape::dims() const {
  std::vector<int> d;
  if (ancilla) d.push_back(2);
  d.insert(d.end(), modes.begin(), modes.end());
  return d;
}

int ModeShape::total() const {
  int t = ancilla ? 2 : 1;
  for (int m : modes) t *= m;
  return t;
}

int ModeShape::mode_subsystem(int m) const {
  const int n = static_cast<int>(modes.size());
  if (m < 0) m += n;
  require(m >= 0 && m < n, ErrorCode::invalid_input, "mode index out of range");
  return m + (ancilla ? 1 : 0);
}

void ModeShape::validate() const {
  require(ancilla || !modes.empty(), ErrorCode::invalid_dimension, "mode shape has no subsystems");
  for (int m : modes) require(m >= 1, ErrorCode::invalid_dimension, "mode dimension must be positive");
}

// FockOperator ---------------------------------------------------------------

FockOperator::FockOperator(Matrix m, ModeShape s) : entries(std::move(m)), shape(std::move(s)) {
  shape.validate();
  require(entries.rows() == entries.cols(), ErrorCode::invalid_input, "operator matrix must be square");
  require(entries.rows() == shape.total(), ErrorCode::invalid_input, "operator size does not match mode shape");
}

FockOperator::FockOperator(Matrix m) : FockOperator(m, ModeShape::single(static_cast<int>(m.rows()))) {}

static void check_same_shape(const FockOperator& a, const FockOperator& b) {
  require(a.shape == b.shape, ErrorCode::invalid_input, "operator shapes differ");
}

FockOperator operator*(const FockOperator& a, const FockOperator& b) {
  check_same_shape(a, b);
  return FockOperator(a.entries * b.entries, a.shape);
}
FockOperator operator+(const FockOperator& a, const FockOperator& b) {
  check_same_shape(a, b);
  return FockOperator(a.entries + b.entries, a.shape);
}
FockOperator operator-(const FockOperator& a, const FockOperator& b) {
  check_same_shape(a, b);
  return FockOperator(a.entries - b.entries, a.shape);
}
FockOperator operator*(cplx s, const FockOperator& a) { return FockOperator(s * a.entries, a.shape); }

// OscState -------------------------------------------------------------------

OscState OscState::pure(Vector psi, ModeShape shape) {
  shape.validate();
  require(psi.size() == shape.total(), ErrorCode::invalid_input, "state vector size does not match mode shape");
  OscState s;
  s.kind = StateKind::pure;
  s.amplitudes = std::move(psi);
  s.shape = std::move(shape);
  return s;
}

OscState OscState::mixed(Matrix rho, ModeShape shape) {
  shape.validate();
  require(rho.rows() == shape.total() && rho.cols() == shape.total(), ErrorCode::invalid_input,
          "density matrix size does not match mode shape");
  OscState s;
  s.kind = StateKind::mixed;
  s.density = std::move(rho);
  s.shape = std::move(shape);
  return s;
}

Matrix OscState::density_matrix() const {
  if (kind == StateKind::mixed) return density;
  return amplitudes * amplitudes.adjoint();
}

OscState OscState::as_mixed() const {
  OscState s = mixed(density_matrix(), shape);
  s.norm_tol = norm_tol;
  return s;
}

double OscState::trace() const {
  return kind == StateKind::pure ? amplitudes.squaredNorm() : density.trace().real();
}

void OscState::validate() const {
  for (int k = 0; k < (is_pure() ? amplitudes.size() : density.size()); ++k) {
    const cplx v = is_pure() ? amplitudes(k) : density(k);
    require(std::isfinite(v.real()) && std::isfinite(v.imag()), ErrorCode::invalid_input, "state has non-finite entries");
  }
  require(std::abs(trace() - 1.0) <= norm_tol, ErrorCode::invalid_input, "state is not normalized within norm_tol");
  if (is_pure()) return;
  require((density - density.adjoint()).cwiseAbs().maxCoeff() <= norm_tol, ErrorCode::invalid_input,
          "density matrix is not Hermitian within norm_tol");
  Eigen::SelfAdjointEigenSolver<Matrix> es(density, Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() >= -norm_tol, ErrorCode::invalid_input, "density matrix has negative eigenvalues");
}

void OscState::normalize() {
  const double t = trace();
  require(t > 0 && std::isfinite(t), ErrorCode::numeric_failure, "cannot normalize a zero state");
  if (is_pure()) amplitudes /= std::sqrt(t);
  else density /= t;
}

// Builders -------------------------------------------------------------------

std::pair<FockOperator, FockOperator> ladder(int dim) {
  check_dim(dim);
  Matrix a = Matrix::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  Matrix ad = a.adjoint();
  return {FockOperator(std::move(a)), FockOperator(std::move(ad))};
}

std::pair<FockOperator, FockOperator> quadratures(int dim) {
  auto [a, ad] = ladder(dim);
  const double s = 1.0 / std::sqrt(2.0);
  Matrix q = s * (ad.entries + a.entries);
  Matrix p = cplx(0, s) * (ad.entries - a.entries);
  return {FockOperator(std::move(q)), FockOperator(std::move(p))};
}

FockOperator number_operator(int dim) {
  check_dim(dim);
  Matrix n = Matrix::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) n(k, k) = k;
  return FockOperator(std::move(n));
}

FockOperator identity_operator(int dim) {
  require(dim >= 1, ErrorCode::invalid_dimension, "dimension must be positive");
  return FockOperator(Matrix::Identity(dim, dim));
}

FockOperator parity_operator(int dim) {
  check_dim(dim);
  Matrix p = Matrix::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) p(k, k) = (k % 2 == 0) ? 1.0 : -1.0;
  return FockOperator(std::move(p));
}

static Matrix displacement_generator(cplx alpha, int dim) {
  Matrix g = Matrix::Zero(dim, dim);
  const double s = 1.0 / std::sqrt(2.0);
  for (int n = 1; n < dim; ++n) {
    const double r = std::sqrt(static_cast<double>(n));
    g(n, n - 1) = s * alpha * r;              // alpha a^dag
    g(n - 1, n) = -s * std::conj(alpha) * r;  // -alpha^* a
  }
  return g;
}

FockOperator displacement(cplx alpha, int dim, Diagnostics* diag) {
  check_dim(dim);
  if (alpha == cplx(0)) return identity_operator(dim);
  Matrix u = expm(displacement_generator(alpha, dim));
  warn_if_column_leaks(u, diag, "displacement");
  return FockOperator(std::move(u));
}

FockOperator displacement_padded(cplx alpha, int dim, int pad) {
  check_dim(dim);
  require(pad >= 0, ErrorCode::invalid_parameters, "padding must be non-negative");
  if (alpha == cplx(0)) return identity_operator(dim);
  Matrix u = expm(displacement_generator(alpha, dim + pad));
  return FockOperator(Matrix(u.topLeftCorner(dim, dim)));
}

FockOperator squeeze(cplx z, int dim, Diagnostics* diag) {
  check_dim(dim);
  if (z == cplx(0)) return identity_operator(dim);
  Matrix g = Matrix::Zero(dim, dim);
  for (int n = 2; n < dim; ++n) {
    const double r = std::sqrt(static_cast<double>(n) * (n - 1));
    g(n - 2, n) += 0.5 * std::conj(z) * r;  // z^* a^2 / 2
    g(n, n - 2) += -0.5 * z * r;            // -z a^dag^2 / 2
  }
  Matrix u = expm(g);
  warn_if_column_leaks(u, diag, "squeeze");
  return FockOperator(std::move(u));
}

FockOperator rotation(double theta, int dim) {
  check_dim(dim);
  Matrix r = Matrix::Zero(dim, dim);
  for (int n = 0; n < dim; ++n) r(n, n) = std::polar(1.0, -theta * n);
  return FockOperator(std::move(r));
}

Matrix expm(const Matrix& a) {
  require(a.allFinite(), ErrorCode::invalid_input, "matrix exponential of non-finite matrix");
  Matrix out = a.exp();
  require(out.allFinite(), ErrorCode::numeric_failure, "matrix exponential overflowed");
  return out;
}

FockOperator matrix_exp(const FockOperator& a) { return FockOperator(expm(a.entries), a.shape); }

Matrix expm_hermitian(const Matrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  require(es.info() == Eigen::Success, ErrorCode::numeric_failure, "Hermitian eigendecomposition failed");
  Vector ph(h.rows());
  for (Eigen::Index k = 0; k < h.rows(); ++k) ph(k) = std::polar(1.0, -t * es.eigenvalues()(k));
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

OscState vacuum(int dim) { return fock_state(0, dim); }

OscState fock_state(int n, int dim) {
  check_dim(dim);
  require(n >= 0 && n < dim, ErrorCode::invalid_input, "Fock level outside truncation");
  Vector v = Vector::Zero(dim);
  v(n) = 1.0;
  return OscState::pure(std::move(v), ModeShape::single(dim));
}

OscState squeezed_vacuum(cplx z, int dim) {
  check_dim(dim);
  const double r = std::abs(z);
  const double phi = std::arg(z);
  Vector v = Vector::Zero(dim);
  const cplx ratio = -std::polar(std::tanh(r), phi);
  cplx c = 1.0 / std::sqrt(std::cosh(r));
  for (int m = 0; 2 * m < dim; ++m) {
    v(2 * m) = c;
    // c_{2m+2} = c_{2m} * ratio * sqrt((2m+1)(2m+2)) / (2(m+1))
    c *= ratio * std::sqrt((2.0 * m + 1.0) * (2.0 * m + 2.0)) / (2.0 * (m + 1.0));
  }
  OscState s = OscState::pure(std::move(v), ModeShape::single(dim));
  s.normalize();
  return s;
}

OscState coherent_state(cplx alpha, int dim) {
  check_dim(dim);
  const cplx beta = alpha / std::sqrt(2.0);
  Vector v(dim);
  cplx c = std::exp(-0.5 * std::norm(beta));
  for (int n = 0; n < dim; ++n) {
    v(n) = c;
    c *= beta / std::sqrt(n + 1.0);
  }
  OscState s = OscState::pure(std::move(v), ModeShape::single(dim));
  s.normalize();
  return s;
}

// Composite structure --------------------------------------------------------

static ModeShape concat_shapes(const std::vector<ModeShape>& shapes) {
  ModeShape out;
  for (size_t k = 0; k < shapes.size(); ++k) {
    if (shapes[k].ancilla) {
      require(k == 0 && !out.ancilla, ErrorCode::invalid_input, "ancilla factor must come first");
      out.ancilla = true;
    }
    out.modes.insert(out.modes.end(), shapes[k].modes.begin(), shapes[k].modes.end());
  }
  return out;
}

FockOperator tensor(const std::vector<FockOperator>& factors) {
  require(!factors.empty(), ErrorCode::invalid_input, "tensor of nothing");
  std::vector<ModeShape> shapes;
  Matrix m = factors[0].entries;
  shapes.push_back(factors[0].shape);
  for (size_t k = 1; k < factors.size(); ++k) {
    m = Eigen::kroneckerProduct(m, factors[k].entries).eval();
    shapes.push_back(factors[k].shape);
  }
  return FockOperator(std::move(m), concat_shapes(shapes));
}

OscState tensor(const std::vector<OscState>& factors) {
  require(!factors.empty(), ErrorCode::invalid_input, "tensor of nothing");
  std::vector<ModeShape> shapes;
  bool all_pure = true;
  for (const auto& f : factors) {
    shapes.push_back(f.shape);
    all_pure = all_pure && f.is_pure();
  }
  ModeShape shape = concat_shapes(shapes);
  if (all_pure) {
    Vector v = factors[0].amplitudes;
    for (size_t k = 1; k < factors.size(); ++k) v = Eigen::kroneckerProduct(v, factors[k].amplitudes).eval();
    return OscState::pure(std::move(v), shape);
  }
  Matrix m = factors[0].density_matrix();
  for (size_t k = 1; k < factors.size(); ++k) m = Eigen::kroneckerProduct(m, factors[k].density_matrix()).eval();
  return OscState::mixed(std::move(m), shape);
}

FockOperator embed(const Matrix& op, int subsystem, const ModeShape& shape) {
  const auto dims = shape.dims();
  require(subsystem >= 0 && subsystem < static_cast<int>(dims.size()), ErrorCode::invalid_input, "subsystem out of range");
  require(op.rows() == dims[subsystem] && op.cols() == dims[subsystem], ErrorCode::invalid_input,
          "embedded operator does not match subsystem dimension");
  int left = 1, right = 1;
  for (int k = 0; k < subsystem; ++k) left *= dims[k];
  for (size_t k = subsystem + 1; k < dims.size(); ++k) right *= dims[k];
  Matrix m = Eigen::kroneckerProduct(Matrix::Identity(left, left),
                                     Eigen::kroneckerProduct(op, Matrix::Identity(right, right)).eval());
  return FockOperator(std::move(m), shape);
}

OscState partial_trace(const OscState& state, const std::vector<int>& keep_in) {
  const auto dims = state.shape.dims();
  const int ns = static_cast<int>(dims.size());
  std::vector<int> keep = keep_in;
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  require(!keep.empty(), ErrorCode::invalid_input, "partial trace must keep at least one subsystem");
  for (int k : keep) require(k >= 0 && k < ns, ErrorCode::invalid_input, "partial trace index out of range");

  std::vector<int> traced;
  for (int k = 0; k < ns; ++k)
    if (!std::binary_search(keep.begin(), keep.end(), k)) traced.push_back(k);

  const auto strides = strides_of(dims);
  auto enumerate = [&](const std::vector<int>& subs) {
    // Offsets into the full index for every multi-index over `subs`.
    std::vector<int> offs{0};
    for (int s : subs) {
      std::vector<int> next;
      next.reserve(offs.size() * dims[s]);
      for (int o : offs)
        for (int i = 0; i < dims[s]; ++i) next.push_back(o + i * strides[s]);
      offs.swap(next);
    }
    return offs;
  };
  const auto koff = enumerate(keep);
  const auto toff = enumerate(traced);
  const int nk = static_cast<int>(koff.size());
  const int nt = static_cast<int>(toff.size());

  ModeShape out_shape;
  for (int k : keep) {
    if (state.shape.ancilla && k == 0) out_shape.ancilla = true;
    else out_shape.modes.push_back(dims[k]);
  }

  Matrix out(nk, nk);
  if (state.is_pure()) {
    Matrix psi(nk, nt);
    for (int i = 0; i < nk; ++i)
      for (int t = 0; t < nt; ++t) psi(i, t) = state.amplitudes(koff[i] + toff[t]);
    out = psi * psi.adjoint();
  } else {
    out.setZero();
    for (int j = 0; j < nk; ++j)
      for (int i = 0; i < nk; ++i) {
        cplx acc = 0;
        for (int t = 0; t < nt; ++t) acc += state.density(koff[i] + toff[t], koff[j] + toff[t]);
        out(i, j) = acc;
      }
  }
  OscState r = OscState::mixed(std::move(out), out_shape);
  r.norm_tol = state.norm_tol;
  return r;
}

OscState reduce_to_mode(const OscState& state, int mode) {
  if (!state.shape.ancilla && state.shape.modes.size() == 1) return state;
  return partial_trace(state, {state.shape.mode_subsystem(mode)});
}

OscState apply(const FockOperator& op, const OscState& state) {
  require(op.dim() == state.dim(), ErrorCode::invalid_input, "operator/state dimension mismatch");
  OscState out = state;
  if (state.is_pure()) out.amplitudes = op.entries * state.amplitudes;
  else out.density = op.entries * state.density * op.entries.adjoint();
  return out;
}

cplx expectation(const OscState& state, const FockOperator& op) {
  require(op.dim() == state.dim(), ErrorCode::invalid_input, "operator/state dimension mismatch");
  if (state.is_pure()) return state.amplitudes.dot(op.entries * state.amplitudes);
  return (op.entries * state.density).trace();
}

static Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  RVector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

double fidelity(const OscState& a, const OscState& b) {
  require(a.dim() == b.dim(), ErrorCode::invalid_input, "fidelity of states with different dimensions");
  double f;
  if (a.is_pure() && b.is_pure()) {
    f = std::norm(a.amplitudes.dot(b.amplitudes)) / (a.amplitudes.squaredNorm() * b.amplitudes.squaredNorm());
  } else if (a.is_pure()) {
    f = a.amplitudes.dot(b.density * a.amplitudes).real() / (a.amplitudes.squaredNorm() * b.trace());
  } else if (b.is_pure()) {
    return fidelity(b, a);
  } else {
    Matrix sa = psd_sqrt(a.density);
    Matrix m = sa * b.density * sa;
    m = 0.5 * (m + m.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    const double s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    f = s * s / (a.trace() * b.trace());
  }
  return std::clamp(f, 0.0, 1.0);
}

std::vector<double> level_populations(const OscState& state, int subsystem) {
  const auto dims = state.shape.dims();
  require(subsystem >= 0 && subsystem < static_cast<int>(dims.size()), ErrorCode::invalid_input, "subsystem out of range");
  const auto strides = strides_of(dims);
  std::vector<double> pops(dims[subsystem], 0.0);
  const int n = state.dim();
  for (int i = 0; i < n; ++i) {
    const int level = (i / strides[subsystem]) % dims[subsystem];
    pops[level] += state.is_pure() ? std::norm(state.amplitudes(i)) : state.density(i, i).real();
  }
  return pops;
}

double leakage(const OscState& state, int guard_band) {
  require(guard_band >= 1, ErrorCode::invalid_parameters, "guard band must be at least 1");
  const int first = state.shape.ancilla ? 1 : 0;
  const auto dims = state.shape.dims();
  double worst = 0.0;
  bool any = false;
  for (int s = first; s < static_cast<int>(dims.size()); ++s) {
    if (guard_band >= dims[s]) continue;  // mode too small to have a guard band
    any = true;
    const auto pops = level_populations(state, s);
    double top = 0.0;
    for (int k = dims[s] - guard_band; k < dims[s]; ++k) top += pops[k];
    worst = std::max(worst, top);
  }
  require(any, ErrorCode::invalid_parameters, "guard band must be smaller than some mode dimension");
  return worst;
}

double unitarity_defect(const FockOperator& u, int guard_band) {
  const int n = u.dim() - guard_band;
  require(n >= 1, ErrorCode::invalid_parameters, "guard band exceeds dimension");
  Matrix d = (u.entries.adjoint() * u.entries).topLeftCorner(n, n) - Matrix::Identity(n, n);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double interior_distance(const Matrix& a, const Matrix& b, int interior) {
  require(interior >= 1 && interior <= a.rows() && a.rows() == b.rows(), ErrorCode::invalid_parameters,
          "bad interior size");
  Matrix d = (a - b).topLeftCorner(interior, interior);
  Eigen::BDCSVD<Matrix> svd(d);
  return svd.singularValues()(0);
}

bool approx_equal(cplx a, cplx b, double abs_tol, double rel_tol) {
  return std::abs(a - b) <= abs_tol + rel_tol * std::max(std::abs(a), std::abs(b));
}

}  // namespace gkp
