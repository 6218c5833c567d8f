#include "gkp/evolve.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gkp {

// KronOperator ---------------------------------------------------------------

KronOperator::KronOperator(ModeShape s) : shape(std::move(s)), factors(shape.subsystems()) {}

KronOperator& KronOperator::set(int subsystem, Matrix m) {
  const auto dims = shape.dims();
  require(subsystem >= 0 && subsystem < static_cast<int>(dims.size()), ErrorCode::invalid_input,
          "subsystem out of range");
  require(m.rows() == dims[subsystem] && m.cols() == dims[subsystem], ErrorCode::invalid_input,
          "factor does not match subsystem dimension");
  factors[subsystem] = std::move(m);
  return *this;
}

void KronOperator::apply(const cplx* in, cplx* out, Eigen::Index batch) const {
  const auto dims = shape.dims();
  const Eigen::Index n = shape.total();
  Vector buf_a = Eigen::Map<const Vector>(in, n * batch);
  Vector buf_b(n * batch);
  Eigen::Index left = batch;
  Eigen::Index right = n;
  for (size_t s = 0; s < dims.size(); ++s) {
    const Eigen::Index d = dims[s];
    right /= d;
    if (factors[s].size() != 0) {
      const Matrix mt = factors[s].transpose();
      for (Eigen::Index l = 0; l < left; ++l) {
        Eigen::Map<const Matrix> src(buf_a.data() + l * d * right, right, d);
        Eigen::Map<Matrix> dst(buf_b.data() + l * d * right, right, d);
        dst.noalias() = src * mt;
      }
      buf_a.swap(buf_b);
    }
    left *= d;
  }
  Eigen::Map<Vector>(out, n * batch) = buf_a;
}

Matrix KronOperator::dense() const {
  const auto dims = shape.dims();
  Matrix m = Matrix::Identity(1, 1);
  for (size_t s = 0; s < dims.size(); ++s) {
    const Matrix f = factors[s].size() ? factors[s] : Matrix::Identity(dims[s], dims[s]);
    m = Eigen::kroneckerProduct(m, f).eval();
  }
  return m;
}

bool KronOperator::hermitian(double tol) const {
  for (const auto& f : factors) {
    if (f.size() == 0) continue;
    const double scale = std::max(1.0, f.cwiseAbs().maxCoeff());
    if ((f - f.adjoint()).cwiseAbs().maxCoeff() > tol * scale) return false;
  }
  return true;
}

double KronOperator::norm_bound() const {
  double b = 1.0;
  for (const auto& f : factors)
    if (f.size()) b *= f.cwiseAbs().rowwise().sum().maxCoeff();
  return b;
}

// Hamiltonian ----------------------------------------------------------------

Hamiltonian::Hamiltonian(ModeShape shape) : shape_(std::move(shape)) { shape_.validate(); }

Hamiltonian::Hamiltonian(const FockOperator& constant) : shape_(constant.shape) { add(constant); }

void Hamiltonian::add(KronOperator op, Coefficient coeff) {
  require(op.shape == shape_, ErrorCode::invalid_input, "Hamiltonian term shape mismatch");
  require(op.hermitian(), ErrorCode::invalid_input, "Hamiltonian term is not Hermitian");
  Term t;
  t.norm = op.norm_bound();
  t.kron = std::move(op);
  t.coeff = std::move(coeff);
  terms_.push_back(std::move(t));
}

void Hamiltonian::add(const FockOperator& op, Coefficient coeff) {
  require(op.shape == shape_, ErrorCode::invalid_input, "Hamiltonian term shape mismatch");
  const double scale = std::max(1.0, op.entries.cwiseAbs().maxCoeff());
  require((op.entries - op.entries.adjoint()).cwiseAbs().maxCoeff() <= 1e-10 * scale, ErrorCode::invalid_input,
          "Hamiltonian term is not Hermitian");
  Term t;
  t.is_dense = true;
  t.dense = op.entries;
  t.norm = op.entries.cwiseAbs().rowwise().sum().maxCoeff();
  t.coeff = std::move(coeff);
  terms_.push_back(std::move(t));
}

bool Hamiltonian::time_dependent() const {
  return std::any_of(terms_.begin(), terms_.end(), [](const Term& t) { return static_cast<bool>(t.coeff); });
}

std::vector<double> Hamiltonian::coefficients(double t) const {
  std::vector<double> c(terms_.size());
  for (size_t k = 0; k < terms_.size(); ++k) {
    c[k] = terms_[k].coeff ? terms_[k].coeff(t) : 1.0;
    require(std::isfinite(c[k]), ErrorCode::invalid_input, "Hamiltonian coefficient is not finite");
  }
  return c;
}

void Hamiltonian::apply(const std::vector<double>& c, const cplx* in, cplx* out, Eigen::Index batch) const {
  const Eigen::Index n = dim();
  Eigen::Map<Vector> acc(out, n * batch);
  acc.setZero();
  Vector tmp(n * batch);
  for (size_t k = 0; k < terms_.size(); ++k) {
    if (c[k] == 0.0) continue;
    const Term& t = terms_[k];
    if (t.is_dense) {
      Eigen::Map<const Matrix> src(in, n, batch);
      Eigen::Map<Matrix> dst(tmp.data(), n, batch);
      dst.noalias() = t.dense * src;
    } else {
      t.kron.apply(in, tmp.data(), batch);
    }
    acc += c[k] * tmp;
  }
}

Matrix Hamiltonian::dense(const std::vector<double>& c) const {
  Matrix h = Matrix::Zero(dim(), dim());
  for (size_t k = 0; k < terms_.size(); ++k) {
    if (c[k] == 0.0) continue;
    h += c[k] * (terms_[k].is_dense ? terms_[k].dense : terms_[k].kron.dense());
  }
  return h;
}

double Hamiltonian::norm_bound(const std::vector<double>& c) const {
  double b = 0.0;
  for (size_t k = 0; k < terms_.size(); ++k) b += std::abs(c[k]) * terms_[k].norm;
  return b;
}

// Config ---------------------------------------------------------------------

void EvolutionConfig::validate() const {
  require(step_tol > 0, ErrorCode::invalid_parameters, "step_tol must be positive");
  require(max_step > 0, ErrorCode::invalid_parameters, "max_step must be positive");
  require(guard_band >= 1, ErrorCode::invalid_parameters, "guard_band must be at least 1");
  require(leak_warn > 0 && leak_warn < 1, ErrorCode::invalid_parameters, "leak_warn must lie in (0, 1)");
  require(krylov_tol > 0 && krylov_dim >= 4, ErrorCode::invalid_parameters, "bad Krylov settings");
}

// Krylov propagation ---------------------------------------------------------

void krylov_propagate(const LinearApply& apply, double tau, Vector& v, double tol, int max_dim, double norm_hint) {
  if (tau == 0.0) return;
  const Eigen::Index n = v.size();
  const int mmax = static_cast<int>(std::min<Eigen::Index>(max_dim, n));
  const double sign = tau < 0 ? -1.0 : 1.0;
  double remaining = std::abs(tau);
  // The a-posteriori estimate below shrinks optimistic first guesses.
  double h = norm_hint > 0 ? std::min(remaining, 2.0 * mmax / norm_hint) : remaining;

  Matrix basis(n, mmax + 1);
  Vector w(n);
  std::vector<double> alpha(mmax), beta(mmax);
  int guard = 0;
  while (remaining > 0) {
    require(++guard < 10000000, ErrorCode::numeric_failure, "Krylov propagation did not converge");
    const double vnorm = v.norm();
    if (vnorm == 0.0) return;
    basis.col(0) = v / vnorm;
    int m = 0;
    bool breakdown = false;
    for (int j = 0; j < mmax; ++j) {
      apply(basis.col(j), w);
      alpha[j] = basis.col(j).dot(w).real();
      w -= alpha[j] * basis.col(j);
      if (j > 0) w -= beta[j - 1] * basis.col(j - 1);
      // Full reorthogonalisation keeps the small basis numerically orthonormal.
      for (int i = 0; i <= j; ++i) w -= basis.col(i).dot(w) * basis.col(i);
      beta[j] = w.norm();
      m = j + 1;
      if (beta[j] < 1e-13 * std::max(1.0, std::abs(alpha[j]))) {
        breakdown = true;
        break;
      }
      basis.col(j + 1) = w / beta[j];
    }
    RVector d(m), e(std::max(m - 1, 0));
    for (int j = 0; j < m; ++j) d(j) = alpha[j];
    for (int j = 0; j + 1 < m; ++j) e(j) = beta[j];
    Eigen::SelfAdjointEigenSolver<RMatrix> es;
    if (m > 1) es.computeFromTridiagonal(d, e);
    auto small_exp = [&](double step) {
      Vector y(m);
      if (m == 1) {
        y(0) = std::polar(1.0, -sign * step * d(0));
        return y;
      }
      const RMatrix& q = es.eigenvectors();
      Vector c(m);
      for (int k = 0; k < m; ++k) c(k) = q(0, k) * std::polar(1.0, -sign * step * es.eigenvalues()(k));
      y = q.cast<cplx>() * c;
      return y;
    };
    Vector y;
    h = std::min(h, remaining);
    for (;;) {
      y = small_exp(h);
      // Defect bound: integral of the Lanczos residual beta_m |e_m^T y(s)| over the substep.
      const double err = breakdown ? 0.0 : h * beta[m - 1] * std::abs(y(m - 1));
      if (err <= tol || h < 1e-300) {
        v = vnorm * (basis.leftCols(m) * y);
        remaining -= h;
        if (err < 0.01 * tol) h *= 2.0;
        break;
      }
      h *= 0.5;
    }
  }
}

// Evolution ------------------------------------------------------------------

namespace {

struct Propagator {
  const Hamiltonian& h;
  bool mixed;
  Eigen::Index n;
  double tol;
  int kdim;

  void step_const(const std::vector<double>& c, double tau, Vector& v) const {
    LinearApply op;
    if (!mixed) {
      op = [&](const Vector& in, Vector& out) {
        out.resize(n);
        h.apply(c, in.data(), out.data(), 1);
      };
    } else {
      // Commutator superoperator rho -> H rho - rho H (H Hermitian).
      op = [&](const Vector& in, Vector& out) {
        out.resize(n * n);
        Vector left(n * n);
        h.apply(c, in.data(), left.data(), n);
        Eigen::Map<const Matrix> rin(in.data(), n, n);
        Matrix adj = rin.adjoint();
        Matrix hadj(n, n);
        h.apply(c, adj.data(), hadj.data(), n);
        Eigen::Map<Matrix> r(out.data(), n, n);
        r = Eigen::Map<Matrix>(left.data(), n, n) - hadj.adjoint();
      };
    }
    const double hint = h.norm_bound(c) * (mixed ? 2.0 : 1.0);
    krylov_propagate(op, tau, v, tol, kdim, hint);
  }

  // Fourth-order commutator-free step from t to t + dt.
  void step_cf4(double t, double dt, Vector& v) const {
    static const double r3 = std::sqrt(3.0);
    const double c1 = 0.5 - r3 / 6.0, c2 = 0.5 + r3 / 6.0;
    const double a1 = (3.0 - 2.0 * r3) / 12.0, a2 = (3.0 + 2.0 * r3) / 12.0;
    const auto h1 = h.coefficients(t + c1 * dt);
    const auto h2 = h.coefficients(t + c2 * dt);
    std::vector<double> first(h1.size()), second(h1.size());
    for (size_t k = 0; k < h1.size(); ++k) {
      first[k] = 2.0 * (a2 * h1[k] + a1 * h2[k]);
      second[k] = 2.0 * (a1 * h1[k] + a2 * h2[k]);
    }
    step_const(first, 0.5 * dt, v);
    step_const(second, 0.5 * dt, v);
  }
};

OscState unpack(const Vector& v, const OscState& like) {
  OscState s = like;
  if (like.is_pure()) s.amplitudes = v;
  else {
    const Eigen::Index n = like.dim();
    s.density = Eigen::Map<const Matrix>(v.data(), n, n);
    s.density = 0.5 * (s.density + s.density.adjoint()).eval();
  }
  return s;
}

}  // namespace

EvolutionResult evolve(const OscState& state, const Hamiltonian& h, double t0, double duration,
                       const EvolutionConfig& cfg) {
  cfg.validate();
  require(state.shape == h.shape(), ErrorCode::invalid_input, "state and Hamiltonian shapes differ");
  require(duration >= 0 && std::isfinite(duration), ErrorCode::invalid_parameters, "duration must be finite and >= 0");
  const bool mixed = !state.is_pure();
  const Eigen::Index n = state.dim();
  Vector v = mixed ? Vector(Eigen::Map<const Vector>(state.density.data(), n * n)) : state.amplitudes;
  Propagator prop{h, mixed, n, cfg.krylov_tol, cfg.krylov_dim};

  EvolutionResult res;
  bool warned = false;
  auto monitor = [&](double t) {
    const double lk = leakage(unpack(v, state), cfg.guard_band);
    res.max_leakage = std::max(res.max_leakage, lk);
    if (lk > cfg.leak_warn && !warned) {
      warned = true;
      std::ostringstream os;
      os << "truncation leakage " << lk << " exceeds " << cfg.leak_warn << " at t = " << t << " s";
      res.diag.warn(os.str());
    }
  };

  double t = t0;
  const double t_end = t0 + duration;
  if (!h.time_dependent()) {
    const auto c = h.coefficients(t0);
    while (t < t_end) {
      const double dt = std::min(cfg.max_step, t_end - t);
      prop.step_const(c, dt, v);
      t += dt;
      ++res.steps;
      monitor(t);
    }
    res.last_step = std::min(cfg.max_step, duration);
  } else {
    double dt = std::min(cfg.max_step, duration);
    const double tiny = 1e-14 * std::max(1.0, std::abs(t_end));
    while (t_end - t > tiny) {
      dt = std::min({dt, cfg.max_step, t_end - t});
      Vector coarse = v;
      prop.step_cf4(t, dt, coarse);
      Vector fine = v;
      prop.step_cf4(t, 0.5 * dt, fine);
      prop.step_cf4(t + 0.5 * dt, 0.5 * dt, fine);
      const double err = (coarse - fine).norm() / std::max(1e-300, fine.norm());
      if (err <= cfg.step_tol || dt < 1e-15 * std::max(1.0, duration)) {
        v = fine;
        t += dt;
        ++res.steps;
        res.last_step = dt;
        monitor(t);
        const double grow = err > 0 ? 0.9 * std::pow(cfg.step_tol / err, 0.2) : 2.0;
        dt *= std::clamp(grow, 0.3, 2.0);
      } else {
        dt *= std::clamp(0.9 * std::pow(cfg.step_tol / err, 0.2), 0.2, 0.7);
      }
    }
  }
  res.state = unpack(v, state);
  return res;
}

EvolutionResult evolve(const OscState& state, const FockOperator& h, double duration, const EvolutionConfig& cfg) {
  return evolve(state, Hamiltonian(h), 0.0, duration, cfg);
}

}  // namespace gkp
