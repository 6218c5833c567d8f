#pragma once

#include <functional>

#include "gkp/fock.hpp"

namespace gkp {

// Product operator over the subsystems of a shape; empty factors are identity.
struct KronOperator {
  ModeShape shape;
  std::vector<Matrix> factors;

  KronOperator() = default;
  explicit KronOperator(ModeShape s);
  KronOperator& set(int subsystem, Matrix m);

  // out = op * in for `batch` column-stacked vectors of length shape.total().
  void apply(const cplx* in, cplx* out, Eigen::Index batch) const;
  Matrix dense() const;
  bool hermitian(double tol = 1e-10) const;
  double norm_bound() const;
};

// H(t)/hbar in rad/s as a sum of coefficient(t) * operator terms.
class Hamiltonian {
 public:
  using Coefficient = std::function<double(double)>;

  explicit Hamiltonian(ModeShape shape);
  explicit Hamiltonian(const FockOperator& constant);

  // A null coefficient means the constant 1. Throws invalid-input if the
  // operator is not Hermitian.
  void add(KronOperator op, Coefficient coeff = nullptr);
  void add(const FockOperator& op, Coefficient coeff = nullptr);

  const ModeShape& shape() const { return shape_; }
  int dim() const { return shape_.total(); }
  bool time_dependent() const;
  std::vector<double> coefficients(double t) const;
  void apply(const std::vector<double>& c, const cplx* in, cplx* out, Eigen::Index batch) const;
  Matrix dense(const std::vector<double>& c) const;
  Matrix dense_at(double t) const { return dense(coefficients(t)); }
  double norm_bound(const std::vector<double>& c) const;

 private:
  struct Term {
    bool is_dense = false;
    KronOperator kron;
    Matrix dense;
    Coefficient coeff;
    double norm = 0.0;
  };
  ModeShape shape_;
  std::vector<Term> terms_;
};

struct EvolutionConfig {
  double step_tol = 1e-9;
  double max_step = 1e-4;  // s
  int guard_band = 5;
  double leak_warn = 1e-5;
  double krylov_tol = 1e-12;
  int krylov_dim = 30;

  void validate() const;
};

struct EvolutionResult {
  OscState state;
  Diagnostics diag;
  double max_leakage = 0.0;
  int steps = 0;
  double last_step = 0.0;
};

// Schroedinger (pure) or von Neumann (mixed) evolution from t0 to t0 + duration.
EvolutionResult evolve(const OscState& state, const Hamiltonian& h, double t0, double duration,
                       const EvolutionConfig& cfg = {});
EvolutionResult evolve(const OscState& state, const FockOperator& h, double duration, const EvolutionConfig& cfg = {});

// v <- exp(-i tau A) v for Hermitian A given by `apply`, Lanczos with substeps.
using LinearApply = std::function<void(const Vector&, Vector&)>;
void krylov_propagate(const LinearApply& apply, double tau, Vector& v, double tol, int max_dim, double norm_hint);

}  // namespace gkp
