#pragma once

#include <Eigen/Dense>
#include <complex>
#include <utility>
#include <vector>

#include "gkp/error.hpp"

namespace gkp {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline const double kSqrtPi = 1.77245385090551602730;

// Subsystem layout of a composite basis. The optional two-level ancilla is
// the leading (slowest) factor; oscillator modes follow, coding mode last.
struct ModeShape {
  bool ancilla = false;
  std::vector<int> modes;

  static ModeShape single(int dim) { return ModeShape{false, {dim}}; }
  static ModeShape with_ancilla(std::vector<int> modes) { return ModeShape{true, std::move(modes)}; }

  std::vector<int> dims() const;  // ancilla (2) included
  int subsystems() const { return static_cast<int>(modes.size()) + (ancilla ? 1 : 0); }
  int total() const;
  // Subsystem index of oscillator mode m (negative m counts from the end).
  int mode_subsystem(int m) const;
  bool operator==(const ModeShape& o) const { return ancilla == o.ancilla && modes == o.modes; }
  void validate() const;
};

struct FockOperator {
  Matrix entries;
  ModeShape shape;

  FockOperator() = default;
  FockOperator(Matrix m, ModeShape s);
  explicit FockOperator(Matrix m);

  int dim() const { return static_cast<int>(entries.rows()); }
  FockOperator adjoint() const { return FockOperator(entries.adjoint(), shape); }
};

FockOperator operator*(const FockOperator& a, const FockOperator& b);
FockOperator operator+(const FockOperator& a, const FockOperator& b);
FockOperator operator-(const FockOperator& a, const FockOperator& b);
FockOperator operator*(cplx s, const FockOperator& a);

enum class StateKind { pure, mixed };

struct OscState {
  StateKind kind = StateKind::pure;
  Vector amplitudes;  // pure
  Matrix density;     // mixed
  ModeShape shape;
  double norm_tol = 1e-9;

  static OscState pure(Vector psi, ModeShape shape);
  static OscState mixed(Matrix rho, ModeShape shape);

  int dim() const { return shape.total(); }
  bool is_pure() const { return kind == StateKind::pure; }
  Matrix density_matrix() const;
  OscState as_mixed() const;
  double trace() const;
  // Throws invalid-input if the norm/trace/Hermiticity/positivity contract fails.
  void validate() const;
  void normalize();
};

// Builders -------------------------------------------------------------------
std::pair<FockOperator, FockOperator> ladder(int dim);
std::pair<FockOperator, FockOperator> quadratures(int dim);
FockOperator number_operator(int dim);
FockOperator identity_operator(int dim);
FockOperator parity_operator(int dim);

// D(alpha) = exp[(alpha a^dag - alpha^* a)/sqrt(2)].
FockOperator displacement(cplx alpha, int dim, Diagnostics* diag = nullptr);
// Same operator computed in a padded space and cropped; accurate on all
// retained levels but no longer exactly unitary.
FockOperator displacement_padded(cplx alpha, int dim, int pad);
// S(z) = exp[(z^* a^2 - z a^dag^2)/2].
FockOperator squeeze(cplx z, int dim, Diagnostics* diag = nullptr);
FockOperator rotation(double theta, int dim);

Matrix expm(const Matrix& a);
FockOperator matrix_exp(const FockOperator& a);
// exp(-i t H) for Hermitian H via eigendecomposition.
Matrix expm_hermitian(const Matrix& h, double t);

OscState vacuum(int dim);
OscState fock_state(int n, int dim);
// Analytic S(z)|0> amplitudes, truncated and renormalized.
OscState squeezed_vacuum(cplx z, int dim);
OscState coherent_state(cplx alpha, int dim);  // D(alpha)|0>, analytic

// Composite structure --------------------------------------------------------
FockOperator tensor(const std::vector<FockOperator>& factors);
OscState tensor(const std::vector<OscState>& factors);
// Operator acting on one subsystem of `shape`, identity elsewhere.
FockOperator embed(const Matrix& op, int subsystem, const ModeShape& shape);
OscState partial_trace(const OscState& state, const std::vector<int>& keep);
// Reduced single-mode density matrix of oscillator mode m (default: coding mode).
OscState reduce_to_mode(const OscState& state, int mode = -1);

OscState apply(const FockOperator& op, const OscState& state);
cplx expectation(const OscState& state, const FockOperator& op);
double fidelity(const OscState& a, const OscState& b);
double leakage(const OscState& state, int guard_band);
// Max population in the top guard band of each subsystem, per-mode marginals.
std::vector<double> level_populations(const OscState& state, int subsystem);

// Norm of (U^dag U - 1) restricted to levels below the guard band (single mode).
double unitarity_defect(const FockOperator& u, int guard_band);
// Operator-norm of the difference restricted to the leading `interior` levels.
double interior_distance(const Matrix& a, const Matrix& b, int interior);

bool approx_equal(cplx a, cplx b, double abs_tol = 1e-12, double rel_tol = 1e-9);

}  // namespace gkp
