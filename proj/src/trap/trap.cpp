#include "gkp/trap.hpp"

#include <cmath>
#include <string>

namespace gkp {

namespace {

constexpr double kThetaTol = 1e-12;
constexpr int kContourPoints = 64;

void require_positive(double v, const char* what) {
  require(std::isfinite(v) && v > 0.0, ErrorCode::invalid_parameters, std::string(what) + " must be positive");
}

template <class T>
T tweezer_value(double depth, double waist, double zr, T x, T y, T z) {
  const T s = T(1.0) + z * z / (zr * zr);
  return -depth / s * std::exp(-2.0 * (x * x + y * y) / (waist * waist * s));
}

template <class T>
T lattice_value(double depth, const LatticeFactors& f, T x, T y, T z) {
  const T gz = std::exp(-2.0 * z * z / (f.waist * f.waist));
  const T cx = 0.5 * (T(1.0) + std::cos(f.kx * x));
  const T cy = 0.5 * (T(1.0) + std::cos(f.ky * y));
  return -depth * gz * cx * cy;
}

using Potential3 = std::function<cplx(cplx, cplx, cplx)>;

cplx at_axes(const Potential3& u, int a, cplx va, int b = -1, cplx vb = 0.0) {
  cplx r[3] = {0.0, 0.0, 0.0};
  r[a] = va;
  if (b >= 0) r[b] = vb;
  return u(r[0], r[1], r[2]);
}

// Taylor coefficient of order n along axis a by the trapezoid rule on a circle.
double contour_coefficient(const Potential3& u, int a, int n, double radius) {
  cplx sum = 0.0;
  for (int k = 0; k < kContourPoints; ++k) {
    const double phi = 2.0 * kPi * k / kContourPoints;
    sum += at_axes(u, a, std::polar(radius, phi)) * std::polar(1.0, -n * phi);
  }
  return sum.real() / kContourPoints / std::pow(radius, n);
}

// Coefficient of x_a^2 x_b^2.
double contour_cross(const Potential3& u, int a, int b, double ra, double rb) {
  cplx sum = 0.0;
  for (int k = 0; k < kContourPoints; ++k) {
    const double pk = 2.0 * kPi * k / kContourPoints;
    for (int l = 0; l < kContourPoints; ++l) {
      const double pl = 2.0 * kPi * l / kContourPoints;
      sum += at_axes(u, a, std::polar(ra, pk), b, std::polar(rb, pl)) * std::polar(1.0, -2.0 * (pk + pl));
    }
  }
  return sum.real() / (double(kContourPoints) * kContourPoints) / (ra * ra * rb * rb);
}

// Axes: 0 = x, 1 = y, 2 = z.
OscillatorParams params_from_taylor(const Potential3& u, const double radius[3], double depth, double mass) {
  const double hbar = constants::hbar;
  double omega[3], eta[3];
  for (int a = 0; a < 3; ++a) {
    const double c2 = contour_coefficient(u, a, 2, radius[a]);
    const double c4 = contour_coefficient(u, a, 4, radius[a]);
    require(c2 > 0.0, ErrorCode::numeric_failure, "potential has no minimum at the origin");
    omega[a] = std::sqrt(2.0 * c2 / mass);
    eta[a] = -c4 * hbar / (mass * mass * std::pow(omega[a], 3));
  }
  const double czx = contour_cross(u, 2, 0, radius[2], radius[0]);
  const double czy = contour_cross(u, 2, 1, radius[2], radius[1]);
  const double cxy = contour_cross(u, 0, 1, radius[0], radius[1]);

  OscillatorParams p;
  p.omega_x = omega[0];
  p.omega_y = omega[1];
  p.omega_z = omega[2];
  p.eta_x = eta[0];
  p.eta_y = eta[1];
  p.eta_z = eta[2];
  p.eps_zx = -czx * hbar / (mass * mass * p.omega_z * p.omega_z * p.omega_x);
  p.eps_zy = -czy * hbar / (mass * mass * p.omega_z * p.omega_z * p.omega_y);
  p.eps_xy = -cxy * hbar / (mass * mass * p.omega_x * p.omega_x * p.omega_y);
  p.depth = depth;
  p.mass = mass;
  return p;
}

}  // namespace

TweezerSpec TweezerSpec::reference() {
  TweezerSpec s;
  s.depth = kelvin_to_joule(1.5e-3);
  s.waist = 500e-9;
  s.wavelength = 1040e-9;
  return s;
}

double TweezerSpec::rayleigh_length() const { return kPi * waist * waist / wavelength; }

bool TweezerSpec::paraxial_flag() const { return rayleigh_length() < 2.0 * waist; }

void TweezerSpec::validate() const {
  require_positive(depth, "tweezer depth");
  require_positive(waist, "tweezer waist");
  require_positive(wavelength, "tweezer wavelength");
  require_positive(mass, "mass");
}

LatticeSpec LatticeSpec::reference() {
  LatticeSpec s;
  s.depth = kelvin_to_joule(1.5e-3);
  s.waist = 20e-6;
  s.wavelength = 1040e-9;
  return s;
}

void LatticeSpec::validate() const {
  require_positive(depth, "lattice depth");
  require_positive(waist, "lattice waist");
  require_positive(wavelength, "lattice wavelength");
  require_positive(mass, "mass");
  require(std::isfinite(theta) && theta > 0.0 && theta < kPi / 2, ErrorCode::invalid_parameters,
          "lattice angle must lie in (0, pi/2)");
}

void OscillatorParams::validate() const {
  for (double w : {omega_x, omega_y, omega_z}) require_positive(w, "oscillator frequency");
  for (double v : {eta_x, eta_y, eta_z, eps_zx, eps_zy, eps_xy}) {
    require(std::isfinite(v) && v >= 0.0 && v < 1.0, ErrorCode::invalid_parameters,
            "anharmonicity and coupling must lie in [0, 1)");
  }
  require_positive(mass, "mass");
}

OscillatorParams tweezer_params(const TweezerSpec& spec) {
  spec.validate();
  const double zr = spec.rayleigh_length();
  const double u0 = spec.depth, m = spec.mass, hbar = constants::hbar;
  OscillatorParams p;
  p.omega_z = std::sqrt(2.0 * u0 / (m * zr * zr));
  p.omega_x = std::sqrt(4.0 * u0 / (m * spec.waist * spec.waist));
  p.omega_y = p.omega_x;
  p.eta_z = hbar * p.omega_z / (4.0 * u0);
  p.eta_x = hbar * p.omega_x / (8.0 * u0);
  p.eta_y = p.eta_x;
  p.eps_zx = hbar * p.omega_x / (2.0 * u0);
  p.eps_zy = p.eps_zx;
  p.eps_xy = hbar * p.omega_x / (4.0 * u0);
  p.depth = u0;
  p.mass = m;
  return p;
}

LatticeFactors lattice_factors(const LatticeSpec& spec) {
  const double k = 4.0 * kPi / spec.wavelength;
  return LatticeFactors{k * std::cos(spec.theta), k * std::sin(spec.theta), spec.waist};
}

OscillatorParams lattice_params(const LatticeSpec& spec) {
  spec.validate();
  if (std::abs(spec.theta - kPi / 4) > kThetaTol) return lattice_params_numeric(spec);
  const double u0 = spec.depth, m = spec.mass, hbar = constants::hbar, lam = spec.wavelength;
  OscillatorParams p;
  p.omega_z = std::sqrt(4.0 * u0 / (m * spec.waist * spec.waist));
  p.omega_x = std::sqrt(4.0 * kPi * kPi * u0 / (m * lam * lam));
  p.omega_y = p.omega_x;
  p.eta_z = hbar * p.omega_z / (8.0 * u0);
  p.eta_x = hbar * p.omega_x / (12.0 * u0);
  p.eta_y = p.eta_x;
  p.eps_zx = hbar * p.omega_x / (4.0 * u0);
  p.eps_zy = p.eps_zx;
  p.eps_xy = hbar * p.omega_x / (4.0 * u0);
  p.depth = u0;
  p.mass = m;
  return p;
}

OscillatorParams tweezer_params_numeric(const TweezerSpec& spec) {
  spec.validate();
  const double zr = spec.rayleigh_length();
  Potential3 u = [&](cplx x, cplx y, cplx z) { return tweezer_value<cplx>(spec.depth, spec.waist, zr, x, y, z); };
  // Radii stay inside the poles at z = +-i z_R.
  const double radius[3] = {0.5 * spec.waist, 0.5 * spec.waist, 0.5 * zr};
  return params_from_taylor(u, radius, spec.depth, spec.mass);
}

OscillatorParams lattice_params_numeric(const LatticeSpec& spec) {
  spec.validate();
  const LatticeFactors f = lattice_factors(spec);
  Potential3 u = [&](cplx x, cplx y, cplx z) { return lattice_value<cplx>(spec.depth, f, x, y, z); };
  const double radius[3] = {1.0 / f.kx, 1.0 / f.ky, 0.5 * spec.waist};
  return params_from_taylor(u, radius, spec.depth, spec.mass);
}

double tweezer_potential(const TweezerSpec& spec, double x, double y, double z) {
  return tweezer_value<double>(spec.depth, spec.waist, spec.rayleigh_length(), x, y, z);
}

double lattice_potential(const LatticeSpec& spec, double x, double y, double z) {
  return lattice_value<double>(spec.depth, lattice_factors(spec), x, y, z);
}

BasisFrequencies coupling_corrected_frequencies(const OscillatorParams& p, int modes) {
  require(modes >= 1 && modes <= 3, ErrorCode::invalid_parameters, "mode count must be 1, 2 or 3");
  BasisFrequencies b{p.omega_x, p.omega_y, p.omega_z};
  if (modes == 1) return b;
  const double ez = p.eps_zx + (modes == 3 ? p.eps_zy : 0.0);
  require(ez < 1.0, ErrorCode::invalid_parameters, "coupling too strong for a corrected basis");
  b.z = p.omega_z * std::sqrt(1.0 - ez);
  const double ex = (modes == 3 ? p.eps_xy : 0.0) + p.eps_zx * p.omega_z / p.omega_x;
  b.x = p.omega_x * std::sqrt(1.0 - ex);
  if (modes == 3) b.y = p.omega_y * std::sqrt(1.0 - p.eps_xy - p.eps_zy * p.omega_z / p.omega_y);
  return b;
}

Matrix quadrature_power(int k, int dim) {
  require(k >= 0 && dim >= 1, ErrorCode::invalid_dimension, "invalid quadrature power request");
  const int big = dim + k;
  const Matrix q = quadratures(big).first.entries;
  Matrix r = Matrix::Identity(big, big);
  for (int i = 0; i < k; ++i) r = r * q;
  Matrix c = r.topLeftCorner(dim, dim);
  return 0.5 * (c + c.adjoint());
}

Hamiltonian anharmonic_terms(const OscillatorParams& p, const ModeShape& shape, bool corrected) {
  shape.validate();
  const int nm = static_cast<int>(shape.modes.size());
  require(nm >= 1 && nm <= 3, ErrorCode::invalid_dimension, "anharmonic Hamiltonian takes 1 to 3 modes");
  for (int d : shape.modes) require(d >= 4, ErrorCode::invalid_dimension, "each mode needs at least 4 levels");

  // Mode roles by position: (z), (x, z) or (x, y, z).
  const int iz = nm - 1;
  const int ix = nm >= 2 ? 0 : -1;
  const int iy = nm == 3 ? 1 : -1;

  auto number_half = [](int d) {
    Matrix m = Matrix::Zero(d, d);
    for (int n = 0; n < d; ++n) m(n, n) = n + 0.5;
    return m;
  };
  auto single = [&](int mode, const Matrix& m) {
    KronOperator op(shape);
    op.set(shape.mode_subsystem(mode), m);
    return op;
  };
  auto pair = [&](int a, const Matrix& ma, int b, const Matrix& mb) {
    KronOperator op(shape);
    op.set(shape.mode_subsystem(a), ma);
    op.set(shape.mode_subsystem(b), mb);
    return op;
  };
  auto dim_of = [&](int mode) { return shape.modes[mode]; };

  double ez = 0.0;
  if (corrected) ez = p.eps_zx * (ix >= 0 ? 1.0 : 0.0) + p.eps_zy * (iy >= 0 ? 1.0 : 0.0);
  require(ez < 1.0, ErrorCode::invalid_parameters, "coupling too strong for a corrected basis");
  const double wz = p.omega_z * std::sqrt(1.0 - ez);
  const double q4_scale = 1.0 / (1.0 - ez);
  const double q2_scale = 1.0 / std::sqrt(1.0 - ez);

  Hamiltonian h(shape);
  const int dz = dim_of(iz);
  h.add(single(iz, (wz * number_half(dz)).eval()));
  h.add(single(iz, (-p.eta_z * p.omega_z * q4_scale * quadrature_power(4, dz)).eval()));
  const Matrix qz2 = q2_scale * quadrature_power(2, dz);

  auto add_partner = [&](int mode, double omega, double eta, double eps) {
    const int d = dim_of(mode);
    h.add(single(mode, (omega * number_half(d)).eval()));
    h.add(single(mode, (-eta * omega * quadrature_power(4, d)).eval()));
    Matrix qj2 = quadrature_power(2, d);
    if (corrected) qj2 -= 0.5 * Matrix::Identity(d, d);
    h.add(pair(iz, (-eps * p.omega_z * qz2).eval(), mode, qj2));
  };
  if (ix >= 0) add_partner(ix, p.omega_x, p.eta_x, p.eps_zx);
  if (iy >= 0) {
    add_partner(iy, p.omega_y, p.eta_y, p.eps_zy);
    h.add(pair(ix, (-p.eps_xy * p.omega_x * quadrature_power(2, dim_of(ix))).eval(), iy,
               quadrature_power(2, dim_of(iy))));
  }
  return h;
}

FockOperator anharmonic_hamiltonian(const OscillatorParams& p, const std::vector<int>& dims, bool corrected) {
  const ModeShape shape{false, dims};
  const Hamiltonian h = anharmonic_terms(p, shape, corrected);
  return FockOperator(h.dense(h.coefficients(0.0)), shape);
}

StarkShift ac_stark_depth(double rabi, double detuning, Diagnostics* diag) {
  require(std::isfinite(rabi) && std::isfinite(detuning), ErrorCode::invalid_parameters,
          "Rabi frequency and detuning must be finite");
  require(detuning != 0.0, ErrorCode::invalid_parameters, "detuning must be nonzero");
  StarkShift s;
  s.depth = constants::hbar * rabi * rabi / (4.0 * detuning);
  s.far_detuned = rabi == 0.0 || std::abs(detuning) / std::abs(rabi) >= 10.0;
  if (!s.far_detuned) warn_to(diag, "detuning is less than ten Rabi frequencies; the far-detuned shift is inaccurate");
  return s;
}

}  // namespace gkp
