#pragma once

#include <vector>

#include "gkp/evolve.hpp"
#include "gkp/fock.hpp"

namespace gkp {

namespace constants {
inline constexpr double hbar = 1.054571817e-34;  // J s
inline constexpr double k_B = 1.380649e-23;      // J/K
inline constexpr double amu = 1.66053906660e-27;  // kg
inline constexpr double default_mass_u = 87.906;
}  // namespace constants

inline double kelvin_to_joule(double kelvin) { return kelvin * constants::k_B; }
inline double amu_to_kg(double u) { return u * constants::amu; }

struct TweezerSpec {
  double depth = 0.0;       // U0, J
  double waist = 0.0;       // w0, m
  double wavelength = 0.0;  // m
  double mass = amu_to_kg(constants::default_mass_u);

  static TweezerSpec reference();  // 1.5 mK, 500 nm, 1040 nm
  double rayleigh_length() const;
  // True when z_R < 2 w0, where the paraxial Gaussian model is questionable.
  bool paraxial_flag() const;
  void validate() const;
};

struct LatticeSpec {
  double depth = 0.0;
  double waist = 0.0;  // Gaussian z-confinement waist
  double wavelength = 0.0;
  double mass = amu_to_kg(constants::default_mass_u);
  double theta = kPi / 4;

  static LatticeSpec reference();  // 1.5 mK, 20 um, 1040 nm, 45 degrees
  void validate() const;
};

// Quartic coefficients follow H/hbar = sum w_j (n_j + 1/2) - eta_j w_j q_j^4
// - eps_zj w_z q_z^2 q_j^2 - eps_xy w_x q_x^2 q_y^2.
struct OscillatorParams {
  double omega_x = 0.0, omega_y = 0.0, omega_z = 0.0;  // rad/s
  double eta_z = 0.0, eta_x = 0.0, eta_y = 0.0;
  double eps_zx = 0.0, eps_zy = 0.0, eps_xy = 0.0;
  double depth = 0.0;  // J
  double mass = 0.0;   // kg

  void validate() const;
};

OscillatorParams tweezer_params(const TweezerSpec& spec);
// Closed forms at 45 degrees; other angles via the numeric expansion.
OscillatorParams lattice_params(const LatticeSpec& spec);
// Taylor coefficients of the exact potentials by contour integration.
OscillatorParams tweezer_params_numeric(const TweezerSpec& spec);
OscillatorParams lattice_params_numeric(const LatticeSpec& spec);

double tweezer_potential(const TweezerSpec& spec, double x, double y, double z);
double lattice_potential(const LatticeSpec& spec, double x, double y, double z);

// The lattice potential factorizes as -U0 * g(z) * c_x(x) * c_y(y).
struct LatticeFactors {
  double kx = 0.0;  // c_x(x) = (1 + cos(kx x))/2
  double ky = 0.0;
  double waist = 0.0;  // g(z) = exp(-2 z^2 / waist^2)
};
LatticeFactors lattice_factors(const LatticeSpec& spec);

// Basis frequencies that absorb the zero-point part of the couplings
// (z: w_z sqrt(1 - eps_zx - eps_zy); x: w_x sqrt(1 - eps_xy - eps_zx w_z/w_x)).
struct BasisFrequencies {
  double x = 0.0, y = 0.0, z = 0.0;
};
BasisFrequencies coupling_corrected_frequencies(const OscillatorParams& p, int modes = 3);

// <m| q^k |n> on `dim` levels without truncation error.
Matrix quadrature_power(int k, int dim);

// H/hbar in rad/s on modes ordered (x, y, z), (x, z) or (z). `corrected`
// expresses the z mode in the coupling-corrected basis.
FockOperator anharmonic_hamiltonian(const OscillatorParams& p, const std::vector<int>& dims, bool corrected);
// Same operator kept as a sum of product terms, optionally behind an ancilla.
Hamiltonian anharmonic_terms(const OscillatorParams& p, const ModeShape& shape, bool corrected);

struct StarkShift {
  double depth = 0.0;  // J, positive for a trapping (attractive) shift
  bool far_detuned = true;
};
StarkShift ac_stark_depth(double rabi, double detuning, Diagnostics* diag = nullptr);

}  // namespace gkp
