#pragma once

#include <limits>
#include <string>

#include "gkp/fock.hpp"

namespace gkp {

struct GkpCode {
  cplx stab_x_amp{2.0 * kSqrtPi, 0.0};
  cplx stab_z_amp{0.0, 2.0 * kSqrtPi};
  cplx logical_x_amp{kSqrtPi, 0.0};
  cplx logical_z_amp{0.0, kSqrtPi};

  static GkpCode square() { return {}; }
  // Rectangular lattice stretched by `aspect` along q and compressed along p.
  static GkpCode rectangular(double aspect);
  void validate() const;
};

double braiding_phase(cplx alpha, cplx beta);

std::pair<FockOperator, FockOperator> stabilizers(const GkpCode& code, int dim);
std::pair<FockOperator, FockOperator> logicals(const GkpCode& code, int dim);

enum class Logical { zero, one, plus, minus };
Logical parse_logical(const std::string& s);
std::string to_string(Logical l);

// Smallest K with first omitted comb weight exp(-2 pi delta^2 (K+1)^2) < 1e-8.
int default_sum_cutoff(double delta);

// e^{-delta^2 n} applied to the ideal comb, using exact position-eigenstate
// Fock amplitudes, then normalized.
OscState finite_gkp_exact(Logical logical, double delta, int dim, Diagnostics* diag = nullptr);

// Weighted superposition of displaced squeezed vacua. sum_cutoff < 0 selects
// the default; a cutoff violating the tail bound is accepted with a warning.
OscState finite_gkp_superposition(Logical logical, double delta, int sum_cutoff, int dim,
                                  Diagnostics* diag = nullptr);

struct EffectiveSqueezing {
  double delta_x = 0.0;
  double delta_z = 0.0;
};

// |Tr(S rho)| values at or below this are reported as +infinity.
inline constexpr double kStabilizerFloor = 1e-250;

double effective_squeezing_from_trace(double abs_trace);
// Reduces to oscillator `mode` (default: coding mode, the last) first.
EffectiveSqueezing effective_squeezing(const OscState& state, const GkpCode& code = {}, int mode = -1);
double squeezing_db(double delta);

struct WignerGrid {
  std::vector<double> q;
  std::vector<double> p;
  RMatrix values;  // rows follow p, columns follow q
};

inline const char* kWignerConvention =
    "W(q,p) = (1/pi) Tr[rho D_c(a) Parity D_c(a)^dag], a = (q + i p)/sqrt(2), "
    "quadratures q = (a + a^dag)/sqrt(2), p = i(a^dag - a)/sqrt(2), integral over dq dp equals 1";

WignerGrid wigner(const OscState& state, const std::vector<double>& q, const std::vector<double>& p, int mode = -1);
// Uniform grid helper.
std::vector<double> linspace(double lo, double hi, int n);

}  // namespace gkp
