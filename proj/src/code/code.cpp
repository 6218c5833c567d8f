#include "gkp/code.hpp"

#include <cmath>
#include <sstream>

#include "gkp/quadrature.hpp"

namespace gkp {

GkpCode GkpCode::rectangular(double aspect) {
  require(aspect > 0 && std::isfinite(aspect), ErrorCode::invalid_parameters, "aspect ratio must be positive");
  GkpCode c;
  c.stab_x_amp = {2.0 * kSqrtPi * aspect, 0.0};
  c.stab_z_amp = {0.0, 2.0 * kSqrtPi / aspect};
  c.logical_x_amp = {kSqrtPi * aspect, 0.0};
  c.logical_z_amp = {0.0, kSqrtPi / aspect};
  return c;
}

void GkpCode::validate() const {
  const double a_stab = braiding_phase(stab_x_amp, stab_z_amp) / (2.0 * kPi);
  require(std::abs(a_stab - std::round(a_stab)) < 1e-9 && std::round(a_stab) != 0.0, ErrorCode::invalid_parameters,
          "stabilizer amplitudes do not commute");
  const double a_log = braiding_phase(logical_x_amp, logical_z_amp) / kPi;
  const double k = std::round(a_log);
  require(std::abs(a_log - k) < 1e-9 && std::fmod(std::abs(k), 2.0) == 1.0, ErrorCode::invalid_parameters,
          "logical amplitudes do not anticommute");
}

double braiding_phase(cplx a, cplx b) { return a.real() * b.imag() - a.imag() * b.real(); }

std::pair<FockOperator, FockOperator> stabilizers(const GkpCode& code, int dim) {
  return {displacement(code.stab_x_amp, dim), displacement(code.stab_z_amp, dim)};
}

std::pair<FockOperator, FockOperator> logicals(const GkpCode& code, int dim) {
  return {displacement(code.logical_x_amp, dim), displacement(code.logical_z_amp, dim)};
}

Logical parse_logical(const std::string& s) {
  if (s == "0" || s == "zero") return Logical::zero;
  if (s == "1" || s == "one") return Logical::one;
  if (s == "+" || s == "plus") return Logical::plus;
  if (s == "-" || s == "minus") return Logical::minus;
  fail(ErrorCode::invalid_parameters, "unknown logical state '" + s + "'");
}

std::string to_string(Logical l) {
  switch (l) {
    case Logical::zero: return "0";
    case Logical::one: return "1";
    case Logical::plus: return "+";
    case Logical::minus: return "-";
  }
  return "?";
}

int default_sum_cutoff(double delta) {
  require(delta > 0 && std::isfinite(delta), ErrorCode::invalid_parameters, "envelope delta must be positive");
  int k = 0;
  while (std::exp(-2.0 * kPi * delta * delta * (k + 1.0) * (k + 1.0)) >= 1e-8) ++k;
  return k;
}

namespace {

// Comb peak positions (units of the quadrature) and whether the comb lives in p.
struct Comb {
  double offset;  // 0 or sqrt(pi)
  bool momentum;
};

Comb comb_for(Logical l) {
  switch (l) {
    case Logical::zero: return {0.0, false};
    case Logical::one: return {kSqrtPi, false};
    case Logical::plus: return {0.0, true};
    case Logical::minus: return {kSqrtPi, true};
  }
  return {0.0, false};
}

void warn_leakage(const OscState& s, Diagnostics* diag, const char* what) {
  const double lk = leakage(s, std::min(5, s.dim() - 1));
  if (lk > 1e-6) {
    std::ostringstream os;
    os << what << ": population " << lk << " in the top Fock levels; increase dim";
    warn_to(diag, os.str());
  }
}

}  // namespace

OscState finite_gkp_exact(Logical logical, double delta, int dim, Diagnostics* diag) {
  require(delta > 0 && std::isfinite(delta), ErrorCode::invalid_parameters, "envelope delta must be positive");
  require(dim >= 2, ErrorCode::invalid_dimension, "dim must be at least 2");
  const Comb comb = comb_for(logical);
  const double reach = std::sqrt(2.0 * dim + 1.0) + 12.0;
  std::vector<double> peaks;
  for (int k = -static_cast<int>(reach / (2 * kSqrtPi)) - 2; k <= static_cast<int>(reach / (2 * kSqrtPi)) + 2; ++k) {
    const double s = 2.0 * k * kSqrtPi + comb.offset;
    if (std::abs(s) <= reach) peaks.push_back(s);
  }
  RVector x = Eigen::Map<RVector>(peaks.data(), peaks.size());
  const RMatrix psi = hermite_functions(x, dim);
  Vector c(dim);
  cplx phase = 1.0;
  for (int n = 0; n < dim; ++n) {
    c(n) = phase * std::exp(-delta * delta * n) * psi.col(n).sum();
    if (comb.momentum) phase *= cplx(0, 1);  // <n|p=s> = i^n psi_n(s)
  }
  OscState s = OscState::pure(std::move(c), ModeShape::single(dim));
  s.normalize();
  warn_leakage(s, diag, "finite_gkp_exact");
  return s;
}

OscState finite_gkp_superposition(Logical logical, double delta, int sum_cutoff, int dim, Diagnostics* diag) {
  require(delta > 0 && std::isfinite(delta), ErrorCode::invalid_parameters, "envelope delta must be positive");
  require(dim >= 2, ErrorCode::invalid_dimension, "dim must be at least 2");
  const int kdefault = default_sum_cutoff(delta);
  int kmax = sum_cutoff < 0 ? kdefault : sum_cutoff;
  if (kmax < kdefault) {
    std::ostringstream os;
    os << "sum cutoff K=" << kmax << " leaves first omitted weight "
       << std::exp(-2.0 * kPi * delta * delta * (kmax + 1.0) * (kmax + 1.0)) << " >= 1e-8";
    warn_to(diag, os.str());
  }
  const Comb comb = comb_for(logical);
  const double r = std::log(delta);  // squeeze magnitude; compressed along the comb quadrature
  const double width = delta / std::sqrt(2.0);

  // Peaks that cannot reach the retained levels are dropped.
  std::vector<double> peaks;
  const int lo = comb.offset > 0 ? -kmax - 1 : -kmax;
  for (int k = lo; k <= kmax; ++k) {
    const double s = 2.0 * k * kSqrtPi + comb.offset;
    const double inner = std::max(0.0, std::abs(s) - 8.0 * width);
    if (0.5 * inner * inner <= dim + 10.0) peaks.push_back(s);
  }
  double smax = 0.0;
  for (double s : peaks) smax = std::max(smax, std::abs(s));
  const int pad = std::max(100, static_cast<int>(std::ceil(0.5 * smax * smax + 8.0 * smax)));
  const int big = dim + pad;

  // Position comb: D(s) S(-ln delta)|0>; momentum comb: D(i s) S(ln delta)|0>.
  const cplx z = comb.momentum ? cplx(r, 0) : cplx(-r, 0);
  const Vector base = squeezed_vacuum(z, big).amplitudes;
  const cplx unit = comb.momentum ? cplx(0, 2.0 * kSqrtPi) : cplx(2.0 * kSqrtPi, 0);
  const cplx offset = comb.momentum ? cplx(0, comb.offset) : cplx(comb.offset, 0);
  const Matrix step = displacement(unit, big).entries;
  const Matrix step_back = step.adjoint();

  Vector start = base;
  if (comb.offset != 0.0) start = displacement(offset, big).entries * base;
  auto weight = [&](double s) { return std::exp(-0.5 * delta * delta * s * s); };

  Vector acc = Vector::Zero(big);
  auto in_set = [&](double s) {
    for (double p : peaks)
      if (std::abs(p - s) < 1e-9) return true;
    return false;
  };
  // Walk outward from the offset peak in both directions. Commuting collinear
  // displacements compose without phase.
  Vector fwd = start;
  for (int k = 0; k <= kmax + 1; ++k) {
    const double s = 2.0 * k * kSqrtPi + comb.offset;
    if (k > 0) fwd = step * fwd;
    if (in_set(s)) acc += weight(s) * fwd;
  }
  Vector bwd = start;
  for (int k = 1; k <= kmax + 1; ++k) {
    const double s = -2.0 * k * kSqrtPi + comb.offset;
    bwd = step_back * bwd;
    if (in_set(s)) acc += weight(s) * bwd;
  }
  OscState out = OscState::pure(Vector(acc.head(dim)), ModeShape::single(dim));
  out.normalize();
  warn_leakage(out, diag, "finite_gkp_superposition");
  return out;
}

double effective_squeezing_from_trace(double t) {
  if (!(t > kStabilizerFloor)) return std::numeric_limits<double>::infinity();
  return std::sqrt(std::max(0.0, std::log(1.0 / (t * t))) / (2.0 * kPi));
}

EffectiveSqueezing effective_squeezing(const OscState& state, const GkpCode& code, int mode) {
  const OscState single = reduce_to_mode(state, mode);
  EffectiveSqueezing e;
  e.delta_x = effective_squeezing_from_trace(std::abs(displacement_expectation(single, code.stab_x_amp)));
  e.delta_z = effective_squeezing_from_trace(std::abs(displacement_expectation(single, code.stab_z_amp)));
  return e;
}

double squeezing_db(double delta) {
  require(delta > 0, ErrorCode::invalid_parameters, "delta must be positive");
  return 10.0 * std::log10(1.0 / (delta * delta));
}

}  // namespace gkp
