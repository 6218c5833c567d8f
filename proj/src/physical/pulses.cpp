#include <cmath>

#include "gkp/physical.hpp"

namespace gkp {

namespace {

// Closed forms are built on a padded space and cropped, so the retained block
// is free of truncated-exponential artifacts.
int padding_for(double reach) { return 60 + static_cast<int>(std::ceil(reach * reach)); }

Matrix crop(const Matrix& m, int dim) { return m.topLeftCorner(dim, dim); }

void require_dim(int dim) { require(dim >= 1, ErrorCode::invalid_dimension, "dim must be positive"); }

}  // namespace

FockOperator quench_squeeze_unitary(double omega, double omega_prime, double duration, int dim) {
  require_dim(dim);
  require(omega > 0 && omega_prime > 0, ErrorCode::invalid_parameters, "frequencies must be positive");
  require(std::isfinite(duration), ErrorCode::invalid_parameters, "duration must be finite");
  const double r = 0.5 * std::log(omega / omega_prime);
  const int big = dim + padding_for(4.0 * std::abs(r) + 2.0) + 2 * dim;
  const Matrix s1 = squeeze(cplx(-r, 0.0), big).entries;
  const Matrix s2 = squeeze(std::polar(r, -2.0 * omega_prime * duration), big).entries;
  const Matrix rot = rotation(omega_prime * duration, big).entries;
  return FockOperator(crop(s1 * s2 * rot, dim));
}

TuneoutForce tuneout_force(double peak_u1, double waist_w1) {
  require(peak_u1 > 0 && waist_w1 > 0 && std::isfinite(peak_u1) && std::isfinite(waist_w1),
          ErrorCode::invalid_parameters, "tune-out beam needs positive depth and waist");
  const double e = std::exp(-0.5);
  return TuneoutForce{2.0 * e * peak_u1 / waist_w1, e * peak_u1};
}

double displacement_amplitude(double force, double mass, double omega) {
  require(force >= 0 && mass > 0 && omega > 0 && std::isfinite(force), ErrorCode::invalid_parameters,
          "displacement amplitude needs non-negative force and positive mass and frequency");
  return force / std::sqrt(constants::hbar * mass * omega * omega * omega);
}

double displacement_phase(double alpha_d, double omega, double t) {
  const double wt = omega * t;
  return 0.5 * alpha_d * alpha_d * (wt - std::sin(wt));
}

FockOperator pulsed_displacement_unitary(double alpha_d, double omega, double t, int dim) {
  require_dim(dim);
  require(omega > 0 && std::isfinite(alpha_d) && std::isfinite(t), ErrorCode::invalid_parameters,
          "pulse parameters must be finite with positive frequency");
  const cplx beta = alpha_d * (1.0 - std::polar(1.0, -omega * t));
  const Matrix d = displacement_padded(beta, dim, padding_for(std::abs(beta) + 4.0)).entries;
  const cplx phase = std::polar(1.0, displacement_phase(alpha_d, omega, t));
  return FockOperator(phase * d * rotation(omega * t, dim).entries);
}

FockOperator sandwiched_displacement(double alpha_d, double omega, double t, int dim) {
  require_dim(dim);
  require(omega > 0 && std::isfinite(alpha_d) && std::isfinite(t), ErrorCode::invalid_parameters,
          "pulse parameters must be finite with positive frequency");
  const cplx beta(0.0, -2.0 * alpha_d * std::sin(0.5 * omega * t));
  const Matrix d = displacement_padded(beta, dim, padding_for(std::abs(beta) + 4.0)).entries;
  return FockOperator(std::polar(1.0, displacement_phase(alpha_d, omega, t)) * d);
}

double solve_pulse_duration(double target_distance, double alpha_d, double omega) {
  require(target_distance >= 0 && alpha_d > 0 && omega > 0, ErrorCode::invalid_parameters,
          "pulse duration needs non-negative distance and positive amplitude and frequency");
  const double ratio = target_distance / (2.0 * alpha_d);
  require(ratio <= 1.0 + 1e-12, ErrorCode::invalid_parameters,
          "target displacement exceeds the reachable 2 alpha_d");
  return 2.0 / omega * std::asin(std::min(ratio, 1.0));
}

// Schedule types -----------------------------------------------------------------

std::string to_string(SegmentKind k) {
  switch (k) {
    case SegmentKind::depth_ramp: return "depth_ramp";
    case SegmentKind::idle: return "idle";
    case SegmentKind::tuneout_pulse: return "tuneout_pulse";
    case SegmentKind::ancilla_rotation: return "ancilla_rotation";
    case SegmentKind::ancilla_reset: return "ancilla_reset";
  }
  return "unknown";
}

void PulseSegment::validate() const {
  require(std::isfinite(duration) && duration >= 0, ErrorCode::invalid_parameters, "segment duration must be >= 0");
  if (kind == SegmentKind::depth_ramp) {
    require(target_factor > 0 && target_factor <= 1 && from_factor > 0 && from_factor <= 1,
            ErrorCode::invalid_parameters, "depth factors must lie in (0, 1]");
  }
  if (kind == SegmentKind::tuneout_pulse) {
    require(beams != kNoBeam, ErrorCode::invalid_parameters, "tune-out pulse without a beam");
    require(offset > 0 && peak_u1 > 0 && waist_w1 > 0, ErrorCode::invalid_parameters,
            "tune-out pulse needs positive depth, waist and offset");
  }
  if (kind == SegmentKind::ancilla_rotation) {
    require(rabi > 0, ErrorCode::invalid_parameters, "ancilla rotation needs a positive Rabi frequency");
  }
}

double PulseSchedule::total_duration() const {
  double t = 0.0;
  for (const auto& s : segments) t += s.duration;
  return t;
}

void PulseSchedule::validate() const {
  for (const auto& s : segments) s.validate();
  require(std::isfinite(total_duration()), ErrorCode::invalid_parameters, "schedule duration must be finite");
}

PotentialModel parse_potential_model(const std::string& s) {
  if (s == "exact") return PotentialModel::exact;
  if (s == "expansion") return PotentialModel::expansion;
  fail(ErrorCode::invalid_parameters, "unknown potential model '" + s + "' (exact, expansion)");
}

DisplacementMode parse_displacement_mode(const std::string& s) {
  if (s == "exact-beam" || s == "exact_beam") return DisplacementMode::exact_beam;
  if (s == "closed-form" || s == "closed_form") return DisplacementMode::closed_form;
  fail(ErrorCode::invalid_parameters, "unknown displacement mode '" + s + "' (exact-beam, closed-form)");
}

std::string to_string(PotentialModel m) { return m == PotentialModel::exact ? "exact" : "expansion"; }
std::string to_string(DisplacementMode m) {
  return m == DisplacementMode::exact_beam ? "exact-beam" : "closed-form";
}

// Frames -------------------------------------------------------------------------

OscState to_code_frame(const OscState& single_mode, double phi) {
  require(!single_mode.shape.ancilla && single_mode.shape.modes.size() == 1, ErrorCode::invalid_input,
          "code frame applies to a single mode");
  const int d = single_mode.dim();
  Vector ph(d);
  for (int n = 0; n < d; ++n) ph(n) = std::polar(1.0, phi * n);
  if (single_mode.is_pure()) {
    OscState s = OscState::pure(ph.cwiseProduct(single_mode.amplitudes), single_mode.shape);
    s.norm_tol = single_mode.norm_tol;
    return s;
  }
  Matrix rho = ph.asDiagonal() * single_mode.density * ph.conjugate().asDiagonal();
  OscState s = OscState::mixed(std::move(rho), single_mode.shape);
  s.norm_tol = single_mode.norm_tol;
  return s;
}

double compressing_frame_phase(const OscState& single_mode) {
  require(!single_mode.shape.ancilla && single_mode.shape.modes.size() == 1, ErrorCode::invalid_input,
          "frame phase applies to a single mode");
  const int d = single_mode.dim();
  const auto [qb, pb] = quadratures(d + 2);
  auto cropped = [&](const Matrix& m) { return FockOperator(Matrix(m.topLeftCorner(d, d))); };
  const Matrix& q = qb.entries;
  const Matrix& p = pb.entries;
  const double mq = expectation(single_mode, cropped(q)).real();
  const double mp = expectation(single_mode, cropped(p)).real();
  const double vqq = expectation(single_mode, cropped(q * q)).real() - mq * mq;
  const double vpp = expectation(single_mode, cropped(p * p)).real() - mp * mp;
  const double vqp = 0.5 * expectation(single_mode, cropped(q * p + p * q)).real() - mq * mp;
  // Major axis at angle psi in the (q, p) plane; the minor axis is psi + pi/2.
  const double psi = 0.5 * std::atan2(2.0 * vqp, vqq - vpp);
  const double minor = psi + 0.5 * kPi;
  // A feature at code angle c sits at lab angle c - phi.
  return std::remainder(-minor, kPi);
}

}  // namespace gkp
