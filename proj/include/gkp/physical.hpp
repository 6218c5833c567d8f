#pragma once

#include <string>
#include <vector>

#include "gkp/code.hpp"
#include "gkp/evolve.hpp"
#include "gkp/protocols.hpp"
#include "gkp/trap.hpp"

namespace gkp {

// Closed-form unitaries --------------------------------------------------------

// Evolution for time T under the frequency-jumped oscillator (omega -> omega_prime),
// S(-r) S(r e^{-2i omega' T}) e^{-i omega' T n}, r = ln(omega/omega_prime)/2.
FockOperator quench_squeeze_unitary(double omega, double omega_prime, double duration, int dim);

struct TuneoutForce {
  double force = 0.0;         // N, at beam offset w1/2
  double energy_shift = 0.0;  // J, potential lowering at the atom
};
TuneoutForce tuneout_force(double peak_u1, double waist_w1);

double displacement_amplitude(double force, double mass, double omega);
// theta(t) = alpha_d^2 (omega t - sin(omega t)) / 2
double displacement_phase(double alpha_d, double omega, double t);

// D(alpha_d (1 - e^{-i omega t})) R(omega t) e^{i theta(t)} with R(phi) = e^{-i phi n}.
FockOperator pulsed_displacement_unitary(double alpha_d, double omega, double t, int dim);
// R(pi - omega t/2) U(t) R(pi - omega t/2) = D(-2i alpha_d sin(omega t/2)) e^{i theta(t)}.
FockOperator sandwiched_displacement(double alpha_d, double omega, double t, int dim);
// Smallest t > 0 with 2 alpha_d sin(omega t / 2) = target.
double solve_pulse_duration(double target_distance, double alpha_d, double omega);

// Pulse schedule -----------------------------------------------------------------

enum class SegmentKind { depth_ramp, idle, tuneout_pulse, ancilla_rotation, ancilla_reset };
std::string to_string(SegmentKind k);

// Beam A pushes toward +z and only acts on ancilla |0>; beam B pushes toward
// -z and only acts on |1>.
enum BeamMask : int { kNoBeam = 0, kBeamA = 1, kBeamB = 2 };

struct PulseSegment {
  SegmentKind kind = SegmentKind::idle;
  double start = 0.0;     // s
  double duration = 0.0;  // s
  // depth_ramp
  double from_factor = 1.0;
  double target_factor = 1.0;
  // tuneout_pulse
  int beams = kNoBeam;
  double peak_u1 = 0.0;
  double waist_w1 = 0.0;
  double offset = 0.0;
  double ancilla_phase = 0.0;  // phase of each driven branch; a single-beam pulse undoes it with a qubit-only rotation
  // ancilla_rotation: "h", "x"
  std::string axis;
  double angle = 0.0;
  double rabi = 0.0;
  std::string label;

  void validate() const;
};

struct PulseSchedule {
  std::vector<PulseSegment> segments;
  double total_duration() const;
  void validate() const;
};

// Lattice preparation ---------------------------------------------------------------

enum class PotentialModel { exact, expansion };
enum class DisplacementMode { exact_beam, closed_form };
PotentialModel parse_potential_model(const std::string& s);
DisplacementMode parse_displacement_mode(const std::string& s);
std::string to_string(PotentialModel m);
std::string to_string(DisplacementMode m);

struct LatticeRunConfig {
  LatticeSpec trap = LatticeSpec::reference();
  PotentialModel potential = PotentialModel::exact;
  DisplacementMode displacement = DisplacementMode::exact_beam;
  bool harmonic = false;  // zero anharmonicities and couplings (expansion model only)

  // Modes ordered (x, y, z), (x, z) or (z); the coding mode is last.
  std::vector<int> squeeze_dims{8, 8, 36};
  std::vector<int> mixed_dims{3, 3, 36};

  double depth_factor = 0.1;
  double ramp_time = 20e-6;
  double hold_time = -1.0;  // < 0: minimise the compressed spread in a z-only model

  double peak_u1 = constants::hbar * 2.0 * kPi * 2e6;
  double waist_w1 = 20e-6;

  DeltaSchedule schedule = DeltaSchedule::preparation({1.0, 0.5, 0.303});
  double rabi = 2.0 * kPi * 100e3;  // ancilla gates consume (angle / rabi) of idle time
  double reset_time = 5e-6;

  double sample_squeeze = 1e-6;
  double sample_mixed = 5e-6;
  EvolutionConfig evolution{};

  void validate() const;
};

struct TrajectoryPoint {
  double time = 0.0;
  double delta_x = 0.0;
  double delta_z = 0.0;
  double ground_pop = 1.0;  // spectators in their ground state
  double leakage = 0.0;
  std::string stage;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<double> delta_x;
  std::vector<double> delta_z;
  std::vector<double> spectator_ground_pop;
  std::vector<double> leakage;
  std::vector<std::string> stage;
  OscState final_state;  // ancilla-free, coding mode reduced, code frame
  OscState post_squeeze_state;
  std::vector<RoundRecord> rounds;
  std::vector<OscState> round_states;  // coding mode, code frame, after each reset
  PulseSchedule schedule;
  Diagnostics diag;

  double hold_time = 0.0;
  double alpha_d = 0.0;
  double basis_omega_z = 0.0;
  double frame_phase_end = 0.0;  // code-frame phase at the end of the squeeze
  double squeeze_delta_x = 0.0;
  double squeeze_delta_z = 0.0;
  double min_ground_pop = 1.0;
  double max_leakage = 0.0;
  double max_trace_error = 0.0;
  double max_hermiticity_error = 0.0;

  void push(const TrajectoryPoint& p);
  int size() const { return static_cast<int>(times.size()); }
};

// Squeeze stage only: pure-state evolution through ramp down, hold, ramp up.
struct QuenchResult {
  Trajectory trajectory;
  OscState state;  // full multimode pure state, lab frame
};
QuenchResult simulate_quench(const LatticeRunConfig& config);

// Hold time minimising the compressed spread for a z-only model.
double optimize_hold_time(const LatticeRunConfig& config);

Trajectory run_lattice_preparation(const LatticeRunConfig& config);

// Code frame: rho_code = R(phi)^dag rho R(phi), R(phi) = e^{-i phi n}.
OscState to_code_frame(const OscState& single_mode, double phi);
// Phase phi that puts the minor axis of the state's covariance along q.
double compressing_frame_phase(const OscState& single_mode);

}  // namespace gkp
