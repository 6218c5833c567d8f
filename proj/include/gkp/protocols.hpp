#pragma once

#include <string>
#include <vector>

#include "gkp/code.hpp"
#include "gkp/fock.hpp"

namespace gkp {

// Correction strengths in units where the conditional correction is
// D(+-i delta sqrt(pi)/4) and the pre-rotation D(-+i eps sqrt(pi)/4).
struct DeltaSchedule {
  std::vector<double> deltas;
  std::vector<double> epsilons;

  static DeltaSchedule preparation(std::vector<double> deltas);
  int rounds() const { return static_cast<int>(deltas.size()); }
  void validate() const;
};

// Operator-sum channel on one oscillator mode.
struct Channel {
  std::vector<Matrix> kraus;

  int dim() const { return kraus.empty() ? 0 : static_cast<int>(kraus.front().rows()); }
  OscState apply(const OscState& state) const;
};

Channel compose(const Channel& later, const Channel& earlier);
// Choi matrix sum_ij |i><j| (x) E(|i><j|) over the leading `input_levels`
// input states, normalized by input_levels.
Matrix choi_matrix(const Channel& ch, int input_levels);
// Frobenius norm of the Choi-matrix difference.
double choi_distance(const Channel& a, const Channel& b, int input_levels);

// One measurement-free round: ancilla |0> -> H -> [R_X(pi/2), CD(pre-rotation),
// R_X(-pi/2)] -> CD(+-half) -> R_X(-pi/2) -> CD(correction) -> reset. The
// conditional stabilizer displacement is symmetric (D(+half) on ancilla |0>,
// D(-half) on |1>), which keeps the comb centred without a separate X_L shift.
struct RoundSpec {
  double delta = 0.0;
  double epsilon = 0.0;
  double stabilizer_half = kSqrtPi;
  bool momentum = false;  // rotate every displacement by +90 degrees
};

Channel corrective_round_channel(const RoundSpec& spec, int dim);
// K0 = [D(sqrt(pi)) + D(-sqrt(pi))]/2 from H, CD(+-sqrt(pi)), H, project on |0>.
Matrix postselection_kraus(int dim);

// Closed-form cumulative channel after round 1, 2 or 3 (earlier rounds fixed at
// delta = 1 and delta = 1/2), built from displacement products.
Channel appendix_b_channel(int round, double delta, int dim);

struct RoundRecord {
  int round = 0;
  double delta = 0.0;
  double epsilon = 0.0;
  double delta_x = 0.0;
  double delta_z = 0.0;
  double trace = 1.0;
  double leakage = 0.0;
  double success_prob = 1.0;
  double mean_q = 0.0;
};

struct ChannelResult {
  OscState state;
  double success_prob = 1.0;
  std::vector<EffectiveSqueezing> squeezing_trace;  // after each round
  std::vector<RoundRecord> rounds;
  Diagnostics diag;
};

// S(-ln delta)|0>: q-squeezed vacuum with Delta_Z = delta.
OscState initial_squeezed_state(double delta_init, int dim);

ChannelResult postselect_prepare(double delta_init, int rounds, int dim);
// rounds < 0 runs the whole schedule.
ChannelResult corrective_prepare(double delta_init, const DeltaSchedule& schedule, int dim, int rounds = -1);
ChannelResult corrective_rounds(const OscState& initial, const DeltaSchedule& schedule, int rounds = -1);

struct OptimizeResult {
  DeltaSchedule schedule;
  std::vector<double> delta_x;  // after each round
  std::vector<bool> grid_fallback;
  Diagnostics diag;
  OscState state;
};

OptimizeResult optimize_deltas(double delta_init, int rounds, int dim, double tol = 1e-3);

enum class QecQuadrature { q, p, both };
QecQuadrature parse_quadrature(const std::string& s);

// One ideal error-correction round at envelope delta: eps = delta = sinh(delta^2)
// and stabilizer half-distance sqrt(pi) cosh(delta^2); `both` runs q then p.
ChannelResult qec_round(const OscState& state, double delta_envelope, QecQuadrature quadrature = QecQuadrature::both);

}  // namespace gkp
