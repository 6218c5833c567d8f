#include "gkp/protocols.hpp"

#include <cmath>
#include <sstream>

#include "gkp/optimize.hpp"

namespace gkp {

// Schedules and channels -----------------------------------------------------

DeltaSchedule DeltaSchedule::preparation(std::vector<double> deltas) {
  DeltaSchedule s;
  s.epsilons.assign(deltas.size(), 0.0);
  s.deltas = std::move(deltas);
  return s;
}

void DeltaSchedule::validate() const {
  require(deltas.size() == epsilons.size(), ErrorCode::invalid_parameters, "deltas and epsilons differ in length");
  for (double d : deltas)
    require(std::isfinite(d) && d > 0.0 && d <= 2.0, ErrorCode::invalid_parameters, "delta entries must lie in (0, 2]");
  for (double e : epsilons) require(std::isfinite(e), ErrorCode::invalid_parameters, "epsilon entries must be finite");
}

OscState Channel::apply(const OscState& state) const {
  require(!kraus.empty(), ErrorCode::invalid_input, "empty channel");
  require(state.dim() == dim() && !state.shape.ancilla && state.shape.modes.size() == 1, ErrorCode::invalid_input,
          "channel acts on a single mode of matching dimension");
  Matrix out = Matrix::Zero(dim(), dim());
  if (state.is_pure()) {
    for (const auto& k : kraus) {
      const Vector v = k * state.amplitudes;
      out.noalias() += v * v.adjoint();
    }
  } else {
    for (const auto& k : kraus) out.noalias() += k * state.density * k.adjoint();
  }
  OscState s = OscState::mixed(0.5 * (out + out.adjoint()), state.shape);
  s.norm_tol = state.norm_tol;
  return s;
}

Channel compose(const Channel& later, const Channel& earlier) {
  Channel c;
  for (const auto& a : later.kraus)
    for (const auto& b : earlier.kraus) c.kraus.push_back(a * b);
  return c;
}

Matrix choi_matrix(const Channel& ch, int input_levels) {
  const int d = ch.dim();
  require(input_levels >= 1 && input_levels <= d, ErrorCode::invalid_parameters, "bad Choi input subspace");
  // J = sum_k vec(K_k P) vec(K_k P)^dag with P the input projector.
  Matrix j = Matrix::Zero(static_cast<Eigen::Index>(input_levels) * d, static_cast<Eigen::Index>(input_levels) * d);
  for (const auto& k : ch.kraus) {
    Vector v(static_cast<Eigen::Index>(input_levels) * d);
    for (int i = 0; i < input_levels; ++i) v.segment(static_cast<Eigen::Index>(i) * d, d) = k.col(i);
    j.noalias() += v * v.adjoint();
  }
  return j / static_cast<double>(input_levels);
}

double choi_distance(const Channel& a, const Channel& b, int input_levels) {
  require(a.dim() == b.dim(), ErrorCode::invalid_input, "channels act on different dimensions");
  return (choi_matrix(a, input_levels) - choi_matrix(b, input_levels)).norm();
}

// Ancilla circuit ------------------------------------------------------------

namespace {

using Block = std::pair<Matrix, Matrix>;  // oscillator operators on ancilla |0>, |1>

Eigen::Matrix2cd rx(double theta) {
  Eigen::Matrix2cd m;
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  m << c, cplx(0, -s), cplx(0, -s), c;
  return m;
}

Eigen::Matrix2cd hadamard() {
  Eigen::Matrix2cd m;
  const double r = 1.0 / std::sqrt(2.0);
  m << r, r, r, -r;
  return m;
}

void gate(Block& b, const Eigen::Matrix2cd& g) {
  Matrix m0 = g(0, 0) * b.first + g(0, 1) * b.second;
  Matrix m1 = g(1, 0) * b.first + g(1, 1) * b.second;
  b.first = std::move(m0);
  b.second = std::move(m1);
}

// D(beta) on the |0> branch and D(-beta) on |1>.
void conditional(Block& b, cplx beta, int dim) {
  if (beta == cplx(0)) return;
  b.first = displacement(beta, dim).entries * b.first;
  b.second = displacement(-beta, dim).entries * b.second;
}

}  // namespace

Channel corrective_round_channel(const RoundSpec& spec, int dim) {
  require(dim >= 2, ErrorCode::invalid_dimension, "dim must be at least 2");
  const cplx turn = spec.momentum ? cplx(0, 1) : cplx(1, 0);
  Block b{Matrix::Identity(dim, dim), Matrix::Zero(dim, dim)};
  gate(b, hadamard());
  if (spec.epsilon != 0.0) {
    gate(b, rx(kPi / 2));
    // Pre-rotation biased toward the origin.
    conditional(b, turn * cplx(0, -spec.epsilon * kSqrtPi / 4), dim);
    gate(b, rx(-kPi / 2));
  }
  conditional(b, turn * spec.stabilizer_half, dim);
  gate(b, rx(-kPi / 2));
  conditional(b, turn * cplx(0, spec.delta * kSqrtPi / 4), dim);
  return Channel{{b.first, b.second}};
}

Matrix postselection_kraus(int dim) {
  Block b{Matrix::Identity(dim, dim), Matrix::Zero(dim, dim)};
  gate(b, hadamard());
  conditional(b, kSqrtPi, dim);
  gate(b, hadamard());
  return b.first;
}

Channel appendix_b_channel(int round, double delta, int dim) {
  require(round >= 1 && round <= 3, ErrorCode::invalid_parameters, "closed forms exist for rounds 1-3");
  const cplx i(0, 1);
  auto sgn = [](double xi) { return std::polar(1.0, kPi * xi); };          // (-1)^xi
  auto S = [&](double xi) { return displacement(2.0 * xi * kSqrtPi, dim).entries; };
  auto C = [&](double xi) { return displacement(cplx(0, xi * kSqrtPi / 2), dim).entries; };
  const double d = delta;

  std::vector<Matrix> last;  // Kraus pair of the newest round, C factor included
  if (round == 1) {
    last.push_back((sgn(d / 4) * S(0.5) + i * sgn(-d / 4) * S(-0.5)) / 2.0 * C(d / 2));
    last.push_back((sgn(-d / 4) * S(0.5) - i * sgn(d / 4) * S(-0.5)) / 2.0 * C(-d / 2));
    return Channel{last};
  }
  const Matrix id = Matrix::Identity(dim, dim);
  if (round == 2) {
    last.push_back((sgn(d / 2) * S(1) + (1.0 + i) * id + i * sgn(-d / 2) * S(-1)) / 4.0 * C(d / 2));
    last.push_back((sgn(-d / 2) * S(1) + (1.0 - i) * id - i * sgn(d / 2) * S(-1)) / 4.0 * C(-d / 2));
  } else {
    const double r2 = std::sqrt(2.0);
    last.push_back((sgn(0.75 * d) * S(1.5) + (i + r2) * sgn(0.25 * d) * S(0.5) +
                    (1.0 + i * r2) * sgn(-0.25 * d) * S(-0.5) + i * sgn(-0.75 * d) * S(-1.5)) /
                   8.0 * C(d / 2));
    last.push_back((sgn(-0.75 * d) * S(1.5) + (-i + r2) * sgn(-0.25 * d) * S(0.5) +
                    (1.0 - i * r2) * sgn(0.25 * d) * S(-0.5) - i * sgn(0.75 * d) * S(-1.5)) /
                   8.0 * C(-d / 2));
  }
  // Residual momentum-kick mixtures left by the decoupled earlier rounds.
  Channel earlier{{sgn(0.25) * C(0.5), sgn(-0.25) * C(-0.5)}};
  if (round == 3) earlier = compose(Channel{{sgn(0.25) * C(0.25), sgn(-0.25) * C(-0.25)}}, earlier);
  return compose(Channel{last}, earlier);
}

// Preparation ----------------------------------------------------------------

OscState initial_squeezed_state(double delta_init, int dim) {
  require(delta_init > 0 && std::isfinite(delta_init), ErrorCode::invalid_parameters, "delta_init must be positive");
  return squeezed_vacuum(cplx(-std::log(delta_init), 0), dim);
}

namespace {

RoundRecord record_for(const OscState& s, int round, double delta, double eps, double success) {
  RoundRecord r;
  r.round = round;
  r.delta = delta;
  r.epsilon = eps;
  const auto e = effective_squeezing(s);
  r.delta_x = e.delta_x;
  r.delta_z = e.delta_z;
  r.trace = s.trace();
  r.leakage = leakage(s, std::min(5, s.dim() - 1));
  r.success_prob = success;
  r.mean_q = expectation(s, quadratures(s.dim()).first).real();
  return r;
}

void check_leakage(const RoundRecord& r, Diagnostics& diag) {
  if (r.leakage > 1e-5) {
    std::ostringstream os;
    os << "round " << r.round << ": truncation leakage " << r.leakage;
    diag.warn(os.str());
  }
}

}  // namespace

ChannelResult postselect_prepare(double delta_init, int rounds, int dim) {
  require(rounds >= 0, ErrorCode::invalid_parameters, "rounds must be non-negative");
  ChannelResult res;
  OscState s = initial_squeezed_state(delta_init, dim);
  const Matrix k0 = rounds > 0 ? postselection_kraus(dim) : Matrix();
  for (int k = 1; k <= rounds; ++k) {
    Vector v = k0 * s.amplitudes;
    const double p = v.squaredNorm();
    require(p > 1e-14, ErrorCode::degenerate_postselection, "postselected branch has vanishing norm");
    s.amplitudes = v / std::sqrt(p);
    res.success_prob *= p;
    auto rec = record_for(s, k, 0.0, 0.0, p);
    check_leakage(rec, res.diag);
    res.squeezing_trace.push_back({rec.delta_x, rec.delta_z});
    res.rounds.push_back(rec);
  }
  res.state = s;
  return res;
}

ChannelResult corrective_rounds(const OscState& initial, const DeltaSchedule& schedule, int rounds) {
  schedule.validate();
  if (rounds < 0) rounds = schedule.rounds();
  require(rounds <= schedule.rounds(), ErrorCode::invalid_parameters, "schedule shorter than requested rounds");
  require(!initial.shape.ancilla && initial.shape.modes.size() == 1, ErrorCode::invalid_input,
          "corrective rounds act on a single-mode state");
  ChannelResult res;
  OscState s = initial;
  for (int k = 0; k < rounds; ++k) {
    RoundSpec spec;
    spec.delta = schedule.deltas[k];
    spec.epsilon = schedule.epsilons[k];
    s = corrective_round_channel(spec, s.dim()).apply(s);
    auto rec = record_for(s, k + 1, spec.delta, spec.epsilon, 1.0);
    check_leakage(rec, res.diag);
    res.squeezing_trace.push_back({rec.delta_x, rec.delta_z});
    res.rounds.push_back(rec);
  }
  res.state = s;
  return res;
}

ChannelResult corrective_prepare(double delta_init, const DeltaSchedule& schedule, int dim, int rounds) {
  return corrective_rounds(initial_squeezed_state(delta_init, dim), schedule, rounds);
}

OptimizeResult optimize_deltas(double delta_init, int rounds, int dim, double tol) {
  require(rounds >= 1, ErrorCode::invalid_parameters, "need at least one round to optimize");
  OptimizeResult out;
  OscState s = initial_squeezed_state(delta_init, dim);
  for (int k = 0; k < rounds; ++k) {
    auto objective = [&](double d) {
      RoundSpec spec;
      spec.delta = d;
      return effective_squeezing(corrective_round_channel(spec, dim).apply(s)).delta_x;
    };
    const auto m = golden_section_minimize(objective, 1e-3, 2.0, tol);
    if (m.grid_fallback) out.diag.warn("round " + std::to_string(k + 1) + ": " + m.diagnostic);
    RoundSpec spec;
    spec.delta = m.x;
    s = corrective_round_channel(spec, dim).apply(s);
    out.schedule.deltas.push_back(m.x);
    out.schedule.epsilons.push_back(0.0);
    out.delta_x.push_back(m.fx);
    out.grid_fallback.push_back(m.grid_fallback);
  }
  out.state = s;
  return out;
}

QecQuadrature parse_quadrature(const std::string& s) {
  if (s == "q") return QecQuadrature::q;
  if (s == "p") return QecQuadrature::p;
  if (s == "both") return QecQuadrature::both;
  fail(ErrorCode::invalid_parameters, "quadrature must be q, p or both, got '" + s + "'");
}

ChannelResult qec_round(const OscState& state, double delta_envelope, QecQuadrature quadrature) {
  require(delta_envelope >= 0 && std::isfinite(delta_envelope), ErrorCode::invalid_parameters,
          "envelope delta must be non-negative");
  const OscState single = reduce_to_mode(state);
  const double d2 = delta_envelope * delta_envelope;
  RoundSpec spec;
  spec.delta = std::sinh(d2);
  spec.epsilon = std::sinh(d2);
  spec.stabilizer_half = kSqrtPi * std::cosh(d2);
  ChannelResult res;
  OscState s = single;
  int round = 0;
  for (bool mom : {false, true}) {
    if ((mom && quadrature == QecQuadrature::q) || (!mom && quadrature == QecQuadrature::p)) continue;
    spec.momentum = mom;
    s = corrective_round_channel(spec, s.dim()).apply(s);
    auto rec = record_for(s, ++round, spec.delta, spec.epsilon, 1.0);
    check_leakage(rec, res.diag);
    res.squeezing_trace.push_back({rec.delta_x, rec.delta_z});
    res.rounds.push_back(rec);
  }
  res.state = s;
  return res;
}

}  // namespace gkp
