// Acceptance run: one PASS/FAIL line per criterion, with measured values and wall time.
// Usage: gkp_acceptance [--report FILE] [criterion numbers...]   (default: all)
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gkp/code.hpp"
#include "gkp/physical.hpp"
#include "gkp/protocols.hpp"
#include "gkp/trap.hpp"

using namespace gkp;

namespace {

constexpr double kHz = 2.0 * kPi * 1e3;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records one check; the detail line keeps every measured value.
  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (detail.tellp() > 0) detail << "; ";
    detail << what << (ok ? "" : " [out of range]");
  }
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

bool within_rel(Outcome& o, const std::string& name, double value, double expected, double tol) {
  const bool ok = rel(value, expected) <= tol;
  o.check(ok, name + " " + fmt("%.5g", value) + " (" + fmt("%.4g", expected) + ")");
  return ok;
}

bool within_abs(Outcome& o, const std::string& name, double value, double expected, double tol) {
  const bool ok = std::abs(value - expected) <= tol;
  o.check(ok, name + " " + fmt("%.5g", value) + " (" + fmt("%.4g", expected) + " +- " + fmt("%.3g", tol) + ")");
  return ok;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Brute-force propagation: a coefficient function forces the stepping propagator.
OscState stepped(const OscState& s, const Matrix& h, double duration) {
  Hamiltonian ham(ModeShape::single(s.dim()));
  ham.add(FockOperator(h), [](double) { return 1.0; });
  EvolutionConfig cfg;
  cfg.max_step = 0.02;
  cfg.step_tol = 1e-12;
  return evolve(s, ham, 0.0, duration, cfg).state;
}

Matrix number_op(int dim) {
  Matrix n = Matrix::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) n(k, k) = k;
  return n;
}

OscState probe(int dim) {
  Vector v = Vector::Zero(dim);
  v(0) = 0.8;
  v(1) = cplx(0.3, 0.4);
  v(3) = cplx(0.0, -0.33);
  return OscState::pure(v.normalized(), ModeShape::single(dim));
}

// Fidelity error; with_phase also folds in the overlap phase, for forms that fix the global phase.
double state_error(const OscState& closed, const OscState& brute, bool with_phase = true) {
  const double infid = 1.0 - fidelity(closed, brute);
  if (!with_phase) return infid;
  const double phase = std::abs(std::arg(closed.amplitudes.dot(brute.amplitudes)));
  return std::max(infid, phase * phase);
}

double coding_alpha_d() {
  const LatticeRunConfig c;
  const OscillatorParams p = lattice_params(c.trap);
  const TuneoutForce f = tuneout_force(c.peak_u1, c.waist_w1);
  return displacement_amplitude(f.force, p.mass, coupling_corrected_frequencies(p, 3).z);
}

void table_regression(Outcome& o) {
  const OscillatorParams t = tweezer_params(TweezerSpec::reference());
  within_rel(o, "tweezer f_z/kHz", t.omega_z / kHz, 112, 0.02);
  within_rel(o, "f_x/kHz", t.omega_x / kHz, 240, 0.02);
  within_rel(o, "f_y/kHz", t.omega_y / kHz, 240, 0.02);
  within_rel(o, "eta_z", t.eta_z, 90e-5, 0.02);
  within_rel(o, "eps", t.eps_zx, 3.8e-3, 0.02);
  const OscillatorParams l = lattice_params(LatticeSpec::reference());
  within_rel(o, "lattice f_z/kHz", l.omega_z / kHz, 6, 0.02);
  within_rel(o, "f_x/kHz", l.omega_x / kHz, 362, 0.02);
  within_rel(o, "f_y/kHz", l.omega_y / kHz, 362, 0.02);
  within_rel(o, "eta_z", l.eta_z, 2.4e-5, 0.02);
  within_rel(o, "eps", l.eps_zx, 2.9e-3, 0.02);
}

void squeezing_anchors(Outcome& o) {
  const EffectiveSqueezing vac = effective_squeezing(vacuum(60));
  within_abs(o, "vacuum Dx", vac.delta_x, 1.0, 1e-6);
  within_abs(o, "vacuum Dz", vac.delta_z, 1.0, 1e-6);
  // q-compressed vacuum; the anti-squeezed value needs the long tail.
  const EffectiveSqueezing sq = effective_squeezing(squeezed_vacuum(cplx(-std::log(0.3), 0), 480));
  within_rel(o, "squeezed Dx", sq.delta_x, 1 / 0.3, 0.01);
  within_rel(o, "Dz", sq.delta_z, 0.3, 0.01);
}

void finite_code_equivalence(Outcome& o) {
  const int dim = 150;
  std::vector<double> ds, infid;
  for (double d = 0.2; d <= 0.4001; d += 0.05) {
    ds.push_back(d);
    infid.push_back(1.0 - fidelity(finite_gkp_exact(Logical::zero, d, dim), finite_gkp_superposition(Logical::zero, d, -1, dim)));
  }
  within_abs(o, "log-log slope", loglog_slope(ds, infid), 4.0, 0.7);
  o.detail << " (infidelity " << fmt("%.3g", infid.front()) << " .. " << fmt("%.3g", infid.back()) << ")";
}

void postselection(Outcome& o) {
  const int dim = 150;
  const ChannelResult r = postselect_prepare(0.3, 2, dim);
  const OscState s0 = initial_squeezed_state(0.3, dim);
  const Matrix comb = displacement(-2 * kSqrtPi, dim).entries + 2.0 * Matrix::Identity(dim, dim) +
                      displacement(2 * kSqrtPi, dim).entries;
  OscState target = OscState::pure(comb * s0.amplitudes, ModeShape::single(dim));
  target.normalize();
  const double f = fidelity(r.state, target);
  o.check(f >= 0.999, "fidelity " + fmt("%.8f", f) + " (>= 0.999)");
  o.detail << ", success probability " << fmt("%.6g", r.success_prob);
}

void delta_optimisation(Outcome& o) {
  const OptimizeResult r = optimize_deltas(0.3, 5, 150, 1e-3);
  const double expected[5] = {1.00, 0.50, 0.31, 0.217, 0.167};
  const double tol[5] = {0.05, 0.05, 0.03, 0.03, 0.03};
  for (int k = 0; k < 5; ++k) within_abs(o, "d" + std::to_string(k + 1), r.schedule.deltas.at(k), expected[k], tol[k]);
  o.detail << " (Dx after rounds";
  for (double d : r.delta_x) o.detail << " " << fmt("%.4f", d);
  o.detail << ")";
}

void round_channel_closed_forms(Outcome& o) {
  const int dim = 100, levels = 20;
  RoundSpec first;
  first.delta = 1.0;
  const Channel r1 = corrective_round_channel(first, dim);
  const double d1 = choi_distance(r1, appendix_b_channel(1, 1.0, dim), levels);
  o.check(d1 <= 1e-8, "round 1 Choi distance " + fmt("%.3g", d1));
  for (double d : {0.5, 0.31}) {
    RoundSpec second;
    second.delta = d;
    const Channel r2 = compose(corrective_round_channel(second, dim), r1);
    const double d2 = choi_distance(r2, appendix_b_channel(2, d, dim), levels);
    o.check(d2 <= 1e-8, "round 2 (delta " + fmt("%.2f", d) + ") " + fmt("%.3g", d2));
  }
}

void closed_form_unitaries(Outcome& o) {
  const int dim = 80;
  const double alpha = coding_alpha_d();
  const double t = solve_pulse_duration(kSqrtPi, alpha, 1.0);
  const Matrix pushed = number_op(dim) - alpha * quadratures(dim).first.entries;
  const OscState s0 = probe(dim);

  // Pulse written as displacement, rotation and phase.
  {
    const cplx shift = alpha * (1.0 - std::polar(1.0, -t));
    const Matrix u = std::polar(1.0, displacement_phase(alpha, 1.0, t)) * displacement(shift, dim).entries *
                     rotation(t, dim).entries;
    const double e = state_error(OscState::pure(u * s0.amplitudes, s0.shape), stepped(s0, pushed, t));
    o.check(e <= 1e-6, "pulse factorised " + fmt("%.2g", e));
  }
  {
    const OscState closed = apply(pulsed_displacement_unitary(alpha, 1.0, t, dim), s0);
    const double e = state_error(closed, stepped(s0, pushed, t));
    o.check(e <= 1e-6, "pulse unitary " + fmt("%.2g", e));
  }
  // Free evolution around the pulse, against the product and the single displacement.
  const double wait = kPi - 0.5 * t;
  OscState brute = stepped(s0, number_op(dim), wait);
  brute = stepped(brute, pushed, t);
  brute = stepped(brute, number_op(dim), wait);
  {
    const Matrix r = rotation(wait, dim).entries;
    const Matrix u = r * pulsed_displacement_unitary(alpha, 1.0, t, dim).entries * r;
    const double e = state_error(OscState::pure(u * s0.amplitudes, s0.shape), brute);
    o.check(e <= 1e-6, "free-pulse-free " + fmt("%.2g", e));
  }
  {
    const double e = state_error(apply(sandwiched_displacement(alpha, 1.0, t, dim), s0), brute);
    o.check(e <= 1e-6, "single-period displacement " + fmt("%.2g", e));
  }
  // Frequency quench, stepped in the basis of the original frequency; the closed form drops the zero-point phase.
  {
    const int qd = 120;
    const double wp = 1.0 / std::sqrt(10.0);
    const double duration = 0.5 * kPi / wp + 0.4;
    auto [q, p] = quadratures(qd + 2);
    const Matrix h = 0.5 * ((p.entries * p.entries).topLeftCorner(qd, qd) + wp * wp * (q.entries * q.entries).topLeftCorner(qd, qd));
    double worst = 0;
    for (const OscState& s : {vacuum(qd), probe(qd)})
      worst = std::max(worst, state_error(apply(quench_squeeze_unitary(1.0, wp, duration, qd), s), stepped(s, h, duration), false));
    o.check(worst <= 1e-6, "quench " + fmt("%.2g", worst));
  }
  o.detail << " (alpha_d " << fmt("%.5f", alpha) << ", pulse wt " << fmt("%.5f", t) << ")";
}

void pulse_durations(Outcome& o) {
  const double alpha = coding_alpha_d();
  auto cycles = [&](double distance) { return solve_pulse_duration(distance, alpha, 1.0) / (2 * kPi); };
  within_rel(o, "stabilizer", cycles(kSqrtPi), 0.1020, 0.02);
  // Both beams move their branch by delta sqrt(pi)/4.
  const double deltas[3] = {1.0, 0.5, 0.303};
  const double expected[3] = {0.0251, 0.0125, 0.0076};
  for (int k = 0; k < 3; ++k)
    within_rel(o, "delta" + std::to_string(k + 1), cycles(0.25 * deltas[k] * kSqrtPi), expected[k], 0.02);
  o.detail << " (alpha_d " << fmt("%.5f", alpha) << ")";
}

void lattice_preparation(Outcome& o) {
  const LatticeRunConfig c;
  const Trajectory tr = run_lattice_preparation(c);
  const double compressed = std::min(tr.squeeze_delta_x, tr.squeeze_delta_z);
  o.check(compressed >= 0.30 && compressed <= 0.35, "squeeze compressed D " + fmt("%.4f", compressed) + " in [0.30, 0.35]");
  o.check(tr.min_ground_pop >= 0.98, "min spectator ground pop " + fmt("%.4f", tr.min_ground_pop));
  const double expected[3] = {0.47, 0.33, 0.27};
  for (int k = 0; k < 3; ++k)
    within_abs(o, "round " + std::to_string(k + 1) + " Dx", k < static_cast<int>(tr.rounds.size()) ? tr.rounds[k].delta_x : NAN,
               expected[k], 0.05);
  o.detail << " (dims 8x8x36 / 3x3x36, hold " << fmt("%.2f", tr.hold_time * 1e6) << " us)";
}

void property_suites(Outcome& o) {
  const int dim = 150;
  double unit = 0;
  for (cplx a : {cplx(2 * kSqrtPi, 0), cplx(0, 2 * kSqrtPi), cplx(kSqrtPi, kSqrtPi), cplx(0, 0.25)})
    unit = std::max(unit, unitarity_defect(displacement(a, dim), 5));
  unit = std::max(unit, unitarity_defect(squeeze(cplx(-std::log(0.3), 0), dim), 5));
  unit = std::max(unit, unitarity_defect(rotation(0.37, dim), 5));
  o.check(unit <= 1e-8, "unitarity " + fmt("%.2g", unit));

  // Trace and Hermiticity through a full exact-potential run (single mode) and an ideal preparation.
  LatticeRunConfig c;
  c.squeeze_dims = {36};
  c.mixed_dims = {36};
  const Trajectory tr = run_lattice_preparation(c);
  const double ideal_trace = std::abs(corrective_prepare(0.3, DeltaSchedule::preparation({1.0, 0.5, 0.31}), dim).state.trace() - 1);
  o.check(std::max(tr.max_trace_error, ideal_trace) <= 1e-9,
          "trace " + fmt("%.2g", std::max(tr.max_trace_error, ideal_trace)));
  o.check(tr.max_hermiticity_error <= 1e-8, "Hermiticity " + fmt("%.2g", tr.max_hermiticity_error));

  double braid = 0;
  const cplx pairs[3][2] = {{{0.9, 0.4}, {-0.3, 1.2}}, {{2.0, 0.0}, {0.0, 2.0}}, {{-1.1, 1.4}, {1.3, -0.7}}};
  for (const auto& pr : pairs) {
    const Matrix ab = displacement(pr[0], 120).entries * displacement(pr[1], 120).entries;
    const Matrix ba = displacement(pr[1], 120).entries * displacement(pr[0], 120).entries;
    braid = std::max(braid, interior_distance(ab, std::polar(1.0, -braiding_phase(pr[0], pr[1])) * ba, 40));
  }
  o.check(braid <= 1e-6, "braiding " + fmt("%.2g", braid));

  auto [sx, sz] = stabilizers(GkpCode::square(), dim);
  const double comm = interior_distance(sx.entries * sz.entries - sz.entries * sx.entries, Matrix::Zero(dim, dim), 30);
  o.check(comm <= 1e-6, "stabilizer commutator " + fmt("%.2g", comm));

  const OscState code = finite_gkp_superposition(Logical::zero, 0.3, -1, dim);
  const EffectiveSqueezing before = effective_squeezing(code);
  const EffectiveSqueezing after = effective_squeezing(qec_round(code, 0.3).state);
  const double drift = std::max(after.delta_x - before.delta_x, after.delta_z - before.delta_z);
  o.check(drift <= 1e-3, "QEC drift dx " + fmt("%+.2g", after.delta_x - before.delta_x) + " dz " +
                             fmt("%+.2g", after.delta_z - before.delta_z) + " (no increase > 1e-3)");
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // <= 0: no runtime target
  std::function<void(Outcome&)> body;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "trap parameter table", 1, table_regression},
      {2, "effective-squeezing anchors", 5, squeezing_anchors},
      {3, "finite-code equivalence", 60, finite_code_equivalence},
      {4, "postselection comb", 0, postselection},
      {5, "greedy delta optimisation", 600, delta_optimisation},
      {6, "closed-form round channels", 0, round_channel_closed_forms},
      {7, "closed-form unitaries", 120, closed_form_unitaries},
      {8, "pulse durations", 0, pulse_durations},
      {9, "lattice preparation", 1800, lattice_preparation},
      {10, "property suites", 0, property_suites},
  };
  std::set<int> only;
  std::ofstream report;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--report" && i + 1 < argc) report.open(argv[++i]);
    else only.insert(std::atoi(argv[i]));
  }

  int failed = 0;
  for (const Criterion& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.body(o);
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0) o.check(secs < c.budget_s, "runtime " + fmt("%.2f", secs) + " s (< " + fmt("%g", c.budget_s) + " s)");
    else o.detail << "; runtime " << fmt("%.2f", secs) << " s";
    char head[128];
    std::snprintf(head, sizeof(head), "%s criterion %d (%s): ", o.pass ? "PASS" : "FAIL", c.id, c.name);
    const std::string line = head + o.detail.str();
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    if (report) report << line << std::endl;
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
