#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "gkp/optimize.hpp"
#include "gkp/physical.hpp"
#include "gkp/quadrature.hpp"

namespace gkp {

void LatticeRunConfig::validate() const {
  trap.validate();
  auto check_dims = [](const std::vector<int>& d, const char* what) {
    require(d.size() >= 1 && d.size() <= 3, ErrorCode::invalid_dimension, std::string(what) + " needs 1 to 3 modes");
    for (int v : d) require(v >= 2 && v <= 400, ErrorCode::invalid_dimension, std::string(what) + " entries must lie in [2, 400]");
    require(d.back() >= 8, ErrorCode::invalid_dimension, std::string(what) + ": coding mode needs at least 8 levels");
  };
  check_dims(squeeze_dims, "squeeze_dims");
  check_dims(mixed_dims, "mixed_dims");
  require(squeeze_dims.size() == mixed_dims.size(), ErrorCode::invalid_dimension,
          "squeeze and mixed stages must use the same modes");
  for (size_t i = 0; i < mixed_dims.size(); ++i)
    require(mixed_dims[i] <= squeeze_dims[i], ErrorCode::invalid_dimension,
            "mixed-stage cutoffs cannot exceed squeeze-stage cutoffs");
  require(depth_factor > 0 && depth_factor <= 1, ErrorCode::invalid_parameters, "depth_factor must lie in (0, 1]");
  require(std::isfinite(ramp_time) && ramp_time >= 0, ErrorCode::invalid_parameters, "ramp_time must be >= 0");
  require(std::isfinite(hold_time), ErrorCode::invalid_parameters, "hold_time must be finite");
  require(peak_u1 > 0 && waist_w1 > 0, ErrorCode::invalid_parameters, "tune-out beam needs positive depth and waist");
  schedule.validate();
  require(rabi > 0 && std::isfinite(rabi), ErrorCode::invalid_parameters, "rabi must be positive");
  require(std::isfinite(reset_time) && reset_time >= 0, ErrorCode::invalid_parameters, "reset_time must be >= 0");
  require(sample_squeeze > 0 && sample_mixed > 0, ErrorCode::invalid_parameters, "sampling intervals must be positive");
  require(!(harmonic && potential == PotentialModel::exact), ErrorCode::invalid_parameters,
          "the harmonic switch needs the expansion potential model");
  evolution.validate();
}

void Trajectory::push(const TrajectoryPoint& p) {
  times.push_back(p.time);
  delta_x.push_back(p.delta_x);
  delta_z.push_back(p.delta_z);
  spectator_ground_pop.push_back(p.ground_pop);
  leakage.push_back(p.leakage);
  stage.push_back(p.stage);
  min_ground_pop = std::min(min_ground_pop, p.ground_pop);
  max_leakage = std::max(max_leakage, p.leakage);
}

namespace {

// Mode roles in a dims vector ordered (x, y, z), (x, z) or (z).
struct Roles {
  int n = 1;
  int ix = -1, iy = -1, iz = 0;
};

Roles roles_for(int n) {
  Roles r;
  r.n = n;
  r.iz = n - 1;
  if (n >= 2) r.ix = 0;
  if (n == 3) r.iy = 1;
  return r;
}

OscillatorParams run_params(const LatticeRunConfig& cfg) {
  OscillatorParams p = lattice_params(cfg.trap);
  if (cfg.harmonic) p.eta_x = p.eta_y = p.eta_z = p.eps_zx = p.eps_zy = p.eps_xy = 0.0;
  return p;
}

// Basis frequencies per role (coupling-corrected for the modes present).
struct Basis {
  double w[3] = {0, 0, 0};  // indexed by role: 0 = x, 1 = y, 2 = z
};

Basis basis_for(const OscillatorParams& p, int modes) {
  const auto b = coupling_corrected_frequencies(p, modes);
  Basis out;
  out.w[0] = b.x;
  out.w[1] = b.y;
  out.w[2] = b.z;
  return out;
}

int role_of(const Roles& r, int mode) {
  if (mode == r.iz) return 2;
  if (mode == r.ix) return 0;
  return 1;
}

Matrix number_half(int d) {
  Matrix m = Matrix::Zero(d, d);
  for (int n = 0; n < d; ++n) m(n, n) = n + 0.5;
  return m;
}

// Trap Hamiltonian split into kinetic terms and a potential that scales with
// the depth factor, both as product terms in units of rad/s.
struct TrapTerms {
  std::vector<KronOperator> kinetic;
  std::vector<KronOperator> potential;  // at full depth, offset so V(0) = 0
  // Per-mode kinetic and potential with the other modes at the trap centre.
  std::vector<Matrix> kinetic_1d;
  std::vector<Matrix> potential_1d;
};

TrapTerms trap_terms(const LatticeRunConfig& cfg, const OscillatorParams& p, const Basis& basis,
                     const ModeShape& shape) {
  const Roles r = roles_for(static_cast<int>(shape.modes.size()));
  const double hbar = constants::hbar;
  TrapTerms t;
  auto single = [&](int mode, Matrix m) {
    KronOperator op(shape);
    op.set(shape.mode_subsystem(mode), std::move(m));
    return op;
  };
  for (int mode = 0; mode < r.n; ++mode) {
    const int d = shape.modes[mode];
    const double wb = basis.w[role_of(r, mode)];
    // p^2 = 2(n + 1/2) - q^2 on exact matrix elements.
    const Matrix p2 = 2.0 * number_half(d) - quadrature_power(2, d);
    t.kinetic_1d.push_back(0.5 * wb * p2);
    t.kinetic.push_back(single(mode, t.kinetic_1d.back()));
  }

  if (cfg.potential == PotentialModel::exact) {
    const LatticeFactors f = lattice_factors(cfg.trap);
    std::vector<Matrix> factor(r.n);
    for (int mode = 0; mode < r.n; ++mode) {
      const int d = shape.modes[mode];
      const int role = role_of(r, mode);
      const double len = std::sqrt(hbar / (p.mass * basis.w[role]));
      std::function<cplx(double)> fn;
      if (role == 2) fn = [&](double q) { const double z = len * q; return cplx(std::exp(-2.0 * z * z / (f.waist * f.waist))); };
      else if (role == 0) fn = [&](double q) { return cplx(0.5 * (1.0 + std::cos(f.kx * len * q))); };
      else fn = [&](double q) { return cplx(0.5 * (1.0 + std::cos(f.ky * len * q))); };
      factor[mode] = position_function(fn, d);
    }
    // U0 (1 - prod f_j) = U0 sum_j (prod_{i<j} f_i) (1 - f_j), each term small.
    const double u = cfg.trap.depth / hbar;
    for (int j = 0; j < r.n; ++j) {
      KronOperator op(shape);
      for (int i = 0; i < j; ++i) op.set(shape.mode_subsystem(i), factor[i]);
      const int d = shape.modes[j];
      t.potential_1d.push_back(u * (Matrix::Identity(d, d) - factor[j]));
      op.set(shape.mode_subsystem(j), t.potential_1d.back());
      t.potential.push_back(std::move(op));
    }
    return t;
  }

  // Fourth-order expansion with the given frequencies, anharmonicities and couplings.
  const double omega[3] = {p.omega_x, p.omega_y, p.omega_z};
  const double eta[3] = {p.eta_x, p.eta_y, p.eta_z};
  for (int mode = 0; mode < r.n; ++mode) {
    const int d = shape.modes[mode];
    const int role = role_of(r, mode);
    const double w = omega[role], wb = basis.w[role];
    t.potential_1d.push_back((w * w / (2.0 * wb)) * quadrature_power(2, d) -
                             (eta[role] * w * w * w / (wb * wb)) * quadrature_power(4, d));
    t.potential.push_back(single(mode, t.potential_1d.back()));
  }
  auto cross = [&](int a, int b, double coeff) {
    if (a < 0 || b < 0 || coeff == 0.0) return;
    KronOperator op(shape);
    op.set(shape.mode_subsystem(a), (coeff * quadrature_power(2, shape.modes[a])).eval());
    op.set(shape.mode_subsystem(b), quadrature_power(2, shape.modes[b]));
    t.potential.push_back(std::move(op));
  };
  cross(r.iz, r.ix, -p.eps_zx * p.omega_z * p.omega_z * p.omega_x / (basis.w[2] * basis.w[0]));
  cross(r.iz, r.iy, -p.eps_zy * p.omega_z * p.omega_z * p.omega_y / (basis.w[2] * basis.w[1]));
  cross(r.ix, r.iy, -p.eps_xy * p.omega_x * p.omega_x * p.omega_y / (basis.w[0] * basis.w[1]));
  return t;
}

// Piecewise-linear depth factor: ramp down, hold, ramp up.
struct DepthProfile {
  double low = 1.0, ramp = 0.0, hold = 0.0;
  double total() const { return 2.0 * ramp + hold; }
  double operator()(double t) const {
    if (t <= 0.0) return ramp > 0 ? 1.0 : low;
    if (t < ramp) return 1.0 + (low - 1.0) * t / ramp;
    if (t <= ramp + hold) return low;
    if (t < total()) return low + (1.0 - low) * (t - ramp - hold) / ramp;
    return 1.0;
  }
};

KronOperator scaled(KronOperator op, double c) {
  for (auto& f : op.factors) {
    if (f.size() == 0) continue;
    f *= c;
    return op;
  }
  const int d = op.shape.dims().front();
  op.factors.front() = c * Matrix::Identity(d, d);
  return op;
}

// Time-dependent over a ramp; constant (so no step doubling) while the depth holds.
Hamiltonian squeeze_hamiltonian(const TrapTerms& terms, const ModeShape& shape, const DepthProfile& prof,
                                bool constant, double factor) {
  Hamiltonian h(shape);
  for (const auto& k : terms.kinetic) h.add(k);
  for (const auto& v : terms.potential) {
    if (constant) h.add(scaled(v, factor));
    else h.add(v, [prof](double t) { return prof(t); });
  }
  return h;
}

// Ground state of each spectator's single-mode Hamiltonian at a given depth.
std::vector<Vector> spectator_grounds(const TrapTerms& terms, double factor) {
  std::vector<Vector> g;
  for (size_t m = 0; m + 1 < terms.kinetic_1d.size(); ++m) {
    const Matrix h = terms.kinetic_1d[m] + factor * terms.potential_1d[m];
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.adjoint()));
    g.push_back(es.eigenvectors().col(0));
  }
  return g;
}

// Population of the spectators' single-mode ground states (product state
// `grounds`) and per-mode truncation leakage, for a state laid out with the
// coding mode last and the ancilla first when present.
struct StateStats {
  double ground = 1.0;
  double leak = 0.0;
};

StateStats state_stats(const OscState& s, int guard, const std::vector<Vector>& grounds) {
  StateStats st;
  const auto dims = s.shape.dims();
  const int first = s.shape.ancilla ? 1 : 0;
  const int nsub = static_cast<int>(dims.size());
  const int dz = dims.back();
  if (!grounds.empty()) {
    Vector g = grounds.front();
    for (size_t k = 1; k < grounds.size(); ++k) {
      Vector next(g.size() * grounds[k].size());
      for (Eigen::Index i = 0; i < g.size(); ++i) next.segment(i * grounds[k].size(), grounds[k].size()) = g(i) * grounds[k];
      g = std::move(next);
    }
    const Eigen::Index ns = g.size();
    const int branches = s.shape.ancilla ? 2 : 1;
    const Eigen::Index block = ns * dz;
    double pop = 0.0;
    for (int a = 0; a < branches; ++a) {
      if (s.is_pure()) {
        Eigen::Map<const Matrix> m(s.amplitudes.data() + a * block, dz, ns);
        pop += (m * g.conjugate()).squaredNorm();
      } else {
        Matrix k = Matrix::Zero(dz, block);
        for (Eigen::Index i = 0; i < ns; ++i) k.middleCols(i * dz, dz) = std::conj(g(i)) * Matrix::Identity(dz, dz);
        pop += (k * s.density.block(a * block, a * block, block, block) * k.adjoint()).trace().real();
      }
    }
    st.ground = std::clamp(pop / std::max(s.trace(), 1e-300), 0.0, 1.0);
  }
  for (int sub = first; sub < nsub; ++sub) {
    const auto pops = level_populations(s, sub);
    const int band = sub == nsub - 1 ? std::min(guard, dims[sub] - 1) : 1;
    double top = 0.0;
    for (int k = dims[sub] - band; k < dims[sub]; ++k) top += pops[k];
    st.leak = std::max(st.leak, top);
  }
  return st;
}

OscState coding_mode(const OscState& s) {
  const int sub = s.shape.subsystems() - 1;
  if (s.shape.subsystems() == 1) return s;
  return partial_trace(s, {sub});
}

double hermiticity_error(const OscState& s) {
  if (s.is_pure()) return 0.0;
  return (s.density - s.density.adjoint()).cwiseAbs().maxCoeff();
}

struct SqueezeOutcome {
  OscState state;
  std::vector<double> times;
  std::vector<OscState> z_states;
  std::vector<StateStats> stats;
  double end_time = 0.0;
  Diagnostics diag;
};

// Pure-state evolution through the depth profile, sampling on a fixed grid.
SqueezeOutcome run_squeeze(const LatticeRunConfig& cfg, const std::vector<int>& dims, double hold, bool record) {
  const OscillatorParams p = run_params(cfg);
  const Basis basis = basis_for(p, static_cast<int>(dims.size()));
  const ModeShape shape{false, dims};
  const TrapTerms terms = trap_terms(cfg, p, basis, shape);
  DepthProfile prof{cfg.depth_factor, cfg.ramp_time, hold};
  const Hamiltonian ramp = squeeze_hamiltonian(terms, shape, prof, false, 1.0);
  const Hamiltonian flat = squeeze_hamiltonian(terms, shape, prof, true, cfg.depth_factor);

  EvolutionConfig ecfg = cfg.evolution;
  ecfg.leak_warn = 0.999;  // leakage is tracked per mode below

  Vector psi = Vector::Zero(shape.total());
  psi(0) = 1.0;
  SqueezeOutcome out;
  out.state = OscState::pure(psi, shape);

  // Segment boundaries are hit exactly; samples fall on a uniform grid.
  std::vector<double> marks{0.0, prof.ramp, prof.ramp + prof.hold, prof.total()};
  const double total = prof.total();
  if (record) {
    for (double t = cfg.sample_squeeze; t < total - 1e-12; t += cfg.sample_squeeze) marks.push_back(t);
  }
  std::sort(marks.begin(), marks.end());
  marks.erase(std::unique(marks.begin(), marks.end(), [](double a, double b) { return std::abs(a - b) < 1e-13; }),
              marks.end());

  auto sample = [&](double t) {
    if (!record) return;
    out.times.push_back(t);
    out.z_states.push_back(coding_mode(out.state));
    out.stats.push_back(state_stats(out.state, cfg.evolution.guard_band, spectator_grounds(terms, prof(t))));
  };
  sample(0.0);
  for (size_t k = 1; k < marks.size(); ++k) {
    const double t0 = marks[k - 1], dt = marks[k] - t0;
    if (dt <= 0) continue;
    const bool holding = t0 >= prof.ramp - 1e-15 && marks[k] <= prof.ramp + prof.hold + 1e-15;
    auto res = evolve(out.state, holding ? flat : ramp, t0, dt, ecfg);
    out.state = std::move(res.state);
    out.diag.merge(res.diag);
    sample(marks[k]);
  }
  out.end_time = total;
  return out;
}

double compressed_delta(const OscState& z) {
  const double phi = compressing_frame_phase(z);
  return effective_squeezing(to_code_frame(z, phi)).delta_z;
}

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

// Ancilla-block density matrix with cached branch propagators.
class MixedStage {
 public:
  MixedStage(const LatticeRunConfig& cfg, const OscillatorParams& p, const Basis& basis, const ModeShape& osc_shape)
      : cfg_(cfg), shape_(osc_shape), n_(osc_shape.total()) {
    const TrapTerms terms = trap_terms(cfg, p, basis, osc_shape);
    grounds_ = gkp::spectator_grounds(terms, 1.0);
    Matrix h0 = Matrix::Zero(n_, n_);
    for (const auto& k : terms.kinetic) h0 += k.dense();
    for (const auto& v : terms.potential) h0 += v.dense();
    solve(0, h0);

    const int dz = osc_shape.modes.back();
    const double wz = basis.w[2];
    const double len = std::sqrt(constants::hbar / (p.mass * wz));
    const double u1 = cfg.peak_u1 / constants::hbar;
    const double w1 = cfg.waist_w1;
    for (int b = 1; b <= 2; ++b) {
      const double z0 = (b == 1 ? 0.5 : -0.5) * w1;
      const Matrix beam = position_function(
          [&](double q) {
            const double z = len * q - z0;
            return cplx(-u1 * std::exp(-2.0 * z * z / (w1 * w1)));
          },
          dz);
      KronOperator op(osc_shape);
      op.set(osc_shape.mode_subsystem(-1), beam);
      solve(b, h0 + op.dense());
    }
    rho_ = Matrix::Zero(2 * n_, 2 * n_);
  }

  void set_oscillator(const Matrix& rho_osc) {
    rho_.setZero();
    rho_.topLeftCorner(n_, n_) = rho_osc;
  }

  const Matrix& density() const { return rho_; }
  const std::vector<Vector>& spectator_grounds() const { return grounds_; }
  OscState state() const { return OscState::mixed(rho_, ModeShape{true, shape_.modes}); }

  // Branch 0 evolves under h0 (+ beam A), branch 1 under h0 (+ beam B).
  void propagate(int beams, double tau) {
    if (tau <= 0) return;
    const Matrix& u0 = propagator((beams & kBeamA) ? 1 : 0, tau);
    const Matrix& u1 = propagator((beams & kBeamB) ? 2 : 0, tau);
    apply_branch_ops(u0, u1);
  }

  void apply_branch_ops(const Matrix& u0, const Matrix& u1) {
    const Matrix* u[2] = {&u0, &u1};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        auto blk = rho_.block(a * n_, b * n_, n_, n_);
        Matrix tmp = (*u[a]) * blk;
        blk = tmp * u[b]->adjoint();
      }
  }

  // Multiply the branch-`a` amplitude by e^{i phi}.
  void branch_phase(int a, double phi) {
    const cplx e = std::polar(1.0, phi);
    const int o = 1 - a;
    rho_.block(a * n_, o * n_, n_, n_) *= e;
    rho_.block(o * n_, a * n_, n_, n_) *= std::conj(e);
  }

  void gate(const Eigen::Matrix2cd& g) {
    Matrix out = Matrix::Zero(2 * n_, 2 * n_);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c)
          for (int d = 0; d < 2; ++d) {
            const cplx w = g(a, c) * std::conj(g(b, d));
            if (w == cplx(0)) continue;
            out.block(a * n_, b * n_, n_, n_) += w * rho_.block(c * n_, d * n_, n_, n_);
          }
    rho_ = std::move(out);
  }

  void reset() {
    Matrix osc = rho_.topLeftCorner(n_, n_) + rho_.bottomRightCorner(n_, n_);
    set_oscillator(0.5 * (osc + osc.adjoint()));
  }

  // Closed-form pulse: displacement of the coding mode on top of idle evolution.
  void closed_form_pulse(int beams, double tau, double alpha_d, double omega, double energy_shift) {
    const Matrix& idle = propagator(0, tau);
    const int dz = shape_.modes.back();
    const cplx beta = alpha_d * (1.0 - std::polar(1.0, -omega * tau));
    const double phase = displacement_phase(alpha_d, omega, tau) + energy_shift * tau / constants::hbar;
    auto branch = [&](bool on, double sign) -> Matrix {
      if (!on) return idle;
      const int pad = 60 + static_cast<int>(std::ceil(std::norm(beta)));
      KronOperator d(shape_);
      d.set(shape_.mode_subsystem(-1), (std::polar(1.0, phase) * displacement_padded(sign * beta, dz, pad).entries).eval());
      return d.dense() * idle;
    };
    const Matrix u0 = branch(beams & kBeamA, 1.0);
    const Matrix u1 = branch(beams & kBeamB, -1.0);
    apply_branch_ops(u0, u1);
  }

 private:
  struct Eig {
    Matrix vectors;
    RVector values;
  };

  void solve(int k, const Matrix& h) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.adjoint()));
    require(es.info() == Eigen::Success, ErrorCode::numeric_failure, "branch Hamiltonian diagonalization failed");
    eig_[k] = Eig{es.eigenvectors(), es.eigenvalues()};
  }

  const Matrix& propagator(int k, double tau) {
    const auto key = std::make_pair(k, tau);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    if (cache_.size() > 64) cache_.clear();
    const Eig& e = eig_[k];
    Vector ph(e.values.size());
    for (Eigen::Index i = 0; i < ph.size(); ++i) ph(i) = std::polar(1.0, -e.values(i) * tau);
    Matrix u = e.vectors * ph.asDiagonal() * e.vectors.adjoint();
    return cache_.emplace(key, std::move(u)).first->second;
  }

  const LatticeRunConfig& cfg_;
  ModeShape shape_;
  int n_;
  Eig eig_[3];
  std::map<std::pair<int, double>, Matrix> cache_;
  Matrix rho_;
  std::vector<Vector> grounds_;
};

}  // namespace

double optimize_hold_time(const LatticeRunConfig& config) {
  config.validate();
  const OscillatorParams p = run_params(config);
  const double omega_low = p.omega_z * std::sqrt(config.depth_factor);
  const double quarter = 0.5 * kPi / omega_low;
  const std::vector<int> z_only{config.squeeze_dims.back()};
  auto objective = [&](double hold) {
    auto out = run_squeeze(config, z_only, hold, false);
    return compressed_delta(out.state);
  };
  const auto m = golden_section_minimize(objective, 0.5 * quarter, 1.5 * quarter, 1e-3 * quarter);
  return m.x;
}

QuenchResult simulate_quench(const LatticeRunConfig& config) {
  config.validate();
  QuenchResult res;
  Trajectory& tr = res.trajectory;
  const double hold = config.hold_time >= 0 ? config.hold_time : optimize_hold_time(config);
  tr.hold_time = hold;
  auto out = run_squeeze(config, config.squeeze_dims, hold, true);
  tr.diag.merge(out.diag);

  const OscillatorParams p = run_params(config);
  const Basis basis = basis_for(p, static_cast<int>(config.squeeze_dims.size()));
  tr.basis_omega_z = basis.w[2];
  const OscState z_end = coding_mode(out.state);
  tr.frame_phase_end = compressing_frame_phase(z_end);

  for (size_t k = 0; k < out.times.size(); ++k) {
    const double phi = tr.frame_phase_end - basis.w[2] * (out.end_time - out.times[k]);
    const auto e = effective_squeezing(to_code_frame(out.z_states[k], phi));
    tr.push(TrajectoryPoint{out.times[k], e.delta_x, e.delta_z, out.stats[k].ground, out.stats[k].leak, "squeeze"});
  }
  tr.post_squeeze_state = to_code_frame(z_end, tr.frame_phase_end);
  const auto e = effective_squeezing(tr.post_squeeze_state);
  tr.squeeze_delta_x = e.delta_x;
  tr.squeeze_delta_z = e.delta_z;
  tr.final_state = tr.post_squeeze_state;
  if (tr.max_leakage > config.evolution.leak_warn) {
    std::ostringstream os;
    os << "squeeze stage: truncation leakage reached " << tr.max_leakage;
    tr.diag.warn(os.str());
  }

  PulseSegment down, hold_seg, up;
  down.kind = up.kind = SegmentKind::depth_ramp;
  down.duration = up.duration = config.ramp_time;
  down.from_factor = 1.0;
  down.target_factor = config.depth_factor;
  up.from_factor = config.depth_factor;
  up.target_factor = 1.0;
  up.start = config.ramp_time + hold;
  down.label = "ramp down";
  up.label = "ramp up";
  hold_seg.kind = SegmentKind::idle;
  hold_seg.start = config.ramp_time;
  hold_seg.duration = hold;
  hold_seg.label = "hold at reduced depth";
  tr.schedule.segments = {down, hold_seg, up};
  res.state = std::move(out.state);
  return res;
}

Trajectory run_lattice_preparation(const LatticeRunConfig& config) {
  config.validate();
  QuenchResult q = simulate_quench(config);
  Trajectory tr = std::move(q.trajectory);

  const OscillatorParams p = run_params(config);
  const int nm = static_cast<int>(config.mixed_dims.size());
  const Basis basis = basis_for(p, nm);
  const double wz = basis.w[2];
  const TuneoutForce force = tuneout_force(config.peak_u1, config.waist_w1);
  const double alpha_d = displacement_amplitude(force.force, p.mass, wz);
  tr.alpha_d = alpha_d;

  // Truncate the spectators to the mixed-stage cutoffs.
  const ModeShape osc_shape{false, config.mixed_dims};
  const auto& sd = config.squeeze_dims;
  const auto& md = config.mixed_dims;
  Vector psi = Vector::Zero(osc_shape.total());
  {
    std::vector<int> idx(sd.size(), 0);
    const Vector& src = q.state.amplitudes;
    for (Eigen::Index flat = 0; flat < src.size(); ++flat) {
      Eigen::Index rem = flat, dst = 0;
      bool inside = true;
      std::vector<int> digits(sd.size());
      for (int m = static_cast<int>(sd.size()) - 1; m >= 0; --m) {
        digits[m] = static_cast<int>(rem % sd[m]);
        rem /= sd[m];
      }
      for (size_t m = 0; m < sd.size(); ++m) {
        if (digits[m] >= md[m]) inside = false;
        dst = dst * md[m] + digits[m];
      }
      if (inside) psi(dst) = src(flat);
    }
  }
  const double kept = psi.squaredNorm();
  if (1.0 - kept > 1e-3) {
    std::ostringstream os;
    os << "mixed-stage truncation discards population " << 1.0 - kept;
    tr.diag.warn(os.str());
  }
  psi /= std::sqrt(kept);

  MixedStage stage(config, p, basis, osc_shape);
  stage.set_oscillator(psi * psi.adjoint());

  double t = tr.times.empty() ? 0.0 : tr.times.back();
  const double t_end_squeeze = t;
  auto frame_phase = [&](double time) { return tr.frame_phase_end + wz * (time - t_end_squeeze); };

  auto record = [&](double time, const std::string& label) {
    const OscState s = stage.state();
    const OscState z = to_code_frame(coding_mode(s), frame_phase(time));
    const auto e = effective_squeezing(z);
    const auto st = state_stats(s, config.evolution.guard_band, stage.spectator_grounds());
    tr.push(TrajectoryPoint{time, e.delta_x, e.delta_z, st.ground, st.leak, label});
    tr.max_trace_error = std::max(tr.max_trace_error, std::abs(s.trace() - 1.0));
    tr.max_hermiticity_error = std::max(tr.max_hermiticity_error, hermiticity_error(s));
  };

  auto add_segment = [&](PulseSegment seg) {
    seg.start = t;
    tr.schedule.segments.push_back(std::move(seg));
  };

  auto idle = [&](double tau, const std::string& label) {
    if (tau <= 0) return;
    PulseSegment seg;
    seg.kind = SegmentKind::idle;
    seg.duration = tau;
    seg.label = label;
    add_segment(seg);
    double left = tau;
    while (left > 1e-15) {
      const double step = std::min(config.sample_mixed, left);
      stage.propagate(kNoBeam, step);
      t += step;
      left -= step;
      record(t, label);
    }
  };

  auto rotate = [&](const std::string& axis, double angle, const Eigen::Matrix2cd& g, const std::string& label) {
    const double tau = std::abs(angle) / config.rabi;
    PulseSegment seg;
    seg.kind = SegmentKind::ancilla_rotation;
    seg.duration = tau;
    seg.axis = axis;
    seg.angle = angle;
    seg.rabi = config.rabi;
    seg.label = label;
    add_segment(seg);
    stage.propagate(kNoBeam, tau);
    stage.gate(g);
    t += tau;
  };

  // Conditional displacement `beta` (code frame) on the branch of beam A; with
  // both beams the |1> branch receives -beta.
  auto pulse = [&](int beams, cplx beta, const std::string& label) {
    const double dist = std::abs(beta);
    if (dist == 0.0) return;
    const double tau = solve_pulse_duration(dist, alpha_d, wz);
    // Code-frame direction of beam A is i e^{i phi_mid}.
    const double target_mid = std::arg(beta) - 0.5 * kPi;
    const double wait = std::fmod(std::fmod(target_mid - frame_phase(t) - 0.5 * wz * tau, 2 * kPi) + 4 * kPi, 2 * kPi) / wz;
    idle(wait, label + " wait");

    PulseSegment seg;
    seg.kind = SegmentKind::tuneout_pulse;
    seg.duration = tau;
    seg.beams = beams;
    seg.peak_u1 = config.peak_u1;
    seg.waist_w1 = config.waist_w1;
    seg.offset = 0.5 * config.waist_w1;
    seg.label = label;
    const double phase = displacement_phase(alpha_d, wz, tau) + force.energy_shift * tau / constants::hbar;
    seg.ancilla_phase = phase;
    add_segment(seg);

    if (config.displacement == DisplacementMode::exact_beam) {
      stage.propagate(beams, tau);
    } else {
      stage.closed_form_pulse(beams, tau, alpha_d, wz, force.energy_shift);
    }
    // Qubit-only rotation undoing the recorded feedback phase; with both beams it is common to the branches.
    if (beams == kBeamA) stage.branch_phase(0, -phase);
    if (beams == kBeamB) stage.branch_phase(1, -phase);
    t += tau;
    record(t, label);
  };

  const auto& sch = config.schedule;
  for (int r = 0; r < sch.rounds(); ++r) {
    const std::string tag = "round " + std::to_string(r + 1);
    const double delta = sch.deltas[r], eps = sch.epsilons[r];
    rotate("h", 0.5 * kPi, hadamard(), tag + " hadamard");
    if (eps != 0.0) {
      rotate("x", 0.5 * kPi, rx(0.5 * kPi), tag + " pre-rotation");
      pulse(kBeamA | kBeamB, cplx(0, -eps * kSqrtPi / 4), tag + " bias");
      rotate("x", -0.5 * kPi, rx(-0.5 * kPi), tag + " pre-rotation undo");
    }
    pulse(kBeamA | kBeamB, cplx(kSqrtPi, 0), tag + " stabilizer");
    rotate("x", -0.5 * kPi, rx(-0.5 * kPi), tag + " rotation");
    pulse(kBeamA | kBeamB, cplx(0, delta * kSqrtPi / 4), tag + " correction");

    idle(config.reset_time, tag + " reset");
    PulseSegment seg;
    seg.kind = SegmentKind::ancilla_reset;
    seg.label = tag + " reset";
    add_segment(seg);
    stage.reset();
    record(t, tag);

    RoundRecord rec;
    rec.round = r + 1;
    rec.delta = delta;
    rec.epsilon = eps;
    const OscState z = to_code_frame(coding_mode(stage.state()), frame_phase(t));
    const auto e = effective_squeezing(z);
    rec.delta_x = e.delta_x;
    rec.delta_z = e.delta_z;
    rec.trace = stage.state().trace();
    rec.leakage = tr.leakage.back();
    rec.mean_q = expectation(z, quadratures(z.dim()).first).real();
    tr.rounds.push_back(rec);
    tr.round_states.push_back(z);
  }

  tr.final_state = to_code_frame(coding_mode(stage.state()), frame_phase(t));
  if (tr.max_leakage > config.evolution.leak_warn) {
    std::ostringstream os;
    os << "truncation leakage reached " << tr.max_leakage;
    tr.diag.warn(os.str());
  }
  tr.schedule.validate();
  return tr;
}

}  // namespace gkp
