#include "gkpsim/gkpsim.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <optional>
#include <string>

#include "gkp/code.hpp"
#include "gkp/io.hpp"
#include "gkp/physical.hpp"
#include "gkp/protocols.hpp"
#include "gkp/trap.hpp"

struct gkpsim_state {
  gkp::OscState state;
};

struct gkpsim_result {
  gkp::OscState state;
  double success_prob = 1.0;
  std::vector<gkp::RoundRecord> rounds;
  std::vector<gkp::OscState> snapshots;
  gkp::Diagnostics diag;
  std::optional<gkp::DeltaSchedule> deltas;
  std::optional<gkp::Trajectory> trajectory;
  std::optional<gkp::LatticeRunConfig> config;
};

namespace {

thread_local std::string last_error;

gkpsim_status status_for(gkp::ErrorCode c) {
  switch (c) {
    case gkp::ErrorCode::invalid_dimension: return GKPSIM_ERR_INVALID_DIMENSION;
    case gkp::ErrorCode::invalid_input: return GKPSIM_ERR_INVALID_ARGUMENT;
    case gkp::ErrorCode::invalid_parameters: return GKPSIM_ERR_INVALID_PARAMETERS;
    case gkp::ErrorCode::degenerate_postselection: return GKPSIM_ERR_DEGENERATE;
    case gkp::ErrorCode::numeric_failure: return GKPSIM_ERR_NUMERIC;
    case gkp::ErrorCode::io_error: return GKPSIM_ERR_IO;
  }
  return GKPSIM_ERR_INTERNAL;
}

// Runs `body`, translating exceptions into status codes and the last-error text.
template <class F>
gkpsim_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return GKPSIM_OK;
  } catch (const gkp::Error& e) {
    last_error = e.what();
    return status_for(e.code());
  } catch (const nlohmann::json::exception& e) {
    last_error = std::string("malformed JSON: ") + e.what();
    return GKPSIM_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return GKPSIM_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return GKPSIM_ERR_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  if (!p) gkp::fail(gkp::ErrorCode::invalid_input, std::string(name) + " must not be NULL");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

gkp::OscillatorParams params_for(const gkpsim_trap_spec& s) {
  const double mass = s.mass_kg > 0 ? s.mass_kg : gkp::amu_to_kg(gkp::constants::default_mass_u);
  if (s.kind == GKPSIM_TRAP_TWEEZER) {
    gkp::TweezerSpec t;
    t.depth = s.depth_J;
    t.waist = s.waist_m;
    t.wavelength = s.wavelength_m;
    t.mass = mass;
    return gkp::tweezer_params(t);
  }
  if (s.kind == GKPSIM_TRAP_LATTICE) {
    gkp::LatticeSpec l;
    l.depth = s.depth_J;
    l.waist = s.waist_m;
    l.wavelength = s.wavelength_m;
    l.mass = mass;
    if (s.theta_rad > 0) l.theta = s.theta_rad;
    return gkp::lattice_params(l);
  }
  gkp::fail(gkp::ErrorCode::invalid_input, "unknown trap kind");
}

gkp::Logical logical_for(gkpsim_logical l) {
  switch (l) {
    case GKPSIM_LOGICAL_ZERO: return gkp::Logical::zero;
    case GKPSIM_LOGICAL_ONE: return gkp::Logical::one;
    case GKPSIM_LOGICAL_PLUS: return gkp::Logical::plus;
    case GKPSIM_LOGICAL_MINUS: return gkp::Logical::minus;
  }
  gkp::fail(gkp::ErrorCode::invalid_input, "unknown logical state");
}

gkp::WignerGrid wigner_grid(const gkpsim_state* state, double q_min, double q_max, int q_points, double p_min,
                            double p_max, int p_points) {
  need(state, "state");
  gkp::require(q_points >= 2 && p_points >= 2 && q_max > q_min && p_max > p_min, gkp::ErrorCode::invalid_input,
               "Wigner grid needs at least 2 points per axis and increasing ranges");
  return gkp::wigner(state->state, gkp::linspace(q_min, q_max, q_points), gkp::linspace(p_min, p_max, p_points));
}

void fill_from_channel(gkpsim_result& r, gkp::ChannelResult&& ch) {
  r.state = std::move(ch.state);
  r.success_prob = ch.success_prob;
  r.rounds = std::move(ch.rounds);
  r.diag = std::move(ch.diag);
}

nlohmann::json summary(const gkpsim_result& r) {
  nlohmann::json j;
  j["success_prob"] = r.success_prob;
  const auto e = gkp::effective_squeezing(r.state);
  j["final"] = {{"delta_x", e.delta_x}, {"delta_z", e.delta_z}, {"trace", r.state.trace()}};
  j["rounds"] = gkp::io::rounds_json(r.rounds);
  j["warnings"] = gkp::io::diagnostics_json(r.diag);
  if (r.deltas) j["schedule"] = gkp::io::delta_schedule_json(*r.deltas);
  if (r.trajectory) {
    const auto& t = *r.trajectory;
    j["squeeze"] = {{"hold_time_s", t.hold_time},
                    {"delta_x", t.squeeze_delta_x},
                    {"delta_z", t.squeeze_delta_z},
                    {"frame_phase_rad", t.frame_phase_end}};
    j["alpha_d"] = t.alpha_d;
    j["basis_omega_z_rad_s"] = t.basis_omega_z;
    j["min_ground_pop"] = t.min_ground_pop;
    j["max_leakage"] = t.max_leakage;
    j["max_trace_error"] = t.max_trace_error;
    j["max_hermiticity_error"] = t.max_hermiticity_error;
    j["samples"] = t.size();
  }
  return j;
}

}  // namespace

extern "C" {

const char* gkpsim_version(void) { return GKPSIM_VERSION_STRING; }
const char* gkpsim_last_error(void) { return last_error.c_str(); }

const char* gkpsim_status_name(gkpsim_status status) {
  switch (status) {
    case GKPSIM_OK: return "ok";
    case GKPSIM_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case GKPSIM_ERR_INVALID_DIMENSION: return "invalid-dimension";
    case GKPSIM_ERR_INVALID_PARAMETERS: return "invalid-parameters";
    case GKPSIM_ERR_DEGENERATE: return "degenerate-postselection";
    case GKPSIM_ERR_NUMERIC: return "numeric-failure";
    case GKPSIM_ERR_IO: return "io-error";
    case GKPSIM_ERR_INTERNAL: return "internal-error";
  }
  return "unknown";
}

void gkpsim_string_free(char* s) { std::free(s); }

gkpsim_status gkpsim_trap_params(const gkpsim_trap_spec* spec, gkpsim_osc_params* out) {
  return guarded([&] {
    need(spec, "spec");
    need(out, "out");
    const auto p = params_for(*spec);
    *out = gkpsim_osc_params{p.omega_x, p.omega_y, p.omega_z, p.eta_z, p.eta_x, p.eta_y,
                             p.eps_zx,  p.eps_zy,  p.eps_xy,  p.depth, p.mass};
  });
}

gkpsim_status gkpsim_tweezer_paraxial_flag(const gkpsim_trap_spec* spec, int* flag) {
  return guarded([&] {
    need(spec, "spec");
    need(flag, "flag");
    gkp::TweezerSpec t;
    t.depth = spec->depth_J;
    t.waist = spec->waist_m;
    t.wavelength = spec->wavelength_m;
    if (spec->mass_kg > 0) t.mass = spec->mass_kg;
    t.validate();
    *flag = t.paraxial_flag() ? 1 : 0;
  });
}

gkpsim_status gkpsim_kelvin_to_joule(double kelvin, double* joule) {
  return guarded([&] {
    need(joule, "joule");
    *joule = gkp::kelvin_to_joule(kelvin);
  });
}

gkpsim_status gkpsim_amu_to_kg(double amu, double* kg) {
  return guarded([&] {
    need(kg, "kg");
    *kg = gkp::amu_to_kg(amu);
  });
}

gkpsim_status gkpsim_state_vacuum(int dim, gkpsim_state** out) {
  return guarded([&] {
    need(out, "out");
    *out = new gkpsim_state{gkp::vacuum(dim)};
  });
}

gkpsim_status gkpsim_state_finite_gkp(gkpsim_logical logical, double delta, int sum_cutoff, int dim,
                                      gkpsim_state** out) {
  return guarded([&] {
    need(out, "out");
    *out = new gkpsim_state{gkp::finite_gkp_superposition(logical_for(logical), delta, sum_cutoff, dim)};
  });
}

gkpsim_status gkpsim_state_squeezed(double delta, int dim, gkpsim_state** out) {
  return guarded([&] {
    need(out, "out");
    *out = new gkpsim_state{gkp::initial_squeezed_state(delta, dim)};
  });
}

gkpsim_status gkpsim_state_displace(gkpsim_state* state, double re, double im) {
  return guarded([&] {
    need(state, "state");
    auto& s = state->state;
    gkp::require(!s.shape.ancilla && s.shape.modes.size() == 1, gkp::ErrorCode::invalid_input,
                 "displacement applies to single-mode states");
    s = gkp::apply(gkp::displacement(gkp::cplx(re, im), s.dim()), s);
  });
}

gkpsim_status gkpsim_state_clone(const gkpsim_state* state, gkpsim_state** out) {
  return guarded([&] {
    need(state, "state");
    need(out, "out");
    *out = new gkpsim_state{state->state};
  });
}

void gkpsim_state_free(gkpsim_state* state) { delete state; }

gkpsim_status gkpsim_state_dim(const gkpsim_state* state, int* dim) {
  return guarded([&] {
    need(state, "state");
    need(dim, "dim");
    *dim = state->state.dim();
  });
}

gkpsim_status gkpsim_state_is_pure(const gkpsim_state* state, int* pure) {
  return guarded([&] {
    need(state, "state");
    need(pure, "pure");
    *pure = state->state.is_pure() ? 1 : 0;
  });
}

gkpsim_status gkpsim_state_trace(const gkpsim_state* state, double* trace) {
  return guarded([&] {
    need(state, "state");
    need(trace, "trace");
    *trace = state->state.trace();
  });
}

gkpsim_status gkpsim_state_effective_squeezing(const gkpsim_state* state, double* delta_x, double* delta_z) {
  return guarded([&] {
    need(state, "state");
    need(delta_x, "delta_x");
    need(delta_z, "delta_z");
    const auto e = gkp::effective_squeezing(state->state);
    *delta_x = e.delta_x;
    *delta_z = e.delta_z;
  });
}

gkpsim_status gkpsim_state_mean_quadratures(const gkpsim_state* state, double* mean_q, double* mean_p) {
  return guarded([&] {
    need(state, "state");
    need(mean_q, "mean_q");
    need(mean_p, "mean_p");
    const gkp::OscState s = gkp::reduce_to_mode(state->state);
    const auto [q, p] = gkp::quadratures(s.dim());
    *mean_q = gkp::expectation(s, q).real();
    *mean_p = gkp::expectation(s, p).real();
  });
}

gkpsim_status gkpsim_state_fidelity(const gkpsim_state* a, const gkpsim_state* b, double* fidelity) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(fidelity, "fidelity");
    *fidelity = gkp::fidelity(a->state, b->state);
  });
}

gkpsim_status gkpsim_state_leakage(const gkpsim_state* state, int guard_band, double* leakage) {
  return guarded([&] {
    need(state, "state");
    need(leakage, "leakage");
    *leakage = gkp::leakage(state->state, guard_band);
  });
}

gkpsim_status gkpsim_state_save(const gkpsim_state* state, const char* path, const char* metadata_json) {
  return guarded([&] {
    need(state, "state");
    need(path, "path");
    const auto meta = metadata_json ? nlohmann::json::parse(metadata_json) : nlohmann::json::object();
    gkp::io::save_state(path, state->state, meta);
  });
}

gkpsim_status gkpsim_state_load(const char* path, gkpsim_state** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new gkpsim_state{gkp::io::load_state(path)};
  });
}

gkpsim_status gkpsim_wigner(const gkpsim_state* state, double q_min, double q_max, int q_points, double p_min,
                            double p_max, int p_points, double* values) {
  return guarded([&] {
    need(values, "values");
    const auto g = wigner_grid(state, q_min, q_max, q_points, p_min, p_max, p_points);
    for (int i = 0; i < p_points; ++i)
      for (int j = 0; j < q_points; ++j) values[static_cast<size_t>(i) * q_points + j] = g.values(i, j);
  });
}

gkpsim_status gkpsim_wigner_export(const gkpsim_state* state, double q_min, double q_max, int q_points, double p_min,
                                   double p_max, int p_points, gkpsim_wigner_format format, char** out) {
  return guarded([&] {
    need(out, "out");
    const auto g = wigner_grid(state, q_min, q_max, q_points, p_min, p_max, p_points);
    switch (format) {
      case GKPSIM_WIGNER_CSV: *out = copy_string(gkp::io::wigner_csv(g)); return;
      case GKPSIM_WIGNER_SIDECAR_JSON: *out = copy_string(gkp::io::wigner_sidecar(g, state->state).dump(2) + "\n"); return;
      case GKPSIM_WIGNER_SVG: *out = copy_string(gkp::io::wigner_svg(g)); return;
    }
    gkp::fail(gkp::ErrorCode::invalid_input, "unknown Wigner export format");
  });
}

gkpsim_status gkpsim_postselect_prepare(double delta_init, int rounds, int dim, gkpsim_result** out) {
  return guarded([&] {
    need(out, "out");
    auto r = std::make_unique<gkpsim_result>();
    fill_from_channel(*r, gkp::postselect_prepare(delta_init, rounds, dim));
    *out = r.release();
  });
}

gkpsim_status gkpsim_corrective_prepare(double delta_init, const double* deltas, const double* epsilons, int rounds,
                                        int dim, gkpsim_result** out) {
  return guarded([&] {
    need(out, "out");
    gkp::require(rounds >= 0, gkp::ErrorCode::invalid_parameters, "rounds must be >= 0");
    if (rounds > 0) need(deltas, "deltas");
    gkp::DeltaSchedule s;
    s.deltas.assign(deltas, deltas + rounds);
    s.epsilons = epsilons ? std::vector<double>(epsilons, epsilons + rounds) : std::vector<double>(rounds, 0.0);
    s.validate();
    auto r = std::make_unique<gkpsim_result>();
    fill_from_channel(*r, gkp::corrective_prepare(delta_init, s, dim));
    r->deltas = s;
    *out = r.release();
  });
}

gkpsim_status gkpsim_optimize_deltas(double delta_init, int rounds, int dim, double tol, double* deltas_out,
                                     double* delta_x_out, gkpsim_result** out) {
  return guarded([&] {
    need(deltas_out, "deltas_out");
    need(delta_x_out, "delta_x_out");
    auto o = gkp::optimize_deltas(delta_init, rounds, dim, tol);
    for (int k = 0; k < rounds; ++k) {
      deltas_out[k] = o.schedule.deltas[k];
      delta_x_out[k] = o.delta_x[k];
    }
    if (out) {
      auto r = std::make_unique<gkpsim_result>();
      r->state = std::move(o.state);
      r->diag = o.diag;
      r->deltas = o.schedule;
      for (int k = 0; k < rounds; ++k) {
        gkp::RoundRecord rec;
        rec.round = k + 1;
        rec.delta = o.schedule.deltas[k];
        rec.epsilon = o.schedule.epsilons[k];
        rec.delta_x = o.delta_x[k];
        r->rounds.push_back(rec);
      }
      *out = r.release();
    }
  });
}

gkpsim_status gkpsim_qec_round(const gkpsim_state* state, double delta_envelope, gkpsim_quadrature quadrature,
                               gkpsim_result** out) {
  return guarded([&] {
    need(state, "state");
    need(out, "out");
    gkp::QecQuadrature q;
    switch (quadrature) {
      case GKPSIM_QUAD_Q: q = gkp::QecQuadrature::q; break;
      case GKPSIM_QUAD_P: q = gkp::QecQuadrature::p; break;
      case GKPSIM_QUAD_BOTH: q = gkp::QecQuadrature::both; break;
      default: gkp::fail(gkp::ErrorCode::invalid_input, "unknown quadrature");
    }
    auto r = std::make_unique<gkpsim_result>();
    fill_from_channel(*r, gkp::qec_round(state->state, delta_envelope, q));
    *out = r.release();
  });
}

gkpsim_status gkpsim_prepare_physical(const char* config_json, gkpsim_result** out) {
  return guarded([&] {
    need(out, "out");
    const auto j = config_json ? nlohmann::json::parse(config_json) : nlohmann::json::object();
    const gkp::LatticeRunConfig cfg = gkp::io::lattice_config_from_json(j);
    auto r = std::make_unique<gkpsim_result>();
    gkp::Trajectory tr = gkp::run_lattice_preparation(cfg);
    r->state = tr.final_state;
    r->rounds = tr.rounds;
    r->snapshots = tr.round_states;
    r->diag = tr.diag;
    r->trajectory = std::move(tr);
    r->config = cfg;
    *out = r.release();
  });
}

gkpsim_status gkpsim_physical_default_config(char** out) {
  return guarded([&] {
    need(out, "out");
    *out = copy_string(gkp::io::lattice_config_to_json(gkp::LatticeRunConfig{}).dump(2) + "\n");
  });
}

gkpsim_status gkpsim_physical_check_config(const char* config_json) {
  return guarded([&] {
    const auto j = config_json ? nlohmann::json::parse(config_json) : nlohmann::json::object();
    (void)gkp::io::lattice_config_from_json(j);
  });
}

void gkpsim_result_free(gkpsim_result* result) { delete result; }

gkpsim_status gkpsim_result_state(const gkpsim_result* result, gkpsim_state** out) {
  return guarded([&] {
    need(result, "result");
    need(out, "out");
    *out = new gkpsim_state{result->state};
  });
}

gkpsim_status gkpsim_result_success_prob(const gkpsim_result* result, double* p) {
  return guarded([&] {
    need(result, "result");
    need(p, "p");
    *p = result->success_prob;
  });
}

gkpsim_status gkpsim_result_round_count(const gkpsim_result* result, int* count) {
  return guarded([&] {
    need(result, "result");
    need(count, "count");
    *count = static_cast<int>(result->rounds.size());
  });
}

gkpsim_status gkpsim_result_round(const gkpsim_result* result, int index, gkpsim_round_record* out) {
  return guarded([&] {
    need(result, "result");
    need(out, "out");
    gkp::require(index >= 0 && index < static_cast<int>(result->rounds.size()), gkp::ErrorCode::invalid_input,
                 "round index out of range");
    const auto& r = result->rounds[index];
    *out = gkpsim_round_record{r.round, r.delta, r.epsilon, r.delta_x, r.delta_z,
                               r.trace, r.leakage, r.success_prob, r.mean_q};
  });
}

gkpsim_status gkpsim_result_snapshot_count(const gkpsim_result* result, int* count) {
  return guarded([&] {
    need(result, "result");
    need(count, "count");
    *count = static_cast<int>(result->snapshots.size());
  });
}

gkpsim_status gkpsim_result_snapshot(const gkpsim_result* result, int index, gkpsim_state** out) {
  return guarded([&] {
    need(result, "result");
    need(out, "out");
    gkp::require(index >= 0 && index < static_cast<int>(result->snapshots.size()), gkp::ErrorCode::invalid_input,
                 "snapshot index out of range");
    *out = new gkpsim_state{result->snapshots[index]};
  });
}

gkpsim_status gkpsim_result_warning_count(const gkpsim_result* result, int* count) {
  return guarded([&] {
    need(result, "result");
    need(count, "count");
    *count = static_cast<int>(result->diag.warnings.size());
  });
}

gkpsim_status gkpsim_result_warning(const gkpsim_result* result, int index, char** out) {
  return guarded([&] {
    need(result, "result");
    need(out, "out");
    gkp::require(index >= 0 && index < static_cast<int>(result->diag.warnings.size()), gkp::ErrorCode::invalid_input,
                 "warning index out of range");
    *out = copy_string(result->diag.warnings[index]);
  });
}

gkpsim_status gkpsim_result_export(const gkpsim_result* result, gkpsim_export kind, char** out) {
  return guarded([&] {
    need(result, "result");
    need(out, "out");
    switch (kind) {
      case GKPSIM_EXPORT_ROUNDS_JSON: *out = copy_string(gkp::io::rounds_json(result->rounds).dump(2) + "\n"); return;
      case GKPSIM_EXPORT_TRAJECTORY_CSV:
        gkp::require(result->trajectory.has_value(), gkp::ErrorCode::invalid_input, "result has no trajectory");
        *out = copy_string(gkp::io::trajectory_csv(*result->trajectory));
        return;
      case GKPSIM_EXPORT_SCHEDULE_JSON:
        if (result->trajectory) {
          *out = copy_string(gkp::io::schedule_json(result->trajectory->schedule).dump(2) + "\n");
          return;
        }
        gkp::require(result->deltas.has_value(), gkp::ErrorCode::invalid_input, "result has no schedule");
        *out = copy_string(gkp::io::delta_schedule_json(*result->deltas).dump(2) + "\n");
        return;
      case GKPSIM_EXPORT_SUMMARY_JSON: *out = copy_string(summary(*result).dump(2) + "\n"); return;
      case GKPSIM_EXPORT_CONFIG_JSON:
        gkp::require(result->config.has_value(), gkp::ErrorCode::invalid_input, "result has no physical config");
        *out = copy_string(gkp::io::lattice_config_to_json(*result->config).dump(2) + "\n");
        return;
    }
    gkp::fail(gkp::ErrorCode::invalid_input, "unknown export kind");
  });
}

}  // extern "C"
