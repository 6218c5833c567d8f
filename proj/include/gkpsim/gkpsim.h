/* C interface to the GKP simulator core.
 *
 * Every function returns a gkpsim_status. On failure the thread-local message
 * from gkpsim_last_error() describes the problem. Handles are opaque and owned
 * by the caller; release them with the matching *_free function. Strings
 * returned through char** are heap copies released with gkpsim_string_free.
 * Handles are not shared between threads by the library; distinct handles may
 * be used concurrently. */
#ifndef GKPSIM_H
#define GKPSIM_H

#include <stddef.h>

#if defined(GKPSIM_BUILDING)
#define GKPSIM_API __attribute__((visibility("default")))
#else
#define GKPSIM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gkpsim_status {
  GKPSIM_OK = 0,
  GKPSIM_ERR_INVALID_ARGUMENT = 1, /* null pointer, bad enum, malformed input */
  GKPSIM_ERR_INVALID_DIMENSION = 2,
  GKPSIM_ERR_INVALID_PARAMETERS = 3,
  GKPSIM_ERR_DEGENERATE = 4, /* vanishing postselection branch */
  GKPSIM_ERR_NUMERIC = 5,
  GKPSIM_ERR_IO = 6,
  GKPSIM_ERR_INTERNAL = 7
} gkpsim_status;

typedef struct gkpsim_state gkpsim_state;
typedef struct gkpsim_result gkpsim_result;

GKPSIM_API const char* gkpsim_version(void);
GKPSIM_API const char* gkpsim_last_error(void);
GKPSIM_API const char* gkpsim_status_name(gkpsim_status status);
GKPSIM_API void gkpsim_string_free(char* s);

/* Trap parameters --------------------------------------------------------- */

typedef enum gkpsim_trap_kind { GKPSIM_TRAP_TWEEZER = 0, GKPSIM_TRAP_LATTICE = 1 } gkpsim_trap_kind;

typedef struct gkpsim_trap_spec {
  gkpsim_trap_kind kind;
  double depth_J;
  double waist_m;
  double wavelength_m;
  double mass_kg;   /* <= 0 selects 87.906 u */
  double theta_rad; /* lattice only; <= 0 selects pi/4 */
} gkpsim_trap_spec;

typedef struct gkpsim_osc_params {
  double omega_x, omega_y, omega_z; /* rad/s */
  double eta_z, eta_x, eta_y;
  double eps_zx, eps_zy, eps_xy;
  double depth_J;
  double mass_kg;
} gkpsim_osc_params;

GKPSIM_API gkpsim_status gkpsim_trap_params(const gkpsim_trap_spec* spec, gkpsim_osc_params* out);
/* Returns 1 in *flag when the tweezer Rayleigh length is below twice the waist. */
GKPSIM_API gkpsim_status gkpsim_tweezer_paraxial_flag(const gkpsim_trap_spec* spec, int* flag);
GKPSIM_API gkpsim_status gkpsim_kelvin_to_joule(double kelvin, double* joule);
GKPSIM_API gkpsim_status gkpsim_amu_to_kg(double amu, double* kg);

/* States -------------------------------------------------------------------- */

typedef enum gkpsim_logical {
  GKPSIM_LOGICAL_ZERO = 0,
  GKPSIM_LOGICAL_ONE = 1,
  GKPSIM_LOGICAL_PLUS = 2,
  GKPSIM_LOGICAL_MINUS = 3
} gkpsim_logical;

GKPSIM_API gkpsim_status gkpsim_state_vacuum(int dim, gkpsim_state** out);
/* Weighted superposition of displaced squeezed vacua; sum_cutoff < 0 selects the default. */
GKPSIM_API gkpsim_status gkpsim_state_finite_gkp(gkpsim_logical logical, double delta, int sum_cutoff, int dim,
                                                 gkpsim_state** out);
/* q-squeezed vacuum with compressed effective squeezing delta. */
GKPSIM_API gkpsim_status gkpsim_state_squeezed(double delta, int dim, gkpsim_state** out);
GKPSIM_API gkpsim_status gkpsim_state_displace(gkpsim_state* state, double re, double im);
GKPSIM_API gkpsim_status gkpsim_state_clone(const gkpsim_state* state, gkpsim_state** out);
GKPSIM_API void gkpsim_state_free(gkpsim_state* state);

GKPSIM_API gkpsim_status gkpsim_state_dim(const gkpsim_state* state, int* dim);
GKPSIM_API gkpsim_status gkpsim_state_is_pure(const gkpsim_state* state, int* pure);
GKPSIM_API gkpsim_status gkpsim_state_trace(const gkpsim_state* state, double* trace);
GKPSIM_API gkpsim_status gkpsim_state_effective_squeezing(const gkpsim_state* state, double* delta_x, double* delta_z);
GKPSIM_API gkpsim_status gkpsim_state_mean_quadratures(const gkpsim_state* state, double* mean_q, double* mean_p);
GKPSIM_API gkpsim_status gkpsim_state_fidelity(const gkpsim_state* a, const gkpsim_state* b, double* fidelity);
GKPSIM_API gkpsim_status gkpsim_state_leakage(const gkpsim_state* state, int guard_band, double* leakage);

/* Binary container; metadata_json may be NULL. */
GKPSIM_API gkpsim_status gkpsim_state_save(const gkpsim_state* state, const char* path, const char* metadata_json);
GKPSIM_API gkpsim_status gkpsim_state_load(const char* path, gkpsim_state** out);

/* Wigner function on a uniform grid. values has q_points * p_points entries,
 * row-major with rows following p. */
GKPSIM_API gkpsim_status gkpsim_wigner(const gkpsim_state* state, double q_min, double q_max, int q_points,
                                       double p_min, double p_max, int p_points, double* values);
typedef enum gkpsim_wigner_format {
  GKPSIM_WIGNER_CSV = 0,
  GKPSIM_WIGNER_SIDECAR_JSON = 1,
  GKPSIM_WIGNER_SVG = 2
} gkpsim_wigner_format;
GKPSIM_API gkpsim_status gkpsim_wigner_export(const gkpsim_state* state, double q_min, double q_max, int q_points,
                                              double p_min, double p_max, int p_points,
                                              gkpsim_wigner_format format, char** out);

/* Protocols ----------------------------------------------------------------- */

typedef struct gkpsim_round_record {
  int round;
  double delta;
  double epsilon;
  double delta_x;
  double delta_z;
  double trace;
  double leakage;
  double success_prob;
  double mean_q;
} gkpsim_round_record;

GKPSIM_API gkpsim_status gkpsim_postselect_prepare(double delta_init, int rounds, int dim, gkpsim_result** out);
/* epsilons may be NULL (all zero). */
GKPSIM_API gkpsim_status gkpsim_corrective_prepare(double delta_init, const double* deltas, const double* epsilons,
                                                   int rounds, int dim, gkpsim_result** out);
/* deltas_out and delta_x_out must hold `rounds` entries. */
GKPSIM_API gkpsim_status gkpsim_optimize_deltas(double delta_init, int rounds, int dim, double tol,
                                                double* deltas_out, double* delta_x_out, gkpsim_result** out);

typedef enum gkpsim_quadrature { GKPSIM_QUAD_Q = 0, GKPSIM_QUAD_P = 1, GKPSIM_QUAD_BOTH = 2 } gkpsim_quadrature;
GKPSIM_API gkpsim_status gkpsim_qec_round(const gkpsim_state* state, double delta_envelope,
                                          gkpsim_quadrature quadrature, gkpsim_result** out);

/* Physical lattice preparation. config_json is an object with optional keys
 * (see docs/config.md, section "physical"); NULL or "{}" selects defaults. */
GKPSIM_API gkpsim_status gkpsim_prepare_physical(const char* config_json, gkpsim_result** out);
/* Default physical configuration as a JSON object (the accepted key set). */
GKPSIM_API gkpsim_status gkpsim_physical_default_config(char** out);
/* Validates a physical configuration without running it. */
GKPSIM_API gkpsim_status gkpsim_physical_check_config(const char* config_json);

/* Results ------------------------------------------------------------------- */

GKPSIM_API void gkpsim_result_free(gkpsim_result* result);
GKPSIM_API gkpsim_status gkpsim_result_state(const gkpsim_result* result, gkpsim_state** out);
GKPSIM_API gkpsim_status gkpsim_result_success_prob(const gkpsim_result* result, double* p);
GKPSIM_API gkpsim_status gkpsim_result_round_count(const gkpsim_result* result, int* count);
GKPSIM_API gkpsim_status gkpsim_result_round(const gkpsim_result* result, int index, gkpsim_round_record* out);
/* Per-round coding-mode snapshots (physical runs only; 0 otherwise). */
GKPSIM_API gkpsim_status gkpsim_result_snapshot_count(const gkpsim_result* result, int* count);
GKPSIM_API gkpsim_status gkpsim_result_snapshot(const gkpsim_result* result, int index, gkpsim_state** out);
GKPSIM_API gkpsim_status gkpsim_result_warning_count(const gkpsim_result* result, int* count);
GKPSIM_API gkpsim_status gkpsim_result_warning(const gkpsim_result* result, int index, char** out);

typedef enum gkpsim_export {
  GKPSIM_EXPORT_ROUNDS_JSON = 0,
  GKPSIM_EXPORT_TRAJECTORY_CSV = 1, /* physical runs */
  GKPSIM_EXPORT_SCHEDULE_JSON = 2,  /* physical runs: pulse segments; ideal runs: delta schedule */
  GKPSIM_EXPORT_SUMMARY_JSON = 3,
  GKPSIM_EXPORT_CONFIG_JSON = 4 /* resolved physical configuration */
} gkpsim_export;
GKPSIM_API gkpsim_status gkpsim_result_export(const gkpsim_result* result, gkpsim_export kind, char** out);

#ifdef __cplusplus
}
#endif

#endif /* GKPSIM_H */
