#ifndef GSGI_H
#define GSGI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GsgiStatus {
  GSGI_STATUS_OK = 0,
  GSGI_STATUS_NULL_POINTER = 1,
  GSGI_STATUS_CONFIG = 2,
  GSGI_STATUS_BUDGET = 3,
  GSGI_STATUS_INVALID_ARGUMENT = 4,
  GSGI_STATUS_TERMINAL_STATE = 5,
  GSGI_STATUS_IO = 6,
  GSGI_STATUS_PANIC = 7,
} GsgiStatus;

// Map kinds for `gsgi_config_preset`.
typedef enum GsgiMapKind {
  GSGI_MAP_KIND_UNIFORM = 0,
  GSGI_MAP_KIND_GAUSSIAN_MIXTURE = 1,
} GsgiMapKind;

// Immutable game definition.
typedef struct GsgiConfig GsgiConfig;

// One running episode.
typedef struct GsgiSimulator GsgiSimulator;

// Outcome of one simulator step.
typedef struct GsgiStep {
  double reward;
  bool terminal;
  bool caught;
  uint32_t triggered;
  uint32_t removed;
} GsgiStep;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread; valid until the next call
// that fails. Never null.
const char *gsgi_last_error(void);

// Library version as a static NUL-terminated string.
const char *gsgi_version(void);

// Square preset grid with corner entries and a central post.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum GsgiStatus gsgi_config_preset(uint32_t size,
                                   enum GsgiMapKind kind,
                                   uint64_t seed,
                                   struct GsgiConfig **out);

// Parse a JSON game configuration.
//
// # Safety
// `json` must be a NUL-terminated string and `out` writable.
enum GsgiStatus gsgi_config_from_json(const char *json, struct GsgiConfig **out);

// Grid size, horizon and tool count of a configuration; any output
// pointer may be null.
//
// # Safety
// `cfg` must come from a `gsgi_config_*` constructor.
enum GsgiStatus gsgi_config_dims(const struct GsgiConfig *cfg,
                                 uint32_t *rows,
                                 uint32_t *cols,
                                 uint32_t *horizon,
                                 uint32_t *tools);

// # Safety
// `cfg` must be null or a handle not yet freed.
void gsgi_config_free(struct GsgiConfig *cfg);

// Start an episode at entry point `entry` (an index into the config's
// entry list). Triggers are drawn from `seed`.
//
// # Safety
// `cfg` must be a live config handle and `out` writable.
enum GsgiStatus gsgi_sim_new(const struct GsgiConfig *cfg,
                             uint32_t entry,
                             uint64_t seed,
                             struct GsgiSimulator **out);

// Advance one step. `defender_move` is 0..5 (up, down, left, right, stay);
// `attacker_action` is `move * 2 + place`.
//
// # Safety
// `sim` must be a live simulator handle and `out` null or writable.
enum GsgiStatus gsgi_sim_step(struct GsgiSimulator *sim,
                              uint32_t defender_move,
                              uint32_t attacker_action,
                              struct GsgiStep *out);

// Time step, positions as row-major cell indices, tools in hand and the
// cumulative defender reward; any output pointer may be null.
//
// # Safety
// `sim` must be a live simulator handle.
enum GsgiStatus gsgi_sim_state(const struct GsgiSimulator *sim,
                               uint32_t *t,
                               uint32_t *defender_cell,
                               uint32_t *attacker_cell,
                               uint32_t *tools_remaining,
                               double *cumulative_reward);

// Footprint bits the given side (0 defender, 1 attacker) sees in its cell.
//
// # Safety
// `sim` must be a live simulator handle and `out` writable.
enum GsgiStatus gsgi_sim_visible_bits(const struct GsgiSimulator *sim, uint32_t side, uint8_t *out);

// # Safety
// `sim` must be null or a handle not yet freed.
void gsgi_sim_free(struct GsgiSimulator *sim);

// Mean defender utility and its standard error of two policies given as
// policy specs (`random-sweep`, `heuristic-attacker`, `net:PATH`, ...).
//
// # Safety
// Strings must be NUL-terminated; `mean` and `std_error` writable.
enum GsgiStatus gsgi_evaluate(const struct GsgiConfig *cfg,
                              const char *defender,
                              const char *attacker,
                              uint32_t episodes,
                              uint64_t seed,
                              double *mean,
                              double *std_error);

// Solve the zero-sum game with row-major defender payoffs `g` (`rows` x
// `cols`). Writes the defender mixture to `defender[rows]`, the attacker
// mixture to `attacker[cols]` and the value.
//
// # Safety
// `g` must hold `rows * cols` doubles; outputs must be writable with the
// stated lengths.
enum GsgiStatus gsgi_solve_zero_sum(const double *g,
                                    size_t rows,
                                    size_t cols,
                                    double *defender,
                                    double *attacker,
                                    double *value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GSGI_H */
