#ifndef TSGAME_H
#define TSGAME_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; the first four match the CLI exit codes.
 */
typedef enum TsgStatus {
  TSG_STATUS_OK = 0,
  TSG_STATUS_INVALID_INPUT = 1,
  TSG_STATUS_DEGENERATE = 2,
  TSG_STATUS_CHECK_FAILED = 3,
  TSG_STATUS_NULL_POINTER = 4,
  TSG_STATUS_BUFFER_TOO_SMALL = 5,
  TSG_STATUS_PANIC = 6,
} TsgStatus;

typedef enum TsgInfo {
  TSG_INFO_OL = 0,
  TSG_INFO_MPS = 1,
} TsgInfo;

/**
 * A validated game.
 */
typedef struct TsgGame TsgGame;

/**
 * A Nash candidate produced by [`tsg_solve`].
 */
typedef struct TsgSolution TsgSolution;

/**
 * Message of the last failed call on this thread, or an empty string. The
 * pointer stays valid until the next call into this library on the thread.
 */
const char *tsg_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tsg_version(void);

/**
 * Parses and validates a JSON game configuration.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TsgStatus tsg_game_from_json(const char *json, struct TsgGame **out);

/**
 * # Safety
 * `game` must come from [`tsg_game_from_json`] and not be used afterwards.
 */
void tsg_game_free(struct TsgGame *game);

/**
 * # Safety
 * `game` must be a valid handle or null.
 */
size_t tsg_game_players(const struct TsgGame *game);

/**
 * # Safety
 * `game` must be a valid handle or null.
 */
size_t tsg_game_state_dim(const struct TsgGame *game);

/**
 * Control dimension of player `player` (0-based); 0 when out of range.
 *
 * # Safety
 * `game` must be a valid handle or null.
 */
size_t tsg_game_control_dim(const struct TsgGame *game, size_t player);

/**
 * Number of time-scale points.
 *
 * # Safety
 * `game` must be a valid handle or null.
 */
size_t tsg_game_num_points(const struct TsgGame *game);

/**
 * Copies the time-scale points into `out`.
 *
 * # Safety
 * `game` must be a valid handle and `out` must hold `len` doubles.
 */
enum TsgStatus tsg_game_points(const struct TsgGame *game, double *out, size_t len);

/**
 * Solves `game` under `info`.
 *
 * # Safety
 * `game` must be a valid handle and `out` a valid pointer.
 */
enum TsgStatus tsg_solve(const struct TsgGame *game, enum TsgInfo info, struct TsgSolution **out);

/**
 * # Safety
 * `sol` must come from [`tsg_solve`] and not be used afterwards.
 */
void tsg_solution_free(struct TsgSolution *sol);

/**
 * Cost of player `player` (0-based).
 *
 * # Safety
 * `sol` must be a valid handle and `out` a valid pointer.
 */
enum TsgStatus tsg_solution_cost(const struct TsgSolution *sol, size_t player, double *out);

/**
 * Largest residual of the necessary conditions over all players; NaN for a
 * null handle.
 *
 * # Safety
 * `sol` must be a valid handle or null.
 */
double tsg_solution_max_residual(const struct TsgSolution *sol);

/**
 * State trajectory, `num_points * state_dim` values.
 *
 * # Safety
 * `sol` must be a valid handle and `out` must hold `len` doubles.
 */
enum TsgStatus tsg_solution_state(const struct TsgSolution *sol, double *out, size_t len);

/**
 * Controls of `player`, `num_points * control_dim` values; the last row is
 * unused by the dynamics.
 *
 * # Safety
 * `sol` must be a valid handle and `out` must hold `len` doubles.
 */
enum TsgStatus tsg_solution_control(const struct TsgSolution *sol,
                                    size_t player,
                                    double *out,
                                    size_t len);

/**
 * Costate of `player`, `num_points * state_dim` values.
 *
 * # Safety
 * `sol` must be a valid handle and `out` must hold `len` doubles.
 */
enum TsgStatus tsg_solution_costate(const struct TsgSolution *sol,
                                    size_t player,
                                    double *out,
                                    size_t len);

/**
 * Feedback gain `F(t_k)` of `player` (row-major, `control_dim * state_dim`).
 * Only MPS solutions carry gains.
 *
 * # Safety
 * `sol` must be a valid handle and `out` must hold `len` doubles.
 */
enum TsgStatus tsg_solution_gain(const struct TsgSolution *sol,
                                 size_t player,
                                 size_t k,
                                 double *out,
                                 size_t len);

/**
 * The `report.json` document for this solution. Release with
 * [`tsg_string_free`].
 *
 * # Safety
 * `sol` must be a valid handle and `out` a valid pointer.
 */
enum TsgStatus tsg_solution_report_json(const struct TsgSolution *sol, char **out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void tsg_string_free(char *s);

#endif  /* TSGAME_H */
