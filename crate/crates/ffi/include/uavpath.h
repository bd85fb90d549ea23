#ifndef UAVPATH_H
#define UAVPATH_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum UavpathStatus {
  UAVPATH_STATUS_OK = 0,
  UAVPATH_STATUS_NULL_POINTER = 1,
  UAVPATH_STATUS_INVALID_ARGUMENT = 2,
  UAVPATH_STATUS_CONFIG = 3,
  UAVPATH_STATUS_IO = 4,
  UAVPATH_STATUS_CONTRACT = 5,
  UAVPATH_STATUS_PANIC = 6,
} UavpathStatus;

typedef enum UavpathRole {
  UAVPATH_ROLE_T1 = 0,
  UAVPATH_ROLE_T2 = 1,
  UAVPATH_ROLE_JAMMER = 2,
} UavpathRole;

typedef enum UavpathMission {
  UAVPATH_MISSION_ONGOING = 0,
  UAVPATH_MISSION_SUCCESS = 1,
  UAVPATH_MISSION_COLLISION = 2,
  UAVPATH_MISSION_TIMEOUT = 3,
} UavpathMission;

typedef struct UavpathPolicy UavpathPolicy;

/**
 * Simulator instance plus the observation histories used by the
 * history-based encoders.
 */
typedef struct UavpathWorld UavpathWorld;

typedef struct UavpathUavState {
  size_t id;
  enum UavpathRole role;
  double x;
  double y;
  double heading;
  double speed;
  double radius;
  double destination_x;
  double destination_y;
  bool alive;
  bool arrived;
  bool timed_out;
  double path_length;
  uint64_t collected_bits;
  uint64_t assigned_bits;
} UavpathUavState;

typedef struct UavpathMetrics {
  size_t episodes;
  size_t missions;
  double sr;
  double dr;
  double cr;
  double timeout_rate;
  double apl;
  double mean_sinr;
  double mean_jammer_distance;
  bool empty_success;
} UavpathMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *uavpath_version(void);

/**
 * Message of the last failure on this thread, or NULL. Valid until the next
 * failing call on the same thread.
 */
const char *uavpath_last_error(void);

/**
 * Writes the default scenario config as JSON. Release with [`uavpath_string_free`].
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum UavpathStatus uavpath_default_config(char **out);

/**
 * # Safety
 * `s` must come from this library or be NULL.
 */
void uavpath_string_free(char *s);

/**
 * Creates a world from a JSON scenario config.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `out` valid for a write.
 */
enum UavpathStatus uavpath_world_new(const char *config_json,
                                     uint64_t seed,
                                     struct UavpathWorld **out);

/**
 * # Safety
 * `world` must come from [`uavpath_world_new`] or be NULL; it must not be used afterwards.
 */
void uavpath_world_free(struct UavpathWorld *world);

/**
 * Restarts the episode with a new seed.
 *
 * # Safety
 * `world` must be a live handle.
 */
enum UavpathStatus uavpath_world_reset(struct UavpathWorld *world, uint64_t seed);

/**
 * # Safety
 * `world` must be a live handle; `out` valid for a write.
 */
enum UavpathStatus uavpath_world_uav_count(const struct UavpathWorld *world, size_t *out);

/**
 * Current step index.
 *
 * # Safety
 * `world` must be a live handle; `out` valid for a write.
 */
enum UavpathStatus uavpath_world_time(const struct UavpathWorld *world, uint32_t *out);

/**
 * # Safety
 * `world` must be a live handle; `out` valid for a write.
 */
enum UavpathStatus uavpath_world_uav_state(const struct UavpathWorld *world,
                                           size_t id,
                                           struct UavpathUavState *out);

/**
 * Size of UAV `id`'s current velocity set (valid actions are `0..count`).
 *
 * # Safety
 * `world` must be a live handle; `out` valid for a write.
 */
enum UavpathStatus uavpath_world_action_count(const struct UavpathWorld *world,
                                              size_t id,
                                              size_t *out);

/**
 * # Safety
 * `world` must be a live handle; `out` valid for a write.
 */
enum UavpathStatus uavpath_world_mission_status(const struct UavpathWorld *world,
                                                size_t id,
                                                enum UavpathMission *out);

/**
 * # Safety
 * `world` must be a live handle; `out` valid for a write.
 */
enum UavpathStatus uavpath_world_all_t1_done(const struct UavpathWorld *world, bool *out);

/**
 * Writes the ORCA action of every active T2 into `actions` (length `n`,
 * one entry per UAV); other entries are left untouched.
 *
 * # Safety
 * `world` must be a live handle; `actions` valid for `n` writes.
 */
enum UavpathStatus uavpath_world_fill_t2_actions(const struct UavpathWorld *world,
                                                 size_t *actions,
                                                 size_t n);

/**
 * Advances one step with one action per UAV (entries of inactive UAVs are ignored).
 *
 * # Safety
 * `world` must be a live handle; `actions` valid for `n` reads.
 */
enum UavpathStatus uavpath_world_step(struct UavpathWorld *world, const size_t *actions, size_t n);

/**
 * Loads a Q-network checkpoint.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` valid for a write.
 */
enum UavpathStatus uavpath_policy_load(const char *path, struct UavpathPolicy **out);

/**
 * # Safety
 * `policy` must come from [`uavpath_policy_load`] or be NULL; it must not be used afterwards.
 */
void uavpath_policy_free(struct UavpathPolicy *policy);

/**
 * # Safety
 * `policy` must be a live handle; outputs valid for writes.
 */
enum UavpathStatus uavpath_policy_shape(const struct UavpathPolicy *policy,
                                        size_t *input_width,
                                        size_t *action_count);

/**
 * Q-values for one observation.
 *
 * # Safety
 * `policy` must be a live handle; `x` valid for `n_in` reads, `q` for `n_out` writes.
 */
enum UavpathStatus uavpath_policy_forward(const struct UavpathPolicy *policy,
                                          const double *x,
                                          size_t n_in,
                                          double *q,
                                          size_t n_out);

/**
 * Greedy action of `policy` for UAV `id`, encoding the world with the
 * encoder that matches the policy's input width.
 *
 * # Safety
 * `policy` and `world` must be live handles; `out` valid for a write.
 */
enum UavpathStatus uavpath_policy_greedy_action(const struct UavpathPolicy *policy,
                                                const struct UavpathWorld *world,
                                                size_t id,
                                                size_t *out);

/**
 * Evaluates frozen policies over `episodes` seeded episodes. A NULL
 * `t1_policy` or `jammer_policy` flies straight to the goal.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; policy handles live or NULL; `out` valid for a write.
 */
enum UavpathStatus uavpath_evaluate(const char *config_json,
                                    const struct UavpathPolicy *t1_policy,
                                    const struct UavpathPolicy *jammer_policy,
                                    size_t episodes,
                                    uint64_t seed,
                                    struct UavpathMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UAVPATH_H */
