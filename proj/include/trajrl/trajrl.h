/* trajrl C API: camera-trajectory geometry rewards, metric-aware rescaling
 * and GRPO flow-matching training behind opaque handles.
 *
 * Conventions:
 *   - Every fallible function returns a trajrl_status; TRAJRL_OK is 0.
 *   - On failure, trajrl_last_error() returns a thread-local message that
 *     stays valid until the next failing call on the same thread.
 *   - Objects returned through out-parameters are owned by the caller and
 *     released with the matching *_free function. Strings returned through
 *     char** are released with trajrl_string_free.
 *   - Rotation matrices cross this boundary as 9 doubles, row-major.
 */
#ifndef TRAJRL_H
#define TRAJRL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TRAJRL_API __declspec(dllexport)
#else
#define TRAJRL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum trajrl_status {
    TRAJRL_OK = 0,
    TRAJRL_ERR_INVALID_ARGUMENT = 1,
    TRAJRL_ERR_PARSE = 2,
    TRAJRL_ERR_VALIDATION = 3,
    TRAJRL_ERR_CONFIG = 4,
    TRAJRL_ERR_IO = 5,
    TRAJRL_ERR_NUMERIC = 6,
    TRAJRL_ERR_DEGENERATE_SUPPORT = 7,
    TRAJRL_ERR_AMBIGUOUS_LOG = 8,
    TRAJRL_ERR_CHECKPOINT = 9,
    TRAJRL_ERR_INTERNAL = 10
} trajrl_status;

typedef struct trajrl_trajectory trajrl_trajectory;
typedef struct trajrl_config trajrl_config;
typedef struct trajrl_policy trajrl_policy;

TRAJRL_API const char* trajrl_version(void);
TRAJRL_API const char* trajrl_last_error(void);

/* --- trajectories -------------------------------------------------------- */

TRAJRL_API trajrl_status trajrl_trajectory_load(const char* path,
                                                trajrl_trajectory** out);
TRAJRL_API trajrl_status trajrl_trajectory_parse(const char* text,
                                                 trajrl_trajectory** out);
TRAJRL_API trajrl_status trajrl_trajectory_save(const trajrl_trajectory* t,
                                                const char* path);
TRAJRL_API trajrl_status trajrl_trajectory_serialize(const trajrl_trajectory* t,
                                                     char** out_text);
/* rotations: n*9 doubles row-major; translations: n*3 doubles. */
TRAJRL_API trajrl_status trajrl_trajectory_create(const double* rotations,
                                                  const double* translations,
                                                  size_t n_frames, double frame_rate,
                                                  trajrl_trajectory** out);
TRAJRL_API size_t trajrl_trajectory_frames(const trajrl_trajectory* t);
TRAJRL_API double trajrl_trajectory_frame_rate(const trajrl_trajectory* t);
TRAJRL_API trajrl_status trajrl_trajectory_pose(const trajrl_trajectory* t, size_t index,
                                                double rotation[9], double translation[3]);
TRAJRL_API void trajrl_trajectory_free(trajrl_trajectory* t);
TRAJRL_API void trajrl_string_free(char* s);

/* --- configuration -------------------------------------------------------- */

TRAJRL_API trajrl_status trajrl_config_create(trajrl_config** out);
TRAJRL_API trajrl_status trajrl_config_load(const char* path, trajrl_config** out);
/* Set/read one key using the config file syntax for values. */
TRAJRL_API trajrl_status trajrl_config_set(trajrl_config* cfg, const char* key,
                                           const char* value);
TRAJRL_API trajrl_status trajrl_config_text(const trajrl_config* cfg, char** out_text);
TRAJRL_API void trajrl_config_free(trajrl_config* cfg);

/* --- geometry reward ------------------------------------------------------ */

/* weight_schedule: "linear", "quadratic" or "uniform". */
TRAJRL_API trajrl_status trajrl_geometry_errors(const trajrl_trajectory* target,
                                                const trajrl_trajectory* estimated,
                                                const char* weight_schedule,
                                                double* d_trans, double* d_rot);
/* Unweighted per-frame deviations after gauge normalization. Both arrays
 * must hold trajrl_trajectory_frames(target) doubles. */
TRAJRL_API trajrl_status trajrl_frame_errors(const trajrl_trajectory* target,
                                             const trajrl_trajectory* estimated,
                                             double* trans_err, double* rot_err);
TRAJRL_API trajrl_status trajrl_noisy_estimate(const trajrl_trajectory* t,
                                               double sigma_trans, double sigma_rot,
                                               uint64_t seed, trajrl_trajectory** out);

/* --- rescaling ------------------------------------------------------------ */

TRAJRL_API trajrl_status trajrl_max_speeds(const trajrl_trajectory* t,
                                           double* v_trans_max, double* v_rot_max);
/* Draws target speeds from the config's truncated Gaussians and rescales.
 * stats (optional, 4 doubles): tau_trans, tau_rot, s_trans, s_rot. */
TRAJRL_API trajrl_status trajrl_rescale_sample(const trajrl_trajectory* t,
                                               const trajrl_config* cfg, uint64_t seed,
                                               trajrl_trajectory** out, double stats[4]);

/* --- synthetic banks ------------------------------------------------------ */

/* Entry `index` of the bank that bank_seed identifies; indices give
 * independent, reproducible trajectories. */
TRAJRL_API trajrl_status trajrl_synth_trajectory(int n_frames, uint64_t bank_seed,
                                                 size_t index, trajrl_trajectory** out);

/* --- policy --------------------------------------------------------------- */

/* Flow-matching pretraining on the scale-corrupted corpus built from the
 * bank. Uses cfg's architecture, epoch count and seed. */
TRAJRL_API trajrl_status trajrl_pretrain(const trajrl_config* cfg,
                                         const trajrl_trajectory* const* bank,
                                         size_t bank_len, trajrl_policy** out);
TRAJRL_API trajrl_status trajrl_policy_save(const trajrl_policy* p, const char* path);
TRAJRL_API trajrl_status trajrl_policy_load(const char* path, trajrl_policy** out);
TRAJRL_API void trajrl_policy_free(trajrl_policy* p);

/* One metrics line per iteration; the line does not include the trailing
 * newline. checkpoint_cb (nullable) fires every cfg checkpoint_period
 * iterations with a serialized checkpoint. */
typedef void (*trajrl_metrics_cb)(const char* line, void* user);
typedef void (*trajrl_checkpoint_cb)(int iteration, const char* checkpoint_text,
                                     void* user);
TRAJRL_API trajrl_status trajrl_train(trajrl_policy* p, const trajrl_config* cfg,
                                      const trajrl_trajectory* const* bank,
                                      size_t bank_len, trajrl_metrics_cb metrics_cb,
                                      void* metrics_user,
                                      trajrl_checkpoint_cb checkpoint_cb,
                                      void* checkpoint_user);

/* Samples one group of cfg group_size rollouts conditioned on `condition`
 * (rescaled through the config pipeline first when `apply_rescale` is
 * nonzero). Returns an array of trajectories; free each with
 * trajrl_trajectory_free and the array with trajrl_trajectory_array_free.
 * out_condition (nullable) receives the condition the policy actually saw,
 * i.e. the rescaled trajectory when apply_rescale is set. */
TRAJRL_API trajrl_status trajrl_rollout_group(const trajrl_policy* p,
                                              const trajrl_config* cfg,
                                              const trajrl_trajectory* condition,
                                              int apply_rescale, uint64_t seed,
                                              trajrl_trajectory*** out_rollouts,
                                              size_t* out_count,
                                              trajrl_trajectory** out_condition);
TRAJRL_API void trajrl_trajectory_array_free(trajrl_trajectory** rollouts, size_t count);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* TRAJRL_H */
