#ifndef ERGOKIT_H
#define ERGOKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ErgoCommandKind {
  ERGO_COMMAND_KIND_DISPLACEMENT = 0,
  ERGO_COMMAND_KIND_TWIST = 1,
} ErgoCommandKind;

typedef enum ErgoLevel {
  ERGO_LEVEL_COMFORTABLE = 0,
  ERGO_LEVEL_CAUTION = 1,
  ERGO_LEVEL_UNCOMFORTABLE = 2,
} ErgoLevel;

typedef enum ErgoSense {
  /**
   * Larger is better.
   */
  ERGO_SENSE_COMFORT = 0,
  /**
   * Larger is worse.
   */
  ERGO_SENSE_DIVERGENCE = 1,
} ErgoSense;

/**
 * Result code of every fallible call.
 */
typedef enum ErgoStatus {
  ERGO_STATUS_OK = 0,
  ERGO_STATUS_NULL_POINTER = 1,
  ERGO_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed recording text.
   */
  ERGO_STATUS_PARSE = 3,
  /**
   * Argument outside the operation's domain.
   */
  ERGO_STATUS_CONTRACT = 4,
  /**
   * Invalid skeleton or mapper configuration.
   */
  ERGO_STATUS_CONFIG = 5,
  ERGO_STATUS_DATA = 6,
  ERGO_STATUS_IO = 7,
  /**
   * Internal panic caught at the boundary.
   */
  ERGO_STATUS_PANIC = 8,
} ErgoStatus;

typedef struct ErgoCopMapper ErgoCopMapper;

typedef struct ErgoMouseMapper ErgoMouseMapper;

typedef struct ErgoRecording ErgoRecording;

typedef struct ErgoSkeleton ErgoSkeleton;

typedef struct ErgoMouseSample {
  double t;
  double dp_raw[3];
  double de_raw[3];
  bool left_button;
  bool right_button;
} ErgoMouseSample;

/**
 * Mapper output. Displacements fill all six slots; twists use slot 0
 * (vx), 1 (vy) and 5 (wz).
 */
typedef struct ErgoCommand {
  enum ErgoCommandKind kind;
  double axes[6];
} ErgoCommand;

typedef struct ErgoTwist {
  double vx;
  double vy;
  double wz;
} ErgoTwist;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *ergo_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ergo_version(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void ergo_string_free(char *s);

/**
 * Built-in skeleton model.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum ErgoStatus ergo_skeleton_default(struct ErgoSkeleton **out);

/**
 * Parses and validates a skeleton from TOML text.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` valid for writes.
 */
enum ErgoStatus ergo_skeleton_from_toml(const char *toml, struct ErgoSkeleton **out);

/**
 * Loads and validates a skeleton file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` valid for writes.
 */
enum ErgoStatus ergo_skeleton_load(const char *path, struct ErgoSkeleton **out);

/**
 * Number of evaluated joints; 0 for a null handle.
 *
 * # Safety
 * `skeleton` must be null or a live handle.
 */
size_t ergo_skeleton_joint_count(const struct ErgoSkeleton *skeleton);

/**
 * # Safety
 * `skeleton` must be null or a live handle, freed once.
 */
void ergo_skeleton_free(struct ErgoSkeleton *skeleton);

/**
 * Reads an `.ergframes` file.
 *
 * # Safety
 * `path` must be a NUL-terminated string, `skeleton` a live handle and
 * `out` valid for writes.
 */
enum ErgoStatus ergo_recording_read(const char *path,
                                    const struct ErgoSkeleton *skeleton,
                                    bool ignore_unknown_ids,
                                    struct ErgoRecording **out);

/**
 * Parses `.ergframes` text held in memory.
 *
 * # Safety
 * As [`ergo_recording_read`], with `text` in place of `path`.
 */
enum ErgoStatus ergo_recording_parse(const char *text,
                                     const struct ErgoSkeleton *skeleton,
                                     bool ignore_unknown_ids,
                                     struct ErgoRecording **out);

/**
 * Frame count; 0 for a null handle.
 *
 * # Safety
 * `recording` must be null or a live handle.
 */
size_t ergo_recording_frame_count(const struct ErgoRecording *recording);

/**
 * # Safety
 * `recording` must be null or a live handle, freed once.
 */
void ergo_recording_free(struct ErgoRecording *recording);

/**
 * Session aggregates of a recording as a JSON array. With `marks_window`
 * the averages span the first to last task mark, otherwise the whole
 * recording. Free the result with [`ergo_string_free`].
 *
 * # Safety
 * Handles must be live; `out_json` valid for writes.
 */
enum ErgoStatus ergo_analyze_json(const struct ErgoRecording *recording,
                                  const struct ErgoSkeleton *skeleton,
                                  double w_eta,
                                  bool marks_window,
                                  char **out_json);

/**
 * Distance between two quaternions given as `[w, x, y, z]`.
 *
 * # Safety
 * `a` and `b` must point to 4 doubles; `out` valid for writes.
 */
enum ErgoStatus ergo_quat_distance(const double *a, const double *b, double *out);

/**
 * Grades a normalized value against `green`/`yellow` thresholds. `sense`
 * takes an [`ErgoSense`] value.
 *
 * # Safety
 * Out pointers must be valid for writes.
 */
enum ErgoStatus ergo_score(double value,
                           double green,
                           double yellow,
                           int32_t sense,
                           enum ErgoLevel *out_level,
                           double *out_percent);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum ErgoStatus ergo_reduction_percent(double baseline, double improved, double *out);

/**
 * # Safety
 * `radii` must point to `n` doubles; `out` valid for writes.
 */
enum ErgoStatus ergo_polar_polygon_area(const double *radii, size_t n, double *out);

/**
 * Mouse mapper with moving-average length `window` and raw `fullscale`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum ErgoStatus ergo_mouse_new(size_t window, double fullscale, struct ErgoMouseMapper **out);

/**
 * # Safety
 * `mapper` must be a live handle, `sample` readable, `out` writable.
 */
enum ErgoStatus ergo_mouse_process(struct ErgoMouseMapper *mapper,
                                   const struct ErgoMouseSample *sample,
                                   struct ErgoCommand *out);

/**
 * # Safety
 * `mapper` must be null or a live handle, freed once.
 */
void ergo_mouse_free(struct ErgoMouseMapper *mapper);

/**
 * CoP mapper with a square deadzone of half-width `deadzone`. A null
 * `params_toml` selects the default parameters.
 *
 * # Safety
 * `params_toml` must be null or NUL-terminated; `out` valid for writes.
 */
enum ErgoStatus ergo_cop_new(const char *params_toml, double deadzone, struct ErgoCopMapper **out);

/**
 * Feeds one CoP sample (`cop` and its rate, 2 doubles each). The first
 * sample fixes the anchor.
 *
 * # Safety
 * `mapper` must be a live handle; array pointers readable; `out` writable.
 */
enum ErgoStatus ergo_cop_step(struct ErgoCopMapper *mapper,
                              const double *cop,
                              const double *cop_rate,
                              struct ErgoTwist *out);

/**
 * # Safety
 * `mapper` must be null or a live handle, freed once.
 */
void ergo_cop_free(struct ErgoCopMapper *mapper);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ERGOKIT_H */
