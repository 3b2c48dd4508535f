#ifndef RELMOT_H
#define RELMOT_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RelmotStatus {
  RELMOT_STATUS_OK = 0,
  RELMOT_STATUS_NULL_POINTER = 1,
  RELMOT_STATUS_INVALID_ARGUMENT = 2,
  RELMOT_STATUS_INVALID_CONFIG = 3,
  RELMOT_STATUS_SEQUENCING = 4,
  RELMOT_STATUS_BUFFER_TOO_SMALL = 5,
  RELMOT_STATUS_INTERNAL = 6,
} RelmotStatus;

typedef enum RelmotTrackStatus {
  RELMOT_TRACK_STATUS_ACTIVE = 0,
  RELMOT_TRACK_STATUS_OCCLUDED = 1,
} RelmotTrackStatus;

/**
 * Opaque tracker configuration.
 */
typedef struct RelmotConfig RelmotConfig;

/**
 * Opaque tracker. Not safe for concurrent use; may move between threads.
 */
typedef struct RelmotTracker RelmotTracker;

/**
 * Box in center form: `(u, v)` is the center.
 */
typedef struct RelmotBox {
  double u;
  double v;
  double w;
  double h;
} RelmotBox;

typedef struct RelmotDetection {
  struct RelmotBox bbox;
  double score;
} RelmotDetection;

typedef struct RelmotRecord {
  uint64_t id;
  struct RelmotBox bbox;
  enum RelmotTrackStatus status;
  double score;
} RelmotRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *relmot_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *relmot_version(void);

/**
 * Default configuration. Free with `relmot_config_free`.
 */
struct RelmotConfig *relmot_config_new(void);

/**
 * # Safety
 * `config` must come from `relmot_config_new` and not be used afterwards.
 */
void relmot_config_free(struct RelmotConfig *config);

/**
 * Sets one configuration key, e.g. `"L_h"` to `"0.7"`. The config is left
 * unchanged on failure.
 *
 * # Safety
 * `config` must be a live handle; `key` and `value` NUL-terminated strings.
 */
enum RelmotStatus relmot_config_set(struct RelmotConfig *config,
                                    const char *key,
                                    const char *value);

/**
 * Creates a tracker. `config` may be null for the defaults.
 *
 * # Safety
 * `config` must be null or a live handle; `out` must be writable.
 */
enum RelmotStatus relmot_tracker_new(const struct RelmotConfig *config, struct RelmotTracker **out);

/**
 * # Safety
 * `tracker` must come from `relmot_tracker_new` and not be used afterwards.
 */
void relmot_tracker_free(struct RelmotTracker *tracker);

/**
 * Advances the tracker by one frame. Frames must strictly increase.
 * The number of reported tracks is written to `out_count`; fetch them with
 * `relmot_tracker_records`.
 *
 * # Safety
 * `tracker` must be a live handle; `detections` must point to `count`
 * elements (or be null when `count` is 0); `out_count` must be writable.
 */
enum RelmotStatus relmot_tracker_step(struct RelmotTracker *tracker,
                                      uint32_t frame,
                                      const struct RelmotDetection *detections,
                                      size_t count,
                                      size_t *out_count);

/**
 * Copies the records of the last step into `out`, sorted by id. Writes the
 * number of records to `out_len`; fails with `BufferTooSmall` (copying
 * nothing) when `capacity` is insufficient.
 *
 * # Safety
 * `tracker` must be a live handle; `out` must have room for `capacity`
 * records; `out_len` must be writable.
 */
enum RelmotStatus relmot_tracker_records(const struct RelmotTracker *tracker,
                                         struct RelmotRecord *out,
                                         size_t capacity,
                                         size_t *out_len);

/**
 * Intersection over union. Writes the value to `out`.
 *
 * # Safety
 * `out` must be writable.
 */
enum RelmotStatus relmot_iou(struct RelmotBox a, struct RelmotBox b, double *out);

/**
 * Normalized IoU of a detection against a prediction. Not symmetric.
 *
 * # Safety
 * `out` must be writable.
 */
enum RelmotStatus relmot_niou(struct RelmotBox det, struct RelmotBox pred, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RELMOT_H */
