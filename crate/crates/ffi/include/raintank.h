#ifndef RAINTANK_H
#define RAINTANK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum RtStatus {
  RT_STATUS_OK = 0,
  RT_STATUS_NULL_POINTER = 1,
  RT_STATUS_INVALID_UTF8 = 2,
  RT_STATUS_INVALID_INPUT = 3,
  RT_STATUS_MALFORMED_CSV = 4,
  RT_STATUS_INSUFFICIENT_HISTORY = 5,
  RT_STATUS_NO_DEMAND = 6,
  RT_STATUS_PANIC = 7,
} RtStatus;

/**
 * Reliability rating band. `RT_LABEL_NONE` when no day had demand.
 */
typedef enum RtLabel {
  RT_LABEL_NONE = 0,
  RT_LABEL_UNLIKELY = 1,
  RT_LABEL_OCCASIONALLY = 2,
  RT_LABEL_FAIR = 3,
  RT_LABEL_GOOD = 4,
  RT_LABEL_VERY_GOOD = 5,
} RtLabel;

/**
 * Daily rainfall record.
 */
typedef struct RtRainfall RtRainfall;

/**
 * Catchment, runoff coefficient and tank.
 */
typedef struct RtSystem RtSystem;

/**
 * Reliability of a system against a rainfall record. `probability` is NaN
 * when `demand_days` is zero.
 */
typedef struct RtReliability {
  double probability;
  enum RtLabel label;
  uint64_t demand_days;
  uint64_t success_days;
  bool short_history;
} RtReliability;

/**
 * Pooled outcome of a forecast replayed over every historical year.
 */
typedef struct RtForecast {
  double probability;
  enum RtLabel label;
  uint64_t demand_days;
  uint64_t success_days;
  double min_end_water_l;
  uint32_t years_used;
  uint32_t years_skipped;
} RtForecast;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses `date,rain_mm` CSV text into a new rainfall handle.
 *
 * # Safety
 * `csv` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RtStatus rt_rainfall_from_csv(const char *csv, struct RtRainfall **out);

/**
 * Number of days in the record, or 0 for a null handle.
 *
 * # Safety
 * `rain` must be null or a live handle.
 */
size_t rt_rainfall_len(const struct RtRainfall *rain);

/**
 * # Safety
 * `rain` must be null or a handle not yet freed.
 */
void rt_rainfall_free(struct RtRainfall *rain);

/**
 * Creates a system from catchment area (m²), runoff coefficient and tank volume (L).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum RtStatus rt_system_new(double catchment_area_m2,
                            double runoff_coeff,
                            double tank_volume_l,
                            struct RtSystem **out);

/**
 * # Safety
 * `system` must be null or a handle not yet freed.
 */
void rt_system_free(struct RtSystem *system);

/**
 * Reliability under a constant daily demand (L/day), starting from an empty tank.
 *
 * # Safety
 * Handles must be live and `out` a valid pointer.
 */
enum RtStatus rt_reliability(const struct RtRainfall *rain,
                             const struct RtSystem *system,
                             double demand_l_per_day,
                             struct RtReliability *out);

/**
 * Probability of meeting a constant demand over `horizon_days` from
 * `start_date` (YYYY-MM-DD), given the water measured in the tank that day.
 *
 * # Safety
 * Handles must be live, `start_date` NUL-terminated and `out` a valid pointer.
 */
enum RtStatus rt_forecast(const struct RtRainfall *rain,
                          const struct RtSystem *system,
                          double demand_l_per_day,
                          const char *start_date,
                          double observed_water_l,
                          uint32_t horizon_days,
                          struct RtForecast *out);

/**
 * Rating band of a probability in [0, 1].
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum RtStatus rt_classify(double probability, enum RtLabel *out);

/**
 * Human-readable name of a label. The string is static; do not free it.
 */
const char *rt_label_name(enum RtLabel label);

/**
 * Copy of the last error message on this thread, or null if none.
 * Release it with [`rt_string_free`].
 */
char *rt_last_error_message(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void rt_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RAINTANK_H */
