#ifndef WARD_MONITOR_H
#define WARD_MONITOR_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum WmStatus {
  WM_STATUS_OK = 0,
  WM_STATUS_NULL_POINTER = 1,
  WM_STATUS_INVALID_ARGUMENT = 2,
  WM_STATUS_NOT_FOUND = 3,
  WM_STATUS_IO = 4,
  WM_STATUS_FORMAT = 5,
  WM_STATUS_UNAVAILABLE = 6,
  WM_STATUS_PANIC = 7,
} WmStatus;

typedef enum WmQuality {
  WM_QUALITY_GOOD = 0,
  WM_QUALITY_DEGRADED = 1,
  WM_QUALITY_BAD = 2,
} WmQuality;

/**
 * Opaque activity classifier handle.
 */
typedef struct WmActivityModel WmActivityModel;

/**
 * Opaque forecaster handle.
 */
typedef struct WmForecastModel WmForecastModel;

typedef struct WmDemographics {
  uint32_t age_years;
  /**
   * 0 female, 1 male.
   */
  uint32_t sex;
  double height_cm;
  double weight_kg;
} WmDemographics;

typedef struct WmVitalSample {
  uint32_t minute_index;
  /**
   * NaN when `quality` is bad.
   */
  double heart_rate_bpm;
  double respiration_bpm;
  enum WmQuality quality;
} WmVitalSample;

typedef struct WmForecast {
  uint32_t issued_at_minute;
  double heart_rate[12];
  double respiration[12];
  bool clamped;
} WmForecast;

typedef struct WmActivityDecision {
  double probabilities[10];
  /**
   * Bit `i` set when label `i` is at or above the threshold.
   */
  uint32_t active_mask;
  uint32_t current_status;
} WmActivityDecision;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the next
 * call into this library on the same thread.
 */
const char *wm_last_error(void);

/**
 * Library version as a static string.
 */
const char *wm_version(void);

/**
 * Static name of the activity label with the given index, or null.
 */
const char *wm_activity_label_name(uint32_t index);

enum WmStatus wm_bmi(const struct WmDemographics *d, double *out);

/**
 * Vitals for one minute from chest and abdomen RSSI buffers.
 */
enum WmStatus wm_vitals_from_buffers(uint32_t minute,
                                     const double *chest,
                                     size_t chest_len,
                                     const double *abdomen,
                                     size_t abdomen_len,
                                     double sample_rate_hz,
                                     struct WmVitalSample *out);

/**
 * Loads a forecaster bundle directory. Release with [`wm_forecast_model_free`].
 */
enum WmStatus wm_forecast_model_load(const char *dir, struct WmForecastModel **out);

void wm_forecast_model_free(struct WmForecastModel *model);

/**
 * Forecast from per-minute history arrays (minute 0 first). Only the last
 * 75 minutes are used; NaN entries count as missing.
 */
enum WmStatus wm_forecast_predict(const struct WmForecastModel *model,
                                  const double *heart_rate,
                                  const double *respiration,
                                  size_t len,
                                  const struct WmDemographics *d,
                                  struct WmForecast *out);

/**
 * Loads an activity classifier bundle directory. Release with
 * [`wm_activity_model_free`].
 */
enum WmStatus wm_activity_model_load(const char *dir, struct WmActivityModel **out);

void wm_activity_model_free(struct WmActivityModel *model);

/**
 * Classifies one 24-value window feature vector.
 */
enum WmStatus wm_activity_classify(const struct WmActivityModel *model,
                                   const double *features,
                                   size_t len,
                                   struct WmActivityDecision *out);

/**
 * Sets the decision threshold of a loaded classifier; must lie in (0, 1).
 */
enum WmStatus wm_activity_set_threshold(struct WmActivityModel *model, double threshold);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WARD_MONITOR_H */
