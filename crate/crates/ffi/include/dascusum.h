#ifndef DASCUSUM_H
#define DASCUSUM_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result codes. Zero is success.
typedef enum DascusumStatus {
  DASCUSUM_STATUS_OK = 0,
  DASCUSUM_STATUS_NULL_POINTER = 1,
  DASCUSUM_STATUS_INVALID_CONFIG = 2,
  DASCUSUM_STATUS_REJECTED_INPUT = 3,
  DASCUSUM_STATUS_INSUFFICIENT_DATA = 4,
  DASCUSUM_STATUS_DOMAIN = 5,
  DASCUSUM_STATUS_CALIBRATION = 6,
  DASCUSUM_STATUS_PARSE = 7,
  DASCUSUM_STATUS_IO = 8,
  DASCUSUM_STATUS_INTERNAL = 9,
} DascusumStatus;

typedef enum DascusumKind {
  DASCUSUM_KIND_CUSUM = 0,
  DASCUSUM_KIND_ADAPTIVE = 1,
  DASCUSUM_KIND_GLR = 2,
  DASCUSUM_KIND_DAS = 3,
} DascusumKind;

// Opaque streaming detector.
typedef struct DascusumDetector DascusumDetector;

// Detector settings. Start from [`dascusum_config_default`].
typedef struct DascusumConfig {
  double threshold;
  size_t window;
  double drift;
  // Set when `post_mean`/`post_variance` are meaningful (classical CUSUM).
  bool has_post_change;
  double post_mean;
  double post_variance;
  size_t glr_max_lookback;
  size_t glr_min_segment;
} DascusumConfig;

typedef struct DascusumEvent {
  uint64_t alarm_index;
  uint64_t decision_index;
  double adopted_mean;
  double adopted_variance;
} DascusumEvent;

typedef struct DascusumTuning {
  size_t window;
  double delta0;
  double drift;
  double threshold;
  double theoretical_edd;
  // Best window without the floor; equals `window` when the floor is slack.
  size_t unconstrained_window;
} DascusumTuning;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Fill `out` with the library defaults.
//
// # Safety
// `out` must be null or valid for writes.
enum DascusumStatus dascusum_config_default(struct DascusumConfig *out);

// Create a detector with pre-change distribution N(`pre_mean`, `pre_variance`).
//
// # Safety
// `config` must be null or point to a valid config; `out` must be null or
// valid for writes. On success `*out` owns a handle to pass to
// [`dascusum_detector_free`].
enum DascusumStatus dascusum_detector_new(enum DascusumKind kind,
                                          const struct DascusumConfig *config,
                                          double pre_mean,
                                          double pre_variance,
                                          struct DascusumDetector **out);

// Feed one sample. `*fired` is set to 1 and `*event` filled when the sample
// completes an alarm, otherwise `*fired` is 0 and `*event` untouched.
// Non-finite samples are rejected without changing the detector.
//
// # Safety
// `det` must be a live handle; `event` and `fired` must be valid for writes.
enum DascusumStatus dascusum_detector_push(struct DascusumDetector *det,
                                           double x,
                                           struct DascusumEvent *event,
                                           bool *fired);

// Current value of the detection statistic.
//
// # Safety
// `det` must be a live handle and `out` valid for writes.
enum DascusumStatus dascusum_detector_statistic(const struct DascusumDetector *det, double *out);

// Release a detector. Null is accepted and ignored.
//
// # Safety
// `det` must be null or a handle from [`dascusum_detector_new`] that has
// not been freed.
void dascusum_detector_free(struct DascusumDetector *det);

// Tune for target run length `gamma` and divergence `sym_div`. With
// `window == 0` the window is searched over `[w_floor, w_max]`.
//
// # Safety
// `out` must be valid for writes.
enum DascusumStatus dascusum_tune(double gamma,
                                  double sym_div,
                                  size_t window,
                                  size_t w_floor,
                                  size_t w_max,
                                  struct DascusumTuning *out);

// `D_KL(N(m1, v1) || N(m2, v2))`, or the symmetric sum when `symmetric`.
//
// # Safety
// `out` must be valid for writes.
enum DascusumStatus dascusum_kl(double m1,
                                double v1,
                                double m2,
                                double v2,
                                bool symmetric,
                                double *out);

// Message of the last failure on this thread, or null if none. The pointer
// stays valid until the next failing call on the same thread.
const char *dascusum_last_error(void);

// Static, human-readable name of a status code.
const char *dascusum_status_message(enum DascusumStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DASCUSUM_H */
