#ifndef STEALTHSIM_H
#define STEALTHSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Length of the PSS and SSS sequences.
 */
#define STS_SEQ_LEN 127

typedef enum StsStatus {
  STS_STATUS_OK = 0,
  STS_STATUS_NULL_POINTER = 1,
  STS_STATUS_INVALID_ARGUMENT = 2,
  STS_STATUS_INVALID_CONFIG = 3,
  STS_STATUS_IO = 4,
  STS_STATUS_NUMERICAL = 5,
  STS_STATUS_PANIC = 6,
} StsStatus;

typedef enum StsMode {
  STS_MODE_BASELINE = 0,
  STS_MODE_CSI = 1,
  STS_MODE_BOTH = 2,
} StsMode;

typedef enum StsDetector {
  STS_DETECTOR_ENERGY = 0,
  STS_DETECTOR_CORRELATOR = 1,
} StsDetector;

typedef enum StsObserver {
  STS_OBSERVER_UE = 0,
  STS_OBSERVER_EVE = 1,
} StsObserver;

/**
 * Finished campaign handle.
 */
typedef struct StsCampaign StsCampaign;

/**
 * Scenario configuration handle.
 */
typedef struct StsConfig StsConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *sts_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sts_version(void);

/**
 * Default configuration (16-port gNB, 28 dBm).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum StsStatus sts_config_default(struct StsConfig **out);

/**
 * Parses a JSON configuration; absent keys take their defaults.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum StsStatus sts_config_from_json(const char *json, struct StsConfig **out);

/**
 * Serializes the configuration to JSON. Release `*out` with [`sts_string_free`].
 *
 * # Safety
 * `cfg` must come from this library; `out` must be a valid pointer.
 */
enum StsStatus sts_config_to_json(const struct StsConfig *cfg, char **out);

/**
 * # Safety
 * `cfg` must come from this library.
 */
enum StsStatus sts_config_set_trials(struct StsConfig *cfg, size_t n_trials);

/**
 * # Safety
 * `cfg` must come from this library.
 */
enum StsStatus sts_config_set_seed(struct StsConfig *cfg, uint64_t seed);

/**
 * Sets the gNB panel and, when known for that panel, its default transmit power.
 *
 * # Safety
 * `cfg` must come from this library.
 */
enum StsStatus sts_config_set_gnb_array(struct StsConfig *cfg,
                                        size_t rows,
                                        size_t cols,
                                        size_t pols);

/**
 * # Safety
 * `cfg` must come from this library.
 */
enum StsStatus sts_config_set_tx_power_dbm(struct StsConfig *cfg, double dbm);

/**
 * # Safety
 * `cfg` must come from this library or be NULL.
 */
void sts_config_free(struct StsConfig *cfg);

/**
 * Runs a campaign. `threads` = 0 uses the environment or all cores.
 *
 * # Safety
 * `cfg` must come from this library; `out` must be a valid pointer.
 */
enum StsStatus sts_campaign_run(const struct StsConfig *cfg,
                                enum StsMode mode,
                                size_t threads,
                                struct StsCampaign **out);

/**
 * Detection probability at a false-alarm target.
 *
 * # Safety
 * `c` must come from this library; `out` must be a valid pointer.
 */
enum StsStatus sts_campaign_pd_at_pfa(const struct StsCampaign *c,
                                      enum StsMode mode,
                                      enum StsDetector detector,
                                      enum StsObserver observer,
                                      double pfa,
                                      double *out);

/**
 * Area under the ROC curve.
 *
 * # Safety
 * `c` must come from this library; `out` must be a valid pointer.
 */
enum StsStatus sts_campaign_auc(const struct StsCampaign *c,
                                enum StsMode mode,
                                enum StsDetector detector,
                                enum StsObserver observer,
                                double *out);

/**
 * Writes the ROC CSV of a campaign.
 *
 * # Safety
 * `c` must come from this library; `path` must be a NUL-terminated string.
 */
enum StsStatus sts_campaign_write_roc_csv(const struct StsCampaign *c, const char *path);

/**
 * # Safety
 * `c` must come from this library or be NULL.
 */
void sts_campaign_free(struct StsCampaign *c);

/**
 * # Safety
 * `s` must come from this library or be NULL.
 */
void sts_string_free(char *s);

/**
 * PSS for `n_id_2` into `out[STS_SEQ_LEN]`, entries +1/-1.
 *
 * # Safety
 * `out` must point to `STS_SEQ_LEN` writable bytes.
 */
enum StsStatus sts_gen_pss(uint8_t n_id_2, int8_t *out);

/**
 * SSS for a physical cell identity (0..=1007) into `out[STS_SEQ_LEN]`.
 *
 * # Safety
 * `out` must point to `STS_SEQ_LEN` writable bytes.
 */
enum StsStatus sts_gen_sss(uint16_t pci, int8_t *out);

/**
 * UMi LOS path loss in dB.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum StsStatus sts_pathloss_db(double distance_m, double carrier_ghz, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STEALTHSIM_H */
