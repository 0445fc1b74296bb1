/*
 * flowsentry - flow-based network anomaly detection toolkit.
 *
 * C interface to the flowsentry shared library. All functions return
 * FSN_OK (0) on success or a nonzero status; fsn_last_error() returns a
 * thread-local message for the most recent failure on the calling thread.
 * Objects returned through fsn_*_new / fsn_*_load are owned by the caller
 * and released with the matching free function.
 */

#ifndef FLOWSENTRY_H
#define FLOWSENTRY_H

#include <stddef.h>
#include <stdint.h>

#ifndef FSN_API
#define FSN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fsn_status {
  FSN_OK = 0,
  FSN_ERR_INVALID_ARGUMENT = 1,
  FSN_ERR_IO = 2,
  FSN_ERR_PARSE = 3,
  FSN_ERR_OUT_OF_ORDER_TIMESTAMP = 4,
  FSN_ERR_TOO_FEW_SAMPLES = 5,
  FSN_ERR_NO_CONVERGENCE = 6,
  FSN_ERR_EMPTY_SAMPLE = 7,
  FSN_ERR_EMPTY_INPUT = 8,
  FSN_ERR_MIXED_LABELS = 9,
  FSN_ERR_MISSING_SPEC = 10,
  FSN_ERR_SHAPE_MISMATCH = 11,
  FSN_ERR_SINGLE_CLASS_DATASET = 12,
  FSN_ERR_SINGLE_CLASS_TRUTH = 13,
  FSN_ERR_LENGTH_MISMATCH = 14,
  FSN_ERR_STORE_UNAVAILABLE = 15,
  FSN_ERR_UNKNOWN_KIND = 16,
  FSN_ERR_INTERNAL = 17
} fsn_status;

FSN_API const char* fsn_version(void);
FSN_API const char* fsn_status_name(fsn_status status);

/* Message for the last failing call on this thread; empty string if none. */
FSN_API const char* fsn_last_error(void);

/* ---- flow metering ------------------------------------------------- */

#define FSN_TCP_SYN 0x01u
#define FSN_TCP_FIN 0x02u
#define FSN_TCP_RST 0x04u
#define FSN_TCP_ACK 0x08u

typedef struct fsn_packet {
  int64_t timestamp_us;
  const char* src;
  const char* dst;
  uint16_t src_port;
  uint16_t dst_port;
  uint8_t protocol; /* IANA number; only 6 and 17 are metered */
  uint8_t tcp_flags;
} fsn_packet;

typedef enum fsn_termination {
  FSN_TERM_TCP_FIN = 0,
  FSN_TERM_TCP_RST = 1,
  FSN_TERM_TIMEOUT = 2,
  FSN_TERM_CAPTURE_END = 3
} fsn_termination;

/* The 20 feature values in feature CSV column order. */
typedef struct fsn_flow_features {
  double values[20];
  char key[96]; /* "src:sport>dst:dport/proto" */
  int64_t first_ts_us;
  int64_t last_ts_us;
  fsn_termination termination;
} fsn_flow_features;

typedef void (*fsn_flow_sink)(const fsn_flow_features* flow, void* user);

typedef struct fsn_meter fsn_meter;

/* idle_timeout_us <= 0 selects the 120 s default. */
FSN_API fsn_meter* fsn_meter_new(int64_t idle_timeout_us);
FSN_API void fsn_meter_free(fsn_meter* meter);

/* Packets must arrive in non-decreasing timestamp order. Flows terminated by
 * this packet (idle timeouts, FIN/RST teardown) are delivered to the sink. */
FSN_API fsn_status fsn_meter_ingest(fsn_meter* meter, const fsn_packet* packet,
                                    fsn_flow_sink sink, void* user);

/* Emits all still-open flows as capture-end terminations and empties the table. */
FSN_API fsn_status fsn_meter_finalize(fsn_meter* meter, fsn_flow_sink sink, void* user);

/* ---- Weibull baseline ---------------------------------------------- */

typedef struct fsn_weibull_params {
  double shape;
  double scale;
} fsn_weibull_params;

/* Maximum-likelihood fit over strictly positive samples (zeros dropped). */
FSN_API fsn_status fsn_weibull_fit(const double* samples, size_t count,
                                   fsn_weibull_params* out);

FSN_API fsn_status fsn_ks_distance(const double* samples, size_t count,
                                   fsn_weibull_params params, double* out);

/* Asymptotic 5% KS critical value 1.36/sqrt(window). */
FSN_API double fsn_default_ks_threshold(size_t window);

/* ---- evaluation ----------------------------------------------------- */

typedef struct fsn_eval_counts {
  uint64_t tp, fp, tn, fn; /* anomaly is the positive class */
} fsn_eval_counts;

/* truth_is_anomaly: 1 for anomaly, 0 for benign. Predicted positive means
 * score >= threshold. */
FSN_API fsn_status fsn_evaluate_counts(const double* scores, const int* truth_is_anomaly,
                                       size_t count, double threshold, fsn_eval_counts* out);

/* ---- classifier ------------------------------------------------------ */

typedef struct fsn_model fsn_model;

FSN_API fsn_status fsn_model_load(const char* path, fsn_model** out);
FSN_API void fsn_model_free(fsn_model* model);

/* rgb: row-major interleaved bytes, height*width*3; height and width must be
 * multiples of 4. Writes the anomaly score in [0,1]. */
FSN_API fsn_status fsn_model_score(const fsn_model* model, const uint8_t* rgb, int32_t height,
                                   int32_t width, double* score);

/* ---- command layer ---------------------------------------------------
 *
 * File-level pipeline stages, one per CLI subcommand. `options` is a
 * whitespace-separated key=value list (same syntax as --config files);
 * NULL means all defaults. Paths accept "-" for stdin/stdout.
 *
 *   synth          flows= seed= scenario= shape= scale= min-pkts= max-pkts=
 *                  tcp-fraction= arrival-mean= out= truth-out=
 *   meter          in= format=csv|pcap timeout-us= out= stats-out=
 *   features       in= labels= out=
 *   fit_baseline   in= label= now-us= out=
 *   detect_weibull in= baseline= window= threshold= out=
 *   encode         in= spec= spec-out= out-dir= manifest=
 *   train          manifest= epochs= batch= lr= momentum= seed=
 *                  train-frac= val-frac= test-frac= early-stop-val-acc=
 *                  out= log=
 *   predict        model= manifest= threshold= out=
 *   evaluate       in= threshold= out= table= pr-out=
 *   push_rules     store= now-us= out= apply= hits-out=
 *   pipeline       scenario= seed= out-dir= cycles= benign-flows=
 *                  attack-flows= window= threshold= interval-us= epochs=
 *                  batch= cnn= attack-cycles= timeout-us= ...
 */

FSN_API fsn_status fsn_cmd_synth(const char* options);
FSN_API fsn_status fsn_cmd_meter(const char* options);
FSN_API fsn_status fsn_cmd_features(const char* options);
FSN_API fsn_status fsn_cmd_fit_baseline(const char* options);
FSN_API fsn_status fsn_cmd_detect_weibull(const char* options);
FSN_API fsn_status fsn_cmd_encode(const char* options);
FSN_API fsn_status fsn_cmd_train(const char* options);
FSN_API fsn_status fsn_cmd_predict(const char* options);
FSN_API fsn_status fsn_cmd_evaluate(const char* options);
FSN_API fsn_status fsn_cmd_push_rules(const char* options);
FSN_API fsn_status fsn_cmd_pipeline(const char* options);

#ifdef __cplusplus
}
#endif

#endif /* FLOWSENTRY_H */
