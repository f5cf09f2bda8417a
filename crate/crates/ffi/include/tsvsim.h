#ifndef TSVSIM_H
#define TSVSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of crosstalk classes and of histogram bins in `TsvRunSummary`.
 */
#define TSV_CLASS_COUNT 40

/**
 * Passed as `st` to select the uncoded link.
 */
#define TSV_UNCODED -1

/**
 * Bus delay aggregation: maximum over data TSVs.
 */
#define TSV_AGGREGATE_MAX 0

/**
 * Bus delay aggregation: mean over data TSVs.
 */
#define TSV_AGGREGATE_MEAN 1

/**
 * Result of every fallible call.
 */
typedef enum TsvStatus {
  TSV_STATUS_OK = 0,
  TSV_STATUS_NULL_POINTER = 1,
  TSV_STATUS_INVALID_ARGUMENT = 2,
  TSV_STATUS_PARSE = 3,
  TSV_STATUS_DECODER_MISMATCH = 4,
  TSV_STATUS_PANIC = 5,
} TsvStatus;

/**
 * Receiver side of a link.
 */
typedef struct TsvDecoder TsvDecoder;

/**
 * Transmitter side of a link.
 */
typedef struct TsvEncoder TsvEncoder;

/**
 * A grid layout. Immutable once created.
 */
typedef struct TsvLayout TsvLayout;

typedef struct TsvRunSummary {
  uint64_t cycles;
  double mean_bus_delay;
  double max_bus_delay;
  /**
   * Mean delay over the uncoded baseline on the same trace; NaN when the
   * baseline has zero delay.
   */
  double normalized_delay;
  double retention_rate;
  uint64_t control_transitions;
  uint64_t class_histogram[TSV_CLASS_COUNT];
} TsvRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *tsv_last_error(void);

/**
 * Creates a layout. `cols == 0` picks the smallest width that fits
 * `bitwidth` bits; `snake` selects snake bit order instead of row-major.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum TsvStatus tsv_layout_new(size_t rows,
                              size_t cols,
                              size_t bitwidth,
                              bool snake,
                              struct TsvLayout **out);

/**
 * # Safety
 * `layout` must come from `tsv_layout_new` and not be used afterwards.
 */
void tsv_layout_free(struct TsvLayout *layout);

/**
 * # Safety
 * `layout` must be a live handle.
 */
size_t tsv_layout_tsv_count(const struct TsvLayout *layout);

/**
 * Victims, which equals the number of control TSVs.
 *
 * # Safety
 * `layout` must be a live handle.
 */
size_t tsv_layout_victim_count(const struct TsvLayout *layout);

/**
 * # Safety
 * `layout` must be a live handle.
 */
double tsv_layout_overhead_percent(const struct TsvLayout *layout);

/**
 * Classifies the center of a 3x3 cluster. `prev` and `next` hold nine
 * levels in row-major order.
 *
 * # Safety
 * `prev` and `next` must point to 9 bytes; outputs must be valid for writes.
 */
enum TsvStatus tsv_classify(const uint8_t *prev,
                            const uint8_t *next,
                            uint8_t *class_out,
                            double *coefficient_out);

/**
 * Delay of the center TSV of a 3x3 cluster; zero when it does not switch.
 *
 * # Safety
 * `prev` and `next` must point to 9 bytes; `delay_out` must be valid for writes.
 */
enum TsvStatus tsv_delay3d(const uint8_t *prev,
                           const uint8_t *next,
                           double lambda1,
                           double lambda2,
                           double pi0,
                           double *delay_out);

/**
 * Creates an encoder at its reset state. `st` is the switching threshold,
 * or `TSV_UNCODED`.
 *
 * # Safety
 * `layout` must be a live handle and `out` valid for writes.
 */
enum TsvStatus tsv_encoder_new(const struct TsvLayout *layout, int32_t st, struct TsvEncoder **out);

/**
 * # Safety
 * `encoder` must come from `tsv_encoder_new` and not be used afterwards.
 */
void tsv_encoder_free(struct TsvEncoder *encoder);

/**
 * Encodes one word. Writes one level per TSV to `wire_out` and one per
 * control TSV to `control_out`; `retained_out` (may be NULL) receives the
 * number of suppressed victim transitions.
 *
 * # Safety
 * `word` must hold `word_len` bytes; `wire_out` and `control_out` must hold
 * `tsv_layout_tsv_count` and `tsv_layout_victim_count` bytes.
 */
enum TsvStatus tsv_encoder_encode(struct TsvEncoder *encoder,
                                  const uint8_t *word,
                                  size_t word_len,
                                  uint8_t *wire_out,
                                  uint8_t *control_out,
                                  size_t *retained_out);

/**
 * Creates a decoder at its reset state. `st` must match the encoder's.
 *
 * # Safety
 * `layout` must be a live handle and `out` valid for writes.
 */
enum TsvStatus tsv_decoder_new(const struct TsvLayout *layout, int32_t st, struct TsvDecoder **out);

/**
 * # Safety
 * `decoder` must come from `tsv_decoder_new` and not be used afterwards.
 */
void tsv_decoder_free(struct TsvDecoder *decoder);

/**
 * Recovers a word from observed levels into `word_out`.
 *
 * # Safety
 * `wire` and `control` must hold `tsv_layout_tsv_count` and
 * `tsv_layout_victim_count` bytes; `word_out` must hold `word_len` bytes.
 */
enum TsvStatus tsv_decoder_decode(struct TsvDecoder *decoder,
                                  const uint8_t *wire,
                                  const uint8_t *control,
                                  uint8_t *word_out,
                                  size_t word_len);

/**
 * Replays a text trace on a `rows`-row grid (`cols == 0` sizes it to the
 * trace) and fills `summary`. The uncoded baseline is replayed as well to
 * compute the normalized delay.
 *
 * # Safety
 * `text` must hold `text_len` bytes and `summary` must be valid for writes.
 */
enum TsvStatus tsv_simulate_text(const uint8_t *text,
                                 size_t text_len,
                                 size_t rows,
                                 size_t cols,
                                 int32_t st,
                                 uint32_t aggregation,
                                 struct TsvRunSummary *summary);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TSVSIM_H */
