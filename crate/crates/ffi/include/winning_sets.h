#ifndef WINNING_SETS_H
#define WINNING_SETS_H

#include <stddef.h>
#include <stdint.h>

typedef enum WsCommand {
  WS_COMMAND_PLAY = 0,
  WS_COMMAND_SWEEP = 1,
  WS_COMMAND_BUILD_CANTOR = 2,
  WS_COMMAND_VERIFY = 3,
  WS_COMMAND_DIM = 4,
  WS_COMMAND_RENDER = 5,
} WsCommand;

// Shape of a move passed to [`ws_transcript_push`].
typedef enum WsMoveKind {
  WS_MOVE_KIND_BOB_BALL = 0,
  WS_MOVE_KIND_ALICE_BALL = 1,
  WS_MOVE_KIND_ALICE_COLLECTION = 2,
  WS_MOVE_KIND_ALICE_REMOVAL_SET = 3,
} WsMoveKind;

typedef enum WsSpace {
  WS_SPACE_REAL_LINE = 0,
  WS_SPACE_SHIFT = 1,
} WsSpace;

typedef enum WsStatus {
  WS_STATUS_OK = 0,
  WS_STATUS_NULL_POINTER = 1,
  WS_STATUS_INVALID_UTF8 = 2,
  WS_STATUS_BUFFER_TOO_SMALL = 3,
  WS_STATUS_PARSE = 4,
  WS_STATUS_INVALID_PARAMETER = 5,
  WS_STATUS_DEPTH_NOT_BUILT = 6,
  WS_STATUS_WRONG_SPACE = 7,
  WS_STATUS_NUMERICALLY_AMBIGUOUS = 8,
  WS_STATUS_STRATEGY_FAULT = 9,
  WS_STATUS_CONSTRUCTION_INVALID = 10,
  WS_STATUS_CHECK_FAILED = 11,
  WS_STATUS_UNKNOWN_STRATEGY = 12,
  WS_STATUS_PANIC = 13,
  WS_STATUS_OTHER = 14,
} WsStatus;

typedef enum WsVariant {
  WS_VARIANT_CLASSIC = 0,
  WS_VARIANT_STRONG = 1,
  WS_VARIANT_WEAK = 2,
  WS_VARIANT_VERY_STRONG = 3,
} WsVariant;

typedef enum WsVerdict {
  WS_VERDICT_LEGAL = 0,
  WS_VERDICT_ILLEGAL = 1,
  WS_VERDICT_DEFAULT_WIN_ALICE = 2,
} WsVerdict;

// A Cantor construction.
typedef struct WsConstruction WsConstruction;

// A refereed game in progress.
typedef struct WsTranscript WsTranscript;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// A static description of `status`.
const char *ws_status_message(enum WsStatus status);

// The message of the last failed call on this thread (empty if none).
//
// # Safety
// `buf` must point to `cap` writable bytes or be null; `needed` may be null.
enum WsStatus ws_last_error(char *buf, size_t cap, size_t *needed);

// Builds `golden`, `middle-thirds`, `full-shift` or `avoid:<bits>` to `depth`.
//
// # Safety
// `name` must be a NUL-terminated string; `out_handle` must be writable.
enum WsStatus ws_construction_builtin(const char *name,
                                      size_t depth,
                                      struct WsConstruction **out_handle);

// Loads a construction from its text dump.
//
// # Safety
// `dump` must be a NUL-terminated string; `out_handle` must be writable.
enum WsStatus ws_construction_load(const char *dump, struct WsConstruction **out_handle);

// Releases a construction. Null is ignored.
//
// # Safety
// `h` must come from this library and not be used afterwards.
void ws_construction_free(struct WsConstruction *h);

// # Safety
// `h` must be a live handle; `out_depth` must be writable.
enum WsStatus ws_construction_depth(const struct WsConstruction *h, size_t *out_depth);

// # Safety
// `h` must be a live handle; `out_count` must be writable.
enum WsStatus ws_construction_survivor_count(const struct WsConstruction *h,
                                             size_t depth,
                                             size_t *out_count);

// The text dump accepted by [`ws_construction_load`].
//
// # Safety
// `h` must be a live handle; `buf` must hold `cap` bytes or be null.
enum WsStatus ws_construction_dump(const struct WsConstruction *h,
                                   char *buf,
                                   size_t cap,
                                   size_t *needed);

// SVG of levels `0..=depth`.
//
// # Safety
// `h` must be a live handle; `buf` must hold `cap` bytes or be null.
enum WsStatus ws_construction_render_svg(const struct WsConstruction *h,
                                         size_t depth,
                                         char *buf,
                                         size_t cap,
                                         size_t *needed);

// Box-dimension estimate from survivor counts at depths `lo..=hi`.
//
// # Safety
// `h` must be a live handle; `out_estimate` must be writable.
enum WsStatus ws_construction_box_dimension(const struct WsConstruction *h,
                                            size_t lo,
                                            size_t hi,
                                            double *out_estimate);

// Writes `"<alpha> <beta>"`, the lifted parameters of `(alpha0, beta0)`.
//
// # Safety
// Inputs must be NUL-terminated; `buf` must hold `cap` bytes or be null.
enum WsStatus ws_schmidt_lift(const char *alpha0,
                              const char *beta0,
                              char *buf,
                              size_t cap,
                              size_t *needed);

// An empty Schmidt-game transcript.
//
// # Safety
// Scalars are NUL-terminated rationals like `"1/3"`; `out_handle` must be writable.
enum WsStatus ws_transcript_schmidt(enum WsSpace sp,
                                    enum WsVariant variant,
                                    const char *alpha,
                                    const char *beta,
                                    struct WsTranscript **out_handle);

// An empty absolute-game transcript.
//
// # Safety
// See [`ws_transcript_schmidt`].
enum WsStatus ws_transcript_absolute(enum WsSpace sp,
                                     const char *beta,
                                     struct WsTranscript **out_handle);

// An empty potential-game transcript.
//
// # Safety
// See [`ws_transcript_schmidt`].
enum WsStatus ws_transcript_potential(enum WsSpace sp,
                                      const char *c,
                                      const char *beta,
                                      struct WsTranscript **out_handle);

// An empty Cantor-game transcript.
//
// # Safety
// See [`ws_transcript_schmidt`].
enum WsStatus ws_transcript_cantor(enum WsSpace sp,
                                   const char *eps,
                                   uint64_t modulus,
                                   struct WsTranscript **out_handle);

// Releases a transcript. Null is ignored.
//
// # Safety
// `h` must come from this library and not be used afterwards.
void ws_transcript_free(struct WsTranscript *h);

// Referees and appends a move. `balls` is a whitespace-separated list such
// as `"R:1/2:1/4"` or `"S:01 S:10"`; single-ball moves take exactly one.
//
// # Safety
// `h` must be a live handle; `balls` NUL-terminated; `out_verdict` writable.
enum WsStatus ws_transcript_push(struct WsTranscript *h,
                                 enum WsMoveKind kind,
                                 const char *balls,
                                 enum WsVerdict *out_verdict);

// # Safety
// `h` must be a live handle; `out_len` must be writable.
enum WsStatus ws_transcript_len(const struct WsTranscript *h, size_t *out_len);

// The line-delimited transcript export.
//
// # Safety
// `h` must be a live handle; `buf` must hold `cap` bytes or be null.
enum WsStatus ws_transcript_export(const struct WsTranscript *h,
                                   char *buf,
                                   size_t cap,
                                   size_t *needed);

// Runs a scenario file as the `winsets` binary would and stores its exit
// code (0 pass, 1 invariant failure, 2 parse error). Summaries are discarded;
// artifacts go to `out_dir`.
//
// # Safety
// Paths must be NUL-terminated; `out_exit` must be writable.
enum WsStatus ws_run_scenarios(enum WsCommand command,
                               const char *spec_path,
                               const char *out_dir,
                               int32_t *out_exit);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WINNING_SETS_H */
