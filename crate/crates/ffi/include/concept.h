#ifndef CONCEPT_H
#define CONCEPT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ConceptStatus {
  CONCEPT_STATUS_OK = 0,
  CONCEPT_STATUS_NULL_POINTER = 1,
  CONCEPT_STATUS_INVALID_UTF8 = 2,
  CONCEPT_STATUS_INVALID_ARGUMENT = 3,
  CONCEPT_STATUS_MISSING_ARTIFACT = 4,
  CONCEPT_STATUS_VALIDATION = 5,
  CONCEPT_STATUS_UNSUPPORTED_CONDITIONING = 6,
  CONCEPT_STATUS_CHECKPOINT = 7,
  CONCEPT_STATUS_IO = 8,
  CONCEPT_STATUS_BUFFER_TOO_SMALL = 9,
  CONCEPT_STATUS_PANIC = 10,
} ConceptStatus;

typedef enum ConceptLanguage {
  CONCEPT_LANGUAGE_EN = 0,
  CONCEPT_LANGUAGE_ZH = 1,
} ConceptLanguage;

/**
 * Trained topic classifier.
 */
typedef struct ConceptClassifier ConceptClassifier;

/**
 * Trained span extractor.
 */
typedef struct ConceptExtractor ConceptExtractor;

/**
 * Validated discrete structural causal model.
 */
typedef struct ConceptScm ConceptScm;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next call.
 */
const char *concept_last_error(void);

/**
 * Library version as a static string.
 */
const char *concept_version(void);

/**
 * # Safety
 * `s` is null or was returned by this library and not yet freed.
 */
void concept_string_free(char *s);

/**
 * # Safety
 * `path` is a NUL-terminated string; `out` is writable.
 */
enum ConceptStatus concept_classifier_load(const char *path, struct ConceptClassifier **out);

/**
 * # Safety
 * `h` is null or came from [`concept_classifier_load`] and was not yet freed.
 */
void concept_classifier_free(struct ConceptClassifier *h);

/**
 * Topic distribution as JSON `{"probabilities": [...], "topic_index": n, "topic_name": s}`.
 *
 * # Safety
 * `h` is a live classifier; the strings are NUL-terminated; `out_json` is writable.
 */
enum ConceptStatus concept_classifier_classify(const struct ConceptClassifier *h,
                                               const char *entity,
                                               const char *abstract_text,
                                               char **out_json);

/**
 * # Safety
 * `path` is a NUL-terminated string; `out` is writable.
 */
enum ConceptStatus concept_extractor_load(const char *path, struct ConceptExtractor **out);

/**
 * # Safety
 * `h` is null or came from [`concept_extractor_load`] and was not yet freed.
 */
void concept_extractor_free(struct ConceptExtractor *h);

/**
 * Extracted spans as JSON `{"entity", "topic", "spans": [{"text", "start", "end", "confidence"}]}`.
 * `classifier` supplies the prompt and may be null for a model trained without one. A NaN
 * `threshold` uses the checkpoint's value.
 *
 * # Safety
 * `h` is a live extractor; `classifier` is null or live; the strings are NUL-terminated;
 * `out_json` is writable.
 */
enum ConceptStatus concept_extractor_extract(const struct ConceptExtractor *h,
                                             const struct ConceptClassifier *classifier,
                                             const char *entity,
                                             const char *abstract_text,
                                             double threshold,
                                             char **out_json);

/**
 * Hearst-pattern captures as a JSON array of strings.
 *
 * # Safety
 * `text` is NUL-terminated; `out_json` is writable.
 */
enum ConceptStatus concept_hearst_extract(const char *text,
                                          enum ConceptLanguage language,
                                          char **out_json);

/**
 * Parses and validates an SCM from its JSON description.
 *
 * # Safety
 * `json` is NUL-terminated; `out` is writable.
 */
enum ConceptStatus concept_scm_from_json(const char *json, struct ConceptScm **out);

/**
 * # Safety
 * `h` is null or came from [`concept_scm_from_json`] and was not yet freed.
 */
void concept_scm_free(struct ConceptScm *h);

/**
 * Size of the `X` domain, or 0 for a null handle.
 *
 * # Safety
 * `h` is null or live.
 */
size_t concept_scm_x_size(const struct ConceptScm *h);

/**
 * Size of the `S` domain, or 0 for a null handle.
 *
 * # Safety
 * `h` is null or live.
 */
size_t concept_scm_s_size(const struct ConceptScm *h);

/**
 * Writes `P(S | do(X = x))` and its frontdoor and backdoor estimates into three buffers of
 * `len` doubles each. `len` must be at least the `S` domain size.
 *
 * # Safety
 * `h` is live; each buffer holds `len` writable doubles.
 */
enum ConceptStatus concept_scm_compare(const struct ConceptScm *h,
                                       size_t x,
                                       double *truth,
                                       double *frontdoor,
                                       double *backdoor,
                                       size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONCEPT_H */
