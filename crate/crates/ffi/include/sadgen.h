#ifndef SADGEN_H
#define SADGEN_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SadStatus {
  SAD_STATUS_OK = 0,
  SAD_STATUS_NULL_POINTER = 1,
  SAD_STATUS_INVALID_UTF8 = 2,
  SAD_STATUS_PARSE_ERROR = 3,
  SAD_STATUS_INVALID_MODEL = 4,
  SAD_STATUS_NO_ENTRY_POINT = 5,
  SAD_STATUS_SERDE_ERROR = 6,
  SAD_STATUS_OUT_OF_RANGE = 7,
  SAD_STATUS_PANIC = 99,
} SadStatus;

typedef struct SadClassModel SadClassModel;

typedef struct SadScoreCard SadScoreCard;

typedef struct SadStateMachine SadStateMachine;

/*
 Scoring options. `q9_manual` is -1 for the automatic verdict, 0 or 1 to
 override it.
 */
typedef struct SadScoreConfig {
  double min_similarity;
  double name_threshold;
  bool lenient_timeout;
  int32_t q9_manual;
} SadScoreConfig;

/*
 One `X/Y (Z)` cell.
 */
typedef struct SadTriple {
  uint32_t matched;
  uint32_t total;
  uint32_t hallucinated;
} SadTriple;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL. Valid until the
 next call into this library from the same thread.
 */
const char *sad_last_error(void);

/*
 Library version, a static string.
 */
const char *sad_version(void);

/*
 # Safety
 `s` must be NULL or a string returned by this library, not yet freed.
 */
void sad_string_free(char *s);

/*
 # Safety
 `text` must be a NUL-terminated string; `out` a valid pointer.
 */
enum SadStatus sad_state_machine_parse_plantuml(const char *text, struct SadStateMachine **out);

/*
 Accepts a `{"kind": "state_machine", "model": ...}` document.

 # Safety
 `json` must be a NUL-terminated string; `out` a valid pointer.
 */
enum SadStatus sad_state_machine_from_json(const char *json, struct SadStateMachine **out);

/*
 # Safety
 `sm` must be a live handle; `out` a valid pointer.
 */
enum SadStatus sad_state_machine_to_plantuml(const struct SadStateMachine *sm, char **out);

/*
 # Safety
 `sm` must be a live handle; `out` a valid pointer.
 */
enum SadStatus sad_state_machine_to_json(const struct SadStateMachine *sm, char **out);

/*
 Writes the number of well-formedness violations to `count`. When
 `messages` is not NULL it receives them one per line.

 # Safety
 `sm` must be a live handle; `count` a valid pointer; `messages` NULL or
 valid.
 */
enum SadStatus sad_state_machine_validate(const struct SadStateMachine *sm,
                                          size_t *count,
                                          char **messages);

/*
 Ids of the named states reachable from the top-level initial, one per
 line in sorted order. Fails with NO_ENTRY_POINT when there is none.

 # Safety
 `sm` must be a live handle; `out` a valid pointer.
 */
enum SadStatus sad_state_machine_reachable(const struct SadStateMachine *sm, char **out);

/*
 # Safety
 `sm` must be NULL or a handle not yet freed.
 */
void sad_state_machine_free(struct SadStateMachine *sm);

/*
 Parses `len` bytes of XMI.

 # Safety
 `data` must point to `len` readable bytes; `out` a valid pointer.
 */
enum SadStatus sad_class_model_from_xmi(const uint8_t *data,
                                        size_t len,
                                        struct SadClassModel **out);

/*
 Accepts a class or component model document; a component model yields
 its class model.

 # Safety
 `json` must be a NUL-terminated string; `out` a valid pointer.
 */
enum SadStatus sad_class_model_from_json(const char *json, struct SadClassModel **out);

/*
 # Safety
 `model` must be a live handle; `out` a valid pointer.
 */
enum SadStatus sad_class_model_to_json(const struct SadClassModel *model, char **out);

/*
 # Safety
 `model` must be a live handle; `out` a valid pointer.
 */
enum SadStatus sad_class_model_to_plantuml(const struct SadClassModel *model, char **out);

/*
 Number of classes, or 0 for NULL.

 # Safety
 `model` must be NULL or a live handle.
 */
size_t sad_class_model_class_count(const struct SadClassModel *model);

/*
 # Safety
 `model` must be NULL or a handle not yet freed.
 */
void sad_class_model_free(struct SadClassModel *model);

struct SadScoreConfig sad_score_config_default(void);

/*
 Scores `generated` against `ground_truth`. `config` may be NULL for the
 defaults.

 # Safety
 Handles must be live; `config` NULL or valid; `out` a valid pointer.
 */
enum SadStatus sad_score(const struct SadStateMachine *ground_truth,
                         const struct SadStateMachine *generated,
                         const struct SadScoreConfig *config,
                         struct SadScoreCard **out);

/*
 Cell `question` (1 to 9) of a score card.

 # Safety
 `card` must be a live handle; `out` a valid pointer.
 */
enum SadStatus sad_score_card_triple(const struct SadScoreCard *card,
                                     uint32_t question,
                                     struct SadTriple *out);

/*
 # Safety
 `card` must be a live handle; `out` a valid pointer.
 */
enum SadStatus sad_score_card_to_json(const struct SadScoreCard *card, char **out);

/*
 # Safety
 `card` must be NULL or a handle not yet freed.
 */
void sad_score_card_free(struct SadScoreCard *card);

/*
 `X/Y (Z)` text of a triple.

 # Safety
 `out` must be a valid pointer.
 */
enum SadStatus sad_format_triple(struct SadTriple triple, char **out);

/*
 The `@startuml`..`@enduml` block of an LLM response.

 # Safety
 `response` must be a NUL-terminated string; `out` a valid pointer.
 */
enum SadStatus sad_extract_plantuml_block(const char *response, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SADGEN_H */
