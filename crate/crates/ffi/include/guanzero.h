#ifndef GUANZERO_H
#define GUANZERO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GzStatus {
  GZ_STATUS_OK = 0,
  GZ_STATUS_NULL_POINTER = 1,
  GZ_STATUS_INVALID_ARGUMENT = 2,
  GZ_STATUS_ILLEGAL_ACTION = 3,
  GZ_STATUS_IO = 4,
  GZ_STATUS_CHECKPOINT = 5,
  GZ_STATUS_BUFFER_TOO_SMALL = 6,
  GZ_STATUS_PANIC = 7,
  GZ_STATUS_INTERNAL = 8,
} GzStatus;

/*
 An agent built from a spec string, with its own rng.
 */
typedef struct GzAgent GzAgent;

/*
 A mini game at level 2 with its current legal actions.
 */
typedef struct GzGame GzGame;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *gz_version(void);

/*
 Length in bytes of the last error message on this thread, without the
 terminating NUL; 0 when there is none.
 */
size_t gz_last_error_length(void);

/*
 Copies the last error message (NUL-terminated) into `buf`.

 # Safety
 `buf` must be valid for `cap` bytes of writes.
 */
enum GzStatus gz_last_error_message(char *buf, size_t cap);

/*
 Deals a level-2 mini game from `deal_seed`.

 # Safety
 `out` must be valid for one pointer write.
 */
enum GzStatus gz_game_new(uint64_t deal_seed, struct GzGame **out);

/*
 # Safety
 `game` must be null or a handle from `gz_game_new` not yet freed.
 */
void gz_game_free(struct GzGame *game);

/*
 # Safety
 `game` must be a live handle and `out` valid for writes.
 */
enum GzStatus gz_game_current_seat(const struct GzGame *game, uint8_t *out);

/*
 # Safety
 `game` must be a live handle and `out` valid for writes.
 */
enum GzStatus gz_game_is_done(const struct GzGame *game, bool *out);

/*
 Card ids (0..107) held by `seat`.

 # Safety
 `out_ids` must be valid for `cap` bytes, `out_len` for one write.
 */
enum GzStatus gz_game_hand(const struct GzGame *game,
                           uint8_t seat_index,
                           uint8_t *out_ids,
                           size_t cap,
                           size_t *out_len);

/*
 Number of legal actions for the seat to act (0 once the game is over).

 # Safety
 `game` must be a live handle and `out` valid for writes.
 */
enum GzStatus gz_game_legal_count(const struct GzGame *game, size_t *out);

/*
 Cards of legal action `index`; a pass has no cards and sets `is_pass`.

 # Safety
 Pointers as for `gz_game_hand`; `is_pass` valid for one write.
 */
enum GzStatus gz_game_legal_action(const struct GzGame *game,
                                   size_t index,
                                   uint8_t *out_ids,
                                   size_t cap,
                                   size_t *out_len,
                                   bool *is_pass);

/*
 Plays legal action `index` for the seat to act.

 # Safety
 `game` must be a live handle not used concurrently.
 */
enum GzStatus gz_game_apply(struct GzGame *game, size_t index);

/*
 Finishing order (4 seats), winning team (0 = p1/p3) and upgrade 1..3.

 # Safety
 `out_order` must be valid for 4 bytes, the others for one write.
 */
enum GzStatus gz_game_result(const struct GzGame *game,
                             uint8_t *out_order,
                             uint8_t *out_team,
                             uint8_t *out_upgrade);

/*
 Builds an agent from a spec ("random", "rule", "dmc:<dir>[@frames]",
 "dmc-noflags:<dir>"). Interactive agents are not available here.

 # Safety
 `spec` must be a NUL-terminated string, `out` valid for one write.
 */
enum GzStatus gz_agent_new(const char *spec, uint64_t seed, struct GzAgent **out);

/*
 # Safety
 `agent` must be null or a handle from `gz_agent_new` not yet freed.
 */
void gz_agent_free(struct GzAgent *agent);

/*
 Index of the agent's choice among the game's legal actions.

 # Safety
 Both handles must be live; `out_index` valid for one write.
 */
enum GzStatus gz_agent_choose(struct GzAgent *agent, const struct GzGame *game, size_t *out_index);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GUANZERO_H */
