#include <stdio.h>
#include <string.h>
#include "winning_sets.h"

int main(void) {
    WsConstruction *golden = NULL;
    if (ws_construction_builtin("golden", 8, &golden) != WS_STATUS_OK) return 10;
    size_t count = 0;
    if (ws_construction_survivor_count(golden, 8, &count) != WS_STATUS_OK || count != 55) return 11;
    if (ws_construction_survivor_count(golden, 9, &count) != WS_STATUS_DEPTH_NOT_BUILT) return 12;
    char msg[128];
    if (ws_last_error(msg, sizeof msg, NULL) != WS_STATUS_OK || strstr(msg, "depth 9") == NULL) return 13;
    ws_construction_free(golden);

    char lifted[64];
    if (ws_schmidt_lift("1/2", "1/2", lifted, sizeof lifted, NULL) != WS_STATUS_OK) return 20;
    if (strcmp(lifted, "11/26 13/88") != 0) return 21;

    WsTranscript *t = NULL;
    if (ws_transcript_potential(WS_SPACE_SHIFT, "1/2", "1/2", &t) != WS_STATUS_OK) return 30;
    WsVerdict v;
    if (ws_transcript_push(t, WS_MOVE_KIND_BOB_BALL, "S:", &v) != WS_STATUS_OK || v != WS_VERDICT_LEGAL) return 31;
    if (ws_transcript_push(t, WS_MOVE_KIND_ALICE_COLLECTION, "S:11", &v) != WS_STATUS_OK || v != WS_VERDICT_LEGAL) return 32;
    if (ws_transcript_push(t, WS_MOVE_KIND_BOB_BALL, "S:1", &v) != WS_STATUS_OK || v != WS_VERDICT_LEGAL) return 33;
    size_t len = 0;
    ws_transcript_len(t, &len);
    if (len != 3) return 34;
    ws_transcript_free(t);
    puts("ok");
    return 0;
}
