#include <stdio.h>
#include <string.h>

#include "ergokit.h"

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    double pct = 0.0;
    CHECK(ergo_reduction_percent(449.08, 312.13, &pct) == ERGO_STATUS_OK);
    CHECK(pct > 30.44 && pct < 30.54);

    ErgoSkeleton *sk = NULL;
    CHECK(ergo_skeleton_default(&sk) == ERGO_STATUS_OK);
    CHECK(ergo_skeleton_joint_count(sk) == 15);

    ErgoRecording *rec = NULL;
    CHECK(ergo_recording_parse("not a recording", sk, false, &rec) == ERGO_STATUS_PARSE);
    CHECK(rec == NULL);
    CHECK(strlen(ergo_last_error()) > 0);

    ErgoMouseMapper *m = NULL;
    CHECK(ergo_mouse_new(10, 350.0, &m) == ERGO_STATUS_OK);
    ErgoMouseSample s = {0};
    s.de_raw[2] = -700.0;
    ErgoCommand cmd;
    CHECK(ergo_mouse_process(m, &s, &cmd) == ERGO_STATUS_OK);
    CHECK(cmd.kind == ERGO_COMMAND_KIND_TWIST);
    CHECK(cmd.axes[5] == -0.25);
    ergo_mouse_free(m);

    ErgoLevel level;
    CHECK(ergo_score(0.7449, 0.70, 0.50, ERGO_SENSE_COMFORT, &level, &pct) == ERGO_STATUS_OK);
    CHECK(level == ERGO_LEVEL_COMFORTABLE);

    ergo_skeleton_free(sk);
    printf("ok %s\n", ergo_version());
    return 0;
}
