#include <math.h>
#include <stdio.h>
#include "fedgdve.h"

#define CHECK(cond)                                              \
    do {                                                         \
        if (!(cond)) {                                           \
            fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
            return 1;                                            \
        }                                                        \
    } while (0)

int main(void) {
    uint32_t users[] = {0, 0, 1, 2};
    uint32_t items[] = {0, 1, 1, 2};
    FgGraph *g = NULL;
    CHECK(fg_graph_from_edges(3, 3, users, items, 4, false, &g) == FG_STATUS_OK);
    CHECK(fg_graph_num_edges(g) == 4);
    size_t deg[3];
    CHECK(fg_graph_user_degrees(g, deg, 3) == FG_STATUS_OK);
    CHECK(deg[0] == 2 && deg[1] == 1 && deg[2] == 1);

    double values[] = {1.0, 3.0, 4.0, 0.0};
    double weights[] = {2.0, 1.0};
    double mean[2];
    CHECK(fg_aggregate(values, weights, 2, 2, mean) == FG_STATUS_OK);
    CHECK(fabs(mean[0] - 2.0) < 1e-12 && fabs(mean[1] - 2.0) < 1e-12);

    weights[0] = -1.0;
    CHECK(fg_aggregate(values, weights, 2, 2, mean) == FG_STATUS_INVALID_ARGUMENT);
    char msg[256];
    CHECK(fg_last_error_length() > 1);
    CHECK(fg_last_error_message(msg, sizeof msg) > 0);

    FgGraph *bad = NULL;
    uint32_t far[] = {7};
    CHECK(fg_graph_from_edges(3, 3, far, far, 1, false, &bad) == FG_STATUS_OUT_OF_RANGE);
    CHECK(bad == NULL);

    fg_graph_free(g);
    fg_graph_free(NULL);
    printf("ok %s\n", fg_version());
    return 0;
}
