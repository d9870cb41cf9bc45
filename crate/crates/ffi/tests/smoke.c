#include <stdio.h>
#include "agee.h"

#define CHECK(call)                                                          \
    do {                                                                     \
        AgeeStatus s_ = (call);                                              \
        if (s_ != AGEE_STATUS_OK) {                                          \
            fprintf(stderr, "%s failed (%d): %s\n", #call, (int)s_,          \
                    agee_last_error_message());                              \
            return 1;                                                        \
        }                                                                    \
    } while (0)

int main(void) {
    const uint32_t edges[] = {0, 1, 1, 2, 0, 2, 3, 4, 4, 5, 3, 5, 2, 3};
    AgeeGraph *g = NULL;
    CHECK(agee_graph_new(6, edges, 7, &g));

    AgeeEmbedOptions o;
    CHECK(agee_embed_options_default(&o));
    o.dimensions = 4;
    o.walks_per_node = 2;
    o.walk_length = 8;
    AgeeEmbedding *e = NULL;
    CHECK(agee_embed(g, &o, &e));
    float row[4];
    CHECK(agee_embedding_row(e, 5, row, 4));

    double pos[] = {0.8, 0.6}, neg[] = {0.2, 0.6}, auc = 0.0;
    CHECK(agee_auc(pos, 2, neg, 2, &auc));

    AgeeGraph *bad = NULL;
    AgeeStatus s = agee_graph_new(2, edges, 7, &bad);
    printf("edges=%zu dims=%zu auc=%.4f bad=%d msg=%s\n", agee_graph_edge_count(g),
           agee_embedding_dimensions(e), auc, (int)s, agee_last_error_message());

    agee_embedding_free(e);
    agee_graph_free(g);
    return s == AGEE_STATUS_INVALID_NODE ? 0 : 1;
}
