/* Plans a generated scene through the C API.
 *   cc plan.c -I../include ../../../target/release/libseqrank_ffi.a -lpthread -ldl -lm */
#include <stdio.h>
#include "seqrank.h"

int main(void) {
    SeqrankScene *scene = NULL;
    SeqrankPlan *plan = NULL;
    uint32_t ids[8];
    size_t len = 0;
    double cost = 0.0;

    if (seqrank_scene_generate("cube,can,carton", SEQRANK_WORKSPACE_CONTAINER, 5, &scene) != SEQRANK_STATUS_OK ||
        seqrank_plan(scene, NULL, false, &plan) != SEQRANK_STATUS_OK) {
        fprintf(stderr, "error: %s\n", seqrank_last_error());
        seqrank_scene_free(scene);
        return 1;
    }
    seqrank_plan_best_cost(plan, &cost);
    seqrank_plan_best_sequence(plan, ids, 8, &len);
    printf("cost %.4f order", cost);
    for (size_t i = 0; i < len; i++)
        printf(" %u", ids[i]);
    printf("\n");
    seqrank_plan_free(plan);
    seqrank_scene_free(scene);
    return 0;
}
