#include <stdio.h>
#include <stdlib.h>
#include "choquard.h"

int main(void) {
    ChoquardModel *model = NULL;
    if (choquard_model_new_fraction(3, 2.0, 1.0, 0.75, 3.0, &model) != CHOQUARD_STATUS_OK) {
        fprintf(stderr, "model: %s\n", choquard_last_error());
        return 1;
    }
    ChoquardConstants c;
    choquard_model_constants(model, &c);
    ChoquardSolution *ground = NULL;
    if (choquard_solve_ground(model, &ground) != CHOQUARD_STATUS_OK) {
        fprintf(stderr, "ground: %s\n", choquard_last_error());
        return 1;
    }
    ChoquardSummary s;
    choquard_solution_summary(ground, &s);
    double *r = malloc(s.nodes * sizeof(double));
    double *u = malloc(s.nodes * sizeof(double));
    ChoquardStatus st = choquard_solution_profile(ground, r, u, s.nodes);
    printf("%s %.10f %.10f %.10f %d %.6e\n", choquard_version(), c.a0, s.energy, s.lambda, s.converged, u[0]);
    ChoquardModel *bad = NULL;
    ChoquardStatus e = choquard_model_new(3, 2.0, 1.0, 1.0, 4.0, &bad);
    printf("%d %d\n", (int)e, bad == NULL);
    free(r);
    free(u);
    choquard_solution_free(ground);
    choquard_model_free(model);
    return st == CHOQUARD_STATUS_OK && s.converged && s.energy < 0.0 ? 0 : 1;
}
