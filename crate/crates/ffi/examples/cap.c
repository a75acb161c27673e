/* Solves the constant-H = 0.4 problem on the unit disk with zero data and
 * compares with the spherical cap of radius 2.5. Prints the max error. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "mcgraph.h"

int main(void) {
    McgDomain *disk = NULL;
    if (mcg_domain_disk(0.0, 0.0, 1.0, &disk) != MCG_STATUS_OK) {
        fprintf(stderr, "domain: %s\n", mcg_last_error());
        return 1;
    }
    double margin = 0.0;
    int ok = 0;
    mcg_check_serrin(disk, 0.4, 2, &margin, &ok);
    printf("serrin margin %.6f (%s)\n", margin, ok ? "satisfied" : "violated");

    McgSolution *sol = NULL;
    McgStatus st = mcg_solve(disk, 0.4, NULL, 1.0 / 16.0, &sol);
    if (st != MCG_STATUS_OK) {
        fprintf(stderr, "solve: %d %s\n", (int)st, mcg_last_error());
        mcg_domain_free(disk);
        return 1;
    }
    size_t n = mcg_solution_node_count(sol);
    double *x = malloc(n * sizeof *x), *y = malloc(n * sizeof *y), *u = malloc(n * sizeof *u);
    mcg_solution_nodes(sol, x, y, u, n);
    double err = 0.0;
    for (size_t i = 0; i < n; i++) {
        double exact = sqrt(5.25) - sqrt(6.25 - x[i] * x[i] - y[i] * y[i]);
        err = fmax(err, fabs(u[i] - exact));
    }
    printf("nodes %zu iterations %zu max error %.3e\n", n, mcg_solution_iterations(sol), err);
    free(x);
    free(y);
    free(u);
    mcg_solution_free(sol);
    mcg_domain_free(disk);
    return err < 5e-3 ? 0 : 1;
}
