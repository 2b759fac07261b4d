#include <math.h>
#include <stdio.h>
#include "spherimax.h"

static double norm_value(const double *x, size_t n, void *ud) {
    (void)ud;
    double s = 0.0;
    for (size_t i = 0; i < n; i++) s += x[i] * x[i];
    return sqrt(s);
}

static void norm_gradient(const double *x, size_t n, double *out, void *ud) {
    (void)ud;
    double s = norm_value(x, n, NULL);
    for (size_t i = 0; i < n; i++) out[i] = s > 0.0 ? x[i] / s : 0.0;
}

#define CHECK(expr)                                                                 \
    do {                                                                            \
        SmxStatus st_ = (expr);                                                     \
        if (st_ != SMX_STATUS_OK) {                                                 \
            fprintf(stderr, "%s: %s (%s)\n", #expr, smx_status_str(st_),            \
                    smx_last_error_message());                                      \
            return 1;                                                               \
        }                                                                           \
    } while (0)

int main(void) {
    const char *names[] = {"q"};
    double values[] = {1.0};
    SmxInstance *zoo = NULL, *cb = NULL;
    CHECK(smx_instance_new("NORM_POWER", names, values, 1, 2, 1.0, NULL, 0, &zoo));
    CHECK(smx_instance_new_callback(2, 1.0, norm_value, norm_gradient, NULL, false, true, NULL, 0, &cb));

    SmxCondition c;
    CHECK(smx_check_condition(zoo, &c));
    if (!c.holds || !isinf(c.delta)) return 2;

    SmxEtaSample a, b;
    double xa[2], xb[2];
    CHECK(smx_compute_eta(zoo, 1.25, &a, xa));
    CHECK(smx_compute_eta(cb, 1.25, &b, xb));
    if (fabs(a.eta - 1.0) > 1e-6 || fabs(b.eta - 1.0) > 1e-6) return 3;

    SmxCurve *curve = NULL;
    CHECK(smx_curve_new(zoo, 1.1, 3.0, 5, &curve));
    if (smx_curve_len(curve) != 5) return 4;

    SmxStatus bad = smx_instance_new("NOPE", NULL, NULL, 0, 2, 1.0, NULL, 0, &cb);
    if (bad != SMX_STATUS_UNKNOWN_FUNCTIONAL || smx_last_error_message()[0] == '\0') return 5;

    printf("eta(1.25) = %.12g, version %s\n", a.eta, smx_version());
    smx_curve_free(curve);
    smx_instance_free(zoo);
    smx_instance_free(cb);
    return 0;
}
