#include <math.h>
#include <stdio.h>
#include "omicsurv.h"

#define CHECK(call)                                             \
    do {                                                        \
        OmsStatus s_ = (call);                                  \
        if (s_ != OMS_STATUS_OK) {                              \
            char *m_ = oms_last_error();                        \
            fprintf(stderr, "%s -> %d: %s\n", #call, s_, m_);   \
            oms_string_free(m_);                                \
            return 1;                                           \
        }                                                       \
    } while (0)

int main(void) {
    const char *spec =
        "{\"n_samples\": 60, \"layers\": [[\"rna\", 8], [\"cnv\", 5]],"
        " \"planted\": [{\"layer\": \"rna\", \"index\": 1, \"weight\": 1.5}],"
        " \"censoring_rate\": 0.2, \"seed\": 3}";
    OmsDataset *ds = NULL;
    CHECK(oms_dataset_synthetic(spec, &ds));
    OmsReport *report = NULL;
    CHECK(oms_cross_validate(ds, "pca", "{\"folds\": 3, \"repeats\": 2, \"n_fingerprints\": 3}", &report));
    double mean = 0.0;
    size_t n_folds = 0, n_failed = 0;
    CHECK(oms_report_summary(report, &mean, &n_folds, &n_failed));
    if (n_folds != 6 || !(mean > 0.0 && mean < 1.0)) {
        fprintf(stderr, "unexpected summary %zu %f\n", n_folds, mean);
        return 1;
    }
    if (oms_cross_validate(ds, "maui", NULL, &report) != OMS_STATUS_UNSUPPORTED_MODEL) {
        return 1;
    }
    char *csv = NULL;
    CHECK(oms_report_serialize(report, 0, &csv));
    printf("%s", csv);
    oms_string_free(csv);
    oms_report_free(report);
    oms_dataset_free(ds);
    printf("version %s\n", oms_version());
    return 0;
}
