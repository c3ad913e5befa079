#ifndef QPG_QPG_H
#define QPG_QPG_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qpg_status {
    QPG_OK = 0,
    QPG_ERR_CONFIG = 1,
    QPG_ERR_CAPACITY = 2,
    QPG_ERR_GEOMETRY = 3,
    QPG_ERR_CONSISTENCY = 4,
    QPG_ERR_DOMAIN = 5,
    QPG_ERR_NUMERIC = 6,
    QPG_ERR_FIT = 7,
    QPG_ERR_IO = 8,
    QPG_ERR_ARGUMENT = 9,
    QPG_ERR_INTERNAL = 10
} qpg_status;

typedef struct qpg_config qpg_config;

/* Message of the last failing call on this thread ("" if none). */
const char* qpg_last_error(void);
const char* qpg_status_name(qpg_status s);
const char* qpg_version(void);

/* Strings returned through char** are owned by the caller. */
void qpg_string_free(char* s);

qpg_status qpg_config_load(const char* path, qpg_config** out);
qpg_status qpg_config_parse(const char* json_text, qpg_config** out);
void qpg_config_free(qpg_config* cfg);
qpg_status qpg_config_resolved(const qpg_config* cfg, char** json_out);

/* theta: "1" or "1,0" coefficients over the basis, NULL for the config default.
   ladder: "v1,v2,..." or "max:points[:ratio]", NULL for the config ladder. */
qpg_status qpg_gap_scan(const qpg_config* cfg, const char* theta, const char* ladder, char** json_out,
                        char** csv_out);
/* lambda: exact literal (integer, p/q or decimal), NULL for the config default. */
qpg_status qpg_ids_scan(const qpg_config* cfg, const char* lambda, const char* ladder, char** json_out,
                        char** csv_out);
qpg_status qpg_classify(const qpg_config* cfg, const char* lambda, char** json_out);
/* xi_max <= 0 picks a range covering all zones. */
qpg_status qpg_g_scan(const qpg_config* cfg, const char* eps, double xi_max, int samples, char** csv_out);
/* depth <= 0 uses the config depth. */
qpg_status qpg_superres(const qpg_config* cfg, int depth, char** json_out);
/* *passed is 1 when every invariant holds. */
qpg_status qpg_selfcheck(const qpg_config* cfg, char** json_out, int* passed);

#ifdef __cplusplus
}
#endif

#endif
