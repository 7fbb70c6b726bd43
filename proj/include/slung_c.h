/* C interface to the slung-load simulation core. */
#ifndef SLUNG_C_H
#define SLUNG_C_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define SLUNG_API __declspec(dllexport)
#else
#define SLUNG_API __attribute__((visibility("default")))
#endif

typedef enum slung_status {
    SLUNG_OK = 0,
    SLUNG_E_ARG = 1,         /* null or malformed argument */
    SLUNG_E_CONFIG = 2,      /* config parse/validation failure */
    SLUNG_E_IO = 3,          /* file read/write failure */
    SLUNG_E_RUN = 4,         /* simulation diverged or schedule invalid */
    SLUNG_E_NOT_HURWITZ = 5, /* certify with non-stabilizing gains */
    SLUNG_E_INTERNAL = 6
} slung_status;

typedef struct slung_config slung_config;
typedef struct slung_run slung_run;
typedef struct slung_campaign slung_campaign;

/* Message for the last failing call on this thread. Never null. */
SLUNG_API const char* slung_last_error(void);
SLUNG_API int slung_schema_version(void);
/* Strings returned through char** out-parameters are released with slung_free. */
SLUNG_API void slung_free(void* p);

SLUNG_API slung_status slung_config_default(slung_config** out);
/* V1..V6 */
SLUNG_API slung_status slung_config_variant(const char* tag, slung_config** out);
SLUNG_API slung_status slung_config_load(const char* path, slung_config** out);
/* Applies "key = value" lines on top of cfg. Unknown keys fail. */
SLUNG_API slung_status slung_config_apply(slung_config* cfg, const char* text);
SLUNG_API slung_status slung_config_set(slung_config* cfg, const char* key, const char* value);
SLUNG_API slung_status slung_config_serialize(const slung_config* cfg, char** out);
/* JSON array of {name, type, doc}. */
SLUNG_API slung_status slung_config_schema(char** out);
SLUNG_API void slung_config_free(slung_config* cfg);

/* Runs the simulation. A diverged run still returns a handle (status SLUNG_E_RUN)
   so its partial artifacts can be written. */
SLUNG_API slung_status slung_run_execute(const slung_config* cfg, slung_run** out);
SLUNG_API int slung_run_ok(const slung_run* run);
/* 1 when thresholds, domain gates and actuator audit pass. */
SLUNG_API int slung_run_gates_pass(const slung_run* run);
SLUNG_API uint64_t slung_run_hash(const slung_run* run);
SLUNG_API slung_status slung_run_write(const slung_run* run, const char* dir);
SLUNG_API slung_status slung_run_json(const slung_run* run, char** out);
SLUNG_API slung_status slung_run_metrics_json(const slung_run* run, char** out);
SLUNG_API void slung_run_free(slung_run* run);

typedef void (*slung_progress_fn)(const char* tag, int ok, double wall_seconds, void* user);

/* selection: "all" or comma list of groups (V,P2A,P2B,P2C,P2D,DWELL,GAMMA) or tags. */
SLUNG_API slung_status slung_campaign_execute(const char* selection, const char* out_dir, int jobs,
                                              slung_progress_fn progress, void* user,
                                              slung_campaign** out);
SLUNG_API slung_status slung_campaign_summary_json(const slung_campaign* c, char** out);
SLUNG_API int slung_campaign_pass(const slung_campaign* c);
SLUNG_API int slung_campaign_errors(const slung_campaign* c);
SLUNG_API void slung_campaign_free(slung_campaign* c);

/* Stability certificate for the gains in cfg (null = defaults). */
SLUNG_API slung_status slung_certify_json(const slung_config* cfg, char** out);

/* Recomputes metrics.json content from a run directory's config.cfg and trace
   (trace_full.csv when present, trace.csv otherwise). */
SLUNG_API slung_status slung_metrics_recompute(const char* run_dir, char** out);
/* Gate report from a run directory; *pass receives 0/1. */
SLUNG_API slung_status slung_gates_from_dir(const char* run_dir, char** out, int* pass);

#ifdef __cplusplus
}
#endif

#endif
