#ifndef ECHOSIM_ECHOSIM_H
#define ECHOSIM_ECHOSIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(ECHOSIM_BUILDING)
#    define ES_API __declspec(dllexport)
#  else
#    define ES_API __declspec(dllimport)
#  endif
#else
#  define ES_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum es_status {
  ES_OK = 0,
  ES_ERR_INVALID_ARGUMENT = 1,
  ES_ERR_CONFIG = 2,
  ES_ERR_VALIDATION = 3,
  ES_ERR_IO = 4,
  ES_ERR_PARSE = 5,
  ES_ERR_TRANSPORT = 6,
  ES_ERR_REQUEST = 7,
  ES_ERR_DEGENERATE = 8,
  ES_ERR_EXISTS = 9,
  ES_ERR_INTERNAL = 99
} es_status;

typedef struct es_config es_config;
typedef struct es_run es_run;

ES_API const char* es_version(void);

/* Message for the last failing call on this thread; "" after success. Owned by the library. */
ES_API const char* es_last_error(void);

/* Frees strings returned through char** out-parameters. */
ES_API void es_string_free(char* s);

/* 0 = debug, 1 = info, 2 = warn, 3 = error. */
ES_API void es_set_log_level(int level);

/* Config documents are JSON. Relative topic / bank paths resolve against the
   file's directory (es_config_load) or base_dir (es_config_from_json, may be NULL). */
ES_API es_status es_config_load(const char* path, es_config** out);
ES_API es_status es_config_from_json(const char* json, const char* base_dir, es_config** out);

/* Dotted or short key ("alpha", "sampler.alpha", "llm.model", "persona_preset").
   The value is parsed as JSON first and used as a plain string otherwise. */
ES_API es_status es_config_set(es_config* config, const char* key, const char* value);

/* ES_OK when valid. ES_ERR_VALIDATION fills *violations_json (may be NULL)
   with [{"field":..., "rule":...}, ...]. */
ES_API es_status es_config_validate(const es_config* config, char** violations_json);

/* Full resolved snapshot with topic and reason bank inlined. */
ES_API es_status es_config_to_json(const es_config* config, char** out_json);
ES_API void es_config_free(es_config* config);

/* Runs every trial and writes logs under out_dir/<run_id>. run_id may be NULL.
   *out is set even when a trial failed (status ES_ERR_TRANSPORT / ES_ERR_REQUEST)
   so partial results stay inspectable. */
ES_API es_status es_run_experiment(const es_config* config, const char* out_dir, const char* run_id,
                                   int workers, es_run** out);
ES_API const char* es_run_id(const es_run* run);
ES_API const char* es_run_dir(const es_run* run);
ES_API const char* es_run_summary_json(const es_run* run);
ES_API const char* es_run_table(const es_run* run);
ES_API void es_run_free(es_run* run);

/* options_json may be NULL; keys: standardize, embedder, cluster_threshold,
   compare, out_dir, unification, polarization. */
ES_API es_status es_analyze(const char* log_dir, const char* options_json, char** report_json);

/* grid_json is an object of key -> list of values. sweep_id may be NULL. */
ES_API es_status es_sweep(const es_config* config, const char* grid_json, const char* out_dir,
                          const char* sweep_id, int workers, char** matrix_json);

/* Uses the config's topic and llm settings. */
ES_API es_status es_genbank(const es_config* config, const char* out_path, int per_stance, int force,
                            char** bank_json);

#ifdef __cplusplus
}
#endif

#endif
