/*
 * C API of the crisis-distribution simulator. The library loads scenario
 * files (couple-auction markets or the seller-driven double auction), runs
 * deterministic episodes, and serves the result tables, the event trace and
 * trace replay verification through opaque handles and status codes.
 *
 * Every function that can fail returns a cdsim_status; the message of the
 * most recent failure on the calling thread is available through
 * cdsim_last_error().
 */
#ifndef CDSIM_H
#define CDSIM_H

#include <stdint.h>

#if defined(_WIN32)
#define CDSIM_API __declspec(dllexport)
#else
#define CDSIM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cdsim_status {
    CDSIM_OK = 0,
    CDSIM_ERR_INVALID_ARGUMENT = 1,
    CDSIM_ERR_PARSE = 2,
    CDSIM_ERR_VALIDATION = 3,
    CDSIM_ERR_RUNTIME = 4,
    CDSIM_ERR_IO = 5
} cdsim_status;

typedef struct cdsim_scenario cdsim_scenario;
typedef struct cdsim_options cdsim_options;
typedef struct cdsim_result cdsim_result;

CDSIM_API const char* cdsim_version(void);

/* Message of the last failing call on this thread; empty string if none. */
CDSIM_API const char* cdsim_last_error(void);

/* Scenario lifecycle. Parsing is strict (unknown fields rejected, rationals
 * as "p/q"/integer strings); validation reports the complete violation list
 * through cdsim_last_error(). */
CDSIM_API cdsim_status cdsim_scenario_load_file(const char* path, cdsim_scenario** out);
CDSIM_API cdsim_status cdsim_scenario_parse(const char* text, cdsim_scenario** out);
CDSIM_API cdsim_status cdsim_scenario_validate(const cdsim_scenario* scenario);
CDSIM_API cdsim_status cdsim_scenario_save(const cdsim_scenario* scenario, char** out_text);
CDSIM_API const char* cdsim_scenario_mechanism(const cdsim_scenario* scenario);
CDSIM_API void cdsim_scenario_free(cdsim_scenario* scenario);

/* Run overrides. A NULL options handle means "as configured". */
CDSIM_API cdsim_options* cdsim_options_new(void);
CDSIM_API cdsim_status cdsim_options_set_seed(cdsim_options* options, uint64_t seed);
CDSIM_API cdsim_status cdsim_options_set_markets(cdsim_options* options, int markets);
CDSIM_API cdsim_status cdsim_options_set_epsilon(cdsim_options* options, const char* rational);
CDSIM_API cdsim_status cdsim_options_set_mechanism(cdsim_options* options, const char* mechanism);
CDSIM_API void cdsim_options_free(cdsim_options* options);

CDSIM_API cdsim_status cdsim_run(const cdsim_scenario* scenario, const cdsim_options* options,
                                 cdsim_result** out);

typedef enum cdsim_table {
    CDSIM_TABLE_PRICES = 0,
    CDSIM_TABLE_FRUSTRATION = 1,
    CDSIM_TABLE_TRADES = 2,
    CDSIM_TABLE_FINAL = 3
} cdsim_table;

/* CSV content of one result table; NULL on a bad table id. The returned
 * pointer stays valid until cdsim_result_free(). */
CDSIM_API const char* cdsim_result_table(const cdsim_result* result, cdsim_table table);
CDSIM_API const char* cdsim_result_trace(const cdsim_result* result);
CDSIM_API const char* cdsim_result_mechanism(const cdsim_result* result);

/* Writes prices.csv, frustration.csv, trades.csv, final.csv, trace.txt. */
CDSIM_API cdsim_status cdsim_result_write(const cdsim_result* result, const char* out_dir);
CDSIM_API void cdsim_result_free(cdsim_result* result);

/* Replay verification of a couple-auction trace (possibly market-framed,
 * as written in trace.txt). CDSIM_OK when every event re-derives exactly. */
CDSIM_API cdsim_status cdsim_trace_replay_file(const char* path);
CDSIM_API cdsim_status cdsim_trace_replay_text(const char* text);

/* Frees strings returned through out_text parameters. */
CDSIM_API void cdsim_string_free(char* text);

#ifdef __cplusplus
}
#endif

#endif /* CDSIM_H */
