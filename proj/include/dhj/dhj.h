#ifndef DHJ_DHJ_H
#define DHJ_DHJ_H

#include <stddef.h>

#if defined(_WIN32)
#define DHJ_API __declspec(dllexport)
#else
#define DHJ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dhj_status {
    DHJ_OK = 0,
    DHJ_ERR_INVALID_ARGUMENT = 1,
    DHJ_ERR_CONFIG,
    DHJ_ERR_IO,
    DHJ_ERR_MAXIMIZER_ON_BOUNDARY,
    DHJ_ERR_CONVEXITY_VIOLATION,
    DHJ_ERR_GRID_MISMATCH,
    DHJ_ERR_UNBOUNDED_BELOW,
    DHJ_ERR_UNBOUNDED_ABOVE,
    DHJ_ERR_NOT_CONVERGED,
    DHJ_ERR_REGULARITY_FAILURE,
    DHJ_ERR_GRADIENT_BLOWUP,
    DHJ_ERR_EMPTY_AUBRY,
    DHJ_ERR_EMPTY_REGION,
    DHJ_ERR_ESCAPE,
    DHJ_ERR_HYPOTHESIS_VIOLATION,
    DHJ_ERR_FLOOR_DOMINATES,
    DHJ_ERR_INTERNAL = 99
} dhj_status;

typedef enum dhj_contract_status { DHJ_CONTRACT_PASS = 0, DHJ_CONTRACT_FAIL = 1, DHJ_CONTRACT_SKIP = 2 } dhj_contract_status;

/* Stage bits for dhj_run_stages. */
enum {
    DHJ_STAGE_SOLVE = 1,
    DHJ_STAGE_REGULARIZE = 2,
    DHJ_STAGE_AUBRY = 4,
    DHJ_STAGE_ATTRACTOR = 8,
    DHJ_STAGE_LYAPUNOV = 16,
    DHJ_STAGE_RATE = 32,
    DHJ_STAGE_ALL = 63
};

typedef struct dhj_config dhj_config;
typedef struct dhj_field dhj_field;
typedef struct dhj_result dhj_result;
typedef struct dhj_rate dhj_rate;

typedef void (*dhj_log_fn)(const char *line, void *user);

/* Message of the last failed call on this thread; "" if none. */
DHJ_API const char *dhj_last_error(void);
DHJ_API const char *dhj_status_name(dhj_status status);
DHJ_API const char *dhj_version(void);

/* Strings returned through char** out-params are owned by the caller. */
DHJ_API void dhj_string_free(char *s);

/* ---- configuration ---- */
DHJ_API dhj_status dhj_config_default(dhj_config **out);
DHJ_API dhj_status dhj_config_load(const char *path, dhj_config **out);
DHJ_API dhj_status dhj_config_parse(const char *toml_text, dhj_config **out);
DHJ_API dhj_status dhj_config_clone(const dhj_config *cfg, dhj_config **out);
DHJ_API void dhj_config_free(dhj_config *cfg);
/* Setters take a table and key exactly as they appear in the config file.
   The result is validated; on failure the config is left unchanged. */
DHJ_API dhj_status dhj_config_set_double(dhj_config *cfg, const char *table, const char *key, double value);
DHJ_API dhj_status dhj_config_set_int(dhj_config *cfg, const char *table, const char *key, long long value);
DHJ_API dhj_status dhj_config_set_string(dhj_config *cfg, const char *table, const char *key, const char *value);
DHJ_API dhj_status dhj_config_to_toml(const dhj_config *cfg, char **out);
DHJ_API dhj_status dhj_config_validate(const dhj_config *cfg);

/* ---- grid functions ---- */
/* Solves for u_minus starting from zero. */
DHJ_API dhj_status dhj_solve(const dhj_config *cfg, dhj_field **out);
/* Backward (direction = -1) or forward (+1) evolution of f for time t. */
DHJ_API dhj_status dhj_evolve(const dhj_config *cfg, const dhj_field *f, double t, int direction, dhj_field **out);
DHJ_API dhj_status dhj_field_from_values(int dim, int n, const double *values, dhj_field **out);
DHJ_API dhj_status dhj_field_read_csv(const char *path, dhj_field **out);
DHJ_API dhj_status dhj_field_write_csv(const dhj_field *f, const char *path);
DHJ_API void dhj_field_free(dhj_field *f);
DHJ_API int dhj_field_dim(const dhj_field *f);
DHJ_API int dhj_field_n(const dhj_field *f);
DHJ_API size_t dhj_field_size(const dhj_field *f);
/* Borrowed pointer, valid until the field is freed. */
DHJ_API const double *dhj_field_values(const dhj_field *f);
DHJ_API dhj_status dhj_field_eval(const dhj_field *f, const double *x, double *value);

/* ---- experiments ---- */
DHJ_API dhj_status dhj_run_stages(const dhj_config *cfg, unsigned stages, dhj_log_fn log, void *user,
                                  dhj_result **out);
/* Stage set of a CLI subcommand name. */
DHJ_API dhj_status dhj_stages_for_command(const char *command, unsigned *stages);
DHJ_API void dhj_result_free(dhj_result *r);
DHJ_API int dhj_result_passed(const dhj_result *r);
DHJ_API size_t dhj_result_contract_count(const dhj_result *r);
/* Borrowed strings, valid until the result is freed. Any out pointer may be NULL. */
DHJ_API dhj_status dhj_result_contract(const dhj_result *r, size_t i, const char **name, dhj_contract_status *status,
                                       double *measured, double *threshold, const char **detail);
DHJ_API const char *dhj_result_report_json(const dhj_result *r);

DHJ_API dhj_status dhj_rate_run(const dhj_config *cfg, dhj_rate **out);
DHJ_API void dhj_rate_free(dhj_rate *r);
DHJ_API double dhj_rate_fitted_slope(const dhj_rate *r);
DHJ_API double dhj_rate_required_slope(const dhj_rate *r);
DHJ_API double dhj_rate_alpha(const dhj_rate *r);
DHJ_API double dhj_rate_mu(const dhj_rate *r);
DHJ_API double dhj_rate_floor(const dhj_rate *r);

#ifdef __cplusplus
}
#endif

#endif
