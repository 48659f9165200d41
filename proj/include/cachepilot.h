/* cachepilot C API: workload generation, LRU cache simulation, access-
 * distribution estimation, hit-rate prediction and multi-tenant cache
 * control behind opaque handles and status codes.
 *
 * Every function returns CP_OK on success; on failure the return names the
 * error class and cp_last_error() holds a message (thread-local, valid
 * until the next failing call on the same thread). Handles are freed with
 * their matching *_free function; freeing NULL is a no-op.
 */
#ifndef CACHEPILOT_H
#define CACHEPILOT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cp_status {
    CP_OK = 0,
    CP_ERR_INVALID_ARGUMENT = 1,
    CP_ERR_STATE = 2,
    CP_ERR_FORMAT = 3,
    CP_ERR_NUMERIC = 4,
    CP_ERR_IO = 5,
    CP_ERR_INTERNAL = 6
} cp_status;

typedef enum cp_family {
    CP_FAMILY_UNIFORM = 0,
    CP_FAMILY_GAUSSIAN = 1,
    CP_FAMILY_EXPONENTIAL = 2,
    CP_FAMILY_ZIPF = 3
} cp_family;

typedef enum cp_model_kind {
    CP_MODEL_FCN = 0,
    CP_MODEL_GPR = 1,
    CP_MODEL_LOGFIT = 2
} cp_model_kind;

typedef enum cp_decision_kind {
    CP_DECISION_GROW = 0,
    CP_DECISION_SHRINK = 1,
    CP_DECISION_HOLD = 2,
    CP_DECISION_ADMIN_ALERT = 3
} cp_decision_kind;

const char* cp_version(void);
const char* cp_status_name(cp_status status);
const char* cp_last_error(void);

/* --- traces ------------------------------------------------------------ */

typedef struct cp_trace cp_trace;

/* Generates `length` keys over round(data_gb * 10240) unique keys. */
cp_status cp_trace_generate(cp_family family, double param, double data_gb, uint64_t length,
                            uint64_t seed, cp_trace** out);
cp_status cp_trace_open(const char* path, cp_trace** out);
cp_status cp_trace_save(const cp_trace* trace, const char* path);
cp_status cp_trace_export_csv(const cp_trace* trace, const char* path);
uint64_t cp_trace_length(const cp_trace* trace);
uint32_t cp_trace_key_count(const cp_trace* trace);
/* Copies keys [offset, offset+count) into `out`. */
cp_status cp_trace_keys(const cp_trace* trace, uint64_t offset, uint64_t count, uint32_t* out);
void cp_trace_free(cp_trace* trace);

/* --- LRU cache simulation ----------------------------------------------- */

typedef struct cp_cache cp_cache;

cp_status cp_cache_new(double capacity_gb, cp_cache** out);
/* `hit_out` receives 1 on hit, 0 on miss. */
cp_status cp_cache_access(cp_cache* cache, uint32_t key, int* hit_out);
cp_status cp_cache_resize(cp_cache* cache, double new_capacity_gb);
uint64_t cp_cache_slots(const cp_cache* cache);
uint64_t cp_cache_size(const cp_cache* cache);
void cp_cache_free(cp_cache* cache);

/* Cold-cache simulation; hit rate in percent over the post-warmup part. */
cp_status cp_steady_hit_rate(cp_family family, double param, double data_gb, double cache_gb,
                             uint64_t n_queries, double warmup_fraction, uint64_t seed,
                             double* out_hit_pct);

/* --- distribution estimation -------------------------------------------- */

/* Two-sample KS statistic; both arrays must be sorted ascending. */
cp_status cp_ks_statistic(const double* sorted_a, size_t n, const double* sorted_b, size_t m,
                          double* out_d);
cp_status cp_ks_pvalue(double d, uint64_t n, uint64_t m, double* out_p);

/* Estimates family and parameter from key samples over a key space of
 * `key_count` keys. Requires at least 30 samples. */
cp_status cp_estimate(const uint32_t* samples, size_t n, uint32_t key_count, uint64_t seed,
                      cp_family* out_family, double* out_param, double* out_p_value);

/* --- hit-rate models ----------------------------------------------------- */

typedef struct cp_model cp_model;

cp_status cp_model_load(const char* path, cp_model** out);
cp_status cp_model_save(const cp_model* model, const char* path);
cp_status cp_model_predict(const cp_model* model, double data_gb, double cache_gb, double param,
                           double* out_hit_pct);
cp_status cp_model_get_family(const cp_model* model, cp_family* out_family);
cp_status cp_model_get_kind(const cp_model* model, cp_model_kind* out_kind);
void cp_model_free(cp_model* model);

/* --- resizing rules ------------------------------------------------------ */

/* Applies the grow/shrink/hold rules for one tenant over the allocation
 * grid {step, 2*step, ..., max_gb} using the model's predicted curve. */
cp_status cp_decide(const cp_model* model, double data_gb, double param, double current_gb,
                    double required_hit_pct, double delta1_pct, double delta2_pct,
                    double grid_step_gb, double max_gb, cp_decision_kind* out_kind,
                    double* out_target_gb, double* out_predicted_hit_pct);

/* Smallest grid allocation whose measured steady hit rate meets the floor.
 * `out_satisfied` is 0 when even the full data size falls short. */
cp_status cp_optimal_alloc(cp_family family, double param, double data_gb,
                           double required_hit_pct, double grid_step_gb, uint64_t seed,
                           double* out_cache_gb, int* out_satisfied);

/* --- harness commands (the CLI surface) ---------------------------------- */

cp_status cp_cmd_gen_training(cp_family family, const char* out_csv, uint64_t seed,
                              uint64_t queries_per_point);

/* `fcn_config_json` may be NULL or "{}" for the family's tuned defaults;
 * recognized keys: hidden_neurons, loss ("mae"/"mse"), activation
 * ("sigmoid"/"relu"), epochs, regularizer ("l1"/"l2"), reg_coefficient,
 * learning_rate, batch_size. GPR parameters of 0 select family defaults. */
cp_status cp_cmd_train(const char* in_csv, cp_model_kind kind, const char* fcn_config_json,
                       double gpr_cv, double gpr_ls, double gpr_noise, uint64_t seed,
                       uint64_t eval_queries_per_point, const char* model_out,
                       const char* eval_csv_or_null, double* out_test_mse);

/* `out_qos_alert` is 1 when the run ended on an unresolved AdminAlert. */
cp_status cp_cmd_run(const char* config_json_path, const char* out_dir, uint64_t seed_override,
                     int has_seed_override, int* out_qos_alert);

cp_status cp_cmd_accuracy_study(const size_t* sample_counts, size_t count_n, int trials,
                                uint64_t seed, const char* out_csv);

/* Renders the report as text (caller frees via cp_string_free) and writes
 * plot-ready series files into the report directory. */
cp_status cp_cmd_report(const char* report_dir, char** out_text);
void cp_string_free(char* text);

#ifdef __cplusplus
}
#endif

#endif /* CACHEPILOT_H */
