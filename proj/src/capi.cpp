#include "cachepilot.h"

#include <cstring>
#include <json.hpp>
#include <string>

#include "cachepilot/harness.hpp"

namespace {

using namespace cachepilot;

thread_local std::string g_last_error;

template <typename Fn>
cp_status guarded(Fn&& fn) {
    try {
        fn();
        return CP_OK;
    } catch (const std::invalid_argument& e) {
        g_last_error = e.what();
        return CP_ERR_INVALID_ARGUMENT;
    } catch (const StateError& e) {
        g_last_error = e.what();
        return CP_ERR_STATE;
    } catch (const FormatError& e) {
        g_last_error = e.what();
        return CP_ERR_FORMAT;
    } catch (const NumericError& e) {
        g_last_error = e.what();
        return CP_ERR_NUMERIC;
    } catch (const std::filesystem::filesystem_error& e) {
        g_last_error = e.what();
        return CP_ERR_IO;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return CP_ERR_INTERNAL;
    }
}

cp_status invalid(const char* message) {
    g_last_error = message;
    return CP_ERR_INVALID_ARGUMENT;
}

Family to_family(cp_family family) { return static_cast<Family>(family); }

workload::DistributionSpec to_spec(cp_family family, double param) {
    return workload::make_spec(to_family(family), param);
}

}  // namespace

struct cp_trace {
    workload::Trace trace;
};

struct cp_cache {
    cachesim::LruCache cache;
};

struct cp_model {
    predictor::HitRateModel model;
};

extern "C" {

const char* cp_version(void) { return "1.0.0"; }

const char* cp_status_name(cp_status status) {
    switch (status) {
        case CP_OK: return "ok";
        case CP_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case CP_ERR_STATE: return "state_error";
        case CP_ERR_FORMAT: return "format_error";
        case CP_ERR_NUMERIC: return "numeric_error";
        case CP_ERR_IO: return "io_error";
        case CP_ERR_INTERNAL: return "internal_error";
    }
    return "unknown";
}

const char* cp_last_error(void) { return g_last_error.c_str(); }

/* --- traces ------------------------------------------------------------ */

cp_status cp_trace_generate(cp_family family, double param, double data_gb, uint64_t length,
                            uint64_t seed, cp_trace** out) {
    if (!out) return invalid("out must not be NULL");
    *out = nullptr;
    return guarded([&] {
        auto trace = workload::generate_trace(to_spec(family, param),
                                              workload::keyspace_from_gb(data_gb), length, seed);
        *out = new cp_trace{std::move(trace)};
    });
}

cp_status cp_trace_open(const char* path, cp_trace** out) {
    if (!path || !out) return invalid("path and out must not be NULL");
    *out = nullptr;
    return guarded([&] { *out = new cp_trace{workload::read_trace(path)}; });
}

cp_status cp_trace_save(const cp_trace* trace, const char* path) {
    if (!trace || !path) return invalid("trace and path must not be NULL");
    return guarded([&] { workload::write_trace(trace->trace, path); });
}

cp_status cp_trace_export_csv(const cp_trace* trace, const char* path) {
    if (!trace || !path) return invalid("trace and path must not be NULL");
    return guarded([&] { workload::write_trace_csv(trace->trace, path); });
}

uint64_t cp_trace_length(const cp_trace* trace) {
    return trace ? trace->trace.keys.size() : 0;
}

uint32_t cp_trace_key_count(const cp_trace* trace) {
    return trace ? trace->trace.keyspace.key_count : 0;
}

cp_status cp_trace_keys(const cp_trace* trace, uint64_t offset, uint64_t count, uint32_t* out) {
    if (!trace || !out) return invalid("trace and out must not be NULL");
    if (offset + count > trace->trace.keys.size()) return invalid("key range out of bounds");
    std::memcpy(out, trace->trace.keys.data() + offset, count * sizeof(uint32_t));
    return CP_OK;
}

void cp_trace_free(cp_trace* trace) { delete trace; }

/* --- LRU cache simulation ----------------------------------------------- */

cp_status cp_cache_new(double capacity_gb, cp_cache** out) {
    if (!out) return invalid("out must not be NULL");
    *out = nullptr;
    return guarded(
        [&] { *out = new cp_cache{cachesim::LruCache(cachesim::cache_config_from_gb(capacity_gb))}; });
}

cp_status cp_cache_access(cp_cache* cache, uint32_t key, int* hit_out) {
    if (!cache || !hit_out) return invalid("cache and hit_out must not be NULL");
    *hit_out = cache->cache.access(key) ? 1 : 0;
    return CP_OK;
}

cp_status cp_cache_resize(cp_cache* cache, double new_capacity_gb) {
    if (!cache) return invalid("cache must not be NULL");
    return guarded([&] { cache->cache.resize(new_capacity_gb); });
}

uint64_t cp_cache_slots(const cp_cache* cache) { return cache ? cache->cache.slots() : 0; }

uint64_t cp_cache_size(const cp_cache* cache) { return cache ? cache->cache.size() : 0; }

void cp_cache_free(cp_cache* cache) { delete cache; }

cp_status cp_steady_hit_rate(cp_family family, double param, double data_gb, double cache_gb,
                             uint64_t n_queries, double warmup_fraction, uint64_t seed,
                             double* out_hit_pct) {
    if (!out_hit_pct) return invalid("out_hit_pct must not be NULL");
    return guarded([&] {
        *out_hit_pct =
            cachesim::steady_hit_rate(to_spec(family, param), workload::keyspace_from_gb(data_gb),
                                      cache_gb, n_queries, warmup_fraction, seed);
    });
}

/* --- distribution estimation -------------------------------------------- */

cp_status cp_ks_statistic(const double* sorted_a, size_t n, const double* sorted_b, size_t m,
                          double* out_d) {
    if (!sorted_a || !sorted_b || !out_d) return invalid("samples and out must not be NULL");
    return guarded([&] {
        *out_d = estimator::ks_statistic(std::span(sorted_a, n), std::span(sorted_b, m));
    });
}

cp_status cp_ks_pvalue(double d, uint64_t n, uint64_t m, double* out_p) {
    if (!out_p) return invalid("out_p must not be NULL");
    return guarded([&] { *out_p = estimator::ks_pvalue(d, n, m); });
}

cp_status cp_estimate(const uint32_t* samples, size_t n, uint32_t key_count, uint64_t seed,
                      cp_family* out_family, double* out_param, double* out_p_value) {
    if (!samples || !out_family || !out_param || !out_p_value)
        return invalid("samples and outputs must not be NULL");
    return guarded([&] {
        if (key_count == 0) throw std::invalid_argument("key_count must be >= 1");
        workload::KeySpace keyspace{key_count / kKeysPerGb, key_count};
        Rng rng = Rng::derive(seed, {0xe57});
        const auto result =
            estimator::estimate(std::span(samples, n), keyspace, estimator::GridConfig{}, rng);
        *out_family = static_cast<cp_family>(result.spec.family);
        *out_param = result.spec.param;
        *out_p_value = result.p_value;
    });
}

/* --- hit-rate models ----------------------------------------------------- */

cp_status cp_model_load(const char* path, cp_model** out) {
    if (!path || !out) return invalid("path and out must not be NULL");
    *out = nullptr;
    return guarded([&] { *out = new cp_model{predictor::HitRateModel::load(path)}; });
}

cp_status cp_model_save(const cp_model* model, const char* path) {
    if (!model || !path) return invalid("model and path must not be NULL");
    return guarded([&] { model->model.save(path); });
}

cp_status cp_model_predict(const cp_model* model, double data_gb, double cache_gb, double param,
                           double* out_hit_pct) {
    if (!model || !out_hit_pct) return invalid("model and out must not be NULL");
    return guarded([&] { *out_hit_pct = model->model.predict({data_gb, cache_gb, param}); });
}

cp_status cp_model_get_family(const cp_model* model, cp_family* out_family) {
    if (!model || !out_family) return invalid("model and out must not be NULL");
    *out_family = static_cast<cp_family>(model->model.family());
    return CP_OK;
}

cp_status cp_model_get_kind(const cp_model* model, cp_model_kind* out_kind) {
    if (!model || !out_kind) return invalid("model and out must not be NULL");
    *out_kind = static_cast<cp_model_kind>(model->model.kind());
    return CP_OK;
}

void cp_model_free(cp_model* model) { delete model; }

/* --- resizing rules ------------------------------------------------------ */

cp_status cp_decide(const cp_model* model, double data_gb, double param, double current_gb,
                    double required_hit_pct, double delta1_pct, double delta2_pct,
                    double grid_step_gb, double max_gb, cp_decision_kind* out_kind,
                    double* out_target_gb, double* out_predicted_hit_pct) {
    if (!model || !out_kind || !out_target_gb || !out_predicted_hit_pct)
        return invalid("model and outputs must not be NULL");
    return guarded([&] {
        controller::TenantState tenant;
        tenant.tenant_id = "capi";
        tenant.data_gb = data_gb;
        tenant.required_hit_pct = required_hit_pct;
        tenant.current_alloc_gb = current_gb;
        tenant.delta1_pct = delta1_pct;
        tenant.delta2_pct = delta2_pct;
        const workload::DistributionSpec spec{model->model.family(), param};
        const auto decision =
            controller::decide(model->model, spec, tenant, grid_step_gb, max_gb);
        *out_kind = static_cast<cp_decision_kind>(decision.kind);
        *out_target_gb = decision.target_alloc_gb;
        *out_predicted_hit_pct = decision.predicted_hit_pct;
    });
}

cp_status cp_optimal_alloc(cp_family family, double param, double data_gb,
                           double required_hit_pct, double grid_step_gb, uint64_t seed,
                           double* out_cache_gb, int* out_satisfied) {
    if (!out_cache_gb || !out_satisfied) return invalid("outputs must not be NULL");
    return guarded([&] {
        const auto result = controller::optimal_alloc_oracle(
            to_spec(family, param), data_gb, required_hit_pct, grid_step_gb, seed);
        *out_cache_gb = result.cache_gb;
        *out_satisfied = result.satisfied ? 1 : 0;
    });
}

/* --- harness commands ----------------------------------------------------- */

cp_status cp_cmd_gen_training(cp_family family, const char* out_csv, uint64_t seed,
                              uint64_t queries_per_point) {
    if (!out_csv) return invalid("out_csv must not be NULL");
    return guarded(
        [&] { harness::cmd_gen_training(to_family(family), out_csv, seed, queries_per_point); });
}

cp_status cp_cmd_train(const char* in_csv, cp_model_kind kind, const char* fcn_config_json,
                       double gpr_cv, double gpr_ls, double gpr_noise, uint64_t seed,
                       uint64_t eval_queries_per_point, const char* model_out,
                       const char* eval_csv_or_null, double* out_test_mse) {
    if (!in_csv || !model_out) return invalid("in_csv and model_out must not be NULL");
    return guarded([&] {
        harness::TrainOptions options;
        options.kind = static_cast<predictor::ModelKind>(kind);
        options.gpr_constant_value = gpr_cv;
        options.gpr_length_scale = gpr_ls;
        options.gpr_noise = gpr_noise;
        options.seed = seed;
        options.eval_queries_per_point = eval_queries_per_point;
        if (fcn_config_json && std::strlen(fcn_config_json) > 0 &&
            std::string(fcn_config_json) != "{}") {
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(fcn_config_json);
            } catch (const nlohmann::json::exception& e) {
                throw FormatError(std::string("fcn config is not valid JSON: ") + e.what());
            }
            predictor::FcnConfig config;  // family defaults replaced below if absent
            config.seed = seed;
            if (doc.contains("hidden_neurons")) config.hidden_neurons = doc["hidden_neurons"];
            if (doc.contains("loss"))
                config.loss = doc["loss"] == "mae" ? predictor::Loss::MAE : predictor::Loss::MSE;
            if (doc.contains("activation"))
                config.activation = doc["activation"] == "relu" ? predictor::Activation::ReLU
                                                                : predictor::Activation::Sigmoid;
            if (doc.contains("epochs")) config.epochs = doc["epochs"];
            if (doc.contains("regularizer"))
                config.regularizer = doc["regularizer"] == "l1" ? predictor::Regularizer::L1
                                                                : predictor::Regularizer::L2;
            if (doc.contains("reg_coefficient")) config.reg_coefficient = doc["reg_coefficient"];
            if (doc.contains("learning_rate")) config.learning_rate = doc["learning_rate"];
            if (doc.contains("batch_size")) config.batch_size = doc["batch_size"];
            options.fcn = config;
        }
        const auto report = harness::cmd_train(
            in_csv, options, model_out, eval_csv_or_null ? eval_csv_or_null : "");
        if (out_test_mse) *out_test_mse = report.test_mse;
    });
}

cp_status cp_cmd_run(const char* config_json_path, const char* out_dir, uint64_t seed_override,
                     int has_seed_override, int* out_qos_alert) {
    if (!config_json_path || !out_dir) return invalid("config path and out_dir must not be NULL");
    return guarded([&] {
        harness::ScenarioConfig config = harness::load_scenario_file(config_json_path);
        if (has_seed_override) config.seed = seed_override;
        const auto result = harness::run_scenario(config, out_dir);
        if (out_qos_alert) *out_qos_alert = result.qos_alert ? 1 : 0;
    });
}

cp_status cp_cmd_accuracy_study(const size_t* sample_counts, size_t count_n, int trials,
                                uint64_t seed, const char* out_csv) {
    if (!sample_counts || !out_csv) return invalid("sample_counts and out_csv must not be NULL");
    return guarded([&] {
        harness::cmd_accuracy_study(std::span(sample_counts, count_n), trials, seed, out_csv);
    });
}

cp_status cp_cmd_report(const char* report_dir, char** out_text) {
    if (!report_dir || !out_text) return invalid("report_dir and out_text must not be NULL");
    *out_text = nullptr;
    return guarded([&] {
        const std::string text = harness::render_report(report_dir);
        char* copy = new char[text.size() + 1];
        std::memcpy(copy, text.c_str(), text.size() + 1);
        *out_text = copy;
    });
}

void cp_string_free(char* text) { delete[] text; }

}  // extern "C"
