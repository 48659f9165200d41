// cachepilot command-line interface. Everything goes through the C API in
// cachepilot.h; this translation unit only parses flags and maps statuses
// to exit codes (0 ok, 2 usage, 3 data/format, 4 QoS unsatisfiable).

#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cachepilot.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitQos = 4;

const std::map<std::string, cp_family> kFamilies = {
    {"uniform", CP_FAMILY_UNIFORM},
    {"gaussian", CP_FAMILY_GAUSSIAN},
    {"exponential", CP_FAMILY_EXPONENTIAL},
    {"zipf", CP_FAMILY_ZIPF},
};

const std::map<std::string, cp_model_kind> kKinds = {
    {"fcn", CP_MODEL_FCN},
    {"gpr", CP_MODEL_GPR},
    {"logfit", CP_MODEL_LOGFIT},
};

int fail(cp_status status) {
    std::fprintf(stderr, "cachepilot: %s: %s\n", cp_status_name(status), cp_last_error());
    return status == CP_ERR_INVALID_ARGUMENT ? kExitUsage : kExitData;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cache workload lab: trace generation, LRU simulation, distribution "
                 "estimation, hit-rate models and QoS-driven cache resizing"};
    app.require_subcommand(1);

    // gen-trace
    auto* gen_trace = app.add_subcommand("gen-trace", "generate a key-access trace file");
    cp_family gt_family = CP_FAMILY_UNIFORM;
    double gt_param = 0.0, gt_data_gb = 3.0;
    std::uint64_t gt_length = 1'000'000, gt_seed = 42;
    std::string gt_out, gt_csv;
    gen_trace->add_option("--family", gt_family, "distribution family")
        ->required()
        ->transform(CLI::CheckedTransformer(kFamilies, CLI::ignore_case));
    gen_trace->add_option("--param", gt_param, "distribution parameter (ignored for uniform)");
    gen_trace->add_option("--data-gb", gt_data_gb, "tenant data size in GB")->required();
    gen_trace->add_option("--length", gt_length, "number of queries");
    gen_trace->add_option("--seed", gt_seed, "trace seed");
    gen_trace->add_option("--out", gt_out, "output trace file")->required();
    gen_trace->add_option("--csv", gt_csv, "also export keys as CSV");

    // gen-training
    auto* gen_training = app.add_subcommand("gen-training", "build a training-set CSV from the simulator");
    cp_family tr_family = CP_FAMILY_UNIFORM;
    std::string tr_out;
    std::uint64_t tr_seed = 42, tr_queries = 500'000;
    gen_training->add_option("--family", tr_family, "distribution family")
        ->required()
        ->transform(CLI::CheckedTransformer(kFamilies, CLI::ignore_case));
    gen_training->add_option("--out", tr_out, "output CSV")->required();
    gen_training->add_option("--seed", tr_seed, "oracle seed");
    gen_training->add_option("--queries-per-point", tr_queries, "simulated queries per grid point");

    // train
    auto* train = app.add_subcommand("train", "train a hit-rate model from a training CSV");
    cp_model_kind t_kind = CP_MODEL_FCN;
    std::string t_in, t_model_out, t_eval_out, t_fcn_config = "{}";
    double t_cv = 0.0, t_ls = 0.0, t_noise = 1e-6;
    std::uint64_t t_seed = 1, t_eval_queries = 500'000;
    train->add_option("--kind", t_kind, "model kind")
        ->transform(CLI::CheckedTransformer(kKinds, CLI::ignore_case));
    train->add_option("--in", t_in, "training CSV")->required();
    train->add_option("--model-out", t_model_out, "model file to write")->required();
    train->add_option("--eval-out", t_eval_out, "append family,kind,mse to this CSV");
    train->add_option("--fcn-config", t_fcn_config,
                      "JSON overrides for the FCN configuration (default: family optimum)");
    train->add_option("--cv", t_cv, "GPR constant value (0 = family default)");
    train->add_option("--ls", t_ls, "GPR length scale (0 = family default)");
    train->add_option("--noise", t_noise, "GPR noise");
    train->add_option("--seed", t_seed, "training seed");
    train->add_option("--eval-queries-per-point", t_eval_queries,
                      "simulated queries per evaluation grid point");

    // run
    auto* run = app.add_subcommand("run", "run a scenario described by a JSON config");
    std::string r_config, r_out;
    std::uint64_t r_seed = 0;
    run->add_option("--config", r_config, "scenario JSON")->required();
    run->add_option("--out", r_out, "report directory")->required();
    auto* r_seed_opt = run->add_option("--seed", r_seed, "override the config seed");

    // accuracy-study
    auto* study = app.add_subcommand("accuracy-study", "estimator accuracy over sample counts");
    std::vector<std::size_t> s_counts{100, 200, 300, 500, 1000, 2000};
    int s_trials = 100;
    std::uint64_t s_seed = 42;
    std::string s_out;
    study->add_option("--counts", s_counts, "sample counts")->delimiter(',');
    study->add_option("--trials", s_trials, "trials per count")
        ->check(CLI::PositiveNumber.description("trials must be >= 1"));
    study->add_option("--seed", s_seed, "study seed");
    study->add_option("--out", s_out, "output CSV")->required();

    // report
    auto* report = app.add_subcommand("report", "summarize a report directory");
    std::string rep_dir;
    report->add_option("--dir", rep_dir, "report directory from `run`")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (gen_trace->parsed()) {
        cp_trace* trace = nullptr;
        cp_status status =
            cp_trace_generate(gt_family, gt_param, gt_data_gb, gt_length, gt_seed, &trace);
        if (status == CP_OK) status = cp_trace_save(trace, gt_out.c_str());
        if (status == CP_OK && !gt_csv.empty()) status = cp_trace_export_csv(trace, gt_csv.c_str());
        const std::uint32_t key_count = cp_trace_key_count(trace);
        cp_trace_free(trace);
        if (status != CP_OK) return fail(status);
        std::printf("wrote %s (%llu keys over %u unique)\n", gt_out.c_str(),
                    static_cast<unsigned long long>(gt_length), key_count);
        return kExitOk;
    }

    if (gen_training->parsed()) {
        const cp_status status =
            cp_cmd_gen_training(tr_family, tr_out.c_str(), tr_seed, tr_queries);
        if (status != CP_OK) return fail(status);
        std::printf("wrote %s\n", tr_out.c_str());
        return kExitOk;
    }

    if (train->parsed()) {
        double mse = 0.0;
        const cp_status status = cp_cmd_train(
            t_in.c_str(), t_kind, t_fcn_config.c_str(), t_cv, t_ls, t_noise, t_seed,
            t_eval_queries, t_model_out.c_str(), t_eval_out.empty() ? nullptr : t_eval_out.c_str(),
            &mse);
        if (status != CP_OK) return fail(status);
        std::printf("wrote %s (test-grid MSE %.4f)\n", t_model_out.c_str(), mse);
        return kExitOk;
    }

    if (run->parsed()) {
        int qos_alert = 0;
        const cp_status status = cp_cmd_run(r_config.c_str(), r_out.c_str(), r_seed,
                                            r_seed_opt->count() > 0 ? 1 : 0, &qos_alert);
        if (status != CP_OK) return fail(status);
        std::printf("report written to %s\n", r_out.c_str());
        if (qos_alert) {
            std::fprintf(stderr, "cachepilot: QoS requirement unsatisfiable (admin alert)\n");
            return kExitQos;
        }
        return kExitOk;
    }

    if (study->parsed()) {
        const cp_status status = cp_cmd_accuracy_study(s_counts.data(), s_counts.size(), s_trials,
                                                       s_seed, s_out.c_str());
        if (status != CP_OK) return fail(status);
        std::printf("wrote %s\n", s_out.c_str());
        return kExitOk;
    }

    if (report->parsed()) {
        char* text = nullptr;
        const cp_status status = cp_cmd_report(rep_dir.c_str(), &text);
        if (status != CP_OK) return fail(status);
        std::fputs(text, stdout);
        cp_string_free(text);
        return kExitOk;
    }

    return kExitUsage;
}
