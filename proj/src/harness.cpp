#include "cachepilot/harness.hpp"

#include <fstream>

#include "cachepilot/cachesim.hpp"
#include "cachepilot/estimator.hpp"

namespace cachepilot::harness {

void cmd_gen_trace(const workload::DistributionSpec& spec, double data_gb, std::uint64_t length,
                   std::uint64_t seed, const std::filesystem::path& out_path,
                   const std::filesystem::path& csv_path) {
    const auto keyspace = workload::keyspace_from_gb(data_gb);
    const auto trace = workload::generate_trace(spec, keyspace, length, seed);
    workload::write_trace(trace, out_path);
    if (!csv_path.empty()) workload::write_trace_csv(trace, csv_path);
}

void cmd_gen_training(Family family, const std::filesystem::path& out_csv, std::uint64_t seed,
                      std::uint64_t queries_per_point) {
    const auto oracle = predictor::simulator_oracle(queries_per_point, seed);
    const auto set = predictor::build_training_set(family, oracle);
    predictor::write_training_csv(set, out_csv);
}

namespace {

void gpr_defaults(Family family, double& cv, double& ls) {
    if (cv == 0.0) cv = family == Family::Uniform ? 1.0 : 1000.0;
    if (ls == 0.0) ls = family == Family::Uniform ? 10.0 : 1.0;
}

}  // namespace

TrainReport cmd_train(const std::filesystem::path& in_csv, const TrainOptions& options,
                      const std::filesystem::path& model_out,
                      const std::filesystem::path& eval_csv) {
    const auto set = predictor::read_training_csv(in_csv);

    predictor::HitRateModel model;
    switch (options.kind) {
        case predictor::ModelKind::FCN: {
            predictor::FcnConfig config =
                options.fcn.value_or(predictor::optimal_fcn_config(set.family));
            if (!options.fcn) config.seed = options.seed;
            model = predictor::train_fcn(set, config);
            break;
        }
        case predictor::ModelKind::GPR: {
            double cv = options.gpr_constant_value;
            double ls = options.gpr_length_scale;
            gpr_defaults(set.family, cv, ls);
            model = predictor::train_gpr(set, cv, ls, options.gpr_noise);
            break;
        }
        case predictor::ModelKind::LogFit: {
            std::vector<std::pair<double, double>> points;
            points.reserve(set.rows.size());
            for (const auto& row : set.rows)
                points.emplace_back(row.x.cache_gb, row.hit_rate_pct);
            model = predictor::fit_log(points);
            break;
        }
    }
    model.save(model_out);

    const auto test_seed = Rng::derive(options.seed, {0x7e57}).next_u64();
    const auto oracle = predictor::simulator_oracle(options.eval_queries_per_point, test_seed);
    const auto test_set = predictor::build_testing_set(set.family, oracle);
    const double mse = predictor::evaluate(model, test_set);

    if (!eval_csv.empty()) {
        const bool exists = std::filesystem::exists(eval_csv);
        std::ofstream out(eval_csv, std::ios::app);
        if (!out) throw FormatError("cannot open eval csv for writing: " + eval_csv.string());
        if (!exists) out << "family,model_kind,mse\n";
        char line[96];
        std::snprintf(line, sizeof(line), "%s,%s,%.4f\n", family_name(set.family),
                      predictor::model_kind_name(options.kind), mse);
        out << line;
    }
    return TrainReport{set.family, options.kind, mse};
}

void cmd_accuracy_study(std::span<const std::size_t> sample_counts, int trials,
                        std::uint64_t seed, const std::filesystem::path& out_csv) {
    const auto rows = estimator::accuracy_study(sample_counts, trials, seed);
    estimator::write_accuracy_csv(rows, out_csv);
}

}  // namespace cachepilot::harness
