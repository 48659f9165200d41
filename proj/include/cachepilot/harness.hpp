#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "cachepilot/predictor.hpp"
#include "cachepilot/scenario.hpp"

namespace cachepilot::harness {

/// Training-target measurement length; targets are taken over the second
/// half of this many queries on a cold cache.
inline constexpr std::uint64_t kDefaultQueriesPerPoint = 500'000;

void cmd_gen_trace(const workload::DistributionSpec& spec, double data_gb, std::uint64_t length,
                   std::uint64_t seed, const std::filesystem::path& out_path,
                   const std::filesystem::path& csv_path = {});

/// Builds the family's training grid against the simulator oracle and
/// writes the training CSV.
void cmd_gen_training(Family family, const std::filesystem::path& out_csv, std::uint64_t seed,
                      std::uint64_t queries_per_point = kDefaultQueriesPerPoint);

struct TrainOptions {
    predictor::ModelKind kind = predictor::ModelKind::FCN;
    std::optional<predictor::FcnConfig> fcn;  // defaults to the family's optimal config
    double gpr_constant_value = 0.0;          // 0: family default (uniform CV=1 LS=10, else CV=1000 LS=1)
    double gpr_length_scale = 0.0;
    double gpr_noise = 1e-6;
    std::uint64_t seed = 1;
    std::uint64_t eval_queries_per_point = kDefaultQueriesPerPoint;
};

struct TrainReport {
    Family family;
    predictor::ModelKind kind;
    double test_mse = 0.0;
};

/// Trains on a training CSV, writes the model file, evaluates on the
/// held-out testing grid (targets from the simulator oracle) and appends
/// the eval CSV when given.
TrainReport cmd_train(const std::filesystem::path& in_csv, const TrainOptions& options,
                      const std::filesystem::path& model_out,
                      const std::filesystem::path& eval_csv = {});

void cmd_accuracy_study(std::span<const std::size_t> sample_counts, int trials,
                        std::uint64_t seed, const std::filesystem::path& out_csv);

}  // namespace cachepilot::harness
