#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "cachepilot/common.hpp"
#include "cachepilot/workload.hpp"

namespace cachepilot::predictor {

using workload::DistributionSpec;

struct FeatureVector {
    double data_gb = 0.0;
    double cache_gb = 0.0;
    double param = 0.0;  // 0 for uniform
};

/// Per-feature z-score transform fitted on training rows. A feature with
/// zero variance (uniform's parameter column) passes through unscaled.
struct Standardizer {
    std::array<double, 3> mean{0.0, 0.0, 0.0};
    std::array<double, 3> stddev{1.0, 1.0, 1.0};

    std::array<double, 3> apply(const FeatureVector& x) const;
    FeatureVector invert(const std::array<double, 3>& z) const;
};

struct TrainingRow {
    FeatureVector x;
    double hit_rate_pct = 0.0;
};

struct TrainingSet {
    Family family = Family::Uniform;
    std::vector<TrainingRow> rows;
    Standardizer stats;  // fitted on `rows` only
};

Standardizer fit_standardizer(std::span<const TrainingRow> rows);

enum class Loss : std::uint8_t { MAE = 0, MSE = 1 };
enum class Activation : std::uint8_t { Sigmoid = 0, ReLU = 1 };
enum class Regularizer : std::uint8_t { L1 = 0, L2 = 1 };

struct FcnConfig {
    int hidden_neurons = 64;
    Loss loss = Loss::MSE;
    Activation activation = Activation::Sigmoid;
    int epochs = 2000;
    Regularizer regularizer = Regularizer::L2;
    double reg_coefficient = 1e-4;
    double learning_rate = 1e-3;
    int batch_size = 15;
    std::uint64_t seed = 1;
};

/// The per-family configuration that won the hyperparameter sweep.
FcnConfig optimal_fcn_config(Family family);

enum class ModelKind : std::uint8_t { FCN = 0, GPR = 1, LogFit = 2 };
const char* model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

/// Single-hidden-layer regressor: dense(3 -> 20, ReLU), batch
/// normalization, dense(20 -> hidden, configured activation, kernel
/// regularizer on this layer), dense(hidden -> 1, linear). Trained with
/// Adam on z-scored inputs and raw percent targets.
class FcnNetwork {
public:
    FcnNetwork() = default;
    FcnNetwork(const FcnConfig& config, Rng& rng);  // Xavier-uniform init

    /// Forward pass for one standardized input. Training mode is only
    /// meaningful inside fit(); predictions use running batch-norm stats.
    double forward(const std::array<double, 3>& z) const;

    void fit(std::span<const std::array<double, 3>> inputs, std::span<const double> targets,
             const FcnConfig& config);

    /// Loss (data term + regularizer) of one batch with batch norm in
    /// inference mode, plus gradients for every parameter. Backs the
    /// finite-difference gradient check.
    double loss_and_gradients_inference(std::span<const std::array<double, 3>> inputs,
                                        std::span<const double> targets, const FcnConfig& config,
                                        std::vector<double>& gradients) const;

    std::vector<double>& parameters() { return params_; }
    const std::vector<double>& parameters() const { return params_; }
    int hidden_neurons() const { return hidden_; }

    static constexpr int kInputWidth = 3;
    static constexpr int kLayer1Width = 20;
    static constexpr double kBnEpsilon = 1e-5;
    static constexpr double kBnMomentum = 0.9;

    // Parameter block offsets inside params_ (all layers flattened).
    std::size_t offset_w1() const { return 0; }
    std::size_t offset_b1() const { return 3 * 20; }
    std::size_t offset_gamma() const { return offset_b1() + 20; }
    std::size_t offset_beta() const { return offset_gamma() + 20; }
    std::size_t offset_w2() const { return offset_beta() + 20; }
    std::size_t offset_b2() const { return offset_w2() + 20 * static_cast<std::size_t>(hidden_); }
    std::size_t offset_w3() const { return offset_b2() + static_cast<std::size_t>(hidden_); }
    std::size_t offset_b3() const { return offset_w3() + static_cast<std::size_t>(hidden_); }
    std::size_t parameter_count() const { return offset_b3() + 1; }

    std::array<double, 20> running_mean{};
    std::array<double, 20> running_var{};

    Activation activation = Activation::Sigmoid;

    struct BatchWorkspace;
    double forward_batch(std::span<const std::array<double, 3>> inputs, bool training,
                         BatchWorkspace& ws) const;

private:
    friend class ModelIo;

    int hidden_ = 0;
    std::vector<double> params_;
};

struct GprModel {
    double constant_value = 1000.0;  // CV: scale of the RBF kernel
    double length_scale = 1.0;       // LS: on standardized features
    double noise = 1e-6;
    double jitter_used = 0.0;
    std::vector<std::array<double, 3>> train_inputs;  // standardized
    std::vector<double> alpha;                        // (K + noise I)^-1 y
};

struct LogFitModel {
    double intercept = 0.0;  // a in y = a + b ln x
    double slope = 0.0;      // b
};

/// A trained hit-rate regressor for one family. Predictions clamp to
/// [0, 100]; predict_raw is the unclamped model output.
class HitRateModel {
public:
    HitRateModel() = default;

    Family family() const { return family_; }
    ModelKind kind() const { return kind_; }
    bool trained() const { return trained_; }

    double predict(const FeatureVector& x) const;
    double predict_raw(const FeatureVector& x) const;

    void save(const std::filesystem::path& path) const;
    static HitRateModel load(const std::filesystem::path& path);

    const Standardizer& standardizer() const { return stats_; }
    const FcnNetwork& fcn() const;
    const GprModel& gpr() const;
    const LogFitModel& logfit() const;
    const FcnConfig& fcn_config() const;

private:
    friend HitRateModel train_fcn(const TrainingSet&, const FcnConfig&);
    friend HitRateModel train_gpr(const TrainingSet&, double, double, double);
    friend HitRateModel fit_log(std::span<const std::pair<double, double>>);
    friend class ModelIo;

    Family family_ = Family::Uniform;
    ModelKind kind_ = ModelKind::FCN;
    bool trained_ = false;
    Standardizer stats_;
    FcnNetwork fcn_;
    FcnConfig fcn_config_;
    GprModel gpr_;
    LogFitModel logfit_;
};

/// Hit-rate source used to label grid points. Signature matches the
/// simulator's steady-state oracle.
using Oracle = std::function<double(const DistributionSpec&, double data_gb, double cache_gb)>;

/// The simulator oracle: steady_hit_rate over a cold cache, second half
/// measured.
Oracle simulator_oracle(std::uint64_t queries_per_point, std::uint64_t seed);

/// Training grid: data sizes and family parameters from the learning-data
/// table, crossed with cache sizes 0.1..4.0 GB step 0.1.
std::vector<double> training_data_sizes(Family family);
std::vector<double> training_params(Family family);
std::vector<double> testing_data_sizes(Family family);
std::vector<double> testing_params(Family family);
std::vector<double> cache_size_grid();

TrainingSet build_training_set(Family family, const Oracle& oracle);
TrainingSet build_testing_set(Family family, const Oracle& oracle);

void write_training_csv(const TrainingSet& set, const std::filesystem::path& path);
TrainingSet read_training_csv(const std::filesystem::path& path);

HitRateModel train_fcn(const TrainingSet& set, const FcnConfig& config);
HitRateModel train_gpr(const TrainingSet& set, double constant_value, double length_scale,
                       double noise);

/// Closed-form least squares of y on ln x. The baseline predictor: takes
/// (cache_gb, hit_pct) pairs and ignores data size and parameter.
HitRateModel fit_log(std::span<const std::pair<double, double>> points);

double evaluate(const HitRateModel& model, const TrainingSet& test_set);
double evaluate(const std::function<double(const FeatureVector&)>& predict,
                const TrainingSet& test_set);

struct EvalReportRow {
    Family family;
    ModelKind kind;
    double mse;
};
void write_eval_csv(std::span<const EvalReportRow> rows, const std::filesystem::path& path);

}  // namespace cachepilot::predictor
