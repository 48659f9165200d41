#include "cachepilot/predictor.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

#include "cachepilot/cachesim.hpp"
#include "cachepilot/parallel.hpp"

namespace cachepilot::predictor {

std::array<double, 3> Standardizer::apply(const FeatureVector& x) const {
    return {(x.data_gb - mean[0]) / stddev[0], (x.cache_gb - mean[1]) / stddev[1],
            (x.param - mean[2]) / stddev[2]};
}

FeatureVector Standardizer::invert(const std::array<double, 3>& z) const {
    return {z[0] * stddev[0] + mean[0], z[1] * stddev[1] + mean[1], z[2] * stddev[2] + mean[2]};
}

Standardizer fit_standardizer(std::span<const TrainingRow> rows) {
    if (rows.empty()) throw std::invalid_argument("cannot standardize an empty set");
    Standardizer s;
    const double n = static_cast<double>(rows.size());
    for (const auto& row : rows) {
        s.mean[0] += row.x.data_gb;
        s.mean[1] += row.x.cache_gb;
        s.mean[2] += row.x.param;
    }
    for (double& m : s.mean) m /= n;
    std::array<double, 3> var{0.0, 0.0, 0.0};
    for (const auto& row : rows) {
        const std::array<double, 3> v{row.x.data_gb, row.x.cache_gb, row.x.param};
        for (int i = 0; i < 3; ++i) var[i] += (v[i] - s.mean[i]) * (v[i] - s.mean[i]);
    }
    for (int i = 0; i < 3; ++i) {
        const double sd = std::sqrt(var[i] / n);
        s.stddev[i] = sd > 0.0 ? sd : 1.0;  // constant column (uniform's param) passes through
    }
    return s;
}

FcnConfig optimal_fcn_config(Family family) {
    FcnConfig c;
    switch (family) {
        case Family::Uniform:
            c.hidden_neurons = 16, c.loss = Loss::MAE, c.epochs = 4000;
            break;
        case Family::Gaussian:
            c.hidden_neurons = 64, c.loss = Loss::MSE, c.epochs = 4000;
            break;
        case Family::Exponential:
            c.hidden_neurons = 64, c.loss = Loss::MSE, c.epochs = 4000;
            break;
        case Family::Zipf:
            c.hidden_neurons = 32, c.loss = Loss::MAE, c.epochs = 500;
            break;
    }
    c.activation = Activation::Sigmoid;
    c.regularizer = Regularizer::L2;
    return c;
}

const char* model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::FCN: return "fcn";
        case ModelKind::GPR: return "gpr";
        case ModelKind::LogFit: return "logfit";
    }
    throw std::invalid_argument("unknown model kind");
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "fcn") return ModelKind::FCN;
    if (name == "gpr") return ModelKind::GPR;
    if (name == "logfit") return ModelKind::LogFit;
    throw std::invalid_argument("unknown model kind: " + name);
}

// ---------------------------------------------------------------------------
// FCN

namespace {

double activate(Activation a, double x) {
    return a == Activation::ReLU ? (x > 0.0 ? x : 0.0) : 1.0 / (1.0 + std::exp(-x));
}

double activate_grad(Activation a, double x, double activated) {
    return a == Activation::ReLU ? (x > 0.0 ? 1.0 : 0.0) : activated * (1.0 - activated);
}

}  // namespace

struct FcnNetwork::BatchWorkspace {
    std::size_t batch = 0;
    std::vector<std::array<double, 3>> z;      // standardized inputs
    std::vector<std::array<double, 20>> pre1;  // layer-1 pre-activation
    std::vector<std::array<double, 20>> a1;    // layer-1 ReLU output
    std::vector<std::array<double, 20>> xhat;  // batch-normed a1
    std::vector<std::array<double, 20>> y1;    // gamma * xhat + beta
    std::array<double, 20> mu{};               // batch statistics (training mode)
    std::array<double, 20> var{};
    std::vector<std::vector<double>> pre2;  // hidden pre-activation
    std::vector<std::vector<double>> a2;    // hidden activation
    std::vector<double> pred;
};

FcnNetwork::FcnNetwork(const FcnConfig& config, Rng& rng) {
    if (config.hidden_neurons < 1) throw std::invalid_argument("hidden_neurons must be >= 1");
    hidden_ = config.hidden_neurons;
    activation = config.activation;
    params_.assign(parameter_count(), 0.0);
    auto xavier = [&](std::size_t offset, int fan_in, int fan_out, std::size_t count) {
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (std::size_t i = 0; i < count; ++i)
            params_[offset + i] = (2.0 * rng.next_double() - 1.0) * limit;
    };
    xavier(offset_w1(), 3, 20, 3 * 20);
    xavier(offset_w2(), 20, hidden_, 20 * static_cast<std::size_t>(hidden_));
    xavier(offset_w3(), hidden_, 1, static_cast<std::size_t>(hidden_));
    for (int j = 0; j < 20; ++j) params_[offset_gamma() + j] = 1.0;
    running_var.fill(1.0);
}

double FcnNetwork::forward_batch(std::span<const std::array<double, 3>> inputs, bool training,
                                 BatchWorkspace& ws) const {
    const std::size_t b = inputs.size();
    const int h = hidden_;
    ws.batch = b;
    ws.z.assign(inputs.begin(), inputs.end());
    ws.pre1.assign(b, {});
    ws.a1.assign(b, {});
    ws.xhat.assign(b, {});
    ws.y1.assign(b, {});
    ws.pre2.assign(b, std::vector<double>(h, 0.0));
    ws.a2.assign(b, std::vector<double>(h, 0.0));
    ws.pred.assign(b, 0.0);

    const double* w1 = params_.data() + offset_w1();
    const double* b1 = params_.data() + offset_b1();
    const double* gamma = params_.data() + offset_gamma();
    const double* beta = params_.data() + offset_beta();
    const double* w2 = params_.data() + offset_w2();
    const double* b2 = params_.data() + offset_b2();
    const double* w3 = params_.data() + offset_w3();
    const double b3 = params_[offset_b3()];

    for (std::size_t s = 0; s < b; ++s) {
        for (int j = 0; j < 20; ++j) {
            double acc = b1[j];
            for (int i = 0; i < 3; ++i) acc += ws.z[s][i] * w1[i * 20 + j];
            ws.pre1[s][j] = acc;
            ws.a1[s][j] = acc > 0.0 ? acc : 0.0;
        }
    }

    if (training) {
        for (int j = 0; j < 20; ++j) {
            double mu = 0.0;
            for (std::size_t s = 0; s < b; ++s) mu += ws.a1[s][j];
            mu /= static_cast<double>(b);
            double var = 0.0;
            for (std::size_t s = 0; s < b; ++s) {
                const double d = ws.a1[s][j] - mu;
                var += d * d;
            }
            var /= static_cast<double>(b);
            ws.mu[j] = mu;
            ws.var[j] = var;
        }
    } else {
        ws.mu = running_mean;
        ws.var = running_var;
    }

    for (std::size_t s = 0; s < b; ++s) {
        for (int j = 0; j < 20; ++j) {
            const double inv = 1.0 / std::sqrt(ws.var[j] + kBnEpsilon);
            ws.xhat[s][j] = (ws.a1[s][j] - ws.mu[j]) * inv;
            ws.y1[s][j] = gamma[j] * ws.xhat[s][j] + beta[j];
        }
        for (int k = 0; k < h; ++k) {
            double acc = b2[k];
            for (int j = 0; j < 20; ++j) acc += ws.y1[s][j] * w2[j * h + k];
            ws.pre2[s][k] = acc;
            ws.a2[s][k] = activate(activation, acc);
        }
        double out = b3;
        for (int k = 0; k < h; ++k) out += ws.a2[s][k] * w3[k];
        ws.pred[s] = out;
    }
    return 0.0;
}

double FcnNetwork::forward(const std::array<double, 3>& z) const {
    if (params_.empty()) throw StateError("FCN is untrained");
    BatchWorkspace ws;
    forward_batch(std::span(&z, 1), false, ws);
    return ws.pred[0];
}

namespace {

/// Data loss over a batch plus its gradient w.r.t. each prediction.
double loss_value_and_grad(Loss loss, std::span<const double> pred,
                           std::span<const double> target, std::vector<double>& dpred) {
    const double inv_b = 1.0 / static_cast<double>(pred.size());
    dpred.assign(pred.size(), 0.0);
    double total = 0.0;
    for (std::size_t s = 0; s < pred.size(); ++s) {
        const double r = pred[s] - target[s];
        if (loss == Loss::MSE) {
            total += r * r;
            dpred[s] = 2.0 * r * inv_b;
        } else {
            total += std::fabs(r);
            dpred[s] = (r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0)) * inv_b;
        }
    }
    return total * inv_b;
}

}  // namespace

/// Backpropagation shared by training and the inference-mode gradient
/// check; `training` selects batch-statistics vs running-statistics BN
/// semantics.
namespace {

void backward(const FcnNetwork& net, const FcnConfig& config, bool training,
              const FcnNetwork::BatchWorkspace& ws, std::span<const double> dpred,
              std::vector<double>& grad) {
    const int h = net.hidden_neurons();
    const std::size_t b = ws.batch;
    const auto& params = net.parameters();
    grad.assign(params.size(), 0.0);

    const double* gamma = params.data() + net.offset_gamma();
    const double* w2 = params.data() + net.offset_w2();
    const double* w3 = params.data() + net.offset_w3();

    double* g_w1 = grad.data() + net.offset_w1();
    double* g_b1 = grad.data() + net.offset_b1();
    double* g_gamma = grad.data() + net.offset_gamma();
    double* g_beta = grad.data() + net.offset_beta();
    double* g_w2 = grad.data() + net.offset_w2();
    double* g_b2 = grad.data() + net.offset_b2();
    double* g_w3 = grad.data() + net.offset_w3();
    double& g_b3 = grad[net.offset_b3()];

    std::vector<std::array<double, 20>> dy1(b);

    for (std::size_t s = 0; s < b; ++s) {
        const double d_out = dpred[s];
        g_b3 += d_out;
        std::vector<double> da2(h);
        for (int k = 0; k < h; ++k) {
            g_w3[k] += d_out * ws.a2[s][k];
            da2[k] = d_out * w3[k];
        }
        for (int k = 0; k < h; ++k) {
            const double dz2 = da2[k] * activate_grad(net.activation, ws.pre2[s][k], ws.a2[s][k]);
            g_b2[k] += dz2;
            for (int j = 0; j < 20; ++j) {
                g_w2[j * h + k] += dz2 * ws.y1[s][j];
                dy1[s][j] += dz2 * w2[j * h + k];
            }
        }
    }

    // Regularizer applies to the hidden dense layer's kernel (W2).
    for (int j = 0; j < 20; ++j) {
        for (int k = 0; k < h; ++k) {
            const double w = w2[j * h + k];
            g_w2[j * h + k] += config.regularizer == Regularizer::L2
                                   ? 2.0 * config.reg_coefficient * w
                                   : config.reg_coefficient * (w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0));
        }
    }

    std::vector<std::array<double, 20>> da1(b);
    if (training) {
        const double inv_b = 1.0 / static_cast<double>(b);
        for (int j = 0; j < 20; ++j) {
            const double inv_sd = 1.0 / std::sqrt(ws.var[j] + FcnNetwork::kBnEpsilon);
            double dvar = 0.0, dmu = 0.0, sum_centered = 0.0;
            for (std::size_t s = 0; s < b; ++s) {
                const double dxhat = dy1[s][j] * gamma[j];
                const double centered = ws.a1[s][j] - ws.mu[j];
                g_gamma[j] += dy1[s][j] * ws.xhat[s][j];
                g_beta[j] += dy1[s][j];
                dvar += dxhat * centered;
                dmu += dxhat;
                sum_centered += centered;
            }
            dvar *= -0.5 * inv_sd * inv_sd * inv_sd;
            dmu = -dmu * inv_sd - 2.0 * dvar * sum_centered * inv_b;
            for (std::size_t s = 0; s < b; ++s) {
                const double dxhat = dy1[s][j] * gamma[j];
                const double centered = ws.a1[s][j] - ws.mu[j];
                da1[s][j] = dxhat * inv_sd + 2.0 * dvar * centered * inv_b + dmu * inv_b;
            }
        }
    } else {
        for (int j = 0; j < 20; ++j) {
            const double inv_sd = 1.0 / std::sqrt(ws.var[j] + FcnNetwork::kBnEpsilon);
            for (std::size_t s = 0; s < b; ++s) {
                g_gamma[j] += dy1[s][j] * ws.xhat[s][j];
                g_beta[j] += dy1[s][j];
                da1[s][j] = dy1[s][j] * gamma[j] * inv_sd;
            }
        }
    }

    for (std::size_t s = 0; s < b; ++s) {
        for (int j = 0; j < 20; ++j) {
            const double dz1 = ws.pre1[s][j] > 0.0 ? da1[s][j] : 0.0;
            g_b1[j] += dz1;
            for (int i = 0; i < 3; ++i) g_w1[i * 20 + j] += dz1 * ws.z[s][i];
        }
    }
}

double regularizer_value(const FcnNetwork& net, const FcnConfig& config) {
    const auto& params = net.parameters();
    const double* w2 = params.data() + net.offset_w2();
    const std::size_t count = 20 * static_cast<std::size_t>(net.hidden_neurons());
    double acc = 0.0;
    for (std::size_t i = 0; i < count; ++i)
        acc += config.regularizer == Regularizer::L2 ? w2[i] * w2[i] : std::fabs(w2[i]);
    return config.reg_coefficient * acc;
}

}  // namespace

void FcnNetwork::fit(std::span<const std::array<double, 3>> inputs,
                     std::span<const double> targets, const FcnConfig& config) {
    if (inputs.size() != targets.size()) throw std::invalid_argument("inputs/targets mismatch");
    if (inputs.size() < static_cast<std::size_t>(config.batch_size))
        throw std::invalid_argument("training set smaller than one batch");
    if (config.epochs < 1) throw std::invalid_argument("epochs must be >= 1");

    Rng rng = Rng::derive(config.seed, {0x5ca1e});
    std::vector<double> m(params_.size(), 0.0), v(params_.size(), 0.0);
    std::vector<std::size_t> order(inputs.size());
    std::iota(order.begin(), order.end(), 0);

    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;
    std::uint64_t step = 0;
    BatchWorkspace ws;
    std::vector<std::array<double, 3>> batch_x;
    std::vector<double> batch_t, dpred, grad;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.next_below(i)]);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            batch_x.clear();
            batch_t.clear();
            for (std::size_t i = start; i < end; ++i) {
                batch_x.push_back(inputs[order[i]]);
                batch_t.push_back(targets[order[i]]);
            }
            forward_batch(batch_x, true, ws);
            for (int j = 0; j < 20; ++j) {
                running_mean[j] = kBnMomentum * running_mean[j] + (1.0 - kBnMomentum) * ws.mu[j];
                running_var[j] = kBnMomentum * running_var[j] + (1.0 - kBnMomentum) * ws.var[j];
            }
            loss_value_and_grad(config.loss, ws.pred, batch_t, dpred);
            backward(*this, config, true, ws, dpred, grad);
            ++step;
            const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
            for (std::size_t p = 0; p < params_.size(); ++p) {
                m[p] = kBeta1 * m[p] + (1.0 - kBeta1) * grad[p];
                v[p] = kBeta2 * v[p] + (1.0 - kBeta2) * grad[p] * grad[p];
                params_[p] -= config.learning_rate * (m[p] / bc1) / (std::sqrt(v[p] / bc2) + kAdamEps);
            }
        }
    }
}

double FcnNetwork::loss_and_gradients_inference(std::span<const std::array<double, 3>> inputs,
                                                std::span<const double> targets,
                                                const FcnConfig& config,
                                                std::vector<double>& gradients) const {
    BatchWorkspace ws;
    forward_batch(inputs, false, ws);
    std::vector<double> dpred;
    const double data_loss = loss_value_and_grad(config.loss, ws.pred, targets, dpred);
    backward(*this, config, false, ws, dpred, gradients);
    return data_loss + regularizer_value(*this, config);
}

// ---------------------------------------------------------------------------
// grids and set construction

std::vector<double> cache_size_grid() {
    std::vector<double> grid;
    for (int i = 1; i <= 40; ++i) grid.push_back(i / 10.0);
    return grid;
}

std::vector<double> training_data_sizes(Family family) {
    if (family == Family::Uniform) return {1.0, 2.0, 4.0, 8.0};
    return {1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0};
}

std::vector<double> training_params(Family family) {
    switch (family) {
        case Family::Uniform: return {0.0};
        case Family::Gaussian:
        case Family::Exponential: return {0.5, 1.0, 1.5, 2.0};
        case Family::Zipf: return {0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
    }
    throw std::invalid_argument("unknown family");
}

std::vector<double> testing_data_sizes(Family family) {
    if (family == Family::Uniform) return {3.0, 6.0};
    return {1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0};
}

std::vector<double> testing_params(Family family) {
    switch (family) {
        case Family::Uniform: return {0.0};
        case Family::Gaussian:
        case Family::Exponential: return {0.7, 1.2, 1.9};
        case Family::Zipf: return {0.7, 1.2, 1.9, 2.3, 2.6};
    }
    throw std::invalid_argument("unknown family");
}

Oracle simulator_oracle(std::uint64_t queries_per_point, std::uint64_t seed) {
    struct Memo {
        std::mutex mutex;
        std::map<std::tuple<int, double, double>, std::vector<double>> sweeps;
    };
    auto memo = std::make_shared<Memo>();
    const auto grid = cache_size_grid();
    return [memo, grid, queries_per_point, seed](const DistributionSpec& spec, double data_gb,
                                                 double cache_gb) {
        // Grid rows share one key stream per (spec, data size) via the
        // capacity sweep; off-grid requests simulate directly. Either path
        // equals a fresh steady_hit_rate call with the same derived seed.
        const auto keyspace = workload::keyspace_from_gb(data_gb);
        const std::uint64_t row_seed =
            Rng::derive(seed, {static_cast<std::uint64_t>(spec.family),
                               static_cast<std::uint64_t>(spec.param * 1000.0),
                               static_cast<std::uint64_t>(data_gb * 1000.0)})
                .next_u64();
        std::size_t slot = grid.size();
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (std::fabs(grid[i] - cache_gb) < 1e-9) slot = i;
        if (slot == grid.size())
            return cachesim::steady_hit_rate(spec, keyspace, cache_gb, queries_per_point, 0.5,
                                             row_seed);
        const auto key = std::make_tuple(static_cast<int>(spec.family), spec.param, data_gb);
        {
            std::lock_guard<std::mutex> lock(memo->mutex);
            auto it = memo->sweeps.find(key);
            if (it != memo->sweeps.end()) return it->second[slot];
        }
        auto rates =
            cachesim::sweep_hit_rates(spec, keyspace, grid, queries_per_point, 0.5, row_seed);
        std::lock_guard<std::mutex> lock(memo->mutex);
        auto [it, inserted] = memo->sweeps.emplace(key, std::move(rates));
        return it->second[slot];
    };
}

namespace {

TrainingSet build_set(Family family, const Oracle& oracle, const std::vector<double>& data_sizes,
                      const std::vector<double>& params) {
    const auto caches = cache_size_grid();
    struct Group {
        double data_gb, param;
        std::vector<double> targets;
    };
    std::vector<Group> groups;
    for (double d : data_sizes)
        for (double p : params) groups.push_back({d, p, {}});
    parallel_for(groups.size(), [&](std::size_t g) {
        const DistributionSpec spec{family, groups[g].param};
        groups[g].targets.reserve(caches.size());
        for (double c : caches) groups[g].targets.push_back(oracle(spec, groups[g].data_gb, c));
    });
    TrainingSet set;
    set.family = family;
    for (const auto& group : groups)
        for (std::size_t i = 0; i < caches.size(); ++i)
            set.rows.push_back({{group.data_gb, caches[i], group.param}, group.targets[i]});
    set.stats = fit_standardizer(set.rows);
    return set;
}

}  // namespace

TrainingSet build_training_set(Family family, const Oracle& oracle) {
    return build_set(family, oracle, training_data_sizes(family), training_params(family));
}

TrainingSet build_testing_set(Family family, const Oracle& oracle) {
    return build_set(family, oracle, testing_data_sizes(family), testing_params(family));
}

void write_training_csv(const TrainingSet& set, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open training csv for writing: " + path.string());
    out << "family,param,data_gb,cache_gb,hit_rate_pct\n";
    char line[160];
    for (const auto& row : set.rows) {
        std::snprintf(line, sizeof(line), "%s,%.2f,%.1f,%.1f,%.4f\n", family_name(set.family),
                      row.x.param, row.x.data_gb, row.x.cache_gb, row.hit_rate_pct);
        out << line;
    }
    if (!out) throw FormatError("failed writing training csv: " + path.string());
}

TrainingSet read_training_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open training csv: " + path.string());
    std::string header;
    if (!std::getline(in, header) || header != "family,param,data_gb,cache_gb,hit_rate_pct")
        throw FormatError("training csv has unexpected header: " + path.string());
    TrainingSet set;
    std::string line;
    bool family_set = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string family_str, param_str, data_str, cache_str, hit_str;
        if (!std::getline(ss, family_str, ',') || !std::getline(ss, param_str, ',') ||
            !std::getline(ss, data_str, ',') || !std::getline(ss, cache_str, ',') ||
            !std::getline(ss, hit_str))
            throw FormatError("training csv has a malformed row: " + path.string());
        try {
            const Family family = family_from_name(family_str);
            if (!family_set) {
                set.family = family;
                family_set = true;
            } else if (family != set.family) {
                throw FormatError("training csv mixes families: " + path.string());
            }
            set.rows.push_back(
                {{std::stod(data_str), std::stod(cache_str), std::stod(param_str)},
                 std::stod(hit_str)});
        } catch (const FormatError&) {
            throw;
        } catch (const std::exception&) {
            throw FormatError("training csv has a malformed row: " + path.string());
        }
    }
    if (set.rows.empty()) throw FormatError("training csv has no rows: " + path.string());
    set.stats = fit_standardizer(set.rows);
    return set;
}

// ---------------------------------------------------------------------------
// training entry points

HitRateModel train_fcn(const TrainingSet& set, const FcnConfig& config) {
    if (set.rows.size() < static_cast<std::size_t>(config.batch_size))
        throw std::invalid_argument("training set smaller than one batch");
    bool any_variance = false;
    for (int i = 0; i < 2; ++i) {
        double lo = set.rows.front().x.data_gb, hi = lo;
        for (const auto& row : set.rows) {
            const double v = i == 0 ? row.x.data_gb : row.x.cache_gb;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi > lo) any_variance = true;
    }
    if (!any_variance)
        throw std::invalid_argument("degenerate training set: features have zero variance");

    HitRateModel model;
    model.family_ = set.family;
    model.kind_ = ModelKind::FCN;
    model.stats_ = set.stats;
    model.fcn_config_ = config;
    Rng rng = Rng::derive(config.seed, {0x1217});
    model.fcn_ = FcnNetwork(config, rng);

    std::vector<std::array<double, 3>> inputs;
    std::vector<double> targets;
    inputs.reserve(set.rows.size());
    for (const auto& row : set.rows) {
        inputs.push_back(set.stats.apply(row.x));
        targets.push_back(row.hit_rate_pct);
    }
    model.fcn_.fit(inputs, targets, config);
    model.trained_ = true;
    return model;
}

HitRateModel train_gpr(const TrainingSet& set, double constant_value, double length_scale,
                       double noise) {
    if (set.rows.empty()) throw std::invalid_argument("empty training set");
    if (!(constant_value > 0.0) || !(length_scale > 0.0))
        throw std::invalid_argument("kernel hyperparameters must be positive");
    if (noise < 0.0) throw std::invalid_argument("noise must be nonnegative");

    const auto n = static_cast<Eigen::Index>(set.rows.size());
    std::vector<std::array<double, 3>> inputs;
    inputs.reserve(set.rows.size());
    for (const auto& row : set.rows) inputs.push_back(set.stats.apply(row.x));

    Eigen::MatrixXd gram(n, n);
    const double inv_2ls2 = 1.0 / (2.0 * length_scale * length_scale);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            double sq = 0.0;
            for (int f = 0; f < 3; ++f) {
                const double d = inputs[i][f] - inputs[j][f];
                sq += d * d;
            }
            const double k = constant_value * std::exp(-sq * inv_2ls2);
            gram(i, j) = k;
            gram(j, i) = k;
        }
    }

    Eigen::VectorXd targets(n);
    for (Eigen::Index i = 0; i < n; ++i) targets(i) = set.rows[i].hit_rate_pct;

    // Escalate the diagonal jitter until Cholesky succeeds; dense RBF
    // grids are numerically rank-deficient well before they are
    // mathematically singular.
    double jitter = 0.0;
    Eigen::LLT<Eigen::MatrixXd> llt;
    for (int attempt = 0; attempt <= 8; ++attempt) {
        Eigen::MatrixXd k = gram;
        k.diagonal().array() += noise + jitter;
        llt.compute(k);
        if (llt.info() == Eigen::Success) break;
        jitter = jitter == 0.0 ? 1e-10 * constant_value : jitter * 10.0;
        if (attempt == 8)
            throw NumericError("GPR kernel matrix is not positive definite after jitter");
    }

    HitRateModel model;
    model.family_ = set.family;
    model.kind_ = ModelKind::GPR;
    model.stats_ = set.stats;
    model.gpr_.constant_value = constant_value;
    model.gpr_.length_scale = length_scale;
    model.gpr_.noise = noise;
    model.gpr_.jitter_used = jitter;
    model.gpr_.train_inputs = std::move(inputs);
    const Eigen::VectorXd alpha = llt.solve(targets);
    model.gpr_.alpha.assign(alpha.data(), alpha.data() + n);
    model.trained_ = true;
    return model;
}

HitRateModel fit_log(std::span<const std::pair<double, double>> points) {
    double first_x = 0.0;
    bool distinct = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(points[i].first > 0.0))
            throw std::invalid_argument("log fit requires positive cache sizes");
        if (i == 0)
            first_x = points[i].first;
        else if (points[i].first != first_x)
            distinct = true;
    }
    if (points.size() < 2 || !distinct)
        throw std::invalid_argument("log fit requires >= 2 points with distinct cache sizes");

    double mean_u = 0.0, mean_y = 0.0;
    for (const auto& [x, y] : points) {
        mean_u += std::log(x);
        mean_y += y;
    }
    mean_u /= static_cast<double>(points.size());
    mean_y /= static_cast<double>(points.size());
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [x, y] : points) {
        const double du = std::log(x) - mean_u;
        sxy += du * (y - mean_y);
        sxx += du * du;
    }

    HitRateModel model;
    model.kind_ = ModelKind::LogFit;
    model.logfit_.slope = sxy / sxx;
    model.logfit_.intercept = mean_y - model.logfit_.slope * mean_u;
    model.trained_ = true;
    return model;
}

// ---------------------------------------------------------------------------
// prediction and evaluation

double HitRateModel::predict_raw(const FeatureVector& x) const {
    if (!trained_) throw StateError("model is untrained");
    if (!std::isfinite(x.data_gb) || !std::isfinite(x.cache_gb) || !std::isfinite(x.param))
        throw std::invalid_argument("features must be finite");
    switch (kind_) {
        case ModelKind::FCN: return fcn_.forward(stats_.apply(x));
        case ModelKind::GPR: {
            const auto z = stats_.apply(x);
            const double inv_2ls2 = 1.0 / (2.0 * gpr_.length_scale * gpr_.length_scale);
            double acc = 0.0;
            for (std::size_t i = 0; i < gpr_.train_inputs.size(); ++i) {
                double sq = 0.0;
                for (int f = 0; f < 3; ++f) {
                    const double d = z[f] - gpr_.train_inputs[i][f];
                    sq += d * d;
                }
                acc += gpr_.constant_value * std::exp(-sq * inv_2ls2) * gpr_.alpha[i];
            }
            return acc;
        }
        case ModelKind::LogFit: {
            if (!(x.cache_gb > 0.0)) throw std::invalid_argument("cache_gb must be positive");
            return logfit_.intercept + logfit_.slope * std::log(x.cache_gb);
        }
    }
    throw StateError("unknown model kind");
}

double HitRateModel::predict(const FeatureVector& x) const {
    return std::clamp(predict_raw(x), 0.0, 100.0);
}

const FcnNetwork& HitRateModel::fcn() const {
    if (kind_ != ModelKind::FCN) throw StateError("model is not an FCN");
    return fcn_;
}

const GprModel& HitRateModel::gpr() const {
    if (kind_ != ModelKind::GPR) throw StateError("model is not a GPR");
    return gpr_;
}

const LogFitModel& HitRateModel::logfit() const {
    if (kind_ != ModelKind::LogFit) throw StateError("model is not a log fit");
    return logfit_;
}

const FcnConfig& HitRateModel::fcn_config() const {
    if (kind_ != ModelKind::FCN) throw StateError("model is not an FCN");
    return fcn_config_;
}

double evaluate(const std::function<double(const FeatureVector&)>& predict,
                const TrainingSet& test_set) {
    if (test_set.rows.empty()) throw std::invalid_argument("empty test set");
    double acc = 0.0;
    for (const auto& row : test_set.rows) {
        const double r = predict(row.x) - row.hit_rate_pct;
        acc += r * r;
    }
    return acc / static_cast<double>(test_set.rows.size());
}

double evaluate(const HitRateModel& model, const TrainingSet& test_set) {
    return evaluate([&](const FeatureVector& x) { return model.predict(x); }, test_set);
}

void write_eval_csv(std::span<const EvalReportRow> rows, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open eval csv for writing: " + path.string());
    out << "family,model_kind,mse\n";
    char line[96];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%s,%s,%.4f\n", family_name(r.family),
                      model_kind_name(r.kind), r.mse);
        out << line;
    }
    if (!out) throw FormatError("failed writing eval csv: " + path.string());
}

}  // namespace cachepilot::predictor
