#include <cstring>
#include <fstream>

#include "cachepilot/predictor.hpp"

namespace cachepilot::predictor {

/// Model file layout, all little-endian:
///   "CPM1", u32 format version,
///   u8 family, u8 kind,
///   f64[3] feature means, f64[3] feature stddevs,
///   then one kind-specific parameter block:
///     FCN    config (hidden, loss, activation, epochs, regularizer,
///            reg coefficient, learning rate, batch, seed, u8 tag marking
///            the regularized layer = 2, the hidden dense layer),
///            running mean/var (20 each), flattened weights
///     GPR    cv, ls, noise, jitter, u64 n, inputs (n x 3), alpha (n)
///     LogFit intercept, slope
class ModelIo {
public:
    static constexpr char kMagic[4] = {'C', 'P', 'M', '1'};
    static constexpr std::uint32_t kVersion = 1;
    static constexpr std::uint8_t kRegularizedLayerTag = 2;

    static void save(const HitRateModel& model, const std::filesystem::path& path) {
        if (!model.trained_) throw StateError("cannot save an untrained model");
        std::ofstream out(path, std::ios::binary);
        if (!out) throw FormatError("cannot open model file for writing: " + path.string());
        out.write(kMagic, 4);
        put(out, kVersion);
        put(out, static_cast<std::uint8_t>(model.family_));
        put(out, static_cast<std::uint8_t>(model.kind_));
        for (double m : model.stats_.mean) put(out, m);
        for (double s : model.stats_.stddev) put(out, s);
        switch (model.kind_) {
            case ModelKind::FCN: save_fcn(out, model); break;
            case ModelKind::GPR: save_gpr(out, model.gpr_); break;
            case ModelKind::LogFit:
                put(out, model.logfit_.intercept);
                put(out, model.logfit_.slope);
                break;
        }
        if (!out) throw FormatError("failed writing model file: " + path.string());
    }

    static HitRateModel load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw FormatError("cannot open model file: " + path.string());
        char magic[4];
        in.read(magic, 4);
        if (!in || std::memcmp(magic, kMagic, 4) != 0)
            throw FormatError("not a model file (bad magic): " + path.string());
        const auto version = get<std::uint32_t>(in, path, "version");
        if (version != kVersion)
            throw FormatError("model file " + path.string() + " has version " +
                              std::to_string(version) + ", expected version " +
                              std::to_string(kVersion));
        HitRateModel model;
        model.family_ = family_from_code(get<std::uint8_t>(in, path, "family"));
        const auto kind = get<std::uint8_t>(in, path, "kind");
        if (kind > 2) throw FormatError("model file has unknown kind: " + path.string());
        model.kind_ = static_cast<ModelKind>(kind);
        for (double& m : model.stats_.mean) m = get<double>(in, path, "stats");
        for (double& s : model.stats_.stddev) s = get<double>(in, path, "stats");
        switch (model.kind_) {
            case ModelKind::FCN: load_fcn(in, path, model); break;
            case ModelKind::GPR: load_gpr(in, path, model.gpr_); break;
            case ModelKind::LogFit:
                model.logfit_.intercept = get<double>(in, path, "logfit");
                model.logfit_.slope = get<double>(in, path, "logfit");
                break;
        }
        model.trained_ = true;
        return model;
    }

private:
    template <typename T>
    static void put(std::ostream& out, T value) {
        char buf[sizeof(T)];
        std::memcpy(buf, &value, sizeof(T));
        out.write(buf, sizeof(T));
    }

    template <typename T>
    static T get(std::istream& in, const std::filesystem::path& path, const char* what) {
        char buf[sizeof(T)];
        in.read(buf, sizeof(T));
        if (!in)
            throw FormatError("model file truncated reading " + std::string(what) + ": " +
                              path.string());
        T value;
        std::memcpy(&value, buf, sizeof(T));
        return value;
    }

    static void save_fcn(std::ostream& out, const HitRateModel& model) {
        const FcnConfig& c = model.fcn_config_;
        put(out, static_cast<std::int32_t>(c.hidden_neurons));
        put(out, static_cast<std::uint8_t>(c.loss));
        put(out, static_cast<std::uint8_t>(c.activation));
        put(out, static_cast<std::int32_t>(c.epochs));
        put(out, static_cast<std::uint8_t>(c.regularizer));
        put(out, c.reg_coefficient);
        put(out, c.learning_rate);
        put(out, static_cast<std::int32_t>(c.batch_size));
        put(out, c.seed);
        put(out, kRegularizedLayerTag);
        for (double v : model.fcn_.running_mean) put(out, v);
        for (double v : model.fcn_.running_var) put(out, v);
        put(out, static_cast<std::uint64_t>(model.fcn_.parameters().size()));
        for (double v : model.fcn_.parameters()) put(out, v);
    }

    static void load_fcn(std::istream& in, const std::filesystem::path& path,
                         HitRateModel& model) {
        FcnConfig c;
        c.hidden_neurons = get<std::int32_t>(in, path, "fcn hidden");
        c.loss = static_cast<Loss>(get<std::uint8_t>(in, path, "fcn loss"));
        c.activation = static_cast<Activation>(get<std::uint8_t>(in, path, "fcn activation"));
        c.epochs = get<std::int32_t>(in, path, "fcn epochs");
        c.regularizer = static_cast<Regularizer>(get<std::uint8_t>(in, path, "fcn regularizer"));
        c.reg_coefficient = get<double>(in, path, "fcn reg coefficient");
        c.learning_rate = get<double>(in, path, "fcn learning rate");
        c.batch_size = get<std::int32_t>(in, path, "fcn batch");
        c.seed = get<std::uint64_t>(in, path, "fcn seed");
        const auto layer_tag = get<std::uint8_t>(in, path, "fcn regularized layer");
        if (layer_tag != kRegularizedLayerTag)
            throw FormatError("model file regularizes an unexpected layer: " + path.string());
        if (c.hidden_neurons < 1 || c.hidden_neurons > 65536)
            throw FormatError("model file has implausible hidden width: " + path.string());
        model.fcn_config_ = c;
        model.fcn_.hidden_ = c.hidden_neurons;
        model.fcn_.activation = c.activation;
        for (double& v : model.fcn_.running_mean) v = get<double>(in, path, "fcn running mean");
        for (double& v : model.fcn_.running_var) v = get<double>(in, path, "fcn running var");
        const auto count = get<std::uint64_t>(in, path, "fcn parameter count");
        if (count != model.fcn_.parameter_count())
            throw FormatError("model file parameter count mismatch: " + path.string());
        model.fcn_.params_.resize(count);
        for (double& v : model.fcn_.params_) v = get<double>(in, path, "fcn parameters");
    }

    static void save_gpr(std::ostream& out, const GprModel& gpr) {
        put(out, gpr.constant_value);
        put(out, gpr.length_scale);
        put(out, gpr.noise);
        put(out, gpr.jitter_used);
        put(out, static_cast<std::uint64_t>(gpr.train_inputs.size()));
        for (const auto& row : gpr.train_inputs)
            for (double v : row) put(out, v);
        for (double v : gpr.alpha) put(out, v);
    }

    static void load_gpr(std::istream& in, const std::filesystem::path& path, GprModel& gpr) {
        gpr.constant_value = get<double>(in, path, "gpr cv");
        gpr.length_scale = get<double>(in, path, "gpr ls");
        gpr.noise = get<double>(in, path, "gpr noise");
        gpr.jitter_used = get<double>(in, path, "gpr jitter");
        const auto n = get<std::uint64_t>(in, path, "gpr size");
        if (n == 0 || n > 10'000'000)
            throw FormatError("model file has implausible GPR size: " + path.string());
        gpr.train_inputs.resize(n);
        for (auto& row : gpr.train_inputs)
            for (double& v : row) v = get<double>(in, path, "gpr inputs");
        gpr.alpha.resize(n);
        for (double& v : gpr.alpha) v = get<double>(in, path, "gpr alpha");
    }
};

void HitRateModel::save(const std::filesystem::path& path) const { ModelIo::save(*this, path); }

HitRateModel HitRateModel::load(const std::filesystem::path& path) { return ModelIo::load(path); }

}  // namespace cachepilot::predictor
