#include "cachepilot/workload.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace cachepilot {

const char* family_name(Family f) {
    switch (f) {
        case Family::Uniform: return "uniform";
        case Family::Gaussian: return "gaussian";
        case Family::Exponential: return "exponential";
        case Family::Zipf: return "zipf";
    }
    throw std::invalid_argument("unknown family code");
}

Family family_from_name(const std::string& name) {
    if (name == "uniform") return Family::Uniform;
    if (name == "gaussian") return Family::Gaussian;
    if (name == "exponential") return Family::Exponential;
    if (name == "zipf") return Family::Zipf;
    throw std::invalid_argument("unknown family name: " + name);
}

Family family_from_code(std::uint8_t code) {
    if (code > 3) throw FormatError("unknown family code " + std::to_string(code));
    return static_cast<Family>(code);
}

}  // namespace cachepilot

namespace cachepilot::workload {

DistributionSpec make_spec(Family family, double param) {
    if (family == Family::Uniform) return {family, 0.0};
    if (!(param > 0.0)) throw std::invalid_argument("distribution parameter must be positive");
    return {family, param};
}

std::string spec_label(const DistributionSpec& spec) {
    if (spec.family == Family::Uniform) return "uniform";
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%s(%.2f)", family_name(spec.family), spec.param);
    return buf;
}

KeySpace keyspace_from_gb(double data_gb) {
    if (!(data_gb > 0.0)) throw std::invalid_argument("data_gb must be positive");
    const double keys = std::round(data_gb * kKeysPerGb);
    if (keys < 1.0 || keys > 4294967295.0) throw std::invalid_argument("data_gb out of range");
    return KeySpace{data_gb, static_cast<std::uint32_t>(keys)};
}

KeySampler::KeySampler(DistributionSpec spec, KeySpace keyspace)
    : spec_(spec), keyspace_(keyspace) {
    if (keyspace_.key_count == 0) throw std::invalid_argument("empty key space");
    if (spec_.family != Family::Uniform && !(spec_.param > 0.0))
        throw std::invalid_argument("distribution parameter must be positive");
    if (spec_.family == Family::Zipf) {
        zipf_cdf_.resize(keyspace_.key_count);
        double cum = 0.0;
        for (std::uint32_t r = 1; r <= keyspace_.key_count; ++r) {
            cum += std::pow(static_cast<double>(r), -spec_.param);
            zipf_cdf_[r - 1] = cum;
        }
        const double total = cum;
        for (double& c : zipf_cdf_) c /= total;
        zipf_cdf_.back() = 1.0;
    }
}

std::uint32_t KeySampler::sample(Rng& rng) const {
    const std::uint32_t k = keyspace_.key_count;
    switch (spec_.family) {
        case Family::Uniform: {
            const auto idx = static_cast<std::uint32_t>(rng.next_double() * k);
            return std::min(idx, k - 1);
        }
        case Family::Zipf: {
            const double u = rng.next_double();
            const auto it = std::lower_bound(zipf_cdf_.begin(), zipf_cdf_.end(), u);
            const auto rank = static_cast<std::uint32_t>(it - zipf_cdf_.begin());
            return std::min(rank, k - 1);
        }
        case Family::Exponential: {
            for (;;) {
                const double x = -std::log(rng.next_open()) / spec_.param;
                if (x < kExpCut) {
                    const auto idx = static_cast<std::uint32_t>(x / kExpCut * k);
                    return std::min(idx, k - 1);
                }
            }
        }
        case Family::Gaussian: {
            for (;;) {
                const double x = std::fabs(rng.next_normal()) * spec_.param;
                if (x < kGaussCut) {
                    const auto idx = static_cast<std::uint32_t>(x / kGaussCut * k);
                    return std::min(idx, k - 1);
                }
            }
        }
    }
    throw std::invalid_argument("unknown family");
}

std::uint32_t sample_key(const DistributionSpec& spec, const KeySpace& keyspace, Rng& rng) {
    return KeySampler(spec, keyspace).sample(rng);
}

Trace generate_trace(const DistributionSpec& spec, const KeySpace& keyspace,
                     std::uint64_t length, std::uint64_t seed, std::string tenant_id) {
    if (length == 0) throw std::invalid_argument("trace length must be >= 1");
    Trace trace;
    trace.tenant_id = std::move(tenant_id);
    trace.spec = spec;
    trace.keyspace = keyspace;
    trace.seed = seed;
    trace.keys.reserve(length);
    KeySampler sampler(spec, keyspace);
    Rng rng = Rng::derive(seed, {0});
    for (std::uint64_t i = 0; i < length; ++i) trace.keys.push_back(sampler.sample(rng));
    trace.phases.push_back(Phase{spec, 0, length});
    return trace;
}

Trace concat_phases(const KeySpace& keyspace,
                    std::span<const std::pair<DistributionSpec, std::uint64_t>> phases,
                    std::uint64_t seed, std::string tenant_id) {
    if (phases.empty()) throw std::invalid_argument("phase list must not be empty");
    Trace trace;
    trace.tenant_id = std::move(tenant_id);
    trace.spec = phases.front().first;
    trace.keyspace = keyspace;
    trace.seed = seed;
    std::uint64_t offset = 0;
    for (std::size_t i = 0; i < phases.size(); ++i) {
        const auto& [spec, length] = phases[i];
        if (length == 0) throw std::invalid_argument("phase length must be >= 1");
        KeySampler sampler(spec, keyspace);
        Rng rng = Rng::derive(seed, {i});
        for (std::uint64_t q = 0; q < length; ++q) trace.keys.push_back(sampler.sample(rng));
        trace.phases.push_back(Phase{spec, offset, length});
        offset += length;
    }
    return trace;
}

namespace {

constexpr char kTraceMagic[4] = {'C', 'P', 'T', '1'};

template <typename T>
void put_le(std::ostream& out, T value) {
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const char* what) {
    unsigned char buf[sizeof(T)];
    in.read(reinterpret_cast<char*>(buf), sizeof(T));
    if (!in) throw FormatError(std::string("trace file truncated reading ") + what);
    T value;
    std::memcpy(&value, buf, sizeof(T));
    return value;
}

}  // namespace

void write_trace(const Trace& trace, const std::filesystem::path& path) {
    if (trace.multi_phase())
        throw std::invalid_argument("trace file format holds a single distribution");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open trace file for writing: " + path.string());
    out.write(kTraceMagic, 4);
    put_le<std::uint32_t>(out, trace.keyspace.key_count);
    put_le<std::uint64_t>(out, trace.keys.size());
    put_le<std::uint64_t>(out, trace.seed);
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(trace.spec.family));
    put_le<double>(out, trace.spec.param);
    for (std::uint32_t key : trace.keys) put_le<std::uint32_t>(out, key);
    if (!out) throw FormatError("failed writing trace file: " + path.string());
}

Trace read_trace(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open trace file: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kTraceMagic, 4) != 0)
        throw FormatError("not a trace file (bad magic): " + path.string());
    Trace trace;
    trace.keyspace.key_count = get_le<std::uint32_t>(in, "key_count");
    trace.keyspace.data_gb = trace.keyspace.key_count / kKeysPerGb;
    const auto length = get_le<std::uint64_t>(in, "length");
    trace.seed = get_le<std::uint64_t>(in, "seed");
    trace.spec.family = family_from_code(get_le<std::uint8_t>(in, "family"));
    trace.spec.param = get_le<double>(in, "param");
    trace.keys.reserve(length);
    for (std::uint64_t i = 0; i < length; ++i) {
        const auto key = get_le<std::uint32_t>(in, "keys");
        if (key >= trace.keyspace.key_count)
            throw FormatError("trace file key out of range: " + path.string());
        trace.keys.push_back(key);
    }
    trace.phases.push_back(Phase{trace.spec, 0, length});
    return trace;
}

void write_trace_csv(const Trace& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open csv for writing: " + path.string());
    for (std::uint32_t key : trace.keys) out << key << '\n';
    if (!out) throw FormatError("failed writing csv: " + path.string());
}

}  // namespace cachepilot::workload
