#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cachepilot/common.hpp"
#include "cachepilot/rng.hpp"

namespace cachepilot::workload {

/// A workload family plus its skew parameter (sigma for Gaussian, lambda
/// for exponential, rho for Zipf; 0 for uniform, which has none).
struct DistributionSpec {
    Family family = Family::Uniform;
    double param = 0.0;
};

DistributionSpec make_spec(Family family, double param);

/// Formats like "zipf(0.70)" / "uniform"; used in reports and logs.
std::string spec_label(const DistributionSpec& spec);

struct KeySpace {
    double data_gb = 0.0;
    std::uint32_t key_count = 0;
};

/// key_count = round(data_gb * 10,240).
KeySpace keyspace_from_gb(double data_gb);

struct Phase {
    DistributionSpec spec;
    std::uint64_t offset = 0;
    std::uint64_t length = 0;
};

/// A seeded, replayable key-access sequence for one tenant. Regenerating
/// with the same (spec, keyspace, seed, length) is bit-identical.
struct Trace {
    std::string tenant_id;
    DistributionSpec spec;
    KeySpace keyspace;
    std::uint64_t seed = 0;
    std::vector<std::uint32_t> keys;
    std::vector<Phase> phases;

    bool multi_phase() const { return phases.size() > 1; }
};

/// Draws key indices for one spec over one key space.
///
/// Mapping from the continuous families onto [0, key_count):
///   uniform      key = floor(u * K)
///   zipf         ranks r in {1..K}, P(r) proportional to r^-rho, sampled by
///                inverse-CDF binary search over a precomputed table; key = r-1
///   exponential  x = -ln(u)/lambda, resample while x >= 10.0; key = floor(x/10 * K)
///   gaussian     x = |N(0, sigma)|, resample while x >= 4.0; key = floor(x/4 * K)
/// Skew concentrates on low key indices for every non-uniform family.
class KeySampler {
public:
    KeySampler(DistributionSpec spec, KeySpace keyspace);

    std::uint32_t sample(Rng& rng) const;

    const DistributionSpec& spec() const { return spec_; }
    const KeySpace& keyspace() const { return keyspace_; }

    static constexpr double kExpCut = 10.0;
    static constexpr double kGaussCut = 4.0;

private:
    DistributionSpec spec_;
    KeySpace keyspace_;
    std::vector<double> zipf_cdf_;
};

/// One-off draw; builds a sampler internally, so prefer KeySampler in loops
/// (the Zipf table costs O(key_count) to set up).
std::uint32_t sample_key(const DistributionSpec& spec, const KeySpace& keyspace, Rng& rng);

Trace generate_trace(const DistributionSpec& spec, const KeySpace& keyspace,
                     std::uint64_t length, std::uint64_t seed,
                     std::string tenant_id = {});

/// Concatenates per-phase generations over a shared key space; phase
/// boundaries are recorded for reporting. Phase i draws from the substream
/// derived from (seed, i).
Trace concat_phases(const KeySpace& keyspace,
                    std::span<const std::pair<DistributionSpec, std::uint64_t>> phases,
                    std::uint64_t seed, std::string tenant_id = {});

/// Trace file, all little-endian: "CPT1", u32 key_count, u64 length,
/// u64 seed, u8 family code, f64 param, then `length` u32 key indices.
/// Holds a single distribution; multi-phase traces are in-memory only.
void write_trace(const Trace& trace, const std::filesystem::path& path);
Trace read_trace(const std::filesystem::path& path);

/// Debug export: one key index per line.
void write_trace_csv(const Trace& trace, const std::filesystem::path& path);

}  // namespace cachepilot::workload
