#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

#include "cachepilot/workload.hpp"

namespace cachepilot::cachesim {

using workload::DistributionSpec;
using workload::KeySpace;
using workload::Trace;

struct CacheConfig {
    double capacity_gb = 0.0;
    std::uint32_t node_count = 1;  // reporting multiplier only; the pool is one LRU
    std::uint64_t slots = 0;
};

/// slots = round(capacity_gb * 10,240); capacity is the aggregate pool.
CacheConfig cache_config_from_gb(double capacity_gb, std::uint32_t node_count = 1);

/// Two-point response-time model: every window's mean latency is exactly
/// rate*hit_ms + (1-rate)*miss_ms. Defaults solve the measured pair
/// (10.2% -> 4.58 ms, 91.8% -> 1.77 ms).
struct LatencyModel {
    double hit_ms = 1.49;
    double miss_ms = 4.93;
};

double mean_latency_ms(const LatencyModel& latency, double hit_rate_pct);

struct WindowRow {
    std::uint64_t query_index = 0;  // index of the last query in the window (1-based count)
    double window_hit_rate_pct = 0.0;
    double cum_hit_rate_pct = 0.0;
    double window_mean_latency_ms = 0.0;
    double cache_gb = 0.0;
    int phase_id = 0;
};

struct RunStats {
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::vector<WindowRow> windows;

    std::uint64_t queries() const { return hits + misses; }
    double cum_hit_rate_pct() const {
        return queries() == 0 ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(queries());
    }
};

void write_runstats_csv(const RunStats& stats, const std::filesystem::path& path);

/// Accumulates hit/miss counts and closes a WindowRow every `window`
/// queries. Shared by run_trace and the scenario loops so the CSV series
/// they emit agree.
class WindowAccumulator {
public:
    WindowAccumulator(LatencyModel latency, std::uint64_t window);

    void record(bool hit, double cache_gb, int phase_id);
    void flush(double cache_gb, int phase_id);  // close a partial trailing window

    const RunStats& stats() const { return stats_; }
    RunStats take() { return std::move(stats_); }

private:
    LatencyModel latency_;
    std::uint64_t window_;
    std::uint64_t window_hits_ = 0;
    std::uint64_t window_queries_ = 0;
    RunStats stats_;
};

/// LRU cache over u32 keys: hash index plus an arena-backed doubly linked
/// recency list, O(1) expected per access. One handle is single-writer;
/// distinct handles may run in parallel.
class LruCache {
public:
    explicit LruCache(const CacheConfig& config);

    /// Returns true on hit. Hit moves the key to the MRU end; miss inserts
    /// at MRU and evicts the LRU entry when full.
    bool access(std::uint32_t key);

    /// Shrink evicts from the LRU end until within capacity; grow keeps
    /// contents. Counters are untouched.
    void resize(double new_capacity_gb);

    bool contains(std::uint32_t key) const { return index_.count(key) != 0; }
    std::uint64_t slots() const { return config_.slots; }
    std::uint64_t size() const { return index_.size(); }
    double capacity_gb() const { return config_.capacity_gb; }
    const CacheConfig& config() const { return config_; }

    /// Resident keys, most recently used first. Test/diagnostic use.
    std::vector<std::uint32_t> resident_mru_order() const;

private:
    struct Node {
        std::uint32_t key = 0;
        std::int32_t prev = -1;
        std::int32_t next = -1;
    };

    void detach(std::int32_t n);
    void push_front(std::int32_t n);
    void evict_lru();

    CacheConfig config_;
    std::vector<Node> arena_;
    std::vector<std::int32_t> free_;
    std::unordered_map<std::uint32_t, std::int32_t> index_;
    std::int32_t head_ = -1;
    std::int32_t tail_ = -1;
};

/// Replays a trace, closing a stats window every `window` queries.
RunStats run_trace(LruCache& cache, const Trace& trace, const LatencyModel& latency,
                   std::uint64_t window);

/// Ground-truth oracle: fresh cold-cache simulation of `n_queries` draws,
/// hit rate measured over the post-warmup portion only. Used to build
/// regressor training targets.
double steady_hit_rate(const DistributionSpec& spec, const KeySpace& keyspace,
                       double cache_gb, std::uint64_t n_queries, double warmup_fraction,
                       std::uint64_t seed);

/// One generated key stream driving an independent cache per capacity;
/// element i equals steady_hit_rate(..., cache_gbs[i], ...) exactly, at a
/// fraction of the cost. Grid generation runs through here.
std::vector<double> sweep_hit_rates(const DistributionSpec& spec, const KeySpace& keyspace,
                                    std::span<const double> cache_gbs, std::uint64_t n_queries,
                                    double warmup_fraction, std::uint64_t seed);

}  // namespace cachepilot::cachesim
