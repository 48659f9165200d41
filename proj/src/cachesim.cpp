#include "cachepilot/cachesim.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace cachepilot::cachesim {

CacheConfig cache_config_from_gb(double capacity_gb, std::uint32_t node_count) {
    if (!(capacity_gb > 0.0)) throw std::invalid_argument("capacity_gb must be positive");
    if (node_count == 0) throw std::invalid_argument("node_count must be >= 1");
    const double slots = std::round(capacity_gb * kKeysPerGb);
    if (slots < 1.0) throw std::invalid_argument("capacity yields zero slots");
    return CacheConfig{capacity_gb, node_count, static_cast<std::uint64_t>(slots)};
}

double mean_latency_ms(const LatencyModel& latency, double hit_rate_pct) {
    const double rate = hit_rate_pct / 100.0;
    return rate * latency.hit_ms + (1.0 - rate) * latency.miss_ms;
}

WindowAccumulator::WindowAccumulator(LatencyModel latency, std::uint64_t window)
    : latency_(latency), window_(window) {
    if (window_ == 0) throw std::invalid_argument("window must be >= 1");
}

void WindowAccumulator::record(bool hit, double cache_gb, int phase_id) {
    hit ? ++stats_.hits : ++stats_.misses;
    window_hits_ += hit ? 1 : 0;
    if (++window_queries_ == window_) flush(cache_gb, phase_id);
}

void WindowAccumulator::flush(double cache_gb, int phase_id) {
    if (window_queries_ == 0) return;
    const double rate =
        100.0 * static_cast<double>(window_hits_) / static_cast<double>(window_queries_);
    stats_.windows.push_back(WindowRow{stats_.queries(), rate, stats_.cum_hit_rate_pct(),
                                       mean_latency_ms(latency_, rate), cache_gb, phase_id});
    window_hits_ = 0;
    window_queries_ = 0;
}

void write_runstats_csv(const RunStats& stats, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open runstats csv for writing: " + path.string());
    out << "query_index,window_hit_rate_pct,cum_hit_rate_pct,window_mean_latency_ms,cache_gb,phase_id\n";
    char line[192];
    for (const auto& w : stats.windows) {
        std::snprintf(line, sizeof(line), "%llu,%.4f,%.4f,%.4f,%.1f,%d\n",
                      static_cast<unsigned long long>(w.query_index), w.window_hit_rate_pct,
                      w.cum_hit_rate_pct, w.window_mean_latency_ms, w.cache_gb, w.phase_id);
        out << line;
    }
    if (!out) throw FormatError("failed writing runstats csv: " + path.string());
}

LruCache::LruCache(const CacheConfig& config) : config_(config) {
    if (config_.slots == 0) throw std::invalid_argument("cache must have at least one slot");
    arena_.reserve(config_.slots);
    index_.reserve(config_.slots);
}

void LruCache::detach(std::int32_t n) {
    Node& node = arena_[n];
    if (node.prev >= 0)
        arena_[node.prev].next = node.next;
    else
        head_ = node.next;
    if (node.next >= 0)
        arena_[node.next].prev = node.prev;
    else
        tail_ = node.prev;
}

void LruCache::push_front(std::int32_t n) {
    Node& node = arena_[n];
    node.prev = -1;
    node.next = head_;
    if (head_ >= 0) arena_[head_].prev = n;
    head_ = n;
    if (tail_ < 0) tail_ = n;
}

void LruCache::evict_lru() {
    const std::int32_t victim = tail_;
    detach(victim);
    index_.erase(arena_[victim].key);
    free_.push_back(victim);
}

bool LruCache::access(std::uint32_t key) {
    auto it = index_.find(key);
    if (it != index_.end()) {
        const std::int32_t n = it->second;
        if (head_ != n) {
            detach(n);
            push_front(n);
        }
        return true;
    }
    if (index_.size() >= config_.slots) evict_lru();
    std::int32_t n;
    if (!free_.empty()) {
        n = free_.back();
        free_.pop_back();
        arena_[n].key = key;
    } else {
        n = static_cast<std::int32_t>(arena_.size());
        arena_.push_back(Node{key, -1, -1});
    }
    index_.emplace(key, n);
    push_front(n);
    return false;
}

void LruCache::resize(double new_capacity_gb) {
    const CacheConfig next = cache_config_from_gb(new_capacity_gb, config_.node_count);
    while (index_.size() > next.slots) evict_lru();
    config_ = next;
}

std::vector<std::uint32_t> LruCache::resident_mru_order() const {
    std::vector<std::uint32_t> keys;
    keys.reserve(index_.size());
    for (std::int32_t n = head_; n >= 0; n = arena_[n].next) keys.push_back(arena_[n].key);
    return keys;
}

RunStats run_trace(LruCache& cache, const Trace& trace, const LatencyModel& latency,
                   std::uint64_t window) {
    WindowAccumulator acc(latency, window);
    std::size_t phase = 0;
    for (std::uint64_t i = 0; i < trace.keys.size(); ++i) {
        while (phase + 1 < trace.phases.size() && i >= trace.phases[phase + 1].offset) ++phase;
        acc.record(cache.access(trace.keys[i]), cache.capacity_gb(), static_cast<int>(phase));
    }
    if (!trace.keys.empty())
        acc.flush(cache.capacity_gb(),
                  static_cast<int>(trace.phases.empty() ? 0 : trace.phases.size() - 1));
    return acc.take();
}

std::vector<double> sweep_hit_rates(const DistributionSpec& spec, const KeySpace& keyspace,
                                    std::span<const double> cache_gbs, std::uint64_t n_queries,
                                    double warmup_fraction, std::uint64_t seed) {
    if (n_queries == 0) throw std::invalid_argument("n_queries must be >= 1");
    if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0))
        throw std::invalid_argument("warmup_fraction must be in [0, 1)");

    std::vector<LruCache> caches;
    caches.reserve(cache_gbs.size());
    for (double gb : cache_gbs) caches.emplace_back(cache_config_from_gb(gb));

    std::vector<std::uint64_t> hits(cache_gbs.size(), 0);
    const auto warmup = static_cast<std::uint64_t>(warmup_fraction * static_cast<double>(n_queries));
    const std::uint64_t measured = n_queries - warmup;

    // The key stream depends only on (spec, keyspace, n, seed), so every
    // capacity sees the trace a fresh steady_hit_rate call would generate.
    workload::KeySampler sampler(spec, keyspace);
    Rng rng = Rng::derive(seed, {0});
    for (std::uint64_t i = 0; i < n_queries; ++i) {
        const std::uint32_t key = sampler.sample(rng);
        for (std::size_t c = 0; c < caches.size(); ++c) {
            const bool hit = caches[c].access(key);
            if (i >= warmup && hit) ++hits[c];
        }
    }

    std::vector<double> rates(cache_gbs.size());
    for (std::size_t c = 0; c < rates.size(); ++c)
        rates[c] = 100.0 * static_cast<double>(hits[c]) / static_cast<double>(measured);
    return rates;
}

double steady_hit_rate(const DistributionSpec& spec, const KeySpace& keyspace, double cache_gb,
                       std::uint64_t n_queries, double warmup_fraction, std::uint64_t seed) {
    const double gbs[1] = {cache_gb};
    return sweep_hit_rates(spec, keyspace, gbs, n_queries, warmup_fraction, seed)[0];
}

}  // namespace cachepilot::cachesim
