#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <set>

#include "cachepilot/cachesim.hpp"

using namespace cachepilot;
using namespace cachepilot::cachesim;
using cachepilot::Family;
using workload::generate_trace;
using workload::keyspace_from_gb;

TEST_CASE("cache sizing follows the per-GB slot constant") {
    CHECK(cache_config_from_gb(0.1).slots == 1'024);
    CHECK(cache_config_from_gb(18.0, 3).slots == 184'320);
    CHECK(cache_config_from_gb(2.7).slots == 27'648);
    CHECK_THROWS_AS(cache_config_from_gb(0.0), std::invalid_argument);
}

TEST_CASE("LRU access semantics, hand-traced") {
    SUBCASE("capacity 2: a,b,a,c,b") {
        LruCache cache(CacheConfig{0.0, 1, 2});
        CHECK_FALSE(cache.access('a'));
        CHECK_FALSE(cache.access('b'));
        CHECK(cache.access('a'));
        CHECK_FALSE(cache.access('c'));  // evicts b
        CHECK_FALSE(cache.access('b'));  // evicts a
        CHECK(cache.contains('b'));
        CHECK(cache.contains('c'));
        CHECK_FALSE(cache.contains('a'));
    }
    SUBCASE("capacity covering all keys: second touch always hits") {
        LruCache cache(CacheConfig{0.0, 1, 64});
        for (std::uint32_t k = 0; k < 10; ++k) CHECK_FALSE(cache.access(k));
        for (std::uint32_t k = 0; k < 10; ++k) CHECK(cache.access(k));
    }
    SUBCASE("capacity 1: a,a,a") {
        LruCache cache(CacheConfig{0.0, 1, 1});
        CHECK_FALSE(cache.access('a'));
        CHECK(cache.access('a'));
        CHECK(cache.access('a'));
    }
}

TEST_CASE("LRU agrees with a naive reference model on random traces") {
    // Reference: a deque kept in recency order, linear scans everywhere.
    Rng rng(515);
    for (int round = 0; round < 20; ++round) {
        const std::uint64_t slots = 1 + rng.next_below(12);
        LruCache cache(CacheConfig{0.0, 1, slots});
        std::deque<std::uint32_t> reference;
        for (int i = 0; i < 400; ++i) {
            const auto key = static_cast<std::uint32_t>(rng.next_below(30));
            const auto it = std::find(reference.begin(), reference.end(), key);
            const bool expect_hit = it != reference.end();
            if (expect_hit) reference.erase(it);
            reference.push_front(key);
            if (reference.size() > slots) reference.pop_back();

            REQUIRE(cache.access(key) == expect_hit);
            REQUIRE(cache.size() == reference.size());
            REQUIRE(cache.size() <= slots);
        }
        const auto mru = cache.resident_mru_order();
        REQUIRE(std::equal(mru.begin(), mru.end(), reference.begin(), reference.end()));
    }
}

TEST_CASE("resize keeps the most recently used keys") {
    LruCache cache(cache_config_from_gb(0.9));  // 9,216 slots
    for (std::uint32_t k = 0; k < 9'216; ++k) cache.access(k);

    SUBCASE("shrink keeps exactly the MRU slice") {
        cache.resize(0.1);  // 1,024 slots
        CHECK(cache.slots() == 1'024);
        CHECK(cache.size() == 1'024);
        for (std::uint32_t k = 9'216 - 1'024; k < 9'216; ++k) REQUIRE(cache.contains(k));
        CHECK_FALSE(cache.contains(0));
    }
    SUBCASE("grow preserves contents") {
        cache.resize(2.0);
        CHECK(cache.size() == 9'216);
        for (std::uint32_t k = 0; k < 9'216; ++k) REQUIRE(cache.contains(k));
    }
    SUBCASE("resize to the current size changes nothing") {
        cache.resize(0.9);
        CHECK(cache.size() == 9'216);
        CHECK(cache.slots() == 9'216);
    }
    SUBCASE("non-positive capacity is rejected") {
        CHECK_THROWS_AS(cache.resize(0.0), std::invalid_argument);
    }
}

TEST_CASE("uniform steady-state hit rate equals slots/K") {
    const auto ks = keyspace_from_gb(3.0);
    const double rate =
        steady_hit_rate({Family::Uniform, 0.0}, ks, 2.7, 500'000, 0.5, 11);
    CHECK(rate == doctest::Approx(90.0).epsilon(0.022));  // 27,648 / 30,720
}

TEST_CASE("cache at least as large as the data leaves only cold misses") {
    const auto ks = keyspace_from_gb(1.0);
    const double rate =
        steady_hit_rate({Family::Gaussian, 1.0}, ks, 1.0, 500'000, 0.5, 3);
    CHECK(rate >= 99.0);

    SUBCASE("cumulative rate counts exactly the cold misses") {
        const auto trace = generate_trace({Family::Uniform, 0.0}, ks, 100'000, 8);
        LruCache cache(cache_config_from_gb(2.0));
        const RunStats stats = run_trace(cache, trace, LatencyModel{}, 10'000);
        std::set<std::uint32_t> distinct(trace.keys.begin(), trace.keys.end());
        CHECK(stats.misses == distinct.size());
        CHECK(stats.hits == trace.keys.size() - distinct.size());
    }
}

TEST_CASE("skew beats uniform at a small cache") {
    const auto ks = keyspace_from_gb(3.0);
    const double zipf = steady_hit_rate({Family::Zipf, 2.0}, ks, 0.1, 200'000, 0.5, 5);
    const double uniform = steady_hit_rate({Family::Uniform, 0.0}, ks, 0.1, 200'000, 0.5, 5);
    CHECK(zipf > uniform);
}

TEST_CASE("steady hit rate is nondecreasing in capacity") {
    const auto ks = keyspace_from_gb(2.0);
    const std::vector<double> grid = {0.1, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0};
    const auto rates =
        sweep_hit_rates({Family::Exponential, 1.0}, ks, grid, 200'000, 0.5, 21);
    for (std::size_t i = 1; i < rates.size(); ++i) REQUIRE(rates[i] >= rates[i - 1] - 1e-9);
}

TEST_CASE("sweep equals per-capacity steady_hit_rate calls") {
    const auto ks = keyspace_from_gb(1.0);
    const std::vector<double> grid = {0.2, 0.6};
    const auto swept = sweep_hit_rates({Family::Zipf, 1.1}, ks, grid, 50'000, 0.5, 9);
    CHECK(swept[0] ==
          doctest::Approx(steady_hit_rate({Family::Zipf, 1.1}, ks, 0.2, 50'000, 0.5, 9)));
    CHECK(swept[1] ==
          doctest::Approx(steady_hit_rate({Family::Zipf, 1.1}, ks, 0.6, 50'000, 0.5, 9)));
}

TEST_CASE("run_trace windows carry the latency identity") {
    const auto ks = keyspace_from_gb(1.0);
    const auto trace = generate_trace({Family::Zipf, 1.0}, ks, 60'000, 2);
    LruCache cache(cache_config_from_gb(0.3));
    const LatencyModel latency{1.49, 4.93};
    const RunStats stats = run_trace(cache, trace, latency, 5'000);
    REQUIRE(stats.windows.size() == 12);
    for (const auto& w : stats.windows) {
        const double rate = w.window_hit_rate_pct / 100.0;
        CHECK(w.window_mean_latency_ms ==
              doctest::Approx(rate * 1.49 + (1.0 - rate) * 4.93).epsilon(1e-12));
        CHECK(w.window_hit_rate_pct >= 0.0);
        CHECK(w.window_hit_rate_pct <= 100.0);
    }
    CHECK(stats.hits + stats.misses == 60'000);

    SUBCASE("91.8% hit rate maps to 1.77 ms") {
        CHECK(mean_latency_ms(latency, 91.8) == doctest::Approx(1.77).epsilon(0.006));
    }
}

TEST_CASE("identical inputs give bit-identical run stats") {
    const auto ks = keyspace_from_gb(0.5);
    const auto trace = generate_trace({Family::Gaussian, 0.8}, ks, 30'000, 77);
    LruCache a(cache_config_from_gb(0.2));
    LruCache b(cache_config_from_gb(0.2));
    const RunStats sa = run_trace(a, trace, LatencyModel{}, 1'000);
    const RunStats sb = run_trace(b, trace, LatencyModel{}, 1'000);
    CHECK(sa.hits == sb.hits);
    CHECK(sa.misses == sb.misses);
    REQUIRE(sa.windows.size() == sb.windows.size());
    for (std::size_t i = 0; i < sa.windows.size(); ++i) {
        CHECK(sa.windows[i].window_hit_rate_pct == sb.windows[i].window_hit_rate_pct);
        CHECK(sa.windows[i].window_mean_latency_ms == sb.windows[i].window_mean_latency_ms);
    }
}

TEST_CASE("runstats csv has the pinned schema") {
    const auto ks = keyspace_from_gb(0.1);
    const auto trace = generate_trace({Family::Uniform, 0.0}, ks, 2'000, 4);
    LruCache cache(cache_config_from_gb(0.1));
    const RunStats stats = run_trace(cache, trace, LatencyModel{}, 500);
    const auto path = std::filesystem::temp_directory_path() / "cachepilot_runstats_test.csv";
    write_runstats_csv(stats, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "query_index,window_hit_rate_pct,cum_hit_rate_pct,window_mean_latency_ms,cache_gb,"
          "phase_id");
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == stats.windows.size());
    std::filesystem::remove(path);
}
