#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "cachepilot/workload.hpp"

using namespace cachepilot;
using namespace cachepilot::workload;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("keyspace_from_gb uses the 10,240 keys-per-GB constant") {
    CHECK(keyspace_from_gb(1.0).key_count == 10'240);
    CHECK(keyspace_from_gb(3.0).key_count == 30'720);
    CHECK(keyspace_from_gb(0.1).key_count == 1'024);
    CHECK(keyspace_from_gb(2.7).key_count == 27'648);
    CHECK_THROWS_AS(keyspace_from_gb(0.0), std::invalid_argument);
    CHECK_THROWS_AS(keyspace_from_gb(-1.0), std::invalid_argument);
}

TEST_CASE("uniform draws hit each key with equal frequency") {
    const KeySpace ks{0.0, 10};
    KeySampler sampler({Family::Uniform, 0.0}, ks);
    Rng rng(123);
    std::array<int, 10> counts{};
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i) ++counts[sampler.sample(rng)];
    for (int c : counts) CHECK(std::fabs(c / static_cast<double>(n) - 0.10) < 0.01);
}

TEST_CASE("zipf rank probabilities follow r^-rho") {
    const KeySpace ks{0.0, 2};
    KeySampler sampler({Family::Zipf, 1.0}, ks);
    Rng rng(7);
    int zero = 0;
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i)
        if (sampler.sample(rng) == 0) ++zero;
    const double ratio = static_cast<double>(zero) / (n - zero);
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("exponential sampler matches the truncated density (chi-square)") {
    // Expected bin masses come from Simpson integration of the truncated
    // exponential density, an independent route from the sampler's
    // inverse-CDF draw.
    const double lambda = 0.7;
    const KeySpace ks = keyspace_from_gb(1.0);
    KeySampler sampler({Family::Exponential, lambda}, ks);

    const int groups = 50;
    const double cut = KeySampler::kExpCut;
    const double norm = 1.0 - std::exp(-lambda * cut);
    auto density = [&](double x) { return lambda * std::exp(-lambda * x) / norm; };
    auto simpson = [&](double a, double b) {
        const int steps = 200;
        const double h = (b - a) / steps;
        double acc = density(a) + density(b);
        for (int i = 1; i < steps; ++i) acc += density(a + i * h) * (i % 2 ? 4.0 : 2.0);
        return acc * h / 3.0;
    };

    std::vector<double> expected(groups);
    for (int g = 0; g < groups; ++g)
        expected[g] = simpson(cut * g / groups, cut * (g + 1) / groups);

    Rng rng(2024);
    const int n = 1'000'000;
    std::vector<int> observed(groups, 0);
    for (int i = 0; i < n; ++i) {
        const std::uint32_t key = sampler.sample(rng);
        ++observed[static_cast<int>(static_cast<std::uint64_t>(key) * groups / ks.key_count)];
    }

    double chi2 = 0.0;
    for (int g = 0; g < groups; ++g) {
        const double e = expected[g] * n;
        REQUIRE(e > 5.0);
        chi2 += (observed[g] - e) * (observed[g] - e) / e;
    }
    // chi-square critical value, alpha = 0.01, dof = 49
    CHECK(chi2 < 74.91947430847816);
}

TEST_CASE("generate_trace is a pure function of its arguments") {
    const KeySpace ks = keyspace_from_gb(1.0);
    const DistributionSpec spec{Family::Gaussian, 1.3};
    const Trace a = generate_trace(spec, ks, 5'000, 99);
    const Trace b = generate_trace(spec, ks, 5'000, 99);
    CHECK(a.keys == b.keys);
    const Trace c = generate_trace(spec, ks, 5'000, 100);
    CHECK(a.keys != c.keys);
    CHECK_THROWS_AS(generate_trace(spec, ks, 0, 1), std::invalid_argument);
}

TEST_CASE("uniform trace reaches coupon-collector coverage") {
    const KeySpace ks = keyspace_from_gb(3.0);
    const Trace trace = generate_trace({Family::Uniform, 0.0}, ks, 1'000'000, 1);
    const std::set<std::uint32_t> distinct(trace.keys.begin(), trace.keys.end());
    const double coverage = static_cast<double>(distinct.size()) / ks.key_count;
    CHECK(coverage >= 0.999);
    // expected coverage 1 - (1 - 1/K)^N, computed exactly
    const double expected = 1.0 - std::exp(1e6 * std::log1p(-1.0 / ks.key_count));
    CHECK(coverage == doctest::Approx(expected).epsilon(0.001));
}

TEST_CASE("every emitted key is in range for its keyspace") {
    const KeySpace ks{0.0, 977};  // deliberately awkward key count
    for (const DistributionSpec spec :
         {DistributionSpec{Family::Uniform, 0.0}, DistributionSpec{Family::Gaussian, 0.5},
          DistributionSpec{Family::Exponential, 2.0}, DistributionSpec{Family::Zipf, 2.9}}) {
        const Trace trace = generate_trace(spec, ks, 20'000, 5);
        for (std::uint32_t key : trace.keys) REQUIRE(key < ks.key_count);
    }
}

TEST_CASE("larger zipf rho concentrates more accesses on the top 1% of keys") {
    const KeySpace ks = keyspace_from_gb(3.0);
    const std::uint32_t top = ks.key_count / 100;
    double previous = 0.0;
    for (double rho : {0.7, 1.2, 1.9}) {
        KeySampler sampler({Family::Zipf, rho}, ks);
        Rng rng(31);
        int hot = 0;
        const int n = 100'000;
        for (int i = 0; i < n; ++i)
            if (sampler.sample(rng) < top) ++hot;
        const double fraction = static_cast<double>(hot) / n;
        CHECK(fraction > previous + 0.02);
        previous = fraction;
    }
}

TEST_CASE("concat_phases records boundaries and matches generate_trace per phase") {
    const KeySpace ks = keyspace_from_gb(3.0);
    const std::vector<std::pair<DistributionSpec, std::uint64_t>> phases = {
        {{Family::Exponential, 0.9}, 250'000},
        {{Family::Zipf, 1.1}, 250'000},
        {{Family::Uniform, 0.0}, 250'000},
        {{Family::Gaussian, 1.3}, 250'000},
    };
    const Trace trace = concat_phases(ks, phases, 42);
    REQUIRE(trace.keys.size() == 1'000'000);
    REQUIRE(trace.phases.size() == 4);
    CHECK(trace.phases[1].offset == 250'000);
    CHECK(trace.phases[2].offset == 500'000);
    CHECK(trace.phases[3].offset == 750'000);
    CHECK(trace.phases[3].spec.family == Family::Gaussian);

    SUBCASE("single phase equals generate_trace") {
        const std::vector<std::pair<DistributionSpec, std::uint64_t>> one = {
            {{Family::Zipf, 0.8}, 10'000}};
        const Trace multi = concat_phases(ks, one, 17);
        const Trace single = generate_trace({Family::Zipf, 0.8}, ks, 10'000, 17);
        CHECK(multi.keys == single.keys);
    }

    SUBCASE("empty phase list is rejected") {
        const std::vector<std::pair<DistributionSpec, std::uint64_t>> none;
        CHECK_THROWS_AS(concat_phases(ks, none, 1), std::invalid_argument);
    }
}

TEST_CASE("trace files round-trip and reject corruption") {
    const KeySpace ks = keyspace_from_gb(0.5);
    const Trace trace = generate_trace({Family::Zipf, 1.5}, ks, 1'000, 3);
    const auto path = temp_file("cachepilot_trace_test.cpt");
    write_trace(trace, path);

    const Trace loaded = read_trace(path);
    CHECK(loaded.keys == trace.keys);
    CHECK(loaded.seed == trace.seed);
    CHECK(loaded.spec.family == Family::Zipf);
    CHECK(loaded.spec.param == doctest::Approx(1.5));
    CHECK(loaded.keyspace.key_count == ks.key_count);

    SUBCASE("csv export writes one key per line") {
        const auto csv = temp_file("cachepilot_trace_test.csv");
        write_trace_csv(trace, csv);
        std::ifstream in(csv);
        std::string line;
        std::size_t lines = 0;
        while (std::getline(in, line)) ++lines;
        CHECK(lines == trace.keys.size());
        std::filesystem::remove(csv);
    }

    SUBCASE("bad magic is a format error") {
        const auto bad = temp_file("cachepilot_trace_bad.cpt");
        std::ofstream out(bad, std::ios::binary);
        out << "NOPE additional garbage";
        out.close();
        CHECK_THROWS_AS(read_trace(bad), FormatError);
        std::filesystem::remove(bad);
    }

    SUBCASE("truncation is a format error") {
        const auto truncated = temp_file("cachepilot_trace_trunc.cpt");
        std::filesystem::copy_file(path, truncated,
                                   std::filesystem::copy_options::overwrite_existing);
        std::filesystem::resize_file(truncated, 100);
        CHECK_THROWS_AS(read_trace(truncated), FormatError);
        std::filesystem::remove(truncated);
    }

    std::filesystem::remove(path);
}

TEST_CASE("multi-phase traces cannot be written to the single-spec file format") {
    const KeySpace ks = keyspace_from_gb(0.1);
    const std::vector<std::pair<DistributionSpec, std::uint64_t>> phases = {
        {{Family::Uniform, 0.0}, 100}, {{Family::Zipf, 1.0}, 100}};
    const Trace trace = concat_phases(ks, phases, 1);
    CHECK_THROWS_AS(write_trace(trace, temp_file("never_written.cpt")), std::invalid_argument);
}
