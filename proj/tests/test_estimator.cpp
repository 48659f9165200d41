#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "cachepilot/estimator.hpp"

using namespace cachepilot;
using namespace cachepilot::estimator;
using cachepilot::Family;
using workload::KeySampler;
using workload::keyspace_from_gb;

TEST_CASE("ks_statistic on hand-computed cases") {
    const std::vector<double> a{1, 2, 3};
    CHECK(ks_statistic(a, a) == doctest::Approx(0.0));

    const std::vector<double> b{10, 11, 12};
    CHECK(ks_statistic(a, b) == doctest::Approx(1.0));

    const std::vector<double> c{1, 2};
    const std::vector<double> d{1, 3};
    CHECK(ks_statistic(c, d) == doctest::Approx(0.5));

    const std::vector<double> empty;
    CHECK_THROWS_AS(ks_statistic(empty, a), std::invalid_argument);
    CHECK_THROWS_AS(ks_statistic(a, empty), std::invalid_argument);
}

TEST_CASE("ks_statistic is symmetric and invariant under monotone transforms") {
    Rng rng(42);
    for (int round = 0; round < 50; ++round) {
        std::vector<double> a(40 + rng.next_below(60)), b(40 + rng.next_below(60));
        for (double& v : a) v = rng.next_double() * 10.0;
        for (double& v : b) v = rng.next_double() * 10.0 + rng.next_double();
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        const double d = ks_statistic(a, b);
        REQUIRE(ks_statistic(b, a) == doctest::Approx(d));

        auto transform = [](std::vector<double> v) {
            for (double& x : v) x = std::exp(0.3 * x) + 2.0;  // strictly increasing
            return v;
        };
        REQUIRE(ks_statistic(transform(a), transform(b)) == doctest::Approx(d));
    }
}

TEST_CASE("ks_pvalue limits") {
    CHECK(ks_pvalue(0.0, 100, 100) == doctest::Approx(1.0));
    CHECK(ks_pvalue(1.0, 1000, 1000) < 1e-10);
    CHECK_THROWS_AS(ks_pvalue(-0.1, 10, 10), std::invalid_argument);
    CHECK_THROWS_AS(ks_pvalue(1.1, 10, 10), std::invalid_argument);
    CHECK_THROWS_AS(ks_pvalue(0.5, 0, 10), std::invalid_argument);
}

TEST_CASE("ks_pvalue is nonincreasing in D") {
    for (const auto [n, m] : std::vector<std::pair<std::uint64_t, std::uint64_t>>{
             {50, 50}, {1000, 1000}, {200, 4000}}) {
        double previous = 1.0 + 1e-12;
        for (int i = 0; i <= 100; ++i) {
            const double p = ks_pvalue(i / 100.0, n, m);
            REQUIRE(p <= previous + 1e-15);
            previous = p;
        }
    }
}

TEST_CASE("ks_pvalue agrees with the dual theta-series evaluation") {
    // Same asymptotic CDF through the Jacobi-theta transform,
    // Q(x) = 1 - sqrt(2*pi)/x * sum_j exp(-(2j-1)^2 pi^2 / (8 x^2)),
    // which converges fast exactly where the primary series is slow.
    auto dual = [](double x) {
        const double pi = 3.14159265358979323846;
        double sum = 0.0;
        for (int j = 1; j <= 50; ++j) {
            const double e = std::exp(-(2.0 * j - 1.0) * (2.0 * j - 1.0) * pi * pi /
                                      (8.0 * x * x));
            sum += e;
            if (e < 1e-18) break;
        }
        return 1.0 - std::sqrt(2.0 * pi) / x * sum;
    };
    Rng rng(9);
    for (int i = 0; i < 200; ++i) {
        const std::uint64_t n = 30 + rng.next_below(3000);
        const std::uint64_t m = 30 + rng.next_below(3000);
        const double d = 0.01 + rng.next_double() * 0.5;
        const double ne = static_cast<double>(n) * m / (n + m);
        const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
        if (lambda < 0.15 || lambda > 5.0) continue;
        REQUIRE(ks_pvalue(d, n, m) == doctest::Approx(dual(lambda)).epsilon(1e-7).scale(1.0));
    }
}

TEST_CASE("candidate grid covers 59 specs in conservative tie-break order") {
    const auto specs = candidate_specs(GridConfig{});
    REQUIRE(specs.size() == 59);  // 1 + 16 + 16 + 26
    CHECK(specs.front().family == Family::Uniform);
    CHECK(specs[1].family == Family::Gaussian);
    CHECK(specs[1].param == doctest::Approx(2.0));  // sigma descending: widest first
    CHECK(specs[16].param == doctest::Approx(0.5));
    CHECK(specs[17].family == Family::Exponential);
    CHECK(specs[17].param == doctest::Approx(0.5));  // lambda ascending: flattest first
    CHECK(specs.back().family == Family::Zipf);
    CHECK(specs.back().param == doctest::Approx(3.0));
}

TEST_CASE("estimate recovers the generating family and parameter") {
    const auto ks = keyspace_from_gb(3.0);
    const GridConfig grid;

    SUBCASE("zipf rho=1.0 at 1,000 samples") {
        int family_ok = 0, param_ok = 0;
        const int trials = 25;
        for (int t = 0; t < trials; ++t) {
            Rng rng = Rng::derive(100, {static_cast<std::uint64_t>(t)});
            KeySampler sampler({Family::Zipf, 1.0}, ks);
            std::vector<std::uint32_t> samples(1000);
            for (auto& s : samples) s = sampler.sample(rng);
            const auto result = estimate(samples, ks, grid, rng);
            if (result.spec.family == Family::Zipf) {
                ++family_ok;
                if (std::fabs(result.spec.param - 1.0) <= 0.1 + 1e-9) ++param_ok;
            }
        }
        CHECK(family_ok == trials);
        CHECK(param_ok >= trials - 1);
    }

    SUBCASE("uniform at 1,000 samples") {
        int ok = 0;
        const int trials = 25;
        for (int t = 0; t < trials; ++t) {
            Rng rng = Rng::derive(200, {static_cast<std::uint64_t>(t)});
            KeySampler sampler({Family::Uniform, 0.0}, ks);
            std::vector<std::uint32_t> samples(1000);
            for (auto& s : samples) s = sampler.sample(rng);
            if (estimate(samples, ks, grid, rng).spec.family == Family::Uniform) ++ok;
        }
        CHECK(ok >= trials - 1);
    }

    SUBCASE("too few samples are rejected") {
        Rng rng(1);
        std::vector<std::uint32_t> samples(10, 5);
        CHECK_THROWS_AS(estimate(samples, ks, grid, rng), std::invalid_argument);
    }

    SUBCASE("samples matching no candidate fall back to uniform") {
        Rng rng(2);
        std::vector<std::uint32_t> samples;
        for (int i = 0; i < 500; ++i) {
            samples.push_back(0);
            samples.push_back(ks.key_count - 1);
        }
        const auto result = estimate(samples, ks, grid, rng);
        CHECK(result.spec.family == Family::Uniform);
        CHECK(result.p_value < grid.p_threshold);
    }

    SUBCASE("returned p-value lies in [0,1] and param on the grid") {
        Rng rng(3);
        KeySampler sampler({Family::Exponential, 1.3}, ks);
        std::vector<std::uint32_t> samples(2000);
        for (auto& s : samples) s = sampler.sample(rng);
        const auto result = estimate(samples, ks, grid, rng);
        CHECK(result.p_value >= 0.0);
        CHECK(result.p_value <= 1.0);
        CHECK(result.candidates_evaluated == 59);
        const double snapped = std::round(result.spec.param * 10.0) / 10.0;
        CHECK(result.spec.param == doctest::Approx(snapped));
    }
}

TEST_CASE("accuracy_study emits one row per count with percentage fields") {
    // trials=1 makes every percentage 0 or 100
    const std::size_t counts[] = {100, 300};
    const auto rows = accuracy_study(counts, 1, 12345);
    REQUIRE(rows.size() == 2);
    for (const auto& row : rows) {
        CHECK((row.correct_family_pct == 0.0 || row.correct_family_pct == 100.0));
        CHECK((row.exact_param_pct == 0.0 || row.exact_param_pct == 100.0));
        CHECK(row.eps_le_01_pct >= row.exact_param_pct);
        CHECK(row.eps_le_02_pct >= row.eps_le_01_pct);
    }
    CHECK_THROWS_AS(accuracy_study(counts, 0, 1), std::invalid_argument);

    SUBCASE("csv schema is pinned") {
        const auto path = std::filesystem::temp_directory_path() / "cachepilot_accuracy_test.csv";
        write_accuracy_csv(rows, path);
        std::ifstream in(path);
        std::string header;
        std::getline(in, header);
        CHECK(header == "sample_count,correct_family_pct,exact_param_pct,eps_le_0.1_pct,"
                        "eps_le_0.2_pct");
        std::filesystem::remove(path);
    }
}
