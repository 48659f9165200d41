#include "cachepilot/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "cachepilot/parallel.hpp"

namespace cachepilot::estimator {

std::vector<DistributionSpec> candidate_specs(const GridConfig& grid) {
    if (!(grid.step > 0.0)) throw std::invalid_argument("grid step must be positive");
    std::vector<DistributionSpec> specs;
    specs.push_back({Family::Uniform, 0.0});
    auto push_range = [&](Family family, double lo, double hi, bool descending) {
        const int count = static_cast<int>(std::round((hi - lo) / grid.step)) + 1;
        for (int i = 0; i < count; ++i) {
            const int j = descending ? count - 1 - i : i;
            // keep grid values exact to one decimal so reports print 0.7, not 0.69999
            const double value = std::round((lo + j * grid.step) * 10.0) / 10.0;
            specs.push_back({family, value});
        }
    };
    push_range(Family::Gaussian, grid.gaussian_min, grid.gaussian_max, true);
    push_range(Family::Exponential, grid.exponential_min, grid.exponential_max, false);
    push_range(Family::Zipf, grid.zipf_min, grid.zipf_max, false);
    return specs;
}

double ks_statistic(std::span<const double> sorted_a, std::span<const double> sorted_b) {
    if (sorted_a.empty() || sorted_b.empty())
        throw std::invalid_argument("ks_statistic requires non-empty samples");
    const double na = static_cast<double>(sorted_a.size());
    const double nb = static_cast<double>(sorted_b.size());
    std::size_t ia = 0, ib = 0;
    double d = 0.0;
    while (ia < sorted_a.size() && ib < sorted_b.size()) {
        const double va = sorted_a[ia];
        const double vb = sorted_b[ib];
        const double v = std::min(va, vb);
        while (ia < sorted_a.size() && sorted_a[ia] == v) ++ia;
        while (ib < sorted_b.size() && sorted_b[ib] == v) ++ib;
        d = std::max(d, std::fabs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
    }
    return d;
}

double ks_pvalue(double d, std::uint64_t n, std::uint64_t m) {
    if (!(d >= 0.0 && d <= 1.0)) throw std::invalid_argument("D must lie in [0, 1]");
    if (n == 0 || m == 0) throw std::invalid_argument("sample sizes must be >= 1");
    const double ne = static_cast<double>(n) * static_cast<double>(m) /
                      (static_cast<double>(n) + static_cast<double>(m));
    const double sqrt_ne = std::sqrt(ne);
    const double lambda = (sqrt_ne + 0.12 + 0.11 / sqrt_ne) * d;
    if (lambda < 1e-12) return 1.0;
    const double x = -2.0 * lambda * lambda;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 1000; ++k) {
        const double term = 2.0 * std::exp(x * k * k);
        sum += sign * term;
        if (term < 1e-10) break;
        sign = -sign;
    }
    return std::clamp(sum, 0.0, 1.0);
}

namespace {

std::vector<double> sorted_doubles(std::span<const std::uint32_t> keys) {
    std::vector<double> values(keys.begin(), keys.end());
    std::sort(values.begin(), values.end());
    return values;
}

}  // namespace

EstimationResult estimate(std::span<const std::uint32_t> samples, const KeySpace& keyspace,
                          const GridConfig& grid, Rng& rng) {
    if (samples.size() < 30)
        throw std::invalid_argument("estimate requires at least 30 samples");
    if (keyspace.key_count == 0) throw std::invalid_argument("empty key space");

    const std::vector<double> observed = sorted_doubles(samples);
    const std::size_t synth_n = std::max(samples.size(), grid.synthetic_sample_size);
    const auto candidates = candidate_specs(grid);

    // Every candidate draws from its own substream of `rng`, so evaluation
    // order (or a parallel max-p reduction) cannot change any p-value.
    const std::uint64_t stream_root = rng.next_u64();

    std::size_t best = 0;
    double best_p = -1.0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        workload::KeySampler sampler(candidates[c], keyspace);
        Rng sub = Rng::derive(stream_root, {c});
        std::vector<double> synthetic(synth_n);
        for (double& v : synthetic) v = sampler.sample(sub);
        std::sort(synthetic.begin(), synthetic.end());
        const double d = ks_statistic(observed, synthetic);
        const double p = ks_pvalue(d, observed.size(), synth_n);
        if (p > best_p) {
            best_p = p;
            best = c;
        }
    }

    EstimationResult result;
    result.p_value = best_p;
    result.candidates_evaluated = static_cast<int>(candidates.size());
    result.spec = best_p < grid.p_threshold ? DistributionSpec{Family::Uniform, 0.0}
                                            : candidates[best];
    return result;
}

std::vector<AccuracyRow> accuracy_study(std::span<const std::size_t> sample_counts, int trials,
                                        std::uint64_t seed, const GridConfig& grid) {
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    const KeySpace keyspace = workload::keyspace_from_gb(3.0);
    const auto candidates = candidate_specs(grid);

    // Trial draws pick uniformly over families, then over that family's grid.
    std::vector<std::vector<DistributionSpec>> by_family(4);
    for (const auto& spec : candidates)
        by_family[static_cast<std::size_t>(spec.family)].push_back(spec);

    std::vector<AccuracyRow> rows;
    for (std::size_t ci = 0; ci < sample_counts.size(); ++ci) {
        const std::size_t count = sample_counts[ci];
        struct Tally {
            int family = 0, exact = 0, eps01 = 0, eps02 = 0;
        };
        std::vector<Tally> tallies(static_cast<std::size_t>(trials));
        parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
            Rng rng = Rng::derive(seed, {ci, t});
            const auto& family_grid = by_family[rng.next_below(4)];
            const DistributionSpec truth = family_grid[rng.next_below(family_grid.size())];
            workload::KeySampler sampler(truth, keyspace);
            std::vector<std::uint32_t> samples(count);
            for (auto& s : samples) s = sampler.sample(rng);
            const EstimationResult est = estimate(samples, keyspace, grid, rng);
            Tally& tally = tallies[t];
            if (est.spec.family == truth.family) {
                tally.family = 1;
                const double eps = std::fabs(est.spec.param - truth.param);
                if (eps < 1e-9) tally.exact = 1;
                if (eps <= 0.1 + 1e-9) tally.eps01 = 1;
                if (eps <= 0.2 + 1e-9) tally.eps02 = 1;
            }
        });
        AccuracyRow row;
        row.sample_count = count;
        for (const auto& t : tallies) {
            row.correct_family_pct += t.family;
            row.exact_param_pct += t.exact;
            row.eps_le_01_pct += t.eps01;
            row.eps_le_02_pct += t.eps02;
        }
        const double scale = 100.0 / trials;
        row.correct_family_pct *= scale;
        row.exact_param_pct *= scale;
        row.eps_le_01_pct *= scale;
        row.eps_le_02_pct *= scale;
        rows.push_back(row);
    }
    return rows;
}

void write_accuracy_csv(std::span<const AccuracyRow> rows, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open accuracy csv for writing: " + path.string());
    out << "sample_count,correct_family_pct,exact_param_pct,eps_le_0.1_pct,eps_le_0.2_pct\n";
    char line[160];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%zu,%.2f,%.2f,%.2f,%.2f\n", r.sample_count,
                      r.correct_family_pct, r.exact_param_pct, r.eps_le_01_pct, r.eps_le_02_pct);
        out << line;
    }
    if (!out) throw FormatError("failed writing accuracy csv: " + path.string());
}

}  // namespace cachepilot::estimator
