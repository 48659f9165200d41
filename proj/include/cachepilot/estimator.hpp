#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cachepilot/workload.hpp"

namespace cachepilot::estimator {

using workload::DistributionSpec;
using workload::KeySpace;

/// Best-matching candidate for a sample of query keys.
struct EstimationResult {
    DistributionSpec spec;
    double p_value = 0.0;       // maximum over all candidates evaluated
    int candidates_evaluated = 0;
};

/// Candidate grids: Gaussian sigma and exponential lambda over [0.5, 2.0],
/// Zipf rho over [0.5, 3.0], all at step 0.1, plus the single uniform
/// candidate — 59 KS tests per estimate.
struct GridConfig {
    double gaussian_min = 0.5, gaussian_max = 2.0;
    double exponential_min = 0.5, exponential_max = 2.0;
    double zipf_min = 0.5, zipf_max = 3.0;
    double step = 0.1;

    /// Synthetic draws per candidate: max(|samples|, synthetic_sample_size).
    std::size_t synthetic_sample_size = 1000;

    /// Best p-value below this falls back to uniform, the family that
    /// needs the most cache. Samples that genuinely match no candidate
    /// land many orders of magnitude below this; samples from an in-grid
    /// family have an approximately uniform best p-value, so the threshold
    /// sits low enough not to reject them.
    double p_threshold = 1e-5;
};

/// Candidate enumeration in tie-break order: at equal p-value the earlier
/// candidate wins, and earlier means "needs more cache" (uniform first,
/// then Gaussian with sigma descending, exponential with lambda ascending,
/// Zipf with rho ascending).
std::vector<DistributionSpec> candidate_specs(const GridConfig& grid);

/// Two-sample KS statistic D = sup |F_a - F_b| over the right-continuous
/// empirical CDFs. Inputs must be sorted ascending; ties across samples
/// are handled by advancing both CDFs past the tied value before taking
/// the gap.
double ks_statistic(std::span<const double> sorted_a, std::span<const double> sorted_b);

/// Asymptotic two-sample p-value: p = Q(lambda) with
/// lambda = (sqrt(e) + 0.12 + 0.11/sqrt(e)) * D, e = n*m/(n+m), and
/// Q(lambda) = 2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2),
/// truncated when a term drops below 1e-10, clamped to [0, 1].
double ks_pvalue(double d, std::uint64_t n, std::uint64_t m);

/// Runs one KS test per candidate (observed keys vs. synthetic keys drawn
/// from the candidate over the same key space) and returns the candidate
/// with the highest p-value. Requires at least 30 samples.
EstimationResult estimate(std::span<const std::uint32_t> samples, const KeySpace& keyspace,
                          const GridConfig& grid, Rng& rng);

struct AccuracyRow {
    std::size_t sample_count = 0;
    double correct_family_pct = 0.0;
    double exact_param_pct = 0.0;
    double eps_le_01_pct = 0.0;
    double eps_le_02_pct = 0.0;
};

/// Monte-Carlo sweep over sample counts: each trial draws a random
/// (family, grid parameter), generates samples over a 3 GB key space,
/// estimates, and scores family hits and parameter error eps = |p - p_hat|.
std::vector<AccuracyRow> accuracy_study(std::span<const std::size_t> sample_counts, int trials,
                                        std::uint64_t seed, const GridConfig& grid = {});

void write_accuracy_csv(std::span<const AccuracyRow> rows, const std::filesystem::path& path);

}  // namespace cachepilot::estimator
