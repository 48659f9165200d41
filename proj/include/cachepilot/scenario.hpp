#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "cachepilot/cachesim.hpp"
#include "cachepilot/controller.hpp"

namespace cachepilot::harness {

using workload::DistributionSpec;

enum class ScenarioKind : std::uint8_t { SingleResize = 0, MultiPhase = 1, TwoTenantRatio = 2 };
const char* scenario_kind_name(ScenarioKind kind);
ScenarioKind scenario_kind_from_name(const std::string& name);

struct TenantConfig {
    std::string id = "T1";
    double data_gb = 3.0;
    DistributionSpec spec;
    double required_hit_pct = 80.0;
    double delta1_pct = 5.0;
    double delta2_pct = 5.0;
    double initial_gb = 0.3;
};

/// One scenario = one JSON document; CLI flags override seed and output.
struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::SingleResize;
    std::uint64_t seed = 42;
    double pool_gb = 18.0;
    std::uint64_t trace_length = 1'000'000;
    std::uint64_t window = 10'000;
    std::uint64_t control_interval = 10'000;
    std::size_t estimation_samples = 10'000;
    double grid_step_gb = 0.1;
    double max_alloc_gb = 4.0;
    cachesim::LatencyModel latency;
    std::filesystem::path models_dir;
    std::vector<TenantConfig> tenants;
    std::vector<std::pair<DistributionSpec, std::uint64_t>> phases;  // multi_phase only
    std::vector<std::pair<int, int>> ratios;                         // two_tenant_ratio only
    estimator::GridConfig grid;
};

ScenarioConfig load_scenario_file(const std::filesystem::path& path);
ScenarioConfig parse_scenario_json(const std::string& text);

/// Loads <family>.cpm for all four families; reports every missing file in
/// one error so the operator fixes them in one pass.
controller::ModelSet load_model_set(const std::filesystem::path& models_dir);

struct ScenarioResult {
    std::filesystem::path out_dir;
    int resize_count = 0;    // grow + shrink decisions committed
    bool qos_alert = false;  // some tenant ended on an unresolved AdminAlert
};

/// Runs the scenario and writes its report directory:
///   config.json            resolved configuration
///   runstats_<id>.csv      windowed series per tenant (resize kinds)
///   decisions.csv          one row per control step
///   summary.csv            before/after table (single_resize)
///   phases.csv             phase boundaries (multi_phase)
///   ratios.csv             allocation-ratio sweep (two_tenant_ratio)
ScenarioResult run_scenario(const ScenarioConfig& config, const std::filesystem::path& out_dir);

/// Renders the report directory as text and drops plot-ready data files
/// (plot_*.csv) next to the source CSVs. Rendering figures is an external
/// step; these files are the series a plotting tool consumes.
std::string render_report(const std::filesystem::path& report_dir);

}  // namespace cachepilot::harness
