#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "cachepilot/estimator.hpp"
#include "cachepilot/predictor.hpp"

namespace cachepilot::controller {

using estimator::EstimationResult;
using estimator::GridConfig;
using predictor::HitRateModel;
using workload::DistributionSpec;
using workload::KeySpace;

struct TenantState {
    std::string tenant_id;
    double data_gb = 0.0;
    double required_hit_pct = 80.0;  // the QoS floor
    double current_alloc_gb = 0.0;
    double delta1_pct = 5.0;  // margin under the floor that triggers a grow
    double delta2_pct = 5.0;  // margin over the floor that triggers a shrink
    std::optional<EstimationResult> last_estimate;
};

enum class DecisionKind : std::uint8_t { Grow = 0, Shrink = 1, Hold = 2, AdminAlert = 3 };
const char* decision_kind_name(DecisionKind kind);

struct ResizeDecision {
    DecisionKind kind = DecisionKind::Hold;
    double target_alloc_gb = 0.0;
    double predicted_hit_pct = 0.0;  // at the target allocation
};

/// Predicted hit rate as a function of cache size, with data size and
/// distribution already bound. decide() never assumes the curve is
/// monotone; it scans the grid smallest to largest.
using HitCurve = std::function<double(double cache_gb)>;

/// Resizing rules over the allocation grid {step, 2*step, ..., max_gb}:
///  (i)  predicted(current) < floor - delta1: target the smallest grid size
///       predicted at or above floor + delta1 (AdminAlert when none is);
///  (ii) predicted(current) > floor + delta2: target the smallest grid size
///       still predicted at or above floor + delta2, returning the rest;
///  (iii) otherwise hold.
/// The decision kind reports how the target compares to the current
/// allocation.
ResizeDecision decide(const HitCurve& predicted, const TenantState& tenant, double grid_step_gb,
                      double max_gb);

/// Binds a trained model to the tenant's data size and the estimated
/// distribution, then applies the rules above.
ResizeDecision decide(const HitRateModel& model, const DistributionSpec& spec,
                      const TenantState& tenant, double grid_step_gb, double max_gb);

class PoolState;

struct ApplyOutcome {
    bool applied = false;
    DecisionKind effective = DecisionKind::Hold;  // AdminAlert when a grow did not fit
    double shortfall_gb = 0.0;                    // unmet portion of a failed grow
};

ApplyOutcome apply(PoolState& pool, const std::string& tenant_id, const ResizeDecision& decision);

/// Shared cache pool: sum of allocations never exceeds total_gb.
class PoolState {
public:
    explicit PoolState(double total_gb);

    void add_tenant(const std::string& tenant_id, double initial_gb);
    double allocation(const std::string& tenant_id) const;
    double total_gb() const { return total_gb_; }
    double allocated_gb() const;
    double free_gb() const { return total_gb_ - allocated_gb(); }
    const std::map<std::string, double>& allocations() const { return allocations_; }

private:
    friend ApplyOutcome apply(PoolState&, const std::string&, const ResizeDecision&);

    double total_gb_;
    std::map<std::string, double> allocations_;
};

// apply(): grows succeed only if the pool's free space covers the
// increase, otherwise the pool is untouched and the outcome is an
// AdminAlert with the shortfall. Shrinks always succeed and return space.

using ModelSet = std::map<Family, HitRateModel>;

struct ControlOutcome {
    EstimationResult estimate;
    ResizeDecision decision;
    ApplyOutcome outcome;
};

/// One control-loop turn: estimate the distribution from recent samples,
/// pick that family's model, decide, and commit against the pool. With no
/// new samples the decision is a Hold and the previous estimate stands.
ControlOutcome control_step(TenantState& tenant, std::span<const std::uint32_t> recent_samples,
                            PoolState& pool, const ModelSet& models, const GridConfig& grid,
                            Rng& rng, double grid_step_gb, double max_gb);

struct OracleAllocation {
    double cache_gb = 0.0;
    double hit_pct = 0.0;
    bool satisfied = false;  // false: no grid size met the requirement; cache_gb is the max tried
};

/// Measurement-based reference: brute-force simulator sweep for the
/// smallest grid allocation whose steady hit rate meets required_hit_pct.
OracleAllocation optimal_alloc_oracle(const DistributionSpec& spec, double data_gb,
                                      double required_hit_pct, double grid_step_gb,
                                      std::uint64_t seed, std::uint64_t n_queries = 500000);

}  // namespace cachepilot::controller
