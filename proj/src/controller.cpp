#include "cachepilot/controller.hpp"

#include <algorithm>
#include <cmath>

#include "cachepilot/cachesim.hpp"

namespace cachepilot::controller {

const char* decision_kind_name(DecisionKind kind) {
    switch (kind) {
        case DecisionKind::Grow: return "grow";
        case DecisionKind::Shrink: return "shrink";
        case DecisionKind::Hold: return "hold";
        case DecisionKind::AdminAlert: return "admin_alert";
    }
    throw std::invalid_argument("unknown decision kind");
}

namespace {

constexpr double kGbTolerance = 1e-9;

DecisionKind kind_for_target(double target, double current) {
    if (target > current + kGbTolerance) return DecisionKind::Grow;
    if (target < current - kGbTolerance) return DecisionKind::Shrink;
    return DecisionKind::Hold;
}

}  // namespace

ResizeDecision decide(const HitCurve& predicted, const TenantState& tenant, double grid_step_gb,
                      double max_gb) {
    if (!(grid_step_gb > 0.0)) throw std::invalid_argument("grid_step_gb must be positive");
    if (!(max_gb >= grid_step_gb)) throw std::invalid_argument("max_gb must cover the grid");
    if (!(tenant.required_hit_pct > 0.0 && tenant.required_hit_pct <= 100.0))
        throw std::invalid_argument("required_hit_pct must lie in (0, 100]");

    const double current = tenant.current_alloc_gb;
    const double at_current = predicted(current);
    const int grid_points = static_cast<int>(std::floor(max_gb / grid_step_gb + kGbTolerance));

    auto smallest_reaching = [&](double threshold) -> std::optional<std::pair<double, double>> {
        for (int i = 1; i <= grid_points; ++i) {
            const double c = std::round(i * grid_step_gb * 1e6) / 1e6;
            const double h = predicted(c);
            if (h >= threshold) return std::make_pair(c, h);
        }
        return std::nullopt;
    };

    if (at_current < tenant.required_hit_pct - tenant.delta1_pct) {
        const auto found = smallest_reaching(tenant.required_hit_pct + tenant.delta1_pct);
        if (!found) return {DecisionKind::AdminAlert, current, at_current};
        return {kind_for_target(found->first, current), found->first, found->second};
    }
    if (at_current > tenant.required_hit_pct + tenant.delta2_pct) {
        const auto found = smallest_reaching(tenant.required_hit_pct + tenant.delta2_pct);
        if (!found) return {DecisionKind::Hold, current, at_current};
        return {kind_for_target(found->first, current), found->first, found->second};
    }
    return {DecisionKind::Hold, current, at_current};
}

ResizeDecision decide(const HitRateModel& model, const DistributionSpec& spec,
                      const TenantState& tenant, double grid_step_gb, double max_gb) {
    if (!model.trained()) throw StateError("model is untrained");
    if (model.kind() != predictor::ModelKind::LogFit && model.family() != spec.family)
        throw std::invalid_argument("model family does not match the estimated distribution");
    const double data_gb = tenant.data_gb;
    return decide(
        [&](double cache_gb) {
            return model.predict({data_gb, cache_gb, spec.param});
        },
        tenant, grid_step_gb, max_gb);
}

PoolState::PoolState(double total_gb) : total_gb_(total_gb) {
    if (!(total_gb > 0.0)) throw std::invalid_argument("pool size must be positive");
}

void PoolState::add_tenant(const std::string& tenant_id, double initial_gb) {
    if (initial_gb < 0.0) throw std::invalid_argument("allocation must be nonnegative");
    if (allocations_.count(tenant_id)) throw std::invalid_argument("tenant already registered");
    if (initial_gb > free_gb() + kGbTolerance)
        throw std::invalid_argument("initial allocation exceeds the pool");
    allocations_[tenant_id] = initial_gb;
}

double PoolState::allocation(const std::string& tenant_id) const {
    const auto it = allocations_.find(tenant_id);
    if (it == allocations_.end()) throw std::invalid_argument("unknown tenant: " + tenant_id);
    return it->second;
}

double PoolState::allocated_gb() const {
    double total = 0.0;
    for (const auto& [id, gb] : allocations_) total += gb;
    return total;
}

ApplyOutcome apply(PoolState& pool, const std::string& tenant_id, const ResizeDecision& decision) {
    const auto it = pool.allocations_.find(tenant_id);
    if (it == pool.allocations_.end())
        throw std::invalid_argument("unknown tenant: " + tenant_id);

    switch (decision.kind) {
        case DecisionKind::Hold:
            return {true, DecisionKind::Hold, 0.0};
        case DecisionKind::AdminAlert:
            return {false, DecisionKind::AdminAlert, 0.0};
        case DecisionKind::Shrink:
            it->second = decision.target_alloc_gb;
            return {true, DecisionKind::Shrink, 0.0};
        case DecisionKind::Grow: {
            const double increase = decision.target_alloc_gb - it->second;
            if (increase > pool.free_gb() + kGbTolerance)
                return {false, DecisionKind::AdminAlert, increase - pool.free_gb()};
            it->second = decision.target_alloc_gb;
            return {true, DecisionKind::Grow, 0.0};
        }
    }
    throw std::invalid_argument("unknown decision kind");
}

ControlOutcome control_step(TenantState& tenant, std::span<const std::uint32_t> recent_samples,
                            PoolState& pool, const ModelSet& models, const GridConfig& grid,
                            Rng& rng, double grid_step_gb, double max_gb) {
    ControlOutcome out;
    if (recent_samples.empty()) {
        out.estimate = tenant.last_estimate.value_or(
            EstimationResult{{Family::Uniform, 0.0}, 0.0, 0});
        out.decision = {DecisionKind::Hold, tenant.current_alloc_gb, 0.0};
        out.outcome = {true, DecisionKind::Hold, 0.0};
        return out;
    }

    const KeySpace keyspace = workload::keyspace_from_gb(tenant.data_gb);
    out.estimate = estimator::estimate(recent_samples, keyspace, grid, rng);
    tenant.last_estimate = out.estimate;

    const auto model_it = models.find(out.estimate.spec.family);
    if (model_it == models.end())
        throw StateError(std::string("no model trained for family ") +
                         family_name(out.estimate.spec.family));

    tenant.current_alloc_gb = pool.allocation(tenant.tenant_id);
    out.decision = decide(model_it->second, out.estimate.spec, tenant, grid_step_gb, max_gb);
    out.outcome = apply(pool, tenant.tenant_id, out.decision);
    if (out.outcome.applied) tenant.current_alloc_gb = pool.allocation(tenant.tenant_id);
    return out;
}

OracleAllocation optimal_alloc_oracle(const DistributionSpec& spec, double data_gb,
                                      double required_hit_pct, double grid_step_gb,
                                      std::uint64_t seed, std::uint64_t n_queries) {
    if (!(grid_step_gb > 0.0)) throw std::invalid_argument("grid_step_gb must be positive");
    const KeySpace keyspace = workload::keyspace_from_gb(data_gb);

    // Cache equal to the data size leaves only cold misses, so sweeping up
    // to data_gb suffices for any floor a cache can meet.
    const int grid_points =
        std::max(1, static_cast<int>(std::ceil(data_gb / grid_step_gb - kGbTolerance)));
    std::vector<double> grid;
    for (int i = 1; i <= grid_points; ++i) grid.push_back(std::round(i * grid_step_gb * 1e6) / 1e6);

    OracleAllocation best{grid.back(), 0.0, false};
    for (double c : grid) {
        const double rate = cachesim::steady_hit_rate(spec, keyspace, c, n_queries, 0.5, seed);
        if (rate >= required_hit_pct) return {c, rate, true};
        best.hit_pct = rate;
    }
    return best;
}

}  // namespace cachepilot::controller
