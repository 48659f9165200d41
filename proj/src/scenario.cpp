#include "cachepilot/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>

namespace cachepilot::harness {

using nlohmann::json;

const char* scenario_kind_name(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::SingleResize: return "single_resize";
        case ScenarioKind::MultiPhase: return "multi_phase";
        case ScenarioKind::TwoTenantRatio: return "two_tenant_ratio";
    }
    throw std::invalid_argument("unknown scenario kind");
}

ScenarioKind scenario_kind_from_name(const std::string& name) {
    if (name == "single_resize") return ScenarioKind::SingleResize;
    if (name == "multi_phase") return ScenarioKind::MultiPhase;
    if (name == "two_tenant_ratio") return ScenarioKind::TwoTenantRatio;
    throw FormatError("unknown scenario kind: " + name);
}

namespace {

DistributionSpec spec_from_json(const json& node) {
    const Family family = family_from_name(node.at("family").get<std::string>());
    const double param = family == Family::Uniform ? 0.0 : node.at("param").get<double>();
    return workload::make_spec(family, param);
}

json spec_to_json(const DistributionSpec& spec) {
    json node;
    node["family"] = family_name(spec.family);
    if (spec.family != Family::Uniform) node["param"] = spec.param;
    return node;
}

ScenarioConfig config_from_json(const json& doc) {
    ScenarioConfig config;
    config.kind = scenario_kind_from_name(doc.at("kind").get<std::string>());
    config.seed = doc.value("seed", config.seed);
    config.pool_gb = doc.value("pool_gb", config.pool_gb);
    config.trace_length = doc.value("trace_length", config.trace_length);
    config.window = doc.value("window", config.window);
    config.control_interval = doc.value("control_interval", config.control_interval);
    config.estimation_samples = doc.value("estimation_samples", config.estimation_samples);
    config.grid_step_gb = doc.value("grid_step_gb", config.grid_step_gb);
    config.max_alloc_gb = doc.value("max_alloc_gb", config.max_alloc_gb);
    if (doc.contains("latency")) {
        config.latency.hit_ms = doc["latency"].value("hit_ms", config.latency.hit_ms);
        config.latency.miss_ms = doc["latency"].value("miss_ms", config.latency.miss_ms);
    }
    config.models_dir = doc.value("models_dir", std::string{});
    if (doc.contains("tenants")) {
        for (const auto& t : doc["tenants"]) {
            TenantConfig tenant;
            tenant.id = t.value("id", "T" + std::to_string(config.tenants.size() + 1));
            tenant.data_gb = t.at("data_gb").get<double>();
            if (t.contains("family")) tenant.spec = spec_from_json(t);
            tenant.required_hit_pct = t.value("required_hit_pct", tenant.required_hit_pct);
            tenant.delta1_pct = t.value("delta1_pct", tenant.delta1_pct);
            tenant.delta2_pct = t.value("delta2_pct", tenant.delta2_pct);
            tenant.initial_gb = t.value("initial_gb", tenant.initial_gb);
            config.tenants.push_back(tenant);
        }
    }
    if (doc.contains("phases")) {
        for (const auto& p : doc["phases"])
            config.phases.emplace_back(spec_from_json(p), p.at("length").get<std::uint64_t>());
    }
    if (doc.contains("ratios")) {
        for (const auto& r : doc["ratios"])
            config.ratios.emplace_back(r.at(0).get<int>(), r.at(1).get<int>());
    }
    return config;
}

json config_to_json(const ScenarioConfig& config) {
    json doc;
    doc["kind"] = scenario_kind_name(config.kind);
    doc["seed"] = config.seed;
    doc["pool_gb"] = config.pool_gb;
    doc["trace_length"] = config.trace_length;
    doc["window"] = config.window;
    doc["control_interval"] = config.control_interval;
    doc["estimation_samples"] = config.estimation_samples;
    doc["grid_step_gb"] = config.grid_step_gb;
    doc["max_alloc_gb"] = config.max_alloc_gb;
    doc["latency"] = {{"hit_ms", config.latency.hit_ms}, {"miss_ms", config.latency.miss_ms}};
    doc["models_dir"] = config.models_dir.string();
    doc["tenants"] = json::array();
    for (const auto& t : config.tenants) {
        json node = spec_to_json(t.spec);
        node["id"] = t.id;
        node["data_gb"] = t.data_gb;
        node["required_hit_pct"] = t.required_hit_pct;
        node["delta1_pct"] = t.delta1_pct;
        node["delta2_pct"] = t.delta2_pct;
        node["initial_gb"] = t.initial_gb;
        doc["tenants"].push_back(node);
    }
    if (!config.phases.empty()) {
        doc["phases"] = json::array();
        for (const auto& [spec, length] : config.phases) {
            json node = spec_to_json(spec);
            node["length"] = length;
            doc["phases"].push_back(node);
        }
    }
    if (!config.ratios.empty()) {
        doc["ratios"] = json::array();
        for (const auto& [a, b] : config.ratios) doc["ratios"].push_back(json::array({a, b}));
    }
    return doc;
}

}  // namespace

ScenarioConfig parse_scenario_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("scenario config is not valid JSON: ") + e.what());
    }
    try {
        return config_from_json(doc);
    } catch (const json::exception& e) {
        throw FormatError(std::string("scenario config is missing or mistypes a field: ") +
                          e.what());
    }
}

ScenarioConfig load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open scenario config: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario_json(buffer.str());
}

controller::ModelSet load_model_set(const std::filesystem::path& models_dir) {
    controller::ModelSet models;
    std::string missing;
    for (Family family :
         {Family::Uniform, Family::Gaussian, Family::Exponential, Family::Zipf}) {
        const auto path = models_dir / (std::string(family_name(family)) + ".cpm");
        if (!std::filesystem::exists(path)) {
            missing += missing.empty() ? family_name(family)
                                       : std::string(", ") + family_name(family);
            continue;
        }
        models.emplace(family, predictor::HitRateModel::load(path));
    }
    if (!missing.empty())
        throw StateError("missing model file for family: " + missing + " (looked in " +
                         models_dir.string() + ")");
    return models;
}

// ---------------------------------------------------------------------------
// scenario execution

namespace {

struct DecisionRow {
    std::uint64_t query_index;
    std::string tenant_id;
    DistributionSpec est;
    double p_value;
    double old_gb;
    double new_gb;
    double predicted_hit_pct;
    controller::DecisionKind kind;
};

void write_decisions_csv(std::span<const DecisionRow> rows, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open decisions csv for writing: " + path.string());
    out << "query_index,tenant_id,est_family,est_param,p_value,old_gb,new_gb,"
           "predicted_hit_pct,decision_kind\n";
    char line[256];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%llu,%s,%s,%.2f,%.6g,%.1f,%.1f,%.4f,%s\n",
                      static_cast<unsigned long long>(r.query_index), r.tenant_id.c_str(),
                      family_name(r.est.family), r.est.param, r.p_value, r.old_gb, r.new_gb,
                      r.predicted_hit_pct, controller::decision_kind_name(r.kind));
        out << line;
    }
    if (!out) throw FormatError("failed writing decisions csv: " + path.string());
}

/// Ring of the most recent keys feeding the estimator.
class RecentKeys {
public:
    explicit RecentKeys(std::size_t capacity) : capacity_(capacity) { buffer_.reserve(capacity); }

    void push(std::uint32_t key) {
        if (buffer_.size() < capacity_) {
            buffer_.push_back(key);
        } else {
            buffer_[next_] = key;
            next_ = (next_ + 1) % capacity_;
        }
    }

    std::span<const std::uint32_t> view() const { return buffer_; }

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<std::uint32_t> buffer_;
};

struct TenantRun {
    TenantConfig config;
    controller::TenantState state;
    workload::Trace trace;
    cachesim::LruCache cache;
    cachesim::WindowAccumulator acc;
    RecentKeys recent;
    controller::DecisionKind last_effective = controller::DecisionKind::Hold;
    std::uint64_t resize_query = 0;  // single_resize: when the resize fired
    std::uint64_t hits_before_resize = 0;
    std::uint64_t queries_before_resize = 0;
    controller::EstimationResult estimate;
    double predicted_hit_pct = 0.0;
};

int phase_of(const workload::Trace& trace, std::uint64_t i) {
    int phase = 0;
    for (std::size_t p = 1; p < trace.phases.size(); ++p)
        if (i >= trace.phases[p].offset) phase = static_cast<int>(p);
    return phase;
}

ScenarioResult run_resize_scenario(const ScenarioConfig& config,
                                   const std::filesystem::path& out_dir) {
    const bool multi_phase = config.kind == ScenarioKind::MultiPhase;
    if (multi_phase && config.tenants.size() != 1)
        throw std::invalid_argument("multi_phase expects exactly one tenant");
    if (config.tenants.empty()) throw std::invalid_argument("scenario has no tenants");
    if (multi_phase && config.phases.empty())
        throw std::invalid_argument("multi_phase requires a phase list");

    const controller::ModelSet models = load_model_set(config.models_dir);
    controller::PoolState pool(config.pool_gb);

    std::vector<TenantRun> runs;
    for (std::size_t t = 0; t < config.tenants.size(); ++t) {
        const TenantConfig& tc = config.tenants[t];
        const auto keyspace = workload::keyspace_from_gb(tc.data_gb);
        const std::uint64_t trace_seed = Rng::derive(config.seed, {1, t}).next_u64();
        workload::Trace trace =
            multi_phase
                ? workload::concat_phases(keyspace, config.phases, trace_seed, tc.id)
                : workload::generate_trace(tc.spec, keyspace, config.trace_length, trace_seed,
                                           tc.id);
        pool.add_tenant(tc.id, tc.initial_gb);
        controller::TenantState state{tc.id,          tc.data_gb,    tc.required_hit_pct,
                                      tc.initial_gb,  tc.delta1_pct, tc.delta2_pct,
                                      std::nullopt};
        runs.push_back(TenantRun{tc,
                                 state,
                                 std::move(trace),
                                 cachesim::LruCache(cachesim::cache_config_from_gb(tc.initial_gb)),
                                 cachesim::WindowAccumulator(config.latency, config.window),
                                 RecentKeys(config.estimation_samples)});
    }

    const std::uint64_t n = config.trace_length;
    std::vector<DecisionRow> decisions;
    int resize_count = 0;

    for (std::uint64_t i = 0; i < n; ++i) {
        for (auto& run : runs) {
            if (i >= run.trace.keys.size()) continue;
            const std::uint32_t key = run.trace.keys[i];
            run.acc.record(run.cache.access(key), run.cache.capacity_gb(),
                           phase_of(run.trace, i));
            run.recent.push(key);
        }
        const std::uint64_t q = i + 1;
        const bool control_now = multi_phase ? (q % config.control_interval == 0 && q < n)
                                             : (q == n / 2);
        if (!control_now) continue;
        // Commit order is tenant order (ids are unique per config), keeping
        // multi-tenant pool mutations deterministic.
        std::uint64_t control_index = q / std::max<std::uint64_t>(config.control_interval, 1);
        for (std::size_t t = 0; t < runs.size(); ++t) {
            auto& run = runs[t];
            const double old_gb = pool.allocation(run.config.id);
            Rng rng = Rng::derive(config.seed, {2, t, control_index});
            const auto outcome =
                controller::control_step(run.state, run.recent.view(), pool, models, config.grid,
                                         rng, config.grid_step_gb, config.max_alloc_gb);
            const double new_gb = pool.allocation(run.config.id);
            run.last_effective = outcome.outcome.effective;
            run.estimate = outcome.estimate;
            run.predicted_hit_pct = outcome.decision.predicted_hit_pct;
            if (outcome.outcome.applied && outcome.outcome.effective != controller::DecisionKind::Hold) {
                run.cache.resize(new_gb);
                ++resize_count;
                if (run.resize_query == 0) {
                    run.resize_query = q;
                    run.hits_before_resize = run.acc.stats().hits;
                    run.queries_before_resize = run.acc.stats().queries();
                }
            }
            decisions.push_back(DecisionRow{q, run.config.id, outcome.estimate.spec,
                                            outcome.estimate.p_value, old_gb, new_gb,
                                            outcome.decision.predicted_hit_pct,
                                            outcome.outcome.effective});
        }
    }

    std::filesystem::create_directories(out_dir);
    {
        std::ofstream out(out_dir / "config.json");
        out << config_to_json(config).dump(2) << '\n';
    }
    write_decisions_csv(decisions, out_dir / "decisions.csv");

    for (auto& run : runs) {
        run.acc.flush(run.cache.capacity_gb(),
                      phase_of(run.trace, run.trace.keys.empty() ? 0 : run.trace.keys.size() - 1));
        cachesim::write_runstats_csv(run.acc.stats(),
                                     out_dir / ("runstats_" + run.config.id + ".csv"));
    }

    if (multi_phase) {
        std::ofstream out(out_dir / "phases.csv");
        if (!out) throw FormatError("cannot open phases csv for writing");
        out << "phase_id,family,param,start_query,end_query\n";
        char line[160];
        const auto& trace = runs.front().trace;
        for (std::size_t p = 0; p < trace.phases.size(); ++p) {
            const auto& phase = trace.phases[p];
            std::snprintf(line, sizeof(line), "%zu,%s,%.2f,%llu,%llu\n", p,
                          family_name(phase.spec.family), phase.spec.param,
                          static_cast<unsigned long long>(phase.offset),
                          static_cast<unsigned long long>(phase.offset + phase.length));
            out << line;
        }
    } else {
        // Before/after summary. "After" excludes the 50k-query refill ramp
        // that follows the resize.
        std::ofstream out(out_dir / "summary.csv");
        if (!out) throw FormatError("cannot open summary csv for writing");
        out << "tenant_id,initial_gb,initial_hit_pct,initial_latency_ms,estimated_distribution,"
               "new_gb,measured_hit_pct,measured_latency_ms,predicted_hit_pct,optimal_gb,"
               "optimal_hit_pct\n";
        char line[320];
        for (const auto& run : runs) {
            const double initial_hit =
                run.queries_before_resize
                    ? 100.0 * static_cast<double>(run.hits_before_resize) /
                          static_cast<double>(run.queries_before_resize)
                    : run.acc.stats().cum_hit_rate_pct();
            double measured = 0.0;
            int counted = 0;
            for (const auto& w : run.acc.stats().windows) {
                if (run.resize_query != 0 && w.query_index > run.resize_query + 50'000) {
                    measured += w.window_hit_rate_pct;
                    ++counted;
                }
            }
            measured = counted ? measured / counted : initial_hit;
            // "Optimal" resizes on measurement of the true workload, not on
            // the estimate, mirroring the baseline the controller is
            // compared against.
            const auto oracle_seed = Rng::derive(config.seed, {3}).next_u64();
            const auto optimal = controller::optimal_alloc_oracle(
                run.config.spec, run.config.data_gb, run.config.required_hit_pct,
                config.grid_step_gb, oracle_seed, config.trace_length / 2);
            std::snprintf(line, sizeof(line), "%s,%.1f,%.4f,%.4f,%s,%.1f,%.4f,%.4f,%.4f,%.1f,%.4f\n",
                          run.config.id.c_str(), run.config.initial_gb, initial_hit,
                          cachesim::mean_latency_ms(config.latency, initial_hit),
                          workload::spec_label(run.estimate.spec).c_str(),
                          pool.allocation(run.config.id), measured,
                          cachesim::mean_latency_ms(config.latency, measured),
                          run.predicted_hit_pct, optimal.cache_gb, optimal.hit_pct);
            out << line;
        }
        if (!out) throw FormatError("failed writing summary csv");
    }

    ScenarioResult result;
    result.out_dir = out_dir;
    result.resize_count = resize_count;
    for (const auto& run : runs)
        if (run.last_effective == controller::DecisionKind::AdminAlert) result.qos_alert = true;
    return result;
}

ScenarioResult run_two_tenant_ratio(const ScenarioConfig& config,
                                    const std::filesystem::path& out_dir) {
    if (config.tenants.size() != 2)
        throw std::invalid_argument("two_tenant_ratio expects exactly two tenants");
    const controller::ModelSet models = load_model_set(config.models_dir);

    std::vector<std::pair<int, int>> ratios = config.ratios;
    if (ratios.empty())
        for (int a = 1; a <= 9; ++a) ratios.emplace_back(a, 10 - a);

    std::filesystem::create_directories(out_dir);
    {
        std::ofstream out(out_dir / "config.json");
        out << config_to_json(config).dump(2) << '\n';
    }
    std::ofstream out(out_dir / "ratios.csv");
    if (!out) throw FormatError("cannot open ratios csv for writing");
    out << "ratio_a,ratio_b,tenant_id,cache_gb,measured_hit_pct,predicted_hit_pct\n";
    char line[192];
    for (const auto& [a, b] : ratios) {
        if (a <= 0 || b <= 0) throw std::invalid_argument("ratio parts must be positive");
        for (std::size_t t = 0; t < 2; ++t) {
            const TenantConfig& tc = config.tenants[t];
            const double share = static_cast<double>(t == 0 ? a : b) / (a + b);
            const double cache_gb = config.pool_gb * share;
            const auto keyspace = workload::keyspace_from_gb(tc.data_gb);
            const std::uint64_t seed = Rng::derive(config.seed, {4, t}).next_u64();
            const double measured = cachesim::steady_hit_rate(tc.spec, keyspace, cache_gb,
                                                              config.trace_length, 0.5, seed);
            const auto& model = models.at(tc.spec.family);
            const double predicted =
                model.predict({tc.data_gb, cache_gb, tc.spec.param});
            std::snprintf(line, sizeof(line), "%d,%d,%s,%.3f,%.4f,%.4f\n", a, b, tc.id.c_str(),
                          cache_gb, measured, predicted);
            out << line;
        }
    }
    if (!out) throw FormatError("failed writing ratios csv");

    ScenarioResult result;
    result.out_dir = out_dir;
    return result;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& config, const std::filesystem::path& out_dir) {
    switch (config.kind) {
        case ScenarioKind::SingleResize:
        case ScenarioKind::MultiPhase: return run_resize_scenario(config, out_dir);
        case ScenarioKind::TwoTenantRatio: return run_two_tenant_ratio(config, out_dir);
    }
    throw std::invalid_argument("unknown scenario kind");
}

// ---------------------------------------------------------------------------
// report rendering

namespace {

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               const std::string& expected_header) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open report file: " + path.string());
    std::string header;
    if (!std::getline(in, header) || header != expected_header)
        throw FormatError("unexpected columns in " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    const std::size_t columns = 1 + std::count(expected_header.begin(), expected_header.end(), ',');
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != columns)
            throw FormatError("malformed row in " + path.string());
        rows.push_back(std::move(fields));
    }
    return rows;
}

constexpr const char* kRunstatsHeader =
    "query_index,window_hit_rate_pct,cum_hit_rate_pct,window_mean_latency_ms,cache_gb,phase_id";

void write_plot_files(const std::filesystem::path& dir, const std::string& tenant_id) {
    const auto rows = read_csv(dir / ("runstats_" + tenant_id + ".csv"), kRunstatsHeader);
    std::ofstream hit(dir / ("plot_hit_rate_" + tenant_id + ".csv"));
    std::ofstream lat(dir / ("plot_response_time_" + tenant_id + ".csv"));
    hit << "query_index,window_hit_rate_pct,cum_hit_rate_pct\n";
    lat << "query_index,window_mean_latency_ms\n";
    for (const auto& r : rows) {
        hit << r[0] << ',' << r[1] << ',' << r[2] << '\n';
        lat << r[0] << ',' << r[3] << '\n';
    }
}

}  // namespace

std::string render_report(const std::filesystem::path& report_dir) {
    const auto config_path = report_dir / "config.json";
    std::ifstream config_in(config_path);
    if (!config_in) throw FormatError("cannot open report file: " + config_path.string());
    std::stringstream buffer;
    buffer << config_in.rdbuf();
    const ScenarioConfig config = parse_scenario_json(buffer.str());

    std::ostringstream out;
    out << "scenario: " << scenario_kind_name(config.kind) << "\n";
    char line[512];

    switch (config.kind) {
        case ScenarioKind::SingleResize: {
            const auto rows = read_csv(
                report_dir / "summary.csv",
                "tenant_id,initial_gb,initial_hit_pct,initial_latency_ms,estimated_distribution,"
                "new_gb,measured_hit_pct,measured_latency_ms,predicted_hit_pct,optimal_gb,"
                "optimal_hit_pct");
            out << "tenant | initial size | initial hit | initial resp | estimated | new size | "
                   "measured hit | measured resp\n";
            for (const auto& r : rows) {
                std::snprintf(line, sizeof(line),
                              "%s | %s GB | %.1f%% | %.2f ms | %s | %s GB | %.1f%% | %.2f ms\n",
                              r[0].c_str(), r[1].c_str(), std::stod(r[2]), std::stod(r[3]),
                              r[4].c_str(), r[5].c_str(), std::stod(r[6]), std::stod(r[7]));
                out << line;
                write_plot_files(report_dir, r[0]);
            }
            break;
        }
        case ScenarioKind::MultiPhase: {
            const auto phases =
                read_csv(report_dir / "phases.csv", "phase_id,family,param,start_query,end_query");
            out << "phase | distribution | queries\n";
            for (const auto& r : phases) {
                std::snprintf(line, sizeof(line), "%s | %s(%.1f) | %s..%s\n", r[0].c_str(),
                              r[1].c_str(), std::stod(r[2]), r[3].c_str(), r[4].c_str());
                out << line;
            }
            const auto decisions = read_csv(
                report_dir / "decisions.csv",
                "query_index,tenant_id,est_family,est_param,p_value,old_gb,new_gb,"
                "predicted_hit_pct,decision_kind");
            int resizes = 0;
            for (const auto& r : decisions) {
                if (r[8] == "grow" || r[8] == "shrink") {
                    ++resizes;
                    std::snprintf(line, sizeof(line),
                                  "resize at %s: %s %s GB -> %s GB (estimated %s(%.1f))\n",
                                  r[0].c_str(), r[8].c_str(), r[5].c_str(), r[6].c_str(),
                                  r[2].c_str(), std::stod(r[3]));
                    out << line;
                }
            }
            out << "total resizes: " << resizes << "\n";
            write_plot_files(report_dir, decisions.empty() ? "T1" : decisions.front()[1]);
            break;
        }
        case ScenarioKind::TwoTenantRatio: {
            const auto rows =
                read_csv(report_dir / "ratios.csv",
                         "ratio_a,ratio_b,tenant_id,cache_gb,measured_hit_pct,predicted_hit_pct");
            out << "ratio | tenant | cache GB | measured | predicted\n";
            for (const auto& r : rows) {
                std::snprintf(line, sizeof(line), "%s:%s | %s | %s | %.1f%% | %.1f%%\n",
                              r[0].c_str(), r[1].c_str(), r[2].c_str(), r[3].c_str(),
                              std::stod(r[4]), std::stod(r[5]));
                out << line;
            }
            std::filesystem::copy_file(report_dir / "ratios.csv",
                                       report_dir / "plot_ratio_hit.csv",
                                       std::filesystem::copy_options::overwrite_existing);
            break;
        }
    }
    return out.str();
}

}  // namespace cachepilot::harness
