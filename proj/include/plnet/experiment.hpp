#pragma once

/// \file experiment.hpp
///
/// RMSE scoring, architecture sweeps over depth or width, and the
/// per-band ANN-versus-baseline evaluation, with CSV and plot-data renderers.
///
/// Sweeps count *hidden* layers. Each grid point trains from weights seeded
/// by `derive_seed(master_seed, grid_index)`; each evaluated model by
/// `derive_seed(master_seed, model_index)`.

#include "plnet/baseline.hpp"
#include "plnet/data.hpp"
#include "plnet/error.hpp"
#include "plnet/mlp.hpp"
#include "plnet/numeric.hpp"
#include "plnet/optimizer.hpp"
#include "plnet/train.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

namespace plnet {

inline constexpr int report_format_version = 1;

/// √(mean squared residual).
inline auto rmse(Matrix const& predictions, Matrix const& targets) -> double
{
    if (predictions.size() != targets.size()) {
        throw ShapeError("rmse: predictions " + predictions.shape() + " and targets "
                         + targets.shape() + " differ in length");
    }
    if (predictions.empty()) { throw ArgumentError("rmse: no samples"); }
    double s = 0.0;
    auto const p = predictions.data();
    auto const t = targets.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
        double const r = p[i] - t[i];
        s += r * r;
    }
    return std::sqrt(s / static_cast<double>(p.size()));
}

/// 100·(baseline − ann)/baseline; undefined when the baseline error is zero
/// and the ANN error is not.
inline auto improvement_percent(double baseline_rmse, double ann_rmse) -> std::optional<double>
{
    if (baseline_rmse == 0.0) {
        return ann_rmse == 0.0 ? std::optional<double>(0.0) : std::nullopt;
    }
    return 100.0 * (baseline_rmse - ann_rmse) / baseline_rmse;
}

/// FNV-1a (64 bit) of the canonical text form of a configuration, in hex.
inline auto config_hash(NetworkConfig const& c) -> std::string
{
    std::string const text = "input_dim=" + std::to_string(c.input_dim)
                             + ";hidden_layers=" + std::to_string(c.hidden_layers)
                             + ";hidden_nodes=" + std::to_string(c.hidden_nodes)
                             + ";activation=" + to_string(c.activation)
                             + ";l2_alpha=" + format_double(c.l2_alpha);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (std::size_t i = 16; i-- > 0; h >>= 4U) { out[i] = digits[h & 0xFU]; }
    return out;
}

inline auto model_name(NetworkConfig const& c) -> std::string
{
    return to_string(c.activation) + "-" + std::to_string(c.hidden_layers) + "x"
           + std::to_string(c.hidden_nodes);
}

/// A network trained on standardized log features of a learn split.
struct TrainedModel {
    Network network;
    FeatureTransform transform;
    OptimizeResult optimization;
    std::uint64_t seed = 0;
};

inline auto fit_model(Dataset const& learn, NetworkConfig const& config,
                      OptimizerConfig const& opt, Method method, std::uint64_t seed)
    -> TrainedModel
{
    if (learn.empty()) { throw ArgumentError("cannot train on an empty dataset"); }
    auto transform = fit_transform(learn);
    auto const x = apply_transform(transform, learn);
    auto const y = targets(learn);
    Rng rng(seed);
    auto const start = init_weights(config, rng);
    auto r = train(start, x, y, opt, method);
    return {std::move(r.network), transform, std::move(r.optimization), seed};
}

inline auto predict(TrainedModel const& m, Dataset const& ds) -> Matrix
{
    return predict(m.network, apply_transform(m.transform, ds));
}

/// Runs `task(i)` for i in [0, count) on up to `jobs` threads. Exceptions
/// escaping a task are rethrown after all threads join.
inline void parallel_for(std::size_t count, std::size_t jobs,
                         std::function<void(std::size_t)> const& task)
{
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) { task(i); }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    std::vector<std::thread> pool;
    auto const workers = std::min(jobs, count);
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    task(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) { t.join(); }
    for (auto& e : errors) {
        if (e) { std::rethrow_exception(e); }
    }
}

// ---------------------------------------------------------------- sweeps

enum class SweepAxis { layers, nodes };

inline auto to_string(SweepAxis a) -> std::string
{
    return a == SweepAxis::layers ? "layers" : "nodes";
}

inline auto parse_sweep_axis(std::string_view s) -> SweepAxis
{
    if (s == "layers") { return SweepAxis::layers; }
    if (s == "nodes") { return SweepAxis::nodes; }
    throw ArgumentError("unknown sweep axis '" + std::string(s) + "' (expected layers or nodes)");
}

inline auto default_layer_grid() -> std::vector<std::size_t> { return {1, 2, 3, 4, 5, 6, 7, 8}; }
inline auto default_node_grid() -> std::vector<std::size_t> { return {5, 10, 20, 40, 80}; }

struct SweepPoint {
    std::size_t grid_value = 0;
    std::uint64_t seed = 0;
    std::optional<double> validation_rmse; ///< empty when training failed
    std::size_t iterations = 0;
    std::string convergence;
    std::string error;

    friend auto operator==(SweepPoint const&, SweepPoint const&) -> bool = default;
};

struct SweepSeries {
    Activation activation = Activation::tanh;
    std::vector<SweepPoint> points;
    std::optional<std::size_t> chosen_index;
    std::optional<NetworkConfig> chosen_config;

    friend auto operator==(SweepSeries const&, SweepSeries const&) -> bool = default;
};

struct SweepReport {
    int format_version = report_format_version;
    SweepAxis axis = SweepAxis::layers;
    std::string layer_count_convention = "hidden";
    std::vector<std::size_t> grid;
    NetworkConfig base_config;
    OptimizerConfig optimizer;
    Method method = Method::lbfgs;
    std::uint64_t master_seed = 0;
    std::uint64_t split_seed = 0;
    std::size_t learn_size = 0;
    std::size_t validation_size = 0;
    std::string data_provenance;
    nlohmann::json run_config;
    std::vector<SweepSeries> series;

    friend auto operator==(SweepReport const&, SweepReport const&) -> bool = default;
};

inline auto with_grid_value(NetworkConfig c, SweepAxis axis, std::size_t value) -> NetworkConfig
{
    (axis == SweepAxis::layers ? c.hidden_layers : c.hidden_nodes) = value;
    return c;
}

/// Index of the point with the lowest validation RMSE; ties go to the model
/// with fewer parameters.
inline auto choose_point(SweepSeries const& s, NetworkConfig const& base, SweepAxis axis)
    -> std::optional<std::size_t>
{
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < s.points.size(); ++i) {
        auto const& p = s.points[i];
        if (!p.validation_rmse) { continue; }
        if (!best) {
            best = i;
            continue;
        }
        auto const& b = s.points[*best];
        auto const size_of = [&](SweepPoint const& q) {
            return with_grid_value(base, axis, q.grid_value).parameter_count();
        };
        if (*p.validation_rmse < *b.validation_rmse
            || (*p.validation_rmse == *b.validation_rmse && size_of(p) < size_of(b))) {
            best = i;
        }
    }
    return best;
}

struct SweepOptions {
    OptimizerConfig optimizer;
    Method method = Method::lbfgs;
    std::uint64_t master_seed = 0;
    std::size_t jobs = 1;
};

/// Trains one model per (activation, grid value) on the learn split and
/// scores it on the validation split.
inline auto run_sweep(SplitDataset const& ds, SweepAxis axis, std::vector<Activation> const& activations,
                      std::vector<std::size_t> const& grid, NetworkConfig const& base,
                      SweepOptions const& options) -> SweepReport
{
    if (grid.empty()) { throw ArgumentError("sweep grid is empty"); }
    if (activations.empty()) { throw ArgumentError("sweep needs at least one activation"); }
    for (auto g : grid) {
        if (g < 1) { throw ArgumentError("sweep grid values must be >= 1"); }
    }
    if (ds.validation.empty()) { throw ArgumentError("sweep needs a non-empty validation split"); }
    base.validate();
    options.optimizer.validate();

    SweepReport report;
    report.axis = axis;
    report.grid = grid;
    report.base_config = base;
    report.optimizer = options.optimizer;
    report.method = options.method;
    report.master_seed = options.master_seed;
    report.split_seed = ds.seed;
    report.learn_size = ds.learn.size();
    report.validation_size = ds.validation.size();
    report.data_provenance = ds.learn.provenance;
    for (auto a : activations) {
        SweepSeries s;
        s.activation = a;
        s.points.resize(grid.size());
        report.series.push_back(std::move(s));
    }

    auto const y_val = targets(ds.validation);
    parallel_for(activations.size() * grid.size(), options.jobs, [&](std::size_t task) {
        auto const a = task / grid.size();
        auto const g = task % grid.size();
        auto& point = report.series[a].points[g];
        point.grid_value = grid[g];
        point.seed = derive_seed(options.master_seed, g);
        auto cfg = with_grid_value(base, axis, grid[g]);
        cfg.activation = activations[a];
        try {
            auto const m = fit_model(ds.learn, cfg, options.optimizer, options.method, point.seed);
            point.iterations = m.optimization.iterations;
            point.convergence = to_string(m.optimization.reason);
            double const r = rmse(predict(m, ds.validation), y_val);
            if (!std::isfinite(r)) { throw NumericalError("validation RMSE is not finite"); }
            point.validation_rmse = r;
        } catch (std::exception const& e) {
            point.error = e.what();
        }
    });

    for (auto& s : report.series) {
        s.chosen_index = choose_point(s, base, axis);
        if (s.chosen_index) {
            auto c = with_grid_value(base, axis, s.points[*s.chosen_index].grid_value);
            c.activation = s.activation;
            s.chosen_config = c;
        }
    }
    return report;
}

inline auto layer_sweep(SplitDataset const& ds, Activation activation,
                        std::vector<std::size_t> const& grid, NetworkConfig const& base,
                        SweepOptions const& options) -> SweepReport
{
    return run_sweep(ds, SweepAxis::layers, {activation}, grid, base, options);
}

inline auto node_sweep(SplitDataset const& ds, Activation activation,
                       std::vector<std::size_t> const& grid, NetworkConfig const& base,
                       SweepOptions const& options) -> SweepReport
{
    return run_sweep(ds, SweepAxis::nodes, {activation}, grid, base, options);
}

/// Validation RMSE of `activation` at `grid_value`, if that point trained.
inline auto sweep_rmse(SweepReport const& r, Activation activation, std::size_t grid_value)
    -> std::optional<double>
{
    for (auto const& s : r.series) {
        if (s.activation != activation) { continue; }
        for (auto const& p : s.points) {
            if (p.grid_value == grid_value) { return p.validation_rmse; }
        }
    }
    return std::nullopt;
}

// ------------------------------------------------------------ evaluation

struct ModelSummary {
    std::string name;
    NetworkConfig config;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::size_t iterations = 0;
    std::string convergence;
    double final_loss = 0.0;

    friend auto operator==(ModelSummary const&, ModelSummary const&) -> bool = default;
};

/// One row of the comparison table. `frequency_mhz` is empty for the pooled
/// overall row.
struct EvalRow {
    std::string area;
    std::optional<double> frequency_mhz;
    std::size_t baseline_samples = 0;
    std::size_t ann_samples = 0;
    double baseline_rmse = 0.0;
    std::vector<double> ann_rmse;
    std::vector<std::optional<double>> improvement_percent;

    friend auto operator==(EvalRow const&, EvalRow const&) -> bool = default;
};

enum class BaselineProtocol {
    test, ///< baseline fitted on the learn split, scored on the test split
    all,  ///< baseline fitted and scored on all samples
};

inline auto to_string(BaselineProtocol p) -> std::string
{
    return p == BaselineProtocol::test ? "test" : "all";
}

inline auto parse_baseline_protocol(std::string_view s) -> BaselineProtocol
{
    if (s == "test") { return BaselineProtocol::test; }
    if (s == "all") { return BaselineProtocol::all; }
    throw ArgumentError("unknown baseline protocol '" + std::string(s) + "' (expected test or all)");
}

struct EvalReport {
    int format_version = report_format_version;
    std::uint64_t master_seed = 0;
    std::uint64_t split_seed = 0;
    OptimizerConfig optimizer;
    Method method = Method::lbfgs;
    BaselineVariant baseline_variant = BaselineVariant::joint;
    BaselineProtocol baseline_protocol = BaselineProtocol::test;
    std::size_t learn_size = 0;
    std::size_t validation_size = 0;
    std::size_t test_size = 0;
    std::string data_provenance;
    nlohmann::json run_config;
    LinearModel baseline;
    std::vector<ModelSummary> models;
    std::vector<EvalRow> rows;

    friend auto operator==(EvalReport const&, EvalReport const&) -> bool = default;
};

struct EvalOptions {
    OptimizerConfig optimizer;
    Method method = Method::lbfgs;
    BaselineVariant baseline_variant = BaselineVariant::joint;
    BaselineProtocol baseline_protocol = BaselineProtocol::test;
    std::uint64_t master_seed = 0;
    std::size_t jobs = 1;
};

/// The three architectures compared in the study: ReLU with six hidden
/// layers, sigmoid and tanh with one, all 40 nodes wide.
inline auto default_eval_configs(double l2_alpha = 1e-4) -> std::vector<NetworkConfig>
{
    return {
        {2, 6, 40, Activation::relu, l2_alpha},
        {2, 1, 40, Activation::sigmoid, l2_alpha},
        {2, 1, 40, Activation::tanh, l2_alpha},
    };
}

namespace detail {
struct Group {
    std::vector<double> residual_sq_baseline;
    std::vector<std::vector<double>> residual_sq_ann;
};

inline auto root_mean(std::vector<double> const& sq) -> double
{
    double s = 0.0;
    for (double v : sq) { s += v; }
    return std::sqrt(s / static_cast<double>(sq.size()));
}
} // namespace detail

/// Trains every configuration and the baseline, then tabulates RMSE per
/// (area, frequency) and pooled over all test samples.
inline auto evaluate(SplitDataset const& ds, std::vector<NetworkConfig> const& configs,
                     EvalOptions const& options) -> EvalReport
{
    if (configs.empty()) { throw ArgumentError("evaluate needs at least one network config"); }
    if (ds.test.empty()) { throw ArgumentError("evaluate needs a non-empty test split"); }
    options.optimizer.validate();

    EvalReport report;
    report.master_seed = options.master_seed;
    report.split_seed = ds.seed;
    report.optimizer = options.optimizer;
    report.method = options.method;
    report.baseline_variant = options.baseline_variant;
    report.baseline_protocol = options.baseline_protocol;
    report.learn_size = ds.learn.size();
    report.validation_size = ds.validation.size();
    report.test_size = ds.test.size();
    report.data_provenance = ds.learn.provenance;

    Dataset all;
    if (options.baseline_protocol == BaselineProtocol::all) {
        for (auto const* part : {&ds.learn, &ds.validation, &ds.test}) {
            all.samples.insert(all.samples.end(), part->samples.begin(), part->samples.end());
        }
    }
    Dataset const& baseline_fit = options.baseline_protocol == BaselineProtocol::all ? all : ds.learn;
    Dataset const& baseline_eval = options.baseline_protocol == BaselineProtocol::all ? all : ds.test;
    report.baseline = fit_ols(baseline_fit, {options.baseline_variant, false});

    std::vector<TrainedModel> models(configs.size());
    parallel_for(configs.size(), options.jobs, [&](std::size_t i) {
        models[i] = fit_model(ds.learn, configs[i], options.optimizer, options.method,
                              derive_seed(options.master_seed, i));
    });
    for (std::size_t i = 0; i < configs.size(); ++i) {
        report.models.push_back({model_name(configs[i]), configs[i], config_hash(configs[i]),
                                 models[i].seed, models[i].optimization.iterations,
                                 to_string(models[i].optimization.reason),
                                 models[i].optimization.loss});
    }

    using Key = std::pair<std::string, double>;
    std::map<Key, detail::Group> groups;
    detail::Group overall;
    overall.residual_sq_ann.resize(configs.size());

    auto const base_pred = predict_linear(report.baseline, baseline_eval);
    for (std::size_t i = 0; i < baseline_eval.size(); ++i) {
        auto const& s = baseline_eval.samples[i];
        double const r = base_pred(i, 0) - s.path_loss_db;
        auto& g = groups[{s.area, s.frequency_mhz}];
        g.residual_sq_baseline.push_back(r * r);
        overall.residual_sq_baseline.push_back(r * r);
    }
    for (std::size_t m = 0; m < models.size(); ++m) {
        auto const pred = predict(models[m], ds.test);
        for (std::size_t i = 0; i < ds.test.size(); ++i) {
            auto const& s = ds.test.samples[i];
            double const r = pred(i, 0) - s.path_loss_db;
            if (!std::isfinite(r)) {
                throw NumericalError("model " + report.models[m].name
                                     + " produced a non-finite test prediction");
            }
            auto& g = groups[{s.area, s.frequency_mhz}];
            g.residual_sq_ann.resize(configs.size());
            g.residual_sq_ann[m].push_back(r * r);
            overall.residual_sq_ann[m].push_back(r * r);
        }
    }

    auto make_row = [&](std::string area, std::optional<double> freq, detail::Group const& g) {
        EvalRow row;
        row.area = std::move(area);
        row.frequency_mhz = freq;
        row.baseline_samples = g.residual_sq_baseline.size();
        row.ann_samples = g.residual_sq_ann.empty() ? 0 : g.residual_sq_ann.front().size();
        if (row.baseline_samples == 0 || row.ann_samples == 0) {
            throw ArgumentError("evaluate: band " + row.area + "/"
                                + (freq ? format_double(*freq) : std::string("overall"))
                                + " has no test samples; cannot score both models");
        }
        row.baseline_rmse = detail::root_mean(g.residual_sq_baseline);
        for (auto const& sq : g.residual_sq_ann) {
            double const r = detail::root_mean(sq);
            row.ann_rmse.push_back(r);
            row.improvement_percent.push_back(improvement_percent(row.baseline_rmse, r));
        }
        return row;
    };
    for (auto const& [key, g] : groups) { report.rows.push_back(make_row(key.first, key.second, g)); }
    report.rows.push_back(make_row("all", std::nullopt, overall));
    return report;
}

// ------------------------------------------------------------- rendering

namespace detail {
inline auto cell(std::optional<double> v) -> std::string { return v ? format_double(*v) : ""; }
inline auto plot_cell(std::optional<double> v) -> std::string
{
    return v ? format_double(*v) : "nan";
}
} // namespace detail

/// One row per grid value: grid_value followed by one RMSE column per swept
/// activation. Failed points are left empty.
inline auto sweep_csv(SweepReport const& r) -> std::string
{
    std::string out = "grid_value";
    for (auto const& s : r.series) { out += ",rmse_" + to_string(s.activation); }
    out += '\n';
    for (std::size_t g = 0; g < r.grid.size(); ++g) {
        out += std::to_string(r.grid[g]);
        for (auto const& s : r.series) { out += "," + detail::cell(s.points[g].validation_rmse); }
        out += '\n';
    }
    return out;
}

/// Whitespace-separated columns grid_value, rmse_relu, rmse_sigmoid,
/// rmse_tanh; activations that were not swept are written as nan.
inline auto sweep_plot_data(SweepReport const& r) -> std::string
{
    std::string out = "# validation RMSE (dB) over number of hidden " + to_string(r.axis)
                      + "; format_version " + std::to_string(r.format_version) + "\n";
    out += "# grid_value rmse_relu rmse_sigmoid rmse_tanh\n";
    for (std::size_t g = 0; g < r.grid.size(); ++g) {
        out += std::to_string(r.grid[g]);
        for (auto a : {Activation::relu, Activation::sigmoid, Activation::tanh}) {
            out += " " + detail::plot_cell(sweep_rmse(r, a, r.grid[g]));
        }
        out += '\n';
    }
    return out;
}

/// area, frequency_mhz ("overall" for the pooled row), sample counts,
/// baseline RMSE, one RMSE and one improvement column per model.
inline auto eval_csv(EvalReport const& r) -> std::string
{
    std::string out = "area,frequency_mhz,baseline_samples,ann_samples,rmse_baseline";
    for (auto const& m : r.models) { out += ",rmse_" + m.name; }
    for (auto const& m : r.models) { out += ",improvement_pct_" + m.name; }
    out += '\n';
    for (auto const& row : r.rows) {
        out += row.area + "," + (row.frequency_mhz ? format_double(*row.frequency_mhz) : "overall")
               + "," + std::to_string(row.baseline_samples) + "," + std::to_string(row.ann_samples)
               + "," + format_double(row.baseline_rmse);
        for (double v : row.ann_rmse) { out += "," + format_double(v); }
        for (auto const& v : row.improvement_percent) { out += "," + detail::cell(v); }
        out += '\n';
    }
    return out;
}

/// Per-band RMSE columns for a grouped bar chart.
inline auto eval_plot_data(EvalReport const& r) -> std::string
{
    std::string out = "# test RMSE (dB) per band; baseline protocol " + to_string(r.baseline_protocol)
                      + "; format_version " + std::to_string(r.format_version) + "\n";
    out += "# area frequency_mhz rmse_baseline";
    for (auto const& m : r.models) { out += " rmse_" + m.name; }
    out += '\n';
    for (auto const& row : r.rows) {
        if (!row.frequency_mhz) { continue; }
        out += row.area + " " + format_double(*row.frequency_mhz) + " " + format_double(row.baseline_rmse);
        for (double v : row.ann_rmse) { out += " " + format_double(v); }
        out += '\n';
    }
    return out;
}

} // namespace plnet
