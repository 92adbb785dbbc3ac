#pragma once

/// \file serialization.hpp
///
/// JSON documents: trained model files, generator configs and experiment
/// reports, plus `emit_report` for the CSV and plot-data renderings.
///
/// Doubles are written in shortest round-trip form, so every float64 reads
/// back bit-identical.

#include "plnet/baseline.hpp"
#include "plnet/data.hpp"
#include "plnet/error.hpp"
#include "plnet/experiment.hpp"
#include "plnet/mlp.hpp"
#include "plnet/optimizer.hpp"
#include "plnet/train.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace plnet {

using json = nlohmann::json;

inline constexpr int model_format_version = 1;

namespace detail {
inline auto optional_to_json(std::optional<double> v) -> json { return v ? json(*v) : json(nullptr); }

inline auto optional_from_json(json const& j) -> std::optional<double>
{
    if (j.is_null()) { return std::nullopt; }
    return j.get<double>();
}
} // namespace detail

// NetworkConfig ------------------------------------------------------------

inline void to_json(json& j, NetworkConfig const& c)
{
    j = json{{"input_dim", c.input_dim},
             {"hidden_layers", c.hidden_layers},
             {"hidden_nodes", c.hidden_nodes},
             {"activation", to_string(c.activation)},
             {"l2_alpha", c.l2_alpha}};
}

inline void from_json(json const& j, NetworkConfig& c)
{
    c.input_dim = j.at("input_dim").get<std::size_t>();
    c.hidden_layers = j.at("hidden_layers").get<std::size_t>();
    c.hidden_nodes = j.at("hidden_nodes").get<std::size_t>();
    c.activation = parse_activation(j.at("activation").get<std::string>());
    c.l2_alpha = j.at("l2_alpha").get<double>();
}

// OptimizerConfig ----------------------------------------------------------

inline void to_json(json& j, OptimizerConfig const& c)
{
    j = json{{"memory", c.memory},
             {"max_iterations", c.max_iterations},
             {"tolerance", c.tolerance},
             {"loss_change_tolerance", detail::optional_to_json(c.loss_change_tolerance)},
             {"learning_rate", c.learning_rate},
             {"wolfe_c1", c.wolfe_c1},
             {"wolfe_c2", c.wolfe_c2},
             {"max_line_search_steps", c.max_line_search_steps}};
}

inline void from_json(json const& j, OptimizerConfig& c)
{
    c.memory = j.at("memory").get<std::size_t>();
    c.max_iterations = j.at("max_iterations").get<std::size_t>();
    c.tolerance = j.at("tolerance").get<double>();
    c.loss_change_tolerance = detail::optional_from_json(j.value("loss_change_tolerance", json()));
    c.learning_rate = j.at("learning_rate").get<double>();
    c.wolfe_c1 = j.at("wolfe_c1").get<double>();
    c.wolfe_c2 = j.at("wolfe_c2").get<double>();
    c.max_line_search_steps = j.at("max_line_search_steps").get<std::size_t>();
}

// GeneratorConfig ----------------------------------------------------------

inline void to_json(json& j, GeneratorConfig const& c)
{
    j = json{{"intercept", c.intercept},
             {"slope_near", c.slope_near},
             {"slope_far", c.slope_far},
             {"breakpoint", c.breakpoint},
             {"freq_slope", c.freq_slope},
             {"noise_sigma", c.noise_sigma},
             {"distance_min", c.distance_min},
             {"distance_max", c.distance_max},
             {"frequencies", c.frequencies},
             {"samples_per_frequency", c.samples_per_frequency},
             {"seed", c.seed},
             {"area", c.area}};
}

/// Missing fields keep the values already in `c`, so a partial document
/// overrides a preset.
inline void from_json(json const& j, GeneratorConfig& c)
{
    auto take = [&](char const* key, auto& field) {
        if (j.contains(key)) { j.at(key).get_to(field); }
    };
    take("intercept", c.intercept);
    take("slope_near", c.slope_near);
    take("slope_far", c.slope_far);
    take("breakpoint", c.breakpoint);
    take("freq_slope", c.freq_slope);
    take("noise_sigma", c.noise_sigma);
    take("distance_min", c.distance_min);
    take("distance_max", c.distance_max);
    take("frequencies", c.frequencies);
    take("samples_per_frequency", c.samples_per_frequency);
    take("seed", c.seed);
    take("area", c.area);
}

// FeatureTransform / LinearModel ------------------------------------------

inline void to_json(json& j, FeatureTransform const& t)
{
    j = json{{"features", {"log10_distance_m", "log10_frequency_mhz"}},
             {"mean", t.mean},
             {"std", t.stddev}};
}

inline void from_json(json const& j, FeatureTransform& t)
{
    j.at("mean").get_to(t.mean);
    j.at("std").get_to(t.stddev);
    for (double s : t.stddev) {
        if (!(s > 0.0)) { throw ParseError("feature transform std must be positive"); }
    }
}

inline void to_json(json& j, LinearModel const& m)
{
    j = json{{"intercept", m.intercept},
             {"distance_coeff", m.distance_coeff},
             {"frequency_coeff", m.frequency_coeff}};
    json bands = json::array();
    for (auto const& [f, a] : m.band_intercepts) {
        bands.push_back({{"frequency_mhz", f}, {"intercept", a}});
    }
    j["band_intercepts"] = bands;
}

inline void from_json(json const& j, LinearModel& m)
{
    m.intercept = j.at("intercept").get<double>();
    m.distance_coeff = j.at("distance_coeff").get<double>();
    m.frequency_coeff = j.at("frequency_coeff").get<double>();
    m.band_intercepts.clear();
    for (auto const& b : j.value("band_intercepts", json::array())) {
        m.band_intercepts.emplace_back(b.at("frequency_mhz").get<double>(),
                                       b.at("intercept").get<double>());
    }
}

// Model file ---------------------------------------------------------------

struct TrainingSummary {
    Method method = Method::lbfgs;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    Convergence reason = Convergence::max_iterations;
    double final_loss = 0.0;
    std::vector<double> loss_history;

    friend auto operator==(TrainingSummary const&, TrainingSummary const&) -> bool = default;
};

/// Everything needed to reproduce a prediction: weights, input statistics
/// and how they were obtained.
struct ModelFile {
    Network network;
    FeatureTransform transform;
    std::uint64_t seed = 0;
    TrainingSummary training;
    json run_config;

    friend auto operator==(ModelFile const&, ModelFile const&) -> bool = default;
};

inline auto summarize(OptimizeResult const& r, Method method) -> TrainingSummary
{
    return {method, r.iterations, r.evaluations, r.reason, r.loss, r.loss_history};
}

inline auto model_to_json(ModelFile const& m) -> json
{
    json weights = json::array();
    for (auto const& w : m.network.weights) {
        json rows = json::array();
        for (std::size_t i = 0; i < w.rows(); ++i) {
            rows.push_back(std::vector<double>(w.row(i).begin(), w.row(i).end()));
        }
        weights.push_back(std::move(rows));
    }
    return json{{"format_version", model_format_version},
                {"kind", "plnet-model"},
                {"config", m.network.config},
                {"weights", weights},
                {"seed", m.seed},
                {"preprocessing", m.transform},
                {"training",
                 {{"method", to_string(m.training.method)},
                  {"iterations", m.training.iterations},
                  {"evaluations", m.training.evaluations},
                  {"convergence", to_string(m.training.reason)},
                  {"final_loss", m.training.final_loss},
                  {"loss_history", m.training.loss_history}}},
                {"run_config", m.run_config}};
}

inline auto model_from_json(json const& j) -> ModelFile
{
    try {
        if (j.at("format_version").get<int>() != model_format_version) {
            throw ParseError("unsupported model format_version "
                             + j.at("format_version").dump());
        }
        ModelFile m;
        m.network.config = j.at("config").get<NetworkConfig>();
        for (auto const& layer : j.at("weights")) {
            std::vector<double> data;
            std::size_t cols = 0;
            for (auto const& row : layer) {
                auto r = row.get<std::vector<double>>();
                if (cols == 0) { cols = r.size(); }
                if (r.size() != cols || cols == 0) { throw ParseError("ragged weight matrix"); }
                data.insert(data.end(), r.begin(), r.end());
            }
            auto const rows = layer.size();
            m.network.weights.emplace_back(rows, cols, std::move(data));
        }
        validate(m.network);
        m.transform = j.at("preprocessing").get<FeatureTransform>();
        m.seed = j.at("seed").get<std::uint64_t>();
        auto const& t = j.at("training");
        m.training.method = parse_method(t.at("method").get<std::string>());
        m.training.iterations = t.at("iterations").get<std::size_t>();
        m.training.evaluations = t.at("evaluations").get<std::size_t>();
        m.training.reason = parse_convergence(t.at("convergence").get<std::string>());
        m.training.final_loss = t.at("final_loss").get<double>();
        m.training.loss_history = t.at("loss_history").get<std::vector<double>>();
        m.run_config = j.value("run_config", json());
        return m;
    } catch (ParseError const&) {
        throw;
    } catch (std::exception const& e) {
        throw ParseError(std::string("invalid model document: ") + e.what());
    }
}

inline void save_model(std::string const& path, ModelFile const& m)
{
    write_text(path, model_to_json(m).dump(2) + "\n");
}

/// Throws IoError when the file cannot be read and ParseError when it is
/// not a valid model document.
inline auto load_model(std::string const& path) -> ModelFile
{
    auto const text = read_text(path);
    json j;
    try {
        j = json::parse(text);
    } catch (json::exception const& e) {
        throw ParseError("model file '" + path + "' is not valid JSON: " + e.what());
    }
    return model_from_json(j);
}

// Reports -----------------------------------------------------------------

inline void to_json(json& j, SweepReport const& r)
{
    json series = json::array();
    for (auto const& s : r.series) {
        json points = json::array();
        for (auto const& p : s.points) {
            points.push_back({{"grid_value", p.grid_value},
                              {"seed", p.seed},
                              {"validation_rmse", detail::optional_to_json(p.validation_rmse)},
                              {"iterations", p.iterations},
                              {"convergence", p.convergence},
                              {"error", p.error}});
        }
        series.push_back({{"activation", to_string(s.activation)},
                          {"points", points},
                          {"chosen_index", s.chosen_index ? json(*s.chosen_index) : json(nullptr)},
                          {"chosen_config", s.chosen_config ? json(*s.chosen_config) : json(nullptr)}});
    }
    j = json{{"format_version", r.format_version},
             {"kind", "plnet-sweep-report"},
             {"axis", to_string(r.axis)},
             {"layer_count_convention", r.layer_count_convention},
             {"grid", r.grid},
             {"base_config", r.base_config},
             {"optimizer", r.optimizer},
             {"method", to_string(r.method)},
             {"master_seed", r.master_seed},
             {"split_seed", r.split_seed},
             {"learn_size", r.learn_size},
             {"validation_size", r.validation_size},
             {"data_provenance", r.data_provenance},
             {"run_config", r.run_config},
             {"series", series}};
}

inline void from_json(json const& j, SweepReport& r)
{
    r.format_version = j.at("format_version").get<int>();
    r.axis = parse_sweep_axis(j.at("axis").get<std::string>());
    r.layer_count_convention = j.at("layer_count_convention").get<std::string>();
    r.grid = j.at("grid").get<std::vector<std::size_t>>();
    r.base_config = j.at("base_config").get<NetworkConfig>();
    r.optimizer = j.at("optimizer").get<OptimizerConfig>();
    r.method = parse_method(j.at("method").get<std::string>());
    r.master_seed = j.at("master_seed").get<std::uint64_t>();
    r.split_seed = j.at("split_seed").get<std::uint64_t>();
    r.learn_size = j.at("learn_size").get<std::size_t>();
    r.validation_size = j.at("validation_size").get<std::size_t>();
    r.data_provenance = j.at("data_provenance").get<std::string>();
    r.run_config = j.at("run_config");
    r.series.clear();
    for (auto const& s : j.at("series")) {
        SweepSeries out;
        out.activation = parse_activation(s.at("activation").get<std::string>());
        for (auto const& p : s.at("points")) {
            out.points.push_back({p.at("grid_value").get<std::size_t>(), p.at("seed").get<std::uint64_t>(),
                                  detail::optional_from_json(p.at("validation_rmse")),
                                  p.at("iterations").get<std::size_t>(),
                                  p.at("convergence").get<std::string>(), p.at("error").get<std::string>()});
        }
        if (!s.at("chosen_index").is_null()) { out.chosen_index = s.at("chosen_index").get<std::size_t>(); }
        if (!s.at("chosen_config").is_null()) {
            out.chosen_config = s.at("chosen_config").get<NetworkConfig>();
        }
        r.series.push_back(std::move(out));
    }
}

inline void to_json(json& j, EvalReport const& r)
{
    json models = json::array();
    for (auto const& m : r.models) {
        models.push_back({{"name", m.name},
                          {"config", m.config},
                          {"config_hash", m.config_hash},
                          {"seed", m.seed},
                          {"iterations", m.iterations},
                          {"convergence", m.convergence},
                          {"final_loss", m.final_loss}});
    }
    json rows = json::array();
    for (auto const& row : r.rows) {
        json imp = json::array();
        for (auto const& v : row.improvement_percent) { imp.push_back(detail::optional_to_json(v)); }
        rows.push_back({{"area", row.area},
                        {"frequency_mhz", detail::optional_to_json(row.frequency_mhz)},
                        {"baseline_samples", row.baseline_samples},
                        {"ann_samples", row.ann_samples},
                        {"baseline_rmse", row.baseline_rmse},
                        {"ann_rmse", row.ann_rmse},
                        {"improvement_percent", imp}});
    }
    j = json{{"format_version", r.format_version},
             {"kind", "plnet-eval-report"},
             {"master_seed", r.master_seed},
             {"split_seed", r.split_seed},
             {"optimizer", r.optimizer},
             {"method", to_string(r.method)},
             {"baseline_variant", to_string(r.baseline_variant)},
             {"baseline_protocol", to_string(r.baseline_protocol)},
             {"learn_size", r.learn_size},
             {"validation_size", r.validation_size},
             {"test_size", r.test_size},
             {"data_provenance", r.data_provenance},
             {"run_config", r.run_config},
             {"baseline", r.baseline},
             {"models", models},
             {"rows", rows}};
}

inline void from_json(json const& j, EvalReport& r)
{
    r.format_version = j.at("format_version").get<int>();
    r.master_seed = j.at("master_seed").get<std::uint64_t>();
    r.split_seed = j.at("split_seed").get<std::uint64_t>();
    r.optimizer = j.at("optimizer").get<OptimizerConfig>();
    r.method = parse_method(j.at("method").get<std::string>());
    r.baseline_variant = parse_baseline_variant(j.at("baseline_variant").get<std::string>());
    r.baseline_protocol = parse_baseline_protocol(j.at("baseline_protocol").get<std::string>());
    r.learn_size = j.at("learn_size").get<std::size_t>();
    r.validation_size = j.at("validation_size").get<std::size_t>();
    r.test_size = j.at("test_size").get<std::size_t>();
    r.data_provenance = j.at("data_provenance").get<std::string>();
    r.run_config = j.at("run_config");
    r.baseline = j.at("baseline").get<LinearModel>();
    r.models.clear();
    for (auto const& m : j.at("models")) {
        r.models.push_back({m.at("name").get<std::string>(), m.at("config").get<NetworkConfig>(),
                            m.at("config_hash").get<std::string>(), m.at("seed").get<std::uint64_t>(),
                            m.at("iterations").get<std::size_t>(),
                            m.at("convergence").get<std::string>(), m.at("final_loss").get<double>()});
    }
    r.rows.clear();
    for (auto const& row : j.at("rows")) {
        EvalRow out;
        out.area = row.at("area").get<std::string>();
        out.frequency_mhz = detail::optional_from_json(row.at("frequency_mhz"));
        out.baseline_samples = row.at("baseline_samples").get<std::size_t>();
        out.ann_samples = row.at("ann_samples").get<std::size_t>();
        out.baseline_rmse = row.at("baseline_rmse").get<double>();
        out.ann_rmse = row.at("ann_rmse").get<std::vector<double>>();
        for (auto const& v : row.at("improvement_percent")) {
            out.improvement_percent.push_back(detail::optional_from_json(v));
        }
        r.rows.push_back(std::move(out));
    }
}

enum class ReportFormat { json_doc, csv, plot_data };

inline auto report_extension(ReportFormat f) -> std::string
{
    switch (f) {
    case ReportFormat::json_doc: return ".json";
    case ReportFormat::csv: return ".csv";
    case ReportFormat::plot_data: return ".dat";
    }
    return "";
}

template <class Report>
auto render_report(Report const& r, ReportFormat format) -> std::string
{
    if (format == ReportFormat::json_doc) { return json(r).dump(2) + "\n"; }
    if constexpr (std::is_same_v<Report, SweepReport>) {
        return format == ReportFormat::csv ? sweep_csv(r) : sweep_plot_data(r);
    } else {
        return format == ReportFormat::csv ? eval_csv(r) : eval_plot_data(r);
    }
}

/// Writes `<stem>.json`, `<stem>.csv` or `<stem>.dat` and returns the path.
template <class Report>
auto emit_report(Report const& r, ReportFormat format, std::filesystem::path const& stem)
    -> std::filesystem::path
{
    auto path = stem;
    path += report_extension(format);
    write_text(path.string(), render_report(r, format));
    return path;
}

} // namespace plnet
