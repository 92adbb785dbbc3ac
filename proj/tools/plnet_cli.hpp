#pragma once

// Command-line front end. Kept in a header so tests can drive run_cli()
// in-process as well as through the installed binary.
//
// Exit codes: 0 success, 2 configuration or argument error, 3 I/O or
// parse error, 4 numerical failure.

#include "plnet/config.hpp"
#include "plnet/data.hpp"
#include "plnet/error.hpp"
#include "plnet/experiment.hpp"
#include "plnet/serialization.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace plnet::cli {

enum ExitCode : int { ok = 0, internal_error = 1, config_error = 2, io_error = 3, numerical_error = 4 };

/// Flag values; unset optionals leave the file/default value alone.
struct Flags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::size_t> jobs;
    std::optional<std::string> csv;
    std::optional<std::string> preset;
    std::optional<std::size_t> samples_per_frequency;
    std::optional<double> noise_sigma;
    std::optional<std::string> activation;
    std::optional<std::size_t> hidden_layers;
    std::optional<std::size_t> hidden_nodes;
    std::optional<double> l2_alpha;
    std::optional<std::string> method;
    std::optional<std::size_t> memory;
    std::optional<std::size_t> max_iterations;
    std::optional<double> tolerance;
    std::optional<double> loss_change_tolerance;
    std::optional<double> learning_rate;
    std::optional<std::vector<std::string>> models;
    std::optional<std::string> baseline_variant;
    std::optional<std::string> baseline_protocol;
    std::optional<std::string> axis;
    std::optional<std::vector<std::size_t>> grid;
    std::optional<std::vector<std::string>> activations;
    std::vector<std::string> set; ///< "section.key=<TOML value>"
};

/// The flag layer as a config document.
inline auto flags_document(Flags const& f) -> json
{
    json doc = json::object();
    auto put = [&](char const* section, char const* key, auto const& v) {
        if (!v) { return; }
        if (section == nullptr) {
            doc[key] = *v;
        } else {
            doc[section][key] = *v;
        }
    };
    put(nullptr, "seed", f.seed);
    put(nullptr, "out_dir", f.out_dir);
    put(nullptr, "jobs", f.jobs);
    put("data", "csv", f.csv);
    put("data", "preset", f.preset);
    if (f.samples_per_frequency) {
        doc["data"]["generator"]["samples_per_frequency"] = *f.samples_per_frequency;
    }
    if (f.noise_sigma) { doc["data"]["generator"]["noise_sigma"] = *f.noise_sigma; }
    put("network", "activation", f.activation);
    put("network", "hidden_layers", f.hidden_layers);
    put("network", "hidden_nodes", f.hidden_nodes);
    put("network", "l2_alpha", f.l2_alpha);
    put("optimizer", "method", f.method);
    put("optimizer", "memory", f.memory);
    put("optimizer", "max_iterations", f.max_iterations);
    put("optimizer", "tolerance", f.tolerance);
    put("optimizer", "loss_change_tolerance", f.loss_change_tolerance);
    put("optimizer", "learning_rate", f.learning_rate);
    put("evaluate", "models", f.models);
    put("evaluate", "baseline_variant", f.baseline_variant);
    put("evaluate", "baseline_protocol", f.baseline_protocol);
    put("sweep", "axis", f.axis);
    put("sweep", "grid", f.grid);
    put("sweep", "activations", f.activations);
    for (auto const& s : f.set) {
        if (s.find('=') == std::string::npos) {
            throw ConfigError("--set expects key=value, got '" + s + "'");
        }
        doc.merge_patch(parse_toml(s));
    }
    return doc;
}

/// defaults → config file → flags.
inline auto resolve(Flags const& f) -> RunConfig
{
    RunConfig c;
    if (!f.config_path.empty()) { apply_config(c, load_config_file(f.config_path)); }
    auto const doc = flags_document(f);
    // A --csv flag wins over a preset named in the file and vice versa.
    if (f.csv && f.preset) { throw ConfigError("--csv and --preset are mutually exclusive"); }
    if (f.preset) { c.data_csv.clear(); }
    apply_config(c, doc);
    return c;
}

inline auto output_path(RunConfig const& c, std::string const& name) -> std::filesystem::path
{
    std::filesystem::path dir(c.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) { throw IoError("cannot create output directory '" + c.out_dir + "': " + ec.message()); }
    return dir / name;
}

inline auto load_split(RunConfig const& c) -> SplitDataset
{
    return split(resolve_dataset(c), c.sub_seed(SeedStream::split));
}

inline auto cmd_generate(RunConfig const& c, std::string const& output, std::ostream& out) -> int
{
    if (!c.data_csv.empty()) { throw ConfigError("generate needs a preset, not a CSV source"); }
    auto const ds = resolve_dataset(c);
    auto const path = output.empty() ? output_path(c, "data.csv") : std::filesystem::path(output);
    write_csv(path.string(), ds);
    json side = {{"generator", c.generator()}, {"run_config", to_json(c)}};
    write_text(path.string() + ".config.json", side.dump(2) + "\n");
    out << ds.size() << " rows written to " << path.string() << "\n";
    return ok;
}

inline auto cmd_train(RunConfig const& c, std::ostream& out) -> int
{
    auto const ds = load_split(c);
    auto const seed = c.sub_seed(SeedStream::model);
    auto const m = fit_model(ds.learn, c.network, c.optimizer, c.method, seed);
    ModelFile file{m.network, m.transform, seed, summarize(m.optimization, c.method), to_json(c)};
    auto const model_path = output_path(c, "model.json");
    save_model(model_path.string(), file);

    std::string log = "iteration,loss\n";
    auto const& h = m.optimization.loss_history;
    for (std::size_t i = 0; i < h.size(); ++i) {
        log += std::to_string(i) + "," + format_double(h[i]) + "\n";
    }
    write_text(output_path(c, "train_log.csv").string(), log);

    out << model_name(c.network) << ": " << m.optimization.iterations << " iterations ("
        << to_string(m.optimization.reason) << "), loss " << format_double(m.optimization.loss);
    if (!ds.validation.empty()) {
        out << ", validation RMSE " << format_double(rmse(predict(m, ds.validation), targets(ds.validation)))
            << " dB";
    }
    out << "\nmodel written to " << model_path.string() << "\n";
    return ok;
}

inline auto cmd_predict(std::string const& model_path, double distance_m, double frequency_mhz,
                        std::ostream& out) -> int
{
    if (!(distance_m > 0.0) || !(frequency_mhz > 0.0)) {
        throw ArgumentError("distance and frequency must be positive");
    }
    auto const m = load_model(model_path);
    auto const x = transform_point(m.transform, distance_m, frequency_mhz);
    out << format_double(predict(m.network, x)(0, 0)) << "\n";
    return ok;
}

inline auto write_reports(auto const& report, RunConfig const& c, std::string const& stem,
                          std::ostream& out)
{
    for (auto f : {ReportFormat::json_doc, ReportFormat::csv, ReportFormat::plot_data}) {
        out << "wrote " << emit_report(report, f, output_path(c, stem)).string() << "\n";
    }
}

inline auto cmd_evaluate(RunConfig const& c, std::ostream& out) -> int
{
    auto const ds = load_split(c);
    EvalOptions o;
    o.optimizer = c.optimizer;
    o.method = c.method;
    o.baseline_variant = c.baseline_variant;
    o.baseline_protocol = c.baseline_protocol;
    o.master_seed = c.sub_seed(SeedStream::experiment);
    o.jobs = c.jobs;
    auto report = evaluate(ds, c.eval_models, o);
    report.run_config = to_json(c);
    for (auto const& row : report.rows) {
        if (row.frequency_mhz) { continue; }
        out << "area " << row.area << ": baseline " << format_double(row.baseline_rmse) << " dB";
        for (std::size_t i = 0; i < report.models.size(); ++i) {
            out << ", " << report.models[i].name << " " << format_double(row.ann_rmse[i]) << " dB";
        }
        out << "\n";
    }
    write_reports(report, c, "eval_report", out);
    return ok;
}

inline auto cmd_sweep(RunConfig const& c, std::ostream& out) -> int
{
    auto const ds = load_split(c);
    SweepOptions o;
    o.optimizer = c.optimizer;
    o.method = c.method;
    o.master_seed = c.sub_seed(SeedStream::experiment);
    o.jobs = c.jobs;
    auto report = run_sweep(ds, c.sweep_axis, c.sweep_activations, c.resolved_grid(), c.network, o);
    report.run_config = to_json(c);
    for (auto const& s : report.series) {
        out << to_string(s.activation) << ": ";
        if (s.chosen_index) {
            out << "best " << to_string(c.sweep_axis) << " = " << s.points[*s.chosen_index].grid_value;
        } else {
            out << "no successful grid point";
        }
        out << "\n";
    }
    write_reports(report, c, "sweep_report", out);
    return ok;
}

/// Maps library exceptions onto exit codes.
template <class F>
auto guarded(F&& body, std::ostream& err) -> int
{
    try {
        return body();
    } catch (ConfigError const& e) {
        err << "config error: " << e.what() << "\n";
        return config_error;
    } catch (std::invalid_argument const& e) { // ArgumentError, ShapeError
        err << "invalid argument: " << e.what() << "\n";
        return config_error;
    } catch (IoError const& e) {
        err << "I/O error: " << e.what() << "\n";
        return io_error;
    } catch (ParseError const& e) {
        err << "parse error: " << e.what() << "\n";
        return io_error;
    } catch (NumericalError const& e) {
        err << "numerical failure: " << e.what() << "\n";
        return numerical_error;
    } catch (std::exception const& e) {
        err << "internal error: " << e.what() << "\n";
        return internal_error;
    }
}

inline auto run_cli(int argc, char const* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) -> int
{
    CLI::App app{"plnet: neural-network path loss models and a linear baseline"};
    app.require_subcommand(1);
    Flags f;

    app.add_option("--config", f.config_path, "TOML or JSON run config")->check(CLI::ExistingFile);
    app.add_option("--seed", f.seed, "master seed; all sub-seeds derive from it");
    app.add_option("--out-dir", f.out_dir, "output directory");
    app.add_option("--jobs", f.jobs, "worker threads for evaluate and sweep");
    app.add_option("--csv", f.csv, "read samples from a CSV file")->group("Data");
    app.add_option("--preset", f.preset, "generator preset (area-a-analog, area-b-analog)")->group("Data");
    app.add_option("--samples-per-frequency", f.samples_per_frequency)->group("Data");
    app.add_option("--noise-sigma", f.noise_sigma, "generator noise, dB")->group("Data");
    app.add_option("--activation", f.activation, "relu, sigmoid or tanh")->group("Network");
    app.add_option("--hidden-layers", f.hidden_layers)->group("Network");
    app.add_option("--hidden-nodes", f.hidden_nodes)->group("Network");
    app.add_option("--l2-alpha", f.l2_alpha)->group("Network");
    app.add_option("--method", f.method, "lbfgs or gd")->group("Optimizer");
    app.add_option("--memory", f.memory, "L-BFGS history size")->group("Optimizer");
    app.add_option("--max-iterations", f.max_iterations)->group("Optimizer");
    app.add_option("--tolerance", f.tolerance, "gradient infinity-norm tolerance")->group("Optimizer");
    app.add_option("--loss-change-tolerance", f.loss_change_tolerance)->group("Optimizer");
    app.add_option("--learning-rate", f.learning_rate, "gradient descent step")->group("Optimizer");
    app.add_option("--models", f.models, "evaluate: e.g. relu-6x40 tanh-1x40")->group("Evaluate");
    app.add_option("--baseline-variant", f.baseline_variant, "joint or per-frequency")->group("Evaluate");
    app.add_option("--baseline-protocol", f.baseline_protocol, "test or all")->group("Evaluate");
    app.add_option("--axis", f.axis, "sweep axis: layers or nodes")->group("Sweep");
    app.add_option("--grid", f.grid, "sweep grid values")->group("Sweep");
    app.add_option("--activations", f.activations, "sweep activations")->group("Sweep");
    app.add_option("--set", f.set, "override any config field, e.g. data.generator.breakpoint=150")
        ->group("Config");

    std::string generate_output;
    auto* gen = app.add_subcommand("generate", "write a synthetic dataset as CSV");
    gen->add_option("-o,--output", generate_output, "CSV path (default <out-dir>/data.csv)");
    auto* trn = app.add_subcommand("train", "train one network and save it");
    std::string model_path;
    double distance = 0.0;
    double frequency = 0.0;
    auto* prd = app.add_subcommand("predict", "predict path loss in dB with a saved model");
    prd->add_option("--model", model_path, "model.json written by train")->required();
    prd->add_option("--distance", distance, "distance in metres")->required();
    prd->add_option("--frequency", frequency, "frequency in MHz")->required();
    auto* evl = app.add_subcommand("evaluate", "compare networks against the linear baseline");
    auto* swp = app.add_subcommand("sweep", "validation RMSE across depths or widths");
    for (auto* sub : {gen, trn, prd, evl, swp}) { sub->fallthrough(); }

    try {
        app.parse(argc, argv);
    } catch (CLI::CallForHelp const& e) {
        out << app.help();
        return ok;
    } catch (CLI::CallForAllHelp const& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (CLI::ParseError const& e) {
        err << "usage error: " << e.what() << "\n";
        return config_error;
    }

    return guarded(
        [&]() -> int {
            if (prd->parsed()) { return cmd_predict(model_path, distance, frequency, out); }
            auto const c = resolve(f);
            if (gen->parsed()) { return cmd_generate(c, generate_output, out); }
            if (trn->parsed()) { return cmd_train(c, out); }
            if (evl->parsed()) { return cmd_evaluate(c, out); }
            return cmd_sweep(c, out);
        },
        err);
}

} // namespace plnet::cli
