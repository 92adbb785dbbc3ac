#pragma once

/// \file config.hpp
///
/// Run configuration shared by the command-line tool: defaults, overlaid by
/// a TOML or JSON file, overlaid by command-line flags. All three layers use
/// the same document schema:
///
///     seed = 1
///     [data]        csv, preset, generator = { GeneratorConfig fields }
///     [network]     activation, hidden_layers, hidden_nodes, l2_alpha
///     [optimizer]   method, memory, max_iterations, tolerance,
///                   loss_change_tolerance, learning_rate, wolfe_c1, wolfe_c2,
///                   max_line_search_steps
///     [evaluate]    models = ["relu-6x40", ...], baseline_variant,
///                   baseline_protocol
///     [sweep]       axis, grid, activations
///
/// `out_dir` and `jobs` are run settings and do not influence results, so
/// they are kept out of the echoed provenance document.

#include "plnet/baseline.hpp"
#include "plnet/data.hpp"
#include "plnet/error.hpp"
#include "plnet/experiment.hpp"
#include "plnet/mlp.hpp"
#include "plnet/numeric.hpp"
#include "plnet/optimizer.hpp"
#include "plnet/serialization.hpp"
#include "plnet/train.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace plnet {

// ------------------------------------------------------------- TOML subset

namespace detail {

class TomlReader {
  public:
    explicit TomlReader(std::string_view text) : text_{text} {}

    auto parse() -> json
    {
        json root = json::object();
        json* table = &root;
        while (skip_blank_lines()) {
            if (peek() == '[') {
                ++pos_;
                if (peek() == '[') { fail("arrays of tables are not supported"); }
                auto const path = read_key_path(']');
                expect(']');
                end_of_line();
                table = &root;
                for (auto const& k : path) {
                    auto& next = (*table)[k];
                    if (next.is_null()) { next = json::object(); }
                    if (!next.is_object()) { fail("'" + k + "' is not a table"); }
                    table = &next;
                }
                continue;
            }
            auto const statement_line = line_;
            auto const path = read_key_path('=');
            expect('=');
            skip_spaces();
            json value = read_value();
            end_of_line();
            json* target = table;
            for (std::size_t i = 0; i + 1 < path.size(); ++i) {
                auto& next = (*target)[path[i]];
                if (next.is_null()) { next = json::object(); }
                if (!next.is_object()) { fail("'" + path[i] + "' is not a table"); }
                target = &next;
            }
            if (target->contains(path.back())) {
                fail("duplicate key '" + path.back() + "'", statement_line);
            }
            (*target)[path.back()] = std::move(value);
        }
        return root;
    }

  private:
    [[noreturn]] void fail(std::string const& what) const { fail(what, line_); }

    [[noreturn]] static void fail(std::string const& what, std::size_t line)
    {
        throw ConfigError("TOML line " + std::to_string(line) + ": " + what);
    }

    [[nodiscard]] auto peek() const -> char { return pos_ < text_.size() ? text_[pos_] : '\0'; }
    [[nodiscard]] auto at_end() const -> bool { return pos_ >= text_.size(); }

    void skip_spaces()
    {
        while (!at_end() && (peek() == ' ' || peek() == '\t')) { ++pos_; }
    }

    void skip_comment()
    {
        if (peek() == '#') {
            while (!at_end() && peek() != '\n') { ++pos_; }
        }
    }

    /// Skips whitespace, comments and newlines; false at end of input.
    auto skip_blank_lines() -> bool
    {
        for (;;) {
            skip_spaces();
            skip_comment();
            if (peek() == '\r') { ++pos_; }
            if (peek() == '\n') {
                ++pos_;
                ++line_;
                continue;
            }
            return !at_end();
        }
    }

    void end_of_line()
    {
        skip_spaces();
        skip_comment();
        if (peek() == '\r') { ++pos_; }
        if (at_end()) { return; }
        if (peek() != '\n') { fail(std::string("unexpected '") + peek() + "'"); }
        ++pos_;
        ++line_;
    }

    void expect(char c)
    {
        skip_spaces();
        if (peek() != c) { fail(std::string("expected '") + c + "'"); }
        ++pos_;
    }

    auto read_key_path(char terminator) -> std::vector<std::string>
    {
        std::vector<std::string> path;
        for (;;) {
            skip_spaces();
            std::string key;
            if (peek() == '"') {
                key = read_string('"');
            } else {
                while (!at_end()
                       && (std::isalnum(static_cast<unsigned char>(peek())) != 0 || peek() == '_'
                           || peek() == '-')) {
                    key += text_[pos_++];
                }
            }
            if (key.empty()) { fail("expected a key"); }
            path.push_back(std::move(key));
            skip_spaces();
            if (peek() == '.') {
                ++pos_;
                continue;
            }
            if (peek() != terminator) { fail(std::string("expected '") + terminator + "'"); }
            return path;
        }
    }

    auto read_string(char quote) -> std::string
    {
        ++pos_;
        std::string out;
        while (!at_end() && peek() != quote) {
            char c = text_[pos_++];
            if (c == '\n') { fail("unterminated string"); }
            if (c == '\\' && quote == '"') {
                char const e = text_[pos_++];
                switch (e) {
                case 'n': c = '\n'; break;
                case 't': c = '\t'; break;
                case '"': c = '"'; break;
                case '\\': c = '\\'; break;
                default: fail(std::string("unsupported escape '\\") + e + "'");
                }
            }
            out += c;
        }
        if (at_end()) { fail("unterminated string"); }
        ++pos_;
        return out;
    }

    auto read_value() -> json
    {
        char const c = peek();
        if (c == '"' || c == '\'') { return read_string(c); }
        if (c == '[') { return read_array(); }
        if (c == '{') { return read_inline_table(); }
        std::string token;
        while (!at_end()
               && (std::isalnum(static_cast<unsigned char>(peek())) != 0 || peek() == '+'
                   || peek() == '-' || peek() == '.' || peek() == '_')) {
            token += text_[pos_++];
        }
        if (token == "true") { return true; }
        if (token == "false") { return false; }
        std::string digits;
        for (char ch : token) {
            if (ch != '_') { digits += ch; }
        }
        if (!digits.empty() && digits.front() == '+') { digits.erase(0, 1); }
        bool const is_float = digits.find_first_of(".eE") != std::string::npos;
        char const* first = digits.data();
        char const* last = digits.data() + digits.size();
        if (!is_float) {
            std::int64_t v = 0;
            auto const r = std::from_chars(first, last, v);
            if (!digits.empty() && r.ec == std::errc{} && r.ptr == last) { return v; }
        } else {
            double v = 0.0;
            auto const r = std::from_chars(first, last, v);
            if (r.ec == std::errc{} && r.ptr == last) { return v; }
        }
        fail("cannot parse value '" + token + "'");
    }

    auto read_array() -> json
    {
        ++pos_;
        json arr = json::array();
        for (;;) {
            skip_blank_lines();
            if (peek() == ']') {
                ++pos_;
                return arr;
            }
            arr.push_back(read_value());
            skip_blank_lines();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            skip_blank_lines();
            if (peek() != ']') { fail("expected ',' or ']' in array"); }
        }
    }

    auto read_inline_table() -> json
    {
        ++pos_;
        json obj = json::object();
        skip_spaces();
        if (peek() == '}') {
            ++pos_;
            return obj;
        }
        for (;;) {
            auto const path = read_key_path('=');
            expect('=');
            skip_spaces();
            json* target = &obj;
            for (std::size_t i = 0; i + 1 < path.size(); ++i) { target = &(*target)[path[i]]; }
            (*target)[path.back()] = read_value();
            skip_spaces();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            expect('}');
            return obj;
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
};

} // namespace detail

/// Parses the TOML subset used by run configs: tables, dotted keys, strings,
/// integers, floats, booleans, arrays and inline tables.
inline auto parse_toml(std::string_view text) -> json { return detail::TomlReader(text).parse(); }

/// JSON when the document starts with '{', TOML otherwise.
inline auto parse_config_text(std::string_view text) -> json
{
    auto const first = text.find_first_not_of(" \t\r\n");
    if (first != std::string_view::npos && text[first] == '{') {
        try {
            return json::parse(text);
        } catch (json::exception const& e) {
            throw ConfigError(std::string("invalid JSON config: ") + e.what());
        }
    }
    return parse_toml(text);
}

inline auto load_config_file(std::string const& path) -> json
{
    return parse_config_text(read_text(path));
}

// --------------------------------------------------------------- RunConfig

/// "relu-6x40" → {relu, 6 hidden layers, 40 nodes}.
inline auto parse_model_spec(std::string_view spec, double l2_alpha) -> NetworkConfig
{
    auto const dash = spec.find('-');
    auto const x = spec.find('x', dash == std::string_view::npos ? 0 : dash);
    if (dash == std::string_view::npos || x == std::string_view::npos) {
        throw ConfigError("model spec '" + std::string(spec)
                          + "' must look like <activation>-<layers>x<nodes>");
    }
    NetworkConfig c;
    c.activation = parse_activation(spec.substr(0, dash));
    auto number = [&](std::string_view s) {
        std::size_t v = 0;
        auto const r = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size() || v == 0) {
            throw ConfigError("model spec '" + std::string(spec) + "' has an invalid size");
        }
        return v;
    };
    c.hidden_layers = number(spec.substr(dash + 1, x - dash - 1));
    c.hidden_nodes = number(spec.substr(x + 1));
    c.l2_alpha = l2_alpha;
    return c;
}

/// Sub-seed indices derived from the single master seed.
enum class SeedStream : std::uint64_t { data = 0, split = 1, model = 2, experiment = 3 };

struct RunConfig {
    std::string data_csv;
    std::string data_preset = "area-b-analog";
    json generator_overrides = json::object();
    NetworkConfig network;
    Method method = Method::lbfgs;
    OptimizerConfig optimizer;
    std::vector<NetworkConfig> eval_models = default_eval_configs();
    BaselineVariant baseline_variant = BaselineVariant::joint;
    BaselineProtocol baseline_protocol = BaselineProtocol::test;
    SweepAxis sweep_axis = SweepAxis::layers;
    std::vector<std::size_t> sweep_grid; ///< empty: default grid for the axis
    std::vector<Activation> sweep_activations{Activation::relu, Activation::sigmoid,
                                              Activation::tanh};
    std::uint64_t seed = 1;
    std::string out_dir = ".";
    std::size_t jobs = 1;

    [[nodiscard]] auto sub_seed(SeedStream s) const -> std::uint64_t
    {
        return derive_seed(seed, static_cast<std::uint64_t>(s));
    }

    /// Generator settings: preset, then overrides. The seed comes from the
    /// data stream unless the overrides set one.
    [[nodiscard]] auto generator() const -> GeneratorConfig
    {
        auto g = preset(data_preset);
        g.seed = sub_seed(SeedStream::data);
        try {
            from_json(generator_overrides, g);
        } catch (json::exception const& e) {
            throw ConfigError(std::string("invalid data.generator settings: ") + e.what());
        }
        return g;
    }

    [[nodiscard]] auto resolved_grid() const -> std::vector<std::size_t>
    {
        if (!sweep_grid.empty()) { return sweep_grid; }
        return sweep_axis == SweepAxis::layers ? default_layer_grid() : default_node_grid();
    }
};

/// The provenance document: every setting that influences results.
inline auto to_json(RunConfig const& c) -> json
{
    json models = json::array();
    for (auto const& m : c.eval_models) { models.push_back(model_name(m)); }
    json acts = json::array();
    for (auto a : c.sweep_activations) { acts.push_back(to_string(a)); }
    json data = {{"preset", c.data_preset}, {"generator", c.generator_overrides}};
    if (!c.data_csv.empty()) { data = {{"csv", c.data_csv}}; }
    json opt = c.optimizer;
    opt["method"] = to_string(c.method);
    return json{{"seed", c.seed},
                {"data", data},
                {"network", c.network},
                {"optimizer", opt},
                {"evaluate",
                 {{"models", models},
                  {"baseline_variant", to_string(c.baseline_variant)},
                  {"baseline_protocol", to_string(c.baseline_protocol)}}},
                {"sweep",
                 {{"axis", to_string(c.sweep_axis)}, {"grid", c.resolved_grid()}, {"activations", acts}}}};
}

namespace detail {
template <class T>
void read_field(json const& table, char const* key, T& out, std::string const& where)
{
    if (!table.contains(key) || table.at(key).is_null()) { return; }
    try {
        table.at(key).get_to(out);
    } catch (json::exception const&) {
        throw ConfigError("config field " + where + "." + key + " has the wrong type");
    }
}

inline void check_known_keys(json const& table, std::vector<std::string> const& known,
                             std::string const& where)
{
    if (!table.is_object()) { throw ConfigError("config section '" + where + "' must be a table"); }
    for (auto const& [k, v] : table.items()) {
        if (std::find(known.begin(), known.end(), k) == known.end()) {
            throw ConfigError("unknown config field '" + (where.empty() ? k : where + "." + k) + "'");
        }
    }
}

template <class F>
auto converting(F f) -> decltype(f())
{
    try {
        return f();
    } catch (ArgumentError const& e) {
        throw ConfigError(e.what());
    }
}
} // namespace detail

/// Overlays a config document onto `c`. Throws ConfigError on unknown keys or
/// bad values.
inline void apply_config(RunConfig& c, json const& doc)
{
    using detail::check_known_keys;
    using detail::read_field;
    check_known_keys(doc, {"seed", "out_dir", "jobs", "data", "network", "optimizer", "evaluate", "sweep"}, "");
    read_field(doc, "seed", c.seed, "");
    read_field(doc, "out_dir", c.out_dir, "");
    read_field(doc, "jobs", c.jobs, "");

    if (doc.contains("data")) {
        auto const& d = doc.at("data");
        check_known_keys(d, {"csv", "preset", "generator"}, "data");
        read_field(d, "csv", c.data_csv, "data");
        if (d.contains("preset")) {
            read_field(d, "preset", c.data_preset, "data");
            c.data_csv.clear();
            (void)preset(c.data_preset);
        }
        if (d.contains("generator")) {
            auto const& g = d.at("generator");
            check_known_keys(g, {"intercept", "slope_near", "slope_far", "breakpoint", "freq_slope",
                                 "noise_sigma", "distance_min", "distance_max", "frequencies",
                                 "samples_per_frequency", "seed", "area"},
                             "data.generator");
            c.generator_overrides.merge_patch(g);
        }
    }

    std::optional<double> alpha;
    if (doc.contains("network")) {
        auto const& n = doc.at("network");
        check_known_keys(n, {"activation", "hidden_layers", "hidden_nodes", "l2_alpha", "input_dim"}, "network");
        std::string act;
        read_field(n, "activation", act, "network");
        if (!act.empty()) { c.network.activation = detail::converting([&] { return parse_activation(act); }); }
        read_field(n, "hidden_layers", c.network.hidden_layers, "network");
        read_field(n, "hidden_nodes", c.network.hidden_nodes, "network");
        read_field(n, "input_dim", c.network.input_dim, "network");
        if (n.contains("l2_alpha")) {
            read_field(n, "l2_alpha", c.network.l2_alpha, "network");
            alpha = c.network.l2_alpha;
        }
        detail::converting([&] { c.network.validate(); return 0; });
        if (c.network.input_dim != 2) {
            throw ConfigError("network.input_dim must be 2 (distance, frequency)");
        }
    }
    if (alpha) {
        for (auto& m : c.eval_models) { m.l2_alpha = *alpha; }
    }

    if (doc.contains("optimizer")) {
        auto const& o = doc.at("optimizer");
        check_known_keys(o, {"method", "memory", "max_iterations", "tolerance", "loss_change_tolerance",
                             "learning_rate", "wolfe_c1", "wolfe_c2", "max_line_search_steps"},
                         "optimizer");
        std::string method;
        read_field(o, "method", method, "optimizer");
        if (!method.empty()) { c.method = detail::converting([&] { return parse_method(method); }); }
        read_field(o, "memory", c.optimizer.memory, "optimizer");
        read_field(o, "max_iterations", c.optimizer.max_iterations, "optimizer");
        read_field(o, "tolerance", c.optimizer.tolerance, "optimizer");
        if (o.contains("loss_change_tolerance") && o.at("loss_change_tolerance").is_null()) {
            c.optimizer.loss_change_tolerance.reset(); // follow `tolerance`
        } else if (o.contains("loss_change_tolerance")) {
            double v = 0.0;
            read_field(o, "loss_change_tolerance", v, "optimizer");
            c.optimizer.loss_change_tolerance = v;
        }
        read_field(o, "learning_rate", c.optimizer.learning_rate, "optimizer");
        read_field(o, "wolfe_c1", c.optimizer.wolfe_c1, "optimizer");
        read_field(o, "wolfe_c2", c.optimizer.wolfe_c2, "optimizer");
        read_field(o, "max_line_search_steps", c.optimizer.max_line_search_steps, "optimizer");
        detail::converting([&] { c.optimizer.validate(); return 0; });
    }

    if (doc.contains("evaluate")) {
        auto const& e = doc.at("evaluate");
        check_known_keys(e, {"models", "baseline_variant", "baseline_protocol"}, "evaluate");
        std::vector<std::string> models;
        read_field(e, "models", models, "evaluate");
        if (!models.empty()) {
            c.eval_models.clear();
            for (auto const& m : models) {
                c.eval_models.push_back(detail::converting(
                    [&] { return parse_model_spec(m, alpha.value_or(c.network.l2_alpha)); }));
            }
        }
        std::string s;
        read_field(e, "baseline_variant", s, "evaluate");
        if (!s.empty()) { c.baseline_variant = detail::converting([&] { return parse_baseline_variant(s); }); }
        s.clear();
        read_field(e, "baseline_protocol", s, "evaluate");
        if (!s.empty()) { c.baseline_protocol = detail::converting([&] { return parse_baseline_protocol(s); }); }
    }

    if (doc.contains("sweep")) {
        auto const& s = doc.at("sweep");
        check_known_keys(s, {"axis", "grid", "activations"}, "sweep");
        std::string axis;
        read_field(s, "axis", axis, "sweep");
        if (!axis.empty()) { c.sweep_axis = detail::converting([&] { return parse_sweep_axis(axis); }); }
        read_field(s, "grid", c.sweep_grid, "sweep");
        for (auto g : c.sweep_grid) {
            if (g < 1) { throw ConfigError("sweep.grid values must be >= 1"); }
        }
        std::vector<std::string> acts;
        read_field(s, "activations", acts, "sweep");
        if (!acts.empty()) {
            c.sweep_activations.clear();
            for (auto const& a : acts) {
                c.sweep_activations.push_back(detail::converting([&] { return parse_activation(a); }));
            }
        }
    }
    if (c.jobs < 1) { throw ConfigError("jobs must be >= 1"); }
}

/// The dataset named by the config: a CSV file or a generated preset.
inline auto resolve_dataset(RunConfig const& c) -> Dataset
{
    if (!c.data_csv.empty()) { return load_csv(c.data_csv); }
    auto const g = c.generator();
    detail::converting([&] { g.validate(); return 0; });
    auto ds = generate(g);
    ds.provenance = "preset " + c.data_preset + " (" + ds.provenance + ")";
    return ds;
}

} // namespace plnet
