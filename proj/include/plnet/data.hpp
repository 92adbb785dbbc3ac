#pragma once

/// \file data.hpp
///
/// Path loss measurements: CSV ingestion, seeded 80/10/10 splitting, the
/// log-then-standardize input transform, and a synthetic dual-slope
/// log-distance generator.

#include "plnet/error.hpp"
#include "plnet/numeric.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace plnet {

struct Sample {
    double distance_m = 0.0;
    double frequency_mhz = 0.0;
    double path_loss_db = 0.0;
    std::string area;

    friend auto operator==(Sample const&, Sample const&) -> bool = default;
};

struct Dataset {
    std::vector<Sample> samples;
    std::string provenance;

    [[nodiscard]] auto size() const noexcept -> std::size_t { return samples.size(); }
    [[nodiscard]] auto empty() const noexcept -> bool { return samples.empty(); }
};

struct SplitDataset {
    Dataset learn;
    Dataset validation;
    Dataset test;
    std::uint64_t seed = 0;
};

inline constexpr std::string_view csv_header = "distance_m,frequency_mhz,path_loss_db,area";

/// Shortest decimal text that parses back to exactly `v`.
inline auto format_double(double v) -> std::string
{
    std::array<char, 32> buf{};
    auto const r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return {buf.data(), r.ptr};
}

namespace detail {
inline auto parse_double(std::string_view field, double& out) -> bool
{
    if (!field.empty() && field.front() == '+') { field.remove_prefix(1); }
    auto const* end = field.data() + field.size();
    auto const r = std::from_chars(field.data(), end, out);
    return !field.empty() && r.ec == std::errc{} && r.ptr == end;
}

inline auto split_fields(std::string_view line) -> std::vector<std::string_view>
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        auto const pos = line.find(',', start);
        fields.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) { break; }
        start = pos + 1;
    }
    return fields;
}

inline auto trim(std::string_view s) -> std::string_view
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) { s.remove_prefix(1); }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}
} // namespace detail

/// Parses CSV text. Rows are numbered from 1 after the header.
inline auto parse_csv(std::istream& in, std::string provenance = "<stream>") -> Dataset
{
    Dataset ds{{}, std::move(provenance)};
    std::string line;
    if (!std::getline(in, line)) { throw ParseError(ds.provenance + ": missing header"); }
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) { line.erase(0, 3); }
    if (detail::trim(line) != csv_header) {
        throw ParseError(ds.provenance + ": malformed header '" + line + "', expected '"
                         + std::string(csv_header) + "'");
    }
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        auto const text = detail::trim(line);
        if (text.empty()) { continue; }
        auto const where = ds.provenance + ": row " + std::to_string(row);
        auto fields = detail::split_fields(text);
        if (fields.size() != 4) {
            throw ParseError(where + ": expected 4 fields, found " + std::to_string(fields.size()));
        }
        Sample s;
        char const* names[] = {"distance_m", "frequency_mhz", "path_loss_db"};
        double* slots[] = {&s.distance_m, &s.frequency_mhz, &s.path_loss_db};
        for (std::size_t i = 0; i < 3; ++i) {
            auto const f = detail::trim(fields[i]);
            if (!detail::parse_double(f, *slots[i]) || !std::isfinite(*slots[i])) {
                throw ParseError(where + ": cannot parse " + names[i] + " '" + std::string(f) + "'");
            }
        }
        if (!(s.distance_m > 0.0)) { throw ParseError(where + ": distance_m must be positive"); }
        if (!(s.frequency_mhz > 0.0)) {
            throw ParseError(where + ": frequency_mhz must be positive");
        }
        s.area = std::string(detail::trim(fields[3]));
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

inline auto load_csv(std::string const& path) -> Dataset
{
    std::ifstream in(path);
    if (!in) { throw IoError("cannot open data file '" + path + "'"); }
    return parse_csv(in, path);
}

inline auto to_csv(Dataset const& ds) -> std::string
{
    std::string out(csv_header);
    out += '\n';
    for (auto const& s : ds.samples) {
        out += format_double(s.distance_m);
        out += ',';
        out += format_double(s.frequency_mhz);
        out += ',';
        out += format_double(s.path_loss_db);
        out += ',';
        out += s.area;
        out += '\n';
    }
    return out;
}

inline void write_text(std::string const& path, std::string const& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) { throw IoError("cannot open '" + path + "' for writing"); }
    out << text;
    if (!out) { throw IoError("failed writing '" + path + "'"); }
}

inline auto read_text(std::string const& path) -> std::string
{
    std::ifstream in(path, std::ios::binary);
    if (!in) { throw IoError("cannot open '" + path + "'"); }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_csv(std::string const& path, Dataset const& ds) { write_text(path, to_csv(ds)); }

/// Seeded uniform permutation cut into ⌊0.8N⌋ learn, ⌊0.1N⌋ validation and
/// the remaining samples for test.
inline auto split(Dataset const& ds, std::uint64_t seed) -> SplitDataset
{
    auto const n = ds.size();
    if (n < 10) {
        throw ArgumentError("split needs at least 10 samples, got " + std::to_string(n));
    }
    std::size_t const n_learn = n * 8 / 10;
    std::size_t const n_val = n / 10;
    Rng rng(seed);
    auto const order = permutation(rng, n);
    SplitDataset out;
    out.seed = seed;
    auto const tag = [&](char const* part) {
        return ds.provenance + " [" + part + " split, seed " + std::to_string(seed) + "]";
    };
    out.learn.provenance = tag("learn");
    out.validation.provenance = tag("validation");
    out.test.provenance = tag("test");
    for (std::size_t i = 0; i < n; ++i) {
        auto& dst = i < n_learn ? out.learn : (i < n_learn + n_val ? out.validation : out.test);
        dst.samples.push_back(ds.samples[order[i]]);
    }
    return out;
}

inline constexpr std::array<char const*, 2> feature_names = {"distance", "frequency"};

/// (log10 distance_m, log10 frequency_mhz) per sample, unstandardized.
inline auto log_features(Dataset const& ds) -> Matrix
{
    Matrix m(ds.size(), 2);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        m(i, 0) = std::log10(ds.samples[i].distance_m);
        m(i, 1) = std::log10(ds.samples[i].frequency_mhz);
    }
    return m;
}

inline auto targets(Dataset const& ds) -> Matrix
{
    Matrix m(ds.size(), 1);
    for (std::size_t i = 0; i < ds.size(); ++i) { m(i, 0) = ds.samples[i].path_loss_db; }
    return m;
}

/// Standardization statistics of the log features, fitted on a learn split.
struct FeatureTransform {
    std::array<double, 2> mean{};
    std::array<double, 2> stddev{1.0, 1.0};

    friend auto operator==(FeatureTransform const&, FeatureTransform const&) -> bool = default;

    /// Maps log features to standardized features.
    [[nodiscard]] auto forward(Matrix m) const -> Matrix
    {
        require_width(m);
        for (std::size_t i = 0; i < m.rows(); ++i) {
            for (std::size_t j = 0; j < 2; ++j) { m(i, j) = (m(i, j) - mean[j]) / stddev[j]; }
        }
        return m;
    }

    /// Maps standardized features back to log features.
    [[nodiscard]] auto inverse(Matrix m) const -> Matrix
    {
        require_width(m);
        for (std::size_t i = 0; i < m.rows(); ++i) {
            for (std::size_t j = 0; j < 2; ++j) { m(i, j) = m(i, j) * stddev[j] + mean[j]; }
        }
        return m;
    }

  private:
    static void require_width(Matrix const& m)
    {
        if (m.cols() != 2) {
            throw ShapeError("feature transform expects 2 columns, got " + m.shape());
        }
    }
};

inline auto fit_transform(Dataset const& learn) -> FeatureTransform
{
    if (learn.size() < 2) {
        throw ArgumentError("fit_transform needs at least 2 samples, got "
                            + std::to_string(learn.size()));
    }
    auto const f = log_features(learn);
    auto const mu = column_mean(f);
    auto const sd = column_std(f);
    FeatureTransform t;
    for (std::size_t j = 0; j < 2; ++j) {
        if (!(sd[j] > 1e-12 * std::max(1.0, std::abs(mu[j])))) {
            throw ArgumentError(std::string("fit_transform: feature '") + feature_names[j]
                                + "' has zero variance in the learn split");
        }
        t.mean[j] = mu[j];
        t.stddev[j] = sd[j];
    }
    return t;
}

/// N×2 standardized feature matrix using stored statistics.
inline auto apply_transform(FeatureTransform const& t, Dataset const& ds) -> Matrix
{
    return t.forward(log_features(ds));
}

inline auto transform_point(FeatureTransform const& t, double distance_m, double frequency_mhz)
    -> Matrix
{
    if (!(distance_m > 0.0) || !(frequency_mhz > 0.0)) {
        throw ArgumentError("distance and frequency must be positive");
    }
    return t.forward(Matrix{{std::log10(distance_m), std::log10(frequency_mhz)}});
}

/// Dual-slope log-distance generator. With u = log10(d), v = log10(f):
///   PL = intercept + slope_near·u + freq_slope·v                  for d < breakpoint
///   PL = intercept + slope_near·u_b + slope_far·(u − u_b) + freq_slope·v  otherwise
/// plus Gaussian shadowing with standard deviation noise_sigma.
struct GeneratorConfig {
    double intercept = 0.0;
    double slope_near = 35.0;
    double slope_far = 35.0;
    double breakpoint = 200.0;
    double freq_slope = 20.0;
    double noise_sigma = 0.0;
    double distance_min = 10.0;
    double distance_max = 1000.0;
    std::vector<double> frequencies{3400.0, 5300.0, 6400.0};
    std::size_t samples_per_frequency = 2000;
    std::uint64_t seed = 1;
    std::string area = "A";

    friend auto operator==(GeneratorConfig const&, GeneratorConfig const&) -> bool = default;

    void validate() const
    {
        auto finite = [](double v) { return std::isfinite(v); };
        if (!finite(intercept) || !finite(slope_near) || !finite(slope_far)
            || !finite(freq_slope)) {
            throw ArgumentError("generator: coefficients must be finite");
        }
        if (!(distance_min > 0.0) || !(distance_min < distance_max) || !finite(distance_max)) {
            throw ArgumentError("generator: need 0 < distance_min < distance_max");
        }
        if (!(breakpoint >= distance_min && breakpoint <= distance_max)) {
            throw ArgumentError("generator: breakpoint must lie inside the distance range");
        }
        if (!(noise_sigma >= 0.0) || !finite(noise_sigma)) {
            throw ArgumentError("generator: noise_sigma must be finite and >= 0");
        }
        if (frequencies.empty()) { throw ArgumentError("generator: no frequencies"); }
        for (double f : frequencies) {
            if (!(f > 0.0) || !finite(f)) {
                throw ArgumentError("generator: frequencies must be positive");
            }
        }
        if (samples_per_frequency < 1) {
            throw ArgumentError("generator: samples_per_frequency must be >= 1");
        }
        if (area.find(',') != std::string::npos) {
            throw ArgumentError("generator: area label must not contain ','");
        }
    }

    /// Noise-free path loss at (d, f).
    [[nodiscard]] auto mean_path_loss(double distance_m, double frequency_mhz) const -> double
    {
        double const u = std::log10(distance_m);
        double const ub = std::log10(breakpoint);
        double const dist = distance_m < breakpoint ? slope_near * u
                                                    : slope_near * ub + slope_far * (u - ub);
        return intercept + dist + freq_slope * std::log10(frequency_mhz);
    }
};

/// For each frequency in order, draws samples_per_frequency distances
/// log-uniformly over [distance_min, distance_max) and one shadowing value each.
inline auto generate(GeneratorConfig const& cfg) -> Dataset
{
    cfg.validate();
    Rng rng(cfg.seed);
    Dataset ds;
    ds.provenance = "generator area=" + cfg.area + " seed=" + std::to_string(cfg.seed);
    ds.samples.reserve(cfg.frequencies.size() * cfg.samples_per_frequency);
    double const lo = std::log10(cfg.distance_min);
    double const hi = std::log10(cfg.distance_max);
    for (double f : cfg.frequencies) {
        for (std::size_t i = 0; i < cfg.samples_per_frequency; ++i) {
            double const d = std::pow(10.0, rng.uniform(lo, hi));
            double const noise = rng.normal();
            ds.samples.push_back({d, f, cfg.mean_path_loss(d, f) + cfg.noise_sigma * noise, cfg.area});
        }
    }
    return ds;
}

/// Single-slope analog of a low-rise area: the linear model is well specified.
inline auto area_a_analog() -> GeneratorConfig
{
    GeneratorConfig c;
    c.intercept = -40.0;
    c.slope_near = 38.0;
    c.slope_far = 38.0;
    c.breakpoint = 200.0;
    c.freq_slope = 20.0;
    c.noise_sigma = 7.0;
    c.area = "A";
    return c;
}

/// Dual-slope analog of a high-rise area: steep loss up to 200 m, then a
/// shallower slope. A single log-distance line is misspecified here.
inline auto area_b_analog() -> GeneratorConfig
{
    GeneratorConfig c;
    c.intercept = -80.0;
    c.slope_near = 70.0;
    c.slope_far = 25.0;
    c.breakpoint = 200.0;
    c.freq_slope = 20.0;
    c.noise_sigma = 7.0;
    c.area = "B";
    return c;
}

inline auto preset(std::string_view name) -> GeneratorConfig
{
    if (name == "area-a-analog") { return area_a_analog(); }
    if (name == "area-b-analog") { return area_b_analog(); }
    throw ConfigError("unknown generator preset '" + std::string(name)
                      + "' (expected area-a-analog or area-b-analog)");
}

} // namespace plnet
