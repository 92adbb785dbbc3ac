#pragma once

/// \file baseline.hpp
///
/// Linear log-distance path loss model
///
///     PL = a + b·log10(d) + c·log10(f)
///
/// fitted by ordinary least squares, plus a per-band variant with one
/// intercept per frequency and a shared distance slope.

#include "plnet/data.hpp"
#include "plnet/error.hpp"
#include "plnet/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace plnet {

enum class BaselineVariant { joint, per_frequency };

inline auto to_string(BaselineVariant v) -> std::string
{
    return v == BaselineVariant::joint ? "joint" : "per-frequency";
}

inline auto parse_baseline_variant(std::string_view s) -> BaselineVariant
{
    if (s == "joint") { return BaselineVariant::joint; }
    if (s == "per-frequency") { return BaselineVariant::per_frequency; }
    throw ArgumentError("unknown baseline variant '" + std::string(s)
                        + "' (expected joint or per-frequency)");
}

struct LinearModel {
    double intercept = 0.0;       ///< dB
    double distance_coeff = 0.0;  ///< dB per decade of distance
    double frequency_coeff = 0.0; ///< dB per decade of frequency
    /// Per-band intercepts (frequency MHz, dB). When non-empty these replace
    /// `intercept + frequency_coeff·log10(f)`.
    std::vector<std::pair<double, double>> band_intercepts;

    friend auto operator==(LinearModel const&, LinearModel const&) -> bool = default;
};

struct FitOptions {
    BaselineVariant variant = BaselineVariant::joint;
    /// Joint fit only: with a single frequency, drop the frequency term
    /// instead of reporting a degenerate design.
    bool drop_degenerate_frequency = false;
};

/// Solves A·x = b by Gaussian elimination with partial pivoting. Throws
/// DegenerateDesignError when a pivot is negligible relative to the largest
/// entry of A.
inline auto solve_linear_system(Matrix a, std::vector<double> b) -> std::vector<double>
{
    auto const n = a.rows();
    if (a.cols() != n || b.size() != n) {
        throw ShapeError("solve_linear_system: system " + a.shape() + " with rhs of length "
                         + std::to_string(b.size()));
    }
    double scale = 0.0;
    for (double v : a.data()) { scale = std::max(scale, std::abs(v)); }
    double const tiny = 1e-12 * scale;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i) {
            if (std::abs(a(i, k)) > std::abs(a(p, k))) { p = i; }
        }
        if (!(std::abs(a(p, k)) > tiny)) {
            throw DegenerateDesignError("least squares design is rank deficient (column "
                                        + std::to_string(k) + ")");
        }
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) { std::swap(a(k, j), a(p, j)); }
            std::swap(b[k], b[p]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            double const m = a(i, k) / a(k, k);
            for (std::size_t j = k; j < n; ++j) { a(i, j) -= m * a(k, j); }
            b[i] -= m * b[k];
        }
    }
    std::vector<double> x(n);
    for (std::size_t k = n; k-- > 0;) {
        double s = b[k];
        for (std::size_t j = k + 1; j < n; ++j) { s -= a(k, j) * x[j]; }
        x[k] = s / a(k, k);
    }
    return x;
}

/// Least squares coefficients for `design` (N×P) and `y` via the normal
/// equations.
inline auto least_squares(Matrix const& design, std::vector<double> const& y) -> std::vector<double>
{
    auto const gram = matmul_at_b(design, design);
    std::vector<double> rhs(design.cols(), 0.0);
    for (std::size_t n = 0; n < design.rows(); ++n) {
        for (std::size_t j = 0; j < design.cols(); ++j) { rhs[j] += design(n, j) * y[n]; }
    }
    return solve_linear_system(gram, std::move(rhs));
}

inline auto fit_ols(Dataset const& ds, FitOptions const& options = {}) -> LinearModel
{
    if (ds.size() < 3) {
        throw ArgumentError("fit_ols needs at least 3 samples, got " + std::to_string(ds.size()));
    }
    auto const logs = log_features(ds);
    auto const mu = column_mean(logs);
    auto const n = ds.size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) { y[i] = ds.samples[i].path_loss_db; }

    // Log features are centered before forming the normal equations; the
    // intercept is shifted back afterwards.
    LinearModel m;
    if (options.variant == BaselineVariant::joint) {
        auto const sd = column_std(logs);
        bool const use_freq = !(options.drop_degenerate_frequency
                                && !(sd[1] > 1e-12 * std::max(1.0, std::abs(mu[1]))));
        std::size_t const p = use_freq ? 3 : 2;
        Matrix design(n, p);
        for (std::size_t i = 0; i < n; ++i) {
            design(i, 0) = 1.0;
            design(i, 1) = logs(i, 0) - mu[0];
            if (use_freq) { design(i, 2) = logs(i, 1) - mu[1]; }
        }
        auto const coef = least_squares(design, y);
        m.distance_coeff = coef[1];
        m.frequency_coeff = use_freq ? coef[2] : 0.0;
        m.intercept = coef[0] - m.distance_coeff * mu[0] - (use_freq ? m.frequency_coeff * mu[1] : 0.0);
        return m;
    }

    std::map<double, std::size_t> bands;
    for (auto const& s : ds.samples) { bands.emplace(s.frequency_mhz, 0); }
    std::size_t idx = 0;
    for (auto& [f, i] : bands) { i = idx++; }
    auto const nb = bands.size();
    Matrix design(n, nb + 1);
    for (std::size_t i = 0; i < n; ++i) {
        design(i, bands.at(ds.samples[i].frequency_mhz)) = 1.0;
        design(i, nb) = logs(i, 0) - mu[0];
    }
    auto const coef = least_squares(design, y);
    m.distance_coeff = coef[nb];
    for (auto const& [f, i] : bands) {
        m.band_intercepts.emplace_back(f, coef[i] - m.distance_coeff * mu[0]);
    }
    return m;
}

inline auto predict_linear(LinearModel const& m, double distance_m, double frequency_mhz) -> double
{
    if (!(distance_m > 0.0) || !(frequency_mhz > 0.0)) {
        throw ArgumentError("predict_linear: distance and frequency must be positive");
    }
    double const dist = m.distance_coeff * std::log10(distance_m);
    if (m.band_intercepts.empty()) {
        return m.intercept + dist + m.frequency_coeff * std::log10(frequency_mhz);
    }
    for (auto const& [f, a] : m.band_intercepts) {
        if (f == frequency_mhz) { return a + dist; }
    }
    throw ArgumentError("predict_linear: frequency " + format_double(frequency_mhz)
                        + " MHz was not part of the per-band fit");
}

/// N×1 predictions for every sample of `ds`.
inline auto predict_linear(LinearModel const& m, Dataset const& ds) -> Matrix
{
    Matrix out(ds.size(), 1);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out(i, 0) = predict_linear(m, ds.samples[i].distance_m, ds.samples[i].frequency_mhz);
    }
    return out;
}

} // namespace plnet
