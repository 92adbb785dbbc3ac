#pragma once

// Independent reference implementations used as test oracles. Nothing here
// calls into the library's forward/loss code.

#include "plnet/mlp.hpp"
#include "plnet/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace plnet::testing {

/// Plain-loop evaluation of the regularized MSE for a flattened parameter
/// vector laid out layer by layer, (fan_in + 1) × fan_out row-major, bias last.
/// Evaluated in extended precision so finite differences are not dominated
/// by float64 cancellation.
inline auto reference_loss(NetworkConfig const& c, std::span<long double const> params,
                           Matrix const& x, Matrix const& y) -> long double
{
    using real = long double;
    auto act = [&](real a) -> real {
        switch (c.activation) {
        case Activation::relu: return a > 0 ? a : 0;
        case Activation::sigmoid: return 1 / (1 + std::exp(-a));
        case Activation::tanh: return std::tanh(a);
        }
        return 0;
    };
    std::size_t const layers = c.hidden_layers + 1;
    real sse = 0;
    for (std::size_t n = 0; n < x.rows(); ++n) {
        std::vector<real> z(x.row(n).begin(), x.row(n).end());
        std::size_t offset = 0;
        for (std::size_t l = 0; l < layers; ++l) {
            std::size_t const in = z.size();
            std::size_t const out = l + 1 == layers ? 1 : c.hidden_nodes;
            std::vector<real> a(out);
            for (std::size_t j = 0; j < out; ++j) {
                real s = params[offset + in * out + j];
                for (std::size_t i = 0; i < in; ++i) { s += z[i] * params[offset + i * out + j]; }
                a[j] = l + 1 == layers ? s : act(s);
            }
            offset += (in + 1) * out;
            z = std::move(a);
        }
        real const r = z[0] - static_cast<real>(y(n, 0));
        sse += r * r;
    }
    real penalty = 0;
    std::size_t offset = 0;
    std::size_t in = c.input_dim;
    for (std::size_t l = 0; l < layers; ++l) {
        std::size_t const out = l + 1 == layers ? 1 : c.hidden_nodes;
        for (std::size_t k = 0; k < in * out; ++k) { penalty += params[offset + k] * params[offset + k]; }
        offset += (in + 1) * out;
        in = out;
    }
    return sse / static_cast<real>(x.rows()) + static_cast<real>(0.5 * c.l2_alpha) * penalty;
}

inline auto reference_loss(NetworkConfig const& c, std::span<double const> params, Matrix const& x,
                           Matrix const& y) -> double
{
    std::vector<long double> p(params.begin(), params.end());
    return static_cast<double>(reference_loss(c, std::span<long double const>(p), x, y));
}

/// Central finite differences of reference_loss with step h.
inline auto finite_difference_gradient(NetworkConfig const& c, std::span<double const> params,
                                       Matrix const& x, Matrix const& y, double h)
    -> std::vector<double>
{
    std::vector<long double> p(params.begin(), params.end());
    std::vector<double> g(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
        long double const orig = p[k];
        p[k] = orig + h;
        long double const up = reference_loss(c, std::span<long double const>(p), x, y);
        p[k] = orig - h;
        long double const down = reference_loss(c, std::span<long double const>(p), x, y);
        p[k] = orig;
        g[k] = static_cast<double>((up - down) / (2 * static_cast<long double>(h)));
    }
    return g;
}

/// Relative error with a floor on the denominator so coordinates whose true
/// value is near zero are judged on an absolute scale of `floor`.
inline auto relative_error(double analytic, double numeric, double floor) -> double
{
    double const denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

/// A fresh empty directory under the system temp path.
inline auto scratch_dir(std::string const& name) -> std::filesystem::path
{
    auto dir = std::filesystem::temp_directory_path() / ("plnet_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// 2-D Rosenbrock function and its gradient; minimum 0 at (1, 1).
inline auto rosenbrock(std::span<double const> w, std::span<double> g) -> double
{
    double const x = w[0];
    double const y = w[1];
    g[0] = -2.0 * (1.0 - x) - 400.0 * x * (y - x * x);
    g[1] = 200.0 * (y - x * x);
    return (1.0 - x) * (1.0 - x) + 100.0 * (y - x * x) * (y - x * x);
}

/// f(w) = ½ (w − c)ᵀ A (w − c), A symmetric positive definite.
struct Quadratic {
    plnet::Matrix a;
    std::vector<double> c;

    auto operator()(std::span<double const> w, std::span<double> g) const -> double
    {
        auto const n = c.size();
        double f = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) { s += a(i, j) * (w[j] - c[j]); }
            g[i] = s;
            f += 0.5 * (w[i] - c[i]) * s;
        }
        return f;
    }
};

/// Random rotation of a diagonal with eigenvalues log-uniform in [1, cond].
inline auto random_quadratic(plnet::Rng& rng, std::size_t n, double cond) -> Quadratic
{
    plnet::Matrix q = plnet::uniform(rng, -1.0, 1.0, n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            double d = 0.0;
            for (std::size_t k = 0; k < n; ++k) { d += q(i, k) * q(j, k); }
            for (std::size_t k = 0; k < n; ++k) { q(i, k) -= d * q(j, k); }
        }
        double norm = 0.0;
        for (std::size_t k = 0; k < n; ++k) { norm += q(i, k) * q(i, k); }
        norm = std::sqrt(norm);
        for (std::size_t k = 0; k < n; ++k) { q(i, k) /= norm; }
    }
    std::vector<double> ev(n);
    for (auto& e : ev) { e = std::exp(rng.uniform(0.0, std::log(cond))); }
    plnet::Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t k = 0; k < n; ++k) { a(i, j) += q(k, i) * ev[k] * q(k, j); }
        }
    }
    std::vector<double> c(n);
    for (auto& v : c) { v = rng.uniform(-5.0, 5.0); }
    return {a, c};
}

inline auto random_start(plnet::Rng& rng, std::size_t n) -> std::vector<double>
{
    std::vector<double> x(n);
    for (auto& v : x) { v = rng.uniform(-5.0, 5.0); }
    return x;
}

} // namespace plnet::testing
