#pragma once

/// \file mlp.hpp
///
/// Fully connected multilayer perceptron for scalar regression.
///
/// Every layer stores its weights in augmented form: a (fan_in + 1) × fan_out
/// matrix whose last row is the bias. Hidden layers apply the configured
/// activation; the output layer is linear. The training loss is
///
///     J(W) = (1/N) Σ (ŷ − y)² + (α/2) Σ w²
///
/// where the penalty sums over non-bias entries only.

#include "plnet/error.hpp"
#include "plnet/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace plnet {

enum class Activation { relu, sigmoid, tanh };

inline auto to_string(Activation a) -> std::string
{
    switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    }
    return "unknown";
}

inline auto parse_activation(std::string_view s) -> Activation
{
    if (s == "relu") { return Activation::relu; }
    if (s == "sigmoid") { return Activation::sigmoid; }
    if (s == "tanh") { return Activation::tanh; }
    throw ArgumentError("unknown activation '" + std::string(s)
                        + "' (expected relu, sigmoid or tanh)");
}

namespace detail {
// Largest double below one. Saturated sigmoid/tanh values are pulled back to
// it so the outputs stay inside their open ranges.
inline constexpr double below_one = 1.0 - 0x1.0p-53;

inline auto sigmoid(double a) noexcept -> double
{
    double h = 0.0;
    if (a >= 0.0) {
        h = 1.0 / (1.0 + std::exp(-a));
    } else {
        double const e = std::exp(a);
        h = e / (1.0 + e);
    }
    return std::clamp(h, std::numeric_limits<double>::denorm_min(), below_one);
}

inline auto tanh(double a) noexcept -> double
{
    return std::clamp(std::tanh(a), -below_one, below_one);
}
} // namespace detail

inline auto activate(Activation act, double a) noexcept -> double
{
    switch (act) {
    case Activation::relu: return a > 0.0 ? a : 0.0;
    case Activation::sigmoid: return detail::sigmoid(a);
    case Activation::tanh: return detail::tanh(a);
    }
    return a;
}

/// H′(a). The ReLU derivative at exactly zero is taken as 0.
inline auto activate_derivative(Activation act, double a) noexcept -> double
{
    switch (act) {
    case Activation::relu: return a > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: {
        double const h = detail::sigmoid(a);
        return h * (1.0 - h);
    }
    case Activation::tanh: {
        double const h = detail::tanh(a);
        return 1.0 - h * h;
    }
    }
    return 1.0;
}

inline auto activation_apply(Activation act, Matrix a) -> Matrix
{
    for (auto& v : a.data()) { v = activate(act, v); }
    return a;
}

inline auto activation_derivative(Activation act, Matrix a) -> Matrix
{
    for (auto& v : a.data()) { v = activate_derivative(act, v); }
    return a;
}

struct NetworkConfig {
    std::size_t input_dim = 2;
    std::size_t hidden_layers = 1;
    std::size_t hidden_nodes = 40;
    Activation activation = Activation::tanh;
    double l2_alpha = 1e-4;

    friend auto operator==(NetworkConfig const&, NetworkConfig const&) -> bool = default;

    void validate() const
    {
        if (input_dim < 1) { throw ArgumentError("network config: input_dim must be >= 1"); }
        if (hidden_layers < 1) {
            throw ArgumentError("network config: hidden_layers must be >= 1");
        }
        if (hidden_nodes < 1) {
            throw ArgumentError("network config: hidden_nodes must be >= 1");
        }
        if (!(l2_alpha >= 0.0) || !std::isfinite(l2_alpha)) {
            throw ArgumentError("network config: l2_alpha must be finite and >= 0");
        }
    }

    /// Number of weight layers (hidden layers plus the output layer).
    [[nodiscard]] auto layer_count() const noexcept -> std::size_t { return hidden_layers + 1; }

    [[nodiscard]] auto fan_in(std::size_t layer) const noexcept -> std::size_t
    {
        return layer == 0 ? input_dim : hidden_nodes;
    }

    [[nodiscard]] auto fan_out(std::size_t layer) const noexcept -> std::size_t
    {
        return layer + 1 == layer_count() ? 1 : hidden_nodes;
    }

    [[nodiscard]] auto parameter_count() const noexcept -> std::size_t
    {
        std::size_t n = 0;
        for (std::size_t l = 0; l < layer_count(); ++l) { n += (fan_in(l) + 1) * fan_out(l); }
        return n;
    }
};

struct Network {
    NetworkConfig config;
    std::vector<Matrix> weights;

    friend auto operator==(Network const&, Network const&) -> bool = default;
};

/// Per-layer linear outputs A (one per weight layer) and hidden activations Z
/// (one per hidden layer) of a forward pass.
struct ForwardTrace {
    std::vector<Matrix> linear;
    std::vector<Matrix> activations;
};

/// Checks weight shapes against the configuration.
inline void validate(Network const& net)
{
    net.config.validate();
    auto const& c = net.config;
    if (net.weights.size() != c.layer_count()) {
        throw ShapeError("network has " + std::to_string(net.weights.size())
                         + " weight matrices, config requires "
                         + std::to_string(c.layer_count()));
    }
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        auto const& w = net.weights[l];
        if (w.rows() != c.fan_in(l) + 1 || w.cols() != c.fan_out(l)) {
            throw ShapeError("layer " + std::to_string(l + 1) + " weights are " + w.shape()
                             + ", expected "
                             + Matrix::shape_string(c.fan_in(l) + 1, c.fan_out(l)));
        }
    }
}

/// Glorot-uniform weights, zero bias rows.
inline auto init_weights(NetworkConfig const& config, Rng& rng) -> Network
{
    config.validate();
    Network net{config, {}};
    net.weights.reserve(config.layer_count());
    for (std::size_t l = 0; l < config.layer_count(); ++l) {
        auto const in = config.fan_in(l);
        auto const out = config.fan_out(l);
        double const limit = std::sqrt(6.0 / static_cast<double>(in + out));
        auto w = uniform(rng, -limit, limit, in, out);
        std::vector<double> data(w.data().begin(), w.data().end());
        data.resize((in + 1) * out, 0.0);
        net.weights.emplace_back(in + 1, out, std::move(data));
    }
    return net;
}

namespace detail {
/// in · W[0..k) + W[k] for an augmented weight matrix with k = in.cols().
inline auto affine(Matrix const& in, Matrix const& w) -> Matrix
{
    std::size_t const k = in.cols();
    Matrix out(in.rows(), w.cols());
    auto const bias = w.row(k);
    for (std::size_t n = 0; n < in.rows(); ++n) {
        auto o = out.row(n);
        std::copy(bias.begin(), bias.end(), o.begin());
        auto const x = in.row(n);
        for (std::size_t i = 0; i < k; ++i) {
            double const xi = x[i];
            auto const wi = w.row(i);
            for (std::size_t j = 0; j < o.size(); ++j) { o[j] += xi * wi[j]; }
        }
    }
    return out;
}

/// delta · W[0..k)ᵀ, dropping the bias row.
inline auto back_through(Matrix const& delta, Matrix const& w) -> Matrix
{
    std::size_t const k = w.rows() - 1;
    Matrix out(delta.rows(), k);
    for (std::size_t n = 0; n < delta.rows(); ++n) {
        auto const d = delta.row(n);
        auto o = out.row(n);
        for (std::size_t i = 0; i < k; ++i) {
            auto const wi = w.row(i);
            double s = 0.0;
            for (std::size_t j = 0; j < d.size(); ++j) { s += d[j] * wi[j]; }
            o[i] = s;
        }
    }
    return out;
}

inline void require_input_shape(Network const& net, Matrix const& x)
{
    if (x.cols() != net.config.input_dim) {
        throw ShapeError("input is " + x.shape() + " but the network expects "
                         + std::to_string(net.config.input_dim) + " feature columns");
    }
}
} // namespace detail

struct ForwardResult {
    Matrix predictions;
    ForwardTrace trace;
};

inline auto forward(Network const& net, Matrix const& x) -> ForwardResult
{
    validate(net);
    detail::require_input_shape(net, x);
    ForwardResult r;
    auto const layers = net.weights.size();
    r.trace.linear.reserve(layers);
    r.trace.activations.reserve(layers - 1);
    for (std::size_t l = 0; l < layers; ++l) {
        Matrix const& in = l == 0 ? x : r.trace.activations.back();
        r.trace.linear.push_back(detail::affine(in, net.weights[l]));
        if (l + 1 < layers) {
            r.trace.activations.push_back(
                activation_apply(net.config.activation, r.trace.linear.back()));
        }
    }
    r.predictions = r.trace.linear.back();
    return r;
}

/// Forward pass without keeping the intermediate layers.
inline auto predict(Network const& net, Matrix const& x) -> Matrix
{
    validate(net);
    detail::require_input_shape(net, x);
    Matrix z = x;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        Matrix a = detail::affine(z, net.weights[l]);
        if (l + 1 == net.weights.size()) { return a; }
        z = activation_apply(net.config.activation, std::move(a));
    }
    return z;
}

/// Sum of squared non-bias weights.
inline auto squared_weight_norm(Network const& net) -> double
{
    double s = 0.0;
    for (auto const& w : net.weights) {
        for (std::size_t i = 0; i + 1 < w.rows(); ++i) {
            for (double v : w.row(i)) { s += v * v; }
        }
    }
    return s;
}

inline auto loss(Network const& net, Matrix const& predictions, Matrix const& targets) -> double
{
    if (predictions.cols() != 1 || targets.cols() != 1
        || predictions.rows() != targets.rows()) {
        throw ShapeError("loss: predictions " + predictions.shape() + " and targets "
                         + targets.shape() + " must both be N×1");
    }
    if (predictions.rows() == 0) { throw ArgumentError("loss: no samples"); }
    double sse = 0.0;
    for (std::size_t n = 0; n < predictions.rows(); ++n) {
        double const r = predictions(n, 0) - targets(n, 0);
        sse += r * r;
    }
    return sse / static_cast<double>(predictions.rows())
           + 0.5 * net.config.l2_alpha * squared_weight_norm(net);
}

/// ∂J/∂W for every layer, shaped like the weights.
inline auto backward(Network const& net, ForwardTrace const& trace, Matrix const& x,
                     Matrix const& targets) -> std::vector<Matrix>
{
    validate(net);
    detail::require_input_shape(net, x);
    auto const layers = net.weights.size();
    auto const n = x.rows();
    if (trace.linear.size() != layers || trace.activations.size() + 1 != layers) {
        throw ShapeError("backward: trace has " + std::to_string(trace.linear.size())
                         + " layers, network has " + std::to_string(layers));
    }
    for (std::size_t l = 0; l < layers; ++l) {
        auto const& a = trace.linear[l];
        if (a.rows() != n || a.cols() != net.config.fan_out(l)
            || (l + 1 < layers
                && (trace.activations[l].rows() != n || trace.activations[l].cols() != a.cols()))) {
            throw ShapeError("backward: trace layer " + std::to_string(l + 1)
                             + " does not match the network and input " + x.shape());
        }
    }
    if (targets.rows() != n || targets.cols() != 1) {
        throw ShapeError("backward: targets " + targets.shape() + " do not match input "
                         + x.shape());
    }
    if (n == 0) { throw ArgumentError("backward: no samples"); }

    auto const alpha = net.config.l2_alpha;
    Matrix delta(n, 1);
    double const k = 2.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) { delta(i, 0) = k * (trace.linear.back()(i, 0) - targets(i, 0)); }

    std::vector<Matrix> grads(layers);
    for (std::size_t l = layers; l-- > 0;) {
        Matrix const& in = l == 0 ? x : trace.activations[l - 1];
        Matrix const& w = net.weights[l];
        Matrix top = matmul_at_b(in, delta);
        auto const bias = column_sum(delta);
        std::vector<double> g;
        g.reserve(w.size());
        for (std::size_t i = 0; i < top.rows(); ++i) {
            for (std::size_t j = 0; j < top.cols(); ++j) {
                g.push_back(top(i, j) + alpha * w(i, j));
            }
        }
        g.insert(g.end(), bias.begin(), bias.end());
        grads[l] = Matrix(w.rows(), w.cols(), std::move(g));
        if (l > 0) {
            delta = hadamard(detail::back_through(delta, w),
                             activation_derivative(net.config.activation, trace.linear[l - 1]));
        }
    }
    return grads;
}

/// Concatenates all weight matrices, layer by layer, row-major.
inline auto flatten(std::span<Matrix const> weights) -> std::vector<double>
{
    std::vector<double> v;
    for (auto const& w : weights) { v.insert(v.end(), w.data().begin(), w.data().end()); }
    return v;
}

inline auto flatten(Network const& net) -> std::vector<double> { return flatten(net.weights); }

/// Inverse of flatten for a given configuration.
inline auto unflatten(NetworkConfig const& config, std::span<double const> params) -> Network
{
    config.validate();
    if (params.size() != config.parameter_count()) {
        throw ShapeError("parameter vector has length " + std::to_string(params.size())
                         + ", network needs " + std::to_string(config.parameter_count()));
    }
    Network net{config, {}};
    std::size_t offset = 0;
    for (std::size_t l = 0; l < config.layer_count(); ++l) {
        auto const rows = config.fan_in(l) + 1;
        auto const cols = config.fan_out(l);
        auto const first = params.begin() + static_cast<std::ptrdiff_t>(offset);
        net.weights.emplace_back(rows, cols,
                                 std::vector<double>(first, first + static_cast<std::ptrdiff_t>(rows * cols)));
        offset += rows * cols;
    }
    return net;
}

} // namespace plnet
