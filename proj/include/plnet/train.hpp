#pragma once

#include "plnet/error.hpp"
#include "plnet/mlp.hpp"
#include "plnet/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace plnet {

enum class Method { lbfgs, gd };

inline auto to_string(Method m) -> std::string { return m == Method::lbfgs ? "lbfgs" : "gd"; }

inline auto parse_method(std::string_view s) -> Method
{
    if (s == "lbfgs") { return Method::lbfgs; }
    if (s == "gd") { return Method::gd; }
    throw ArgumentError("unknown training method '" + std::string(s) + "' (expected lbfgs or gd)");
}

/// Loss and flattened gradient of a network configuration over a fixed batch.
class NetworkObjective {
  public:
    NetworkObjective(NetworkConfig config, Matrix const& x, Matrix const& y)
        : config_{config}, x_{&x}, y_{&y}
    {
        if (x.rows() != y.rows()) {
            throw ShapeError("training inputs " + x.shape() + " and targets " + y.shape()
                             + " have different row counts");
        }
    }

    auto operator()(std::span<double const> params, std::span<double> grad) const -> double
    {
        auto const net = unflatten(config_, params);
        auto fw = forward(net, *x_);
        double const j = loss(net, fw.predictions, *y_);
        auto const grads = backward(net, fw.trace, *x_, *y_);
        auto out = grad.begin();
        for (auto const& g : grads) { out = std::ranges::copy(g.data(), out).out; }
        return j;
    }

  private:
    NetworkConfig config_;
    Matrix const* x_;
    Matrix const* y_;
};

struct TrainResult {
    Network network;
    OptimizeResult optimization;
};

/// Full-batch training of `net` on (x, y). Throws NumericalError when the loss
/// is not finite at the start or the end.
inline auto train(Network const& net, Matrix const& x, Matrix const& y, OptimizerConfig const& opt,
                  Method method = Method::lbfgs) -> TrainResult
{
    validate(net);
    if (y.cols() != 1) { throw ShapeError("training targets must be N×1, got " + y.shape()); }
    if (x.rows() == 0) { throw ArgumentError("training set is empty"); }
    NetworkObjective objective(net.config, x, y);
    auto const start = flatten(net);
    {
        std::vector<double> g(start.size());
        double const j0 = objective(start, g);
        if (!std::isfinite(j0) || !std::ranges::all_of(g, [](double v) { return std::isfinite(v); })) {
            throw NumericalError("training loss is not finite at the initial weights");
        }
    }
    auto r = method == Method::lbfgs ? minimize_lbfgs(objective, start, opt)
                                     : minimize_gd(objective, start, opt);
    if (!std::isfinite(r.loss)) { throw NumericalError("training ended with a non-finite loss"); }
    auto trained = unflatten(net.config, r.params);
    return {std::move(trained), std::move(r)};
}

} // namespace plnet
