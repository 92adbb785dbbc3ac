#pragma once

/// \file optimizer.hpp
///
/// Full-batch minimizers over a flat parameter vector: L-BFGS with a
/// strong-Wolfe line search, and fixed-step gradient descent.
///
/// An objective is any callable `double f(std::span<double const> x,
/// std::span<double> grad)` that returns the loss at `x` and writes the
/// gradient into `grad`.

#include "plnet/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace plnet {

struct OptimizerConfig {
    /// Number of (s, y) pairs kept by L-BFGS.
    std::size_t memory = 10;
    std::size_t max_iterations = 1000;
    /// Stops when ‖∇J‖∞ falls below this.
    double tolerance = 1e-5;
    /// Stops when |J_k − J_{k−1}| < loss_change_tolerance · max(1, |J_k|).
    /// Defaults to `tolerance`; zero disables the test.
    std::optional<double> loss_change_tolerance;
    /// Step size of gradient descent. L-BFGS ignores it.
    double learning_rate = 1e-3;
    double wolfe_c1 = 1e-4;
    double wolfe_c2 = 0.9;
    /// Function evaluations allowed per line search.
    std::size_t max_line_search_steps = 20;

    friend auto operator==(OptimizerConfig const&, OptimizerConfig const&) -> bool = default;

    [[nodiscard]] auto effective_loss_change_tolerance() const noexcept -> double
    {
        return loss_change_tolerance.value_or(tolerance);
    }

    void validate() const
    {
        if (!(wolfe_c1 > 0.0 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0)) {
            throw ArgumentError("optimizer config: need 0 < wolfe_c1 < wolfe_c2 < 1");
        }
        if (!(tolerance > 0.0)) { throw ArgumentError("optimizer config: tolerance must be > 0"); }
        if (loss_change_tolerance && !(*loss_change_tolerance >= 0.0)) {
            throw ArgumentError("optimizer config: loss_change_tolerance must be >= 0");
        }
        if (memory < 1) { throw ArgumentError("optimizer config: memory must be >= 1"); }
        if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
            throw ArgumentError("optimizer config: learning_rate must be finite and >= 0");
        }
        if (max_line_search_steps < 1) {
            throw ArgumentError("optimizer config: max_line_search_steps must be >= 1");
        }
    }
};

enum class Convergence { tolerance, max_iterations, line_search_failure };

inline auto to_string(Convergence c) -> std::string
{
    switch (c) {
    case Convergence::tolerance: return "tolerance";
    case Convergence::max_iterations: return "max_iterations";
    case Convergence::line_search_failure: return "line_search_failure";
    }
    return "unknown";
}

inline auto parse_convergence(std::string_view s) -> Convergence
{
    if (s == "tolerance") { return Convergence::tolerance; }
    if (s == "max_iterations") { return Convergence::max_iterations; }
    if (s == "line_search_failure") { return Convergence::line_search_failure; }
    throw ArgumentError("unknown convergence reason '" + std::string(s) + "'");
}

/// One accepted step along direction d: φ(α) = J(x + α·d).
struct StepRecord {
    double step = 0.0;          ///< α
    double loss_before = 0.0;   ///< φ(0)
    double slope_before = 0.0;  ///< φ′(0) = ∇J(x)·d
    double loss_after = 0.0;    ///< φ(α)
    double slope_after = 0.0;   ///< φ′(α)
    double gradient_norm = 0.0; ///< ‖∇J‖∞ at the new iterate
};

struct OptimizeResult {
    std::vector<double> params;
    double loss = 0.0;
    std::size_t iterations = 0;
    Convergence reason = Convergence::max_iterations;
    /// Loss at the start point followed by the loss after each accepted step.
    std::vector<double> loss_history;
    std::vector<StepRecord> steps;
    std::size_t evaluations = 0;
};

namespace detail {

inline auto dot(std::span<double const> a, std::span<double const> b) noexcept -> double
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) { s += a[i] * b[i]; }
    return s;
}

inline auto norm2(std::span<double const> a) noexcept -> double { return std::sqrt(dot(a, a)); }

inline auto norm_inf(std::span<double const> a) noexcept -> double
{
    double m = 0.0;
    for (double v : a) { m = std::max(m, std::abs(v)); }
    return m;
}

inline auto all_finite(std::span<double const> a) noexcept -> bool
{
    return std::ranges::all_of(a, [](double v) { return std::isfinite(v); });
}

struct Point {
    std::vector<double> x;
    std::vector<double> g;
    double f = 0.0;
};

template <class Objective>
auto evaluate(Objective& objective, std::vector<double> x, std::size_t& counter) -> Point
{
    Point p{std::move(x), {}, 0.0};
    p.g.assign(p.x.size(), 0.0);
    p.f = objective(std::span<double const>(p.x), std::span<double>(p.g));
    ++counter;
    return p;
}

template <class Objective>
auto start_point(Objective& objective, std::span<double const> start, std::size_t& counter)
    -> Point
{
    auto p = evaluate(objective, std::vector<double>(start.begin(), start.end()), counter);
    if (!std::isfinite(p.f) || !all_finite(p.g)) {
        throw ArgumentError("objective is not finite at the start point");
    }
    return p;
}

/// Minimizer of the cubic matching values and slopes at a and b. Returns
/// nullopt when the cubic has no real local minimizer.
inline auto cubic_minimizer(double a, double fa, double da, double b, double fb, double db)
    -> std::optional<double>
{
    double const d1 = da + db - 3.0 * (fa - fb) / (a - b);
    double const disc = d1 * d1 - da * db;
    if (!(disc >= 0.0)) { return std::nullopt; }
    double const d2 = std::copysign(std::sqrt(disc), b - a);
    double const denom = db - da + 2.0 * d2;
    if (denom == 0.0) { return std::nullopt; }
    double const t = b - (b - a) * (db + d2 - d1) / denom;
    if (!std::isfinite(t)) { return std::nullopt; }
    return t;
}

struct LineSearchOutcome {
    bool accepted = false;
    double step = 0.0;
    Point point;      ///< accepted point, or best trial point on failure
    double slope = 0.0;
};

/// Strong-Wolfe line search (bracketing followed by zoom with safeguarded
/// cubic interpolation).
template <class Objective>
auto strong_wolfe_search(Objective& objective, Point const& origin, std::span<double const> dir,
                         double initial_step, OptimizerConfig const& cfg, std::size_t& counter)
    -> LineSearchOutcome
{
    double const f0 = origin.f;
    double const d0 = dot(origin.g, dir);
    std::size_t budget = cfg.max_line_search_steps;

    struct Trial {
        double step;
        double f;
        double d;
        Point p;
    };

    LineSearchOutcome best{false, 0.0, origin, d0};
    auto try_step = [&](double step) -> Trial {
        std::vector<double> x(origin.x.size());
        for (std::size_t i = 0; i < x.size(); ++i) { x[i] = origin.x[i] + step * dir[i]; }
        auto p = evaluate(objective, std::move(x), counter);
        --budget;
        double f = p.f;
        double d = dot(p.g, dir);
        if (!std::isfinite(f) || !std::isfinite(d)) {
            f = std::numeric_limits<double>::infinity();
            d = std::numeric_limits<double>::quiet_NaN();
        } else if (f < best.point.f) {
            best = {false, step, p, d};
        }
        return {step, f, d, std::move(p)};
    };
    auto sufficient = [&](Trial const& t) { return t.f <= f0 + cfg.wolfe_c1 * t.step * d0; };
    auto curvature = [&](Trial const& t) { return std::abs(t.d) <= -cfg.wolfe_c2 * d0; };
    auto accept = [](Trial& t) {
        return LineSearchOutcome{true, t.step, std::move(t.p), t.d};
    };

    auto zoom = [&](Trial lo, Trial hi) -> LineSearchOutcome {
        while (budget > 0) {
            double const a = std::min(lo.step, hi.step);
            double const b = std::max(lo.step, hi.step);
            double const width = b - a;
            if (width <= std::numeric_limits<double>::epsilon() * std::max(1.0, b)) { break; }
            double step = 0.5 * (a + b);
            if (std::isfinite(hi.f) && std::isfinite(hi.d)) {
                if (auto c = cubic_minimizer(lo.step, lo.f, lo.d, hi.step, hi.f, hi.d)) {
                    double const margin = 0.01 * width;
                    if (*c > a + margin && *c < b - margin) { step = *c; }
                }
            }
            auto t = try_step(step);
            if (!sufficient(t) || t.f >= lo.f) {
                hi = std::move(t);
            } else {
                if (curvature(t)) { return accept(t); }
                if (t.d * (hi.step - lo.step) >= 0.0) { hi = std::move(lo); }
                lo = std::move(t);
            }
        }
        return best;
    };

    Trial prev{0.0, f0, d0, origin};
    double step = initial_step;
    for (bool first = true; budget > 0; first = false) {
        auto t = try_step(step);
        if (!sufficient(t) || (!first && t.f >= prev.f)) { return zoom(std::move(prev), std::move(t)); }
        if (curvature(t)) { return accept(t); }
        if (t.d >= 0.0) { return zoom(std::move(t), std::move(prev)); }
        double next = 2.0 * t.step;
        if (auto c = cubic_minimizer(prev.step, prev.f, prev.d, t.step, t.f, t.d)) {
            next = std::clamp(*c, 1.1 * t.step, 10.0 * t.step);
        }
        prev = std::move(t);
        step = next;
    }
    return best;
}

inline auto stop_on_loss_change(OptimizerConfig const& cfg, double previous, double current)
    -> bool
{
    double const tol = cfg.effective_loss_change_tolerance();
    return tol > 0.0 && std::abs(current - previous) < tol * std::max(1.0, std::abs(current));
}

} // namespace detail

/// L-BFGS: two-loop recursion over the most recent `memory` curvature pairs,
/// strong-Wolfe steps. Starts (and restarts) along −∇J/‖∇J‖₂ with unit trial
/// step; afterwards the initial inverse Hessian is γI with γ = sᵀy / yᵀy.
template <class Objective>
auto minimize_lbfgs(Objective objective, std::span<double const> start,
                    OptimizerConfig const& cfg) -> OptimizeResult
{
    cfg.validate();
    OptimizeResult result;
    auto current = detail::start_point(objective, start, result.evaluations);
    result.loss_history.push_back(current.f);

    struct Pair {
        std::vector<double> s;
        std::vector<double> y;
        double rho;
        double yy;
    };
    std::deque<Pair> history;
    std::size_t const n = current.x.size();

    auto finish = [&](detail::Point p, Convergence reason) {
        result.params = std::move(p.x);
        result.loss = p.f;
        result.reason = reason;
        return result;
    };

    if (detail::norm_inf(current.g) < cfg.tolerance) {
        return finish(std::move(current), Convergence::tolerance);
    }

    std::vector<double> dir(n);
    std::vector<double> alpha(cfg.memory);
    while (result.iterations < cfg.max_iterations) {
        auto steepest = [&] {
            double const gn = detail::norm2(current.g);
            for (std::size_t i = 0; i < n; ++i) { dir[i] = -current.g[i] / gn; }
        };
        if (history.empty()) {
            steepest();
        } else {
            std::vector<double> q = current.g;
            for (std::size_t k = history.size(); k-- > 0;) {
                auto const& h = history[k];
                alpha[k] = h.rho * detail::dot(h.s, q);
                for (std::size_t i = 0; i < n; ++i) { q[i] -= alpha[k] * h.y[i]; }
            }
            auto const& last = history.back();
            double const gamma = 1.0 / (last.rho * last.yy);
            for (auto& v : q) { v *= gamma; }
            for (std::size_t k = 0; k < history.size(); ++k) {
                auto const& h = history[k];
                double const beta = h.rho * detail::dot(h.y, q);
                for (std::size_t i = 0; i < n; ++i) { q[i] += (alpha[k] - beta) * h.s[i]; }
            }
            for (std::size_t i = 0; i < n; ++i) { dir[i] = -q[i]; }
            if (!(detail::dot(dir, current.g) < 0.0)) {
                history.clear();
                steepest();
            }
        }

        double const slope = detail::dot(current.g, dir);
        auto ls = detail::strong_wolfe_search(objective, current, dir, 1.0, cfg, result.evaluations);
        if (!ls.accepted) {
            auto const& best = ls.point.f < current.f ? ls.point : current;
            return finish(best, Convergence::line_search_failure);
        }

        Pair pair{std::vector<double>(n), std::vector<double>(n), 0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) {
            pair.s[i] = ls.point.x[i] - current.x[i];
            pair.y[i] = ls.point.g[i] - current.g[i];
        }
        double const sy = detail::dot(pair.s, pair.y);
        pair.yy = detail::dot(pair.y, pair.y);
        if (sy > 1e-10 * detail::norm2(pair.s) * std::sqrt(pair.yy)) {
            pair.rho = 1.0 / sy;
            history.push_back(std::move(pair));
            if (history.size() > cfg.memory) { history.pop_front(); }
        }

        double const previous = current.f;
        current = std::move(ls.point);
        ++result.iterations;
        result.loss_history.push_back(current.f);
        double const gnorm = detail::norm_inf(current.g);
        result.steps.push_back({ls.step, previous, slope, current.f, ls.slope, gnorm});

        if (gnorm < cfg.tolerance || detail::stop_on_loss_change(cfg, previous, current.f)) {
            return finish(std::move(current), Convergence::tolerance);
        }
    }
    return finish(std::move(current), Convergence::max_iterations);
}

/// Gradient descent with a fixed step: x ← x − learning_rate · ∇J(x).
/// A step that leaves x unchanged is not taken as convergence evidence for
/// the loss-change test.
template <class Objective>
auto minimize_gd(Objective objective, std::span<double const> start, OptimizerConfig const& cfg)
    -> OptimizeResult
{
    cfg.validate();
    OptimizeResult result;
    auto current = detail::start_point(objective, start, result.evaluations);
    result.loss_history.push_back(current.f);

    auto finish = [&](Convergence reason) {
        result.params = std::move(current.x);
        result.loss = current.f;
        result.reason = reason;
        return result;
    };

    if (detail::norm_inf(current.g) < cfg.tolerance) { return finish(Convergence::tolerance); }

    double const lr = cfg.learning_rate;
    std::size_t const n = current.x.size();
    while (result.iterations < cfg.max_iterations) {
        std::vector<double> x(n);
        bool moved = false;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = current.x[i] - lr * current.g[i];
            moved = moved || x[i] != current.x[i];
        }
        double const slope = -lr * detail::dot(current.g, current.g);
        auto next = detail::evaluate(objective, std::move(x), result.evaluations);
        if (!std::isfinite(next.f) || !detail::all_finite(next.g)) {
            throw NumericalError("gradient descent diverged at iteration "
                                 + std::to_string(result.iterations + 1)
                                 + " (non-finite loss or gradient)");
        }
        double const previous = current.f;
        current = std::move(next);
        ++result.iterations;
        result.loss_history.push_back(current.f);
        double const gnorm = detail::norm_inf(current.g);
        result.steps.push_back({1.0, previous, slope, current.f, std::numeric_limits<double>::quiet_NaN(), gnorm});

        if (gnorm < cfg.tolerance
            || (moved && detail::stop_on_loss_change(cfg, previous, current.f))) {
            return finish(Convergence::tolerance);
        }
    }
    return finish(Convergence::max_iterations);
}

} // namespace plnet
