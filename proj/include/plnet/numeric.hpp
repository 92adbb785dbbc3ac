#pragma once

/// \file numeric.hpp
///
/// Dense row-major matrices of doubles and the seeded random source used by
/// every other component. Samples are rows, features are columns.

#include "plnet/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace plnet {

class Matrix {
  public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_{rows}, cols_{cols}, data_(rows * cols, fill)
    {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_{rows}, cols_{cols}, data_{std::move(data)}
    {
        if (data_.size() != rows_ * cols_) {
            throw ShapeError("matrix data length " + std::to_string(data_.size())
                             + " does not match shape " + shape_string(rows_, cols_));
        }
    }

    Matrix(std::initializer_list<std::initializer_list<double>> rows)
        : rows_{rows.size()}, cols_{rows.size() == 0 ? 0 : rows.begin()->size()}
    {
        data_.reserve(rows_ * cols_);
        for (auto const& r : rows) {
            if (r.size() != cols_) { throw ShapeError("ragged matrix literal"); }
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static auto identity(std::size_t n) -> Matrix
    {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) { m(i, i) = 1.0; }
        return m;
    }

    [[nodiscard]] auto rows() const noexcept -> std::size_t { return rows_; }
    [[nodiscard]] auto cols() const noexcept -> std::size_t { return cols_; }
    [[nodiscard]] auto size() const noexcept -> std::size_t { return data_.size(); }
    [[nodiscard]] auto empty() const noexcept -> bool { return data_.empty(); }

    auto operator()(std::size_t r, std::size_t c) noexcept -> double& { return data_[r * cols_ + c]; }
    auto operator()(std::size_t r, std::size_t c) const noexcept -> double
    {
        return data_[r * cols_ + c];
    }

    [[nodiscard]] auto data() noexcept -> std::span<double> { return data_; }
    [[nodiscard]] auto data() const noexcept -> std::span<double const> { return data_; }
    [[nodiscard]] auto row(std::size_t r) noexcept -> std::span<double>
    {
        return {data_.data() + r * cols_, cols_};
    }
    [[nodiscard]] auto row(std::size_t r) const noexcept -> std::span<double const>
    {
        return {data_.data() + r * cols_, cols_};
    }

    [[nodiscard]] auto shape() const -> std::string { return shape_string(rows_, cols_); }

    friend auto operator==(Matrix const&, Matrix const&) -> bool = default;

    static auto shape_string(std::size_t r, std::size_t c) -> std::string
    {
        return "(" + std::to_string(r) + "x" + std::to_string(c) + ")";
    }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

namespace detail {
inline void require_same_shape(Matrix const& a, Matrix const& b, char const* op)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape() + " vs " + b.shape());
    }
}

template <class F>
auto zip_with(Matrix const& a, Matrix const& b, char const* op, F f) -> Matrix
{
    require_same_shape(a, b, op);
    Matrix out(a.rows(), a.cols());
    auto const x = a.data();
    auto const y = b.data();
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); ++i) { o[i] = f(x[i], y[i]); }
    return out;
}
} // namespace detail

inline auto matmul(Matrix const& a, Matrix const& b) -> Matrix
{
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: cannot multiply " + a.shape() + " by " + b.shape());
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto o = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            double const aik = a(i, k);
            auto const bk = b.row(k);
            for (std::size_t j = 0; j < o.size(); ++j) { o[j] += aik * bk[j]; }
        }
    }
    return out;
}

/// aᵀ·b without materializing the transpose.
inline auto matmul_at_b(Matrix const& a, Matrix const& b) -> Matrix
{
    if (a.rows() != b.rows()) {
        throw ShapeError("matmul_at_b: cannot multiply transpose of " + a.shape() + " by "
                         + b.shape());
    }
    Matrix out(a.cols(), b.cols());
    for (std::size_t n = 0; n < a.rows(); ++n) {
        auto const an = a.row(n);
        auto const bn = b.row(n);
        for (std::size_t i = 0; i < an.size(); ++i) {
            double const ani = an[i];
            auto o = out.row(i);
            for (std::size_t j = 0; j < o.size(); ++j) { o[j] += ani * bn[j]; }
        }
    }
    return out;
}

/// a·bᵀ without materializing the transpose.
inline auto matmul_a_bt(Matrix const& a, Matrix const& b) -> Matrix
{
    if (a.cols() != b.cols()) {
        throw ShapeError("matmul_a_bt: cannot multiply " + a.shape() + " by transpose of "
                         + b.shape());
    }
    Matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto const ai = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            auto const bj = b.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < ai.size(); ++k) { s += ai[k] * bj[k]; }
            out(i, j) = s;
        }
    }
    return out;
}

inline auto hadamard(Matrix const& a, Matrix const& b) -> Matrix
{
    return detail::zip_with(a, b, "hadamard", [](double x, double y) { return x * y; });
}

inline auto add(Matrix const& a, Matrix const& b) -> Matrix
{
    return detail::zip_with(a, b, "add", [](double x, double y) { return x + y; });
}

inline auto sub(Matrix const& a, Matrix const& b) -> Matrix
{
    return detail::zip_with(a, b, "sub", [](double x, double y) { return x - y; });
}

inline auto scale(Matrix m, double k) -> Matrix
{
    for (auto& v : m.data()) { v *= k; }
    return m;
}

inline auto transpose(Matrix const& a) -> Matrix
{
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) { out(j, i) = a(i, j); }
    }
    return out;
}

/// Adds the 1×C row vector `bias` to every row of `m`. The only broadcasting
/// operation in the library.
inline auto add_row_vector(Matrix m, std::span<double const> bias) -> Matrix
{
    if (bias.size() != m.cols()) {
        throw ShapeError("add_row_vector: row of length " + std::to_string(bias.size())
                         + " cannot be added to " + m.shape());
    }
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto r = m.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) { r[j] += bias[j]; }
    }
    return m;
}

inline auto column_sum(Matrix const& m) -> std::vector<double>
{
    std::vector<double> s(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto const r = m.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) { s[j] += r[j]; }
    }
    return s;
}

inline auto column_mean(Matrix const& m) -> std::vector<double>
{
    if (m.rows() == 0) { throw ArgumentError("column_mean: matrix has no rows"); }
    auto s = column_sum(m);
    for (auto& v : s) { v /= static_cast<double>(m.rows()); }
    return s;
}

/// Population standard deviation (divides by N) of each column.
inline auto column_std(Matrix const& m) -> std::vector<double>
{
    auto const mu = column_mean(m);
    std::vector<double> var(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto const r = m.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) {
            double const d = r[j] - mu[j];
            var[j] += d * d;
        }
    }
    for (auto& v : var) { v = std::sqrt(v / static_cast<double>(m.rows())); }
    return var;
}

inline auto frobenius_norm(Matrix const& m) -> double
{
    double s = 0.0;
    for (double v : m.data()) { s += v * v; }
    return std::sqrt(s);
}

inline auto all_finite(Matrix const& m) -> bool
{
    return std::ranges::all_of(m.data(), [](double v) { return std::isfinite(v); });
}

/// SplitMix64 finalizer. Used to derive independent sub-seeds from a master
/// seed and an index: `derive_seed(s, i) = mix64(s + (i + 1) * 0x9E3779B97F4A7C15)`.
constexpr auto mix64(std::uint64_t z) noexcept -> std::uint64_t
{
    z = (z ^ (z >> 30U)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27U)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31U);
}

constexpr auto derive_seed(std::uint64_t master, std::uint64_t index) noexcept -> std::uint64_t
{
    return mix64(master + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

/// Seeded random source.
///
/// Raw bits come from `std::mt19937_64`, whose output sequence is fixed by the
/// C++ standard. Conversions to real numbers are done here rather than through
/// `<random>` distributions (whose algorithms are implementation-defined):
/// uniform draws use the top 53 bits, normal draws use the Box-Muller
/// transform with the second variate cached.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_{seed}, engine_{seed} {}

    [[nodiscard]] auto seed() const noexcept -> std::uint64_t { return seed_; }

    auto next_u64() -> std::uint64_t { return engine_(); }

    /// Uniform on [0, 1).
    auto uniform01() -> double
    {
        return static_cast<double>(engine_() >> 11U) * 0x1.0p-53;
    }

    auto uniform(double lo, double hi) -> double { return lo + (hi - lo) * uniform01(); }

    auto normal() -> double
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double const u1 = 1.0 - uniform01(); // (0, 1]
        double const u2 = uniform01();
        double const r = std::sqrt(-2.0 * std::log(u1));
        double const theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    /// Uniform integer on [0, n).
    auto below(std::uint64_t n) -> std::uint64_t
    {
        if (n == 0) { throw ArgumentError("Rng::below: empty range"); }
        // rejection sampling removes modulo bias
        std::uint64_t const limit = std::numeric_limits<std::uint64_t>::max()
                                    - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x = 0;
        do { x = engine_(); } while (x >= limit);
        return x % n;
    }

  private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Matrix with i.i.d. entries uniform on [lo, hi), filled row by row.
inline auto uniform(Rng& rng, double lo, double hi, std::size_t rows, std::size_t cols) -> Matrix
{
    if (!(lo <= hi)) {
        throw ArgumentError("uniform: lower bound " + std::to_string(lo)
                            + " exceeds upper bound " + std::to_string(hi));
    }
    Matrix m(rows, cols);
    for (auto& v : m.data()) { v = rng.uniform(lo, hi); }
    return m;
}

/// Fisher-Yates permutation of 0..n-1.
inline auto permutation(Rng& rng, std::size_t n) -> std::vector<std::size_t>
{
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) { p[i] = i; }
    for (std::size_t i = n; i > 1; --i) {
        auto const j = static_cast<std::size_t>(rng.below(i));
        std::swap(p[i - 1], p[j]);
    }
    return p;
}

} // namespace plnet
