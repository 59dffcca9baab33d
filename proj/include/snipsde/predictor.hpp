#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>

namespace snipsde {

/// Regression predictor: (value, earlier time) for regular designs,
/// (value, earlier time, later time) for irregular ones.
class Predictor {
public:
    static constexpr std::size_t max_dim = 3;

    Predictor() = default;

    static constexpr Predictor regular(double x, double t) noexcept { return Predictor({x, t, 0.0}, 2); }
    static constexpr Predictor irregular(double x, double t, double s) noexcept { return Predictor({x, t, s}, 3); }

    constexpr std::size_t dim() const noexcept { return dim_; }
    constexpr double operator[](std::size_t i) const noexcept { return v_[i]; }
    constexpr double x() const noexcept { return v_[0]; }
    constexpr double t() const noexcept { return v_[1]; }
    /// Later time; only meaningful when dim() == 3.
    constexpr double s() const noexcept { return v_[2]; }

    std::span<const double> values() const noexcept { return {v_.data(), dim_}; }

    bool finite() const noexcept {
        for (std::size_t i = 0; i < dim_; ++i)
            if (!std::isfinite(v_[i])) return false;
        return true;
    }

private:
    constexpr Predictor(std::array<double, max_dim> v, std::size_t dim) noexcept : v_(v), dim_(dim) {}

    std::array<double, max_dim> v_{};
    std::size_t dim_ = 2;
};

inline const char* predictor_column_name(std::size_t i) noexcept {
    constexpr const char* names[] = {"x", "t", "s"};
    return i < Predictor::max_dim ? names[i] : "?";
}

} // namespace snipsde
