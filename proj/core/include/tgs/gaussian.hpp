#pragma once

#include "tgs/vec.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace tgs {

// Smallest allowed per-axis standard deviation, in pixels. The upper clamp is
// the image diagonal, supplied by the caller.
inline constexpr double kMinScale = 1e-4;

// Raw opacity/color values are kept in [-kRawCap, kRawCap] so the float32
// logistic stays strictly inside (0,1); logistic(17) already rounds to 1.0f.
inline constexpr double kRawCap = 12.0;

// Symmetric positive-definite 2x2 covariance, pixel^2 units.
template <typename T>
struct Covariance2x2 {
    T s00 = 1;
    T s01 = 0;
    T s11 = 1;

    T det() const { return s00 * s11 - s01 * s01; }
    bool positive_definite() const { return s00 > T(0) && s11 > T(0) && det() > T(0); }
};

// One splat. Opacity and color are stored raw (pre-logistic); covariance is
// stored factored as (rotation, log_scales) so it is positive definite by
// construction. depth_key orders blending and is fixed at creation; id is the
// creation index and breaks depth ties.
template <typename T>
struct Gaussian2D {
    Vec2<T> position;
    T rotation = 0;
    Vec2<T> log_scales;
    T raw_opacity = 0;
    Vec3<T> color;
    T depth_key = 0;
    uint64_t id = 0;
};

template <typename T>
inline T activate(T raw) {
    return T(1) / (T(1) + std::exp(-raw));
}

// d(activate)/d(raw) expressed via the activated value.
template <typename T>
inline T activate_derivative_from_value(T activated) {
    return activated * (T(1) - activated);
}

template <typename T>
inline T inverse_activate(T v) {
    return std::log(v / (T(1) - v));
}

template <typename T>
Covariance2x2<T> covariance_from_params(T rotation, Vec2<T> log_scales) {
    if (!std::isfinite(static_cast<double>(rotation)) ||
        !std::isfinite(static_cast<double>(log_scales.x)) ||
        !std::isfinite(static_cast<double>(log_scales.y))) {
        throw std::invalid_argument("covariance_from_params: non-finite input");
    }
    const T c = std::cos(rotation);
    const T n = std::sin(rotation);
    const T a = std::exp(T(2) * log_scales.x); // variance along the first axis
    const T b = std::exp(T(2) * log_scales.y);
    Covariance2x2<T> cov;
    cov.s00 = c * c * a + n * n * b;
    cov.s01 = c * n * (a - b);
    cov.s11 = n * n * a + c * c * b;
    return cov;
}

// Inverse of a positive-definite covariance; throws on numerical degeneracy.
template <typename T>
Covariance2x2<T> invert(const Covariance2x2<T>& cov) {
    const T det = cov.det();
    if (!(det > T(0)) || !std::isfinite(static_cast<double>(det))) {
        throw std::runtime_error("covariance numerically degenerate (det <= 0)");
    }
    Covariance2x2<T> inv;
    inv.s00 = cov.s11 / det;
    inv.s01 = -cov.s01 / det;
    inv.s11 = cov.s00 / det;
    return inv;
}

// Eq. 1: G(x) = exp(-1/2 (x-mu)^T Sigma^{-1} (x-mu)).
template <typename T>
T eval_gaussian(const Gaussian2D<T>& g, Vec2<T> x) {
    const Covariance2x2<T> inv = invert(covariance_from_params(g.rotation, g.log_scales));
    const Vec2<T> d = x - g.position;
    const T q = inv.s00 * d.x * d.x + T(2) * inv.s01 * d.x * d.y + inv.s11 * d.y * d.y;
    return std::exp(T(-0.5) * q);
}

// Post-optimizer-step parameter clamps: scales to (kMinScale, image diagonal),
// raw opacity/color to +-kRawCap.
template <typename T>
void clamp_parameters(Gaussian2D<T>& g, T image_diagonal) {
    const T lo = std::log(T(kMinScale));
    const T hi = std::log(image_diagonal);
    g.log_scales.x = std::clamp(g.log_scales.x, lo, hi);
    g.log_scales.y = std::clamp(g.log_scales.y, lo, hi);
    const T cap = T(kRawCap);
    g.raw_opacity = std::clamp(g.raw_opacity, -cap, cap);
    g.color.x = std::clamp(g.color.x, -cap, cap);
    g.color.y = std::clamp(g.color.y, -cap, cap);
    g.color.z = std::clamp(g.color.z, -cap, cap);
}

} // namespace tgs
