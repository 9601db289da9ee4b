#pragma once

#include "tgs/gaussian.hpp"

#include <stdexcept>
#include <utility>

namespace tgs {

// Strided sampling pattern: pixel (x, y) is active iff x mod p == offset_x and
// y mod p == offset_y. p = 1 makes every pixel active. Active pixels are
// enumerated row-major; rank k <-> k-th active pixel is the dense mapping the
// rasterizer uses for both passes.
class DilationPattern {
public:
    DilationPattern(int pattern_size, int offset_x, int offset_y, int width, int height)
        : p_(pattern_size), ox_(offset_x), oy_(offset_y), width_(width), height_(height) {
        if (p_ < 1) throw std::invalid_argument("dilation must be >= 1");
        if (ox_ < 0 || oy_ < 0 || ox_ >= p_ || oy_ >= p_) {
            throw std::invalid_argument("dilation offsets must lie in [0, p)");
        }
        if (width_ < 1 || height_ < 1) throw std::invalid_argument("image dimensions must be >= 1");
        cols_ = width_ > ox_ ? (width_ - ox_ - 1) / p_ + 1 : 0;
        rows_ = height_ > oy_ ? (height_ - oy_ - 1) / p_ + 1 : 0;
    }

    bool active(int x, int y) const { return x % p_ == ox_ && y % p_ == oy_; }

    int active_count() const { return cols_ * rows_; }

    // Rank of an active pixel; pre: active(x, y).
    int rank_of(int x, int y) const { return ((y - oy_) / p_) * cols_ + (x - ox_) / p_; }

    std::pair<int, int> pixel_at_rank(int rank) const {
        return {ox_ + (rank % cols_) * p_, oy_ + (rank / cols_) * p_};
    }

    int pattern_size() const { return p_; }
    int offset_x() const { return ox_; }
    int offset_y() const { return oy_; }
    int width() const { return width_; }
    int height() const { return height_; }
    int cols() const { return cols_; }
    int rows() const { return rows_; }

    // First active coordinate >= v on the given axis, or a value past the end.
    int first_active_at_or_after(int v, int offset) const {
        if (v <= offset) return offset;
        const int k = (v - offset + p_ - 1) / p_;
        return offset + k * p_;
    }

private:
    int p_, ox_, oy_, width_, height_;
    int cols_, rows_;
};

// Deterministic offset cycle covering all p^2 phases; over any p^2 consecutive
// iterations every pixel is active exactly once.
inline std::pair<int, int> next_offsets(int p, long long iteration) {
    if (p < 1) throw std::invalid_argument("dilation must be >= 1");
    const long long idx = iteration % (static_cast<long long>(p) * p);
    return {static_cast<int>(idx % p), static_cast<int>(idx / p)};
}

// Screen-space low-pass diagonal bump, 0.3 + 0.5 (p - 1).
template <typename T>
inline T lowpass_bump(int p) {
    return T(0.3) + T(0.5) * T(p - 1);
}

template <typename T>
Covariance2x2<T> apply_lowpass(const Covariance2x2<T>& cov, int p) {
    if (p < 1) throw std::invalid_argument("dilation must be >= 1");
    Covariance2x2<T> out = cov;
    const T bump = lowpass_bump<T>(p);
    out.s00 += bump;
    out.s11 += bump;
    return out;
}

} // namespace tgs
