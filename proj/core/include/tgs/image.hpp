#pragma once

#include "tgs/vec.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace tgs {

// Row-major RGB raster with channels in [0, 1].
template <typename T>
struct Image {
    int width = 0;
    int height = 0;
    std::vector<Vec3<T>> pixels;

    Image() = default;
    Image(int w, int h) : width(w), height(h), pixels(static_cast<size_t>(w) * h) {}

    Vec3<T>& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
    const Vec3<T>& at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }

    double diagonal() const {
        return std::sqrt(static_cast<double>(width) * width + static_cast<double>(height) * height);
    }

    template <typename U>
    Image<U> cast() const {
        Image<U> out(width, height);
        for (size_t i = 0; i < pixels.size(); ++i) out.pixels[i] = pixels[i].template cast<U>();
        return out;
    }
};

// 8-bit RGB PNG I/O; values are mapped to [0,1] by /255 on load and rounded
// back on save.
Image<float> load_png(const std::string& path);
void save_png(const std::string& path, const Image<float>& image);
void save_png(const std::string& path, const Image<double>& image);

} // namespace tgs
