#pragma once

#include <cmath>

namespace tgs {

template <typename T>
struct Vec2 {
    T x = 0;
    T y = 0;

    Vec2() = default;
    Vec2(T x_, T y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(T s) const { return {x * s, y * s}; }
    Vec2& operator+=(const Vec2& o) {
        x += o.x;
        y += o.y;
        return *this;
    }
    T dot(const Vec2& o) const { return x * o.x + y * o.y; }
    T norm() const { return std::sqrt(x * x + y * y); }

    template <typename U>
    Vec2<U> cast() const {
        return {static_cast<U>(x), static_cast<U>(y)};
    }
};

template <typename T>
struct Vec3 {
    T x = 0;
    T y = 0;
    T z = 0;

    Vec3() = default;
    Vec3(T x_, T y_, T z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(T s) const { return {x * s, y * s, z * s}; }
    Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    T dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    T norm() const { return std::sqrt(x * x + y * y + z * z); }

    template <typename U>
    Vec3<U> cast() const {
        return {static_cast<U>(x), static_cast<U>(y), static_cast<U>(z)};
    }
};

} // namespace tgs
