#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace texelatt {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
    constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    constexpr bool operator==(const Vec2&) const = default;

    constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
    constexpr double cross(Vec2 o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    constexpr double norm2() const { return x * x + y * y; }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

/// Unit vector at `deg` degrees in image coordinates (x right, y down).
inline Vec2 direction_deg(double deg) {
    const double r = deg * std::numbers::pi / 180.0;
    return {std::cos(r), std::sin(r)};
}

/// Folds an angle in degrees into [0, 180).
inline double fold_180(double deg) {
    double a = std::fmod(deg, 180.0);
    if (a < 0.0) a += 180.0;
    if (a >= 180.0) a -= 180.0;
    return a;
}

/// Integer pixel box: covers columns [x, x+w) and rows [y, y+h).
struct BBox {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    constexpr bool empty() const { return w <= 0 || h <= 0; }
    constexpr long long area() const { return empty() ? 0 : static_cast<long long>(w) * h; }
    constexpr bool operator==(const BBox&) const = default;

    constexpr bool contains(Vec2 p) const {
        return p.x >= x && p.x <= x + w && p.y >= y && p.y <= y + h;
    }
};

inline BBox intersect(const BBox& a, const BBox& b) {
    const int x0 = std::max(a.x, b.x);
    const int y0 = std::max(a.y, b.y);
    const int x1 = std::min(a.x + a.w, b.x + b.w);
    const int y1 = std::min(a.y + a.h, b.y + b.h);
    return {x0, y0, std::max(0, x1 - x0), std::max(0, y1 - y0)};
}

inline double iou(const BBox& a, const BBox& b) {
    const long long inter = intersect(a, b).area();
    const long long uni = a.area() + b.area() - inter;
    return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

}  // namespace texelatt
