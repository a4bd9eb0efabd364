#include "texelatt/texel.hpp"

#include "texelatt/error.hpp"

#include <cmath>
#include <string>

namespace texelatt {

std::string_view to_string(ShapeKind kind) {
    switch (kind) {
        case ShapeKind::circle: return "circle";
        case ShapeKind::line: return "line";
        case ShapeKind::polygon: return "polygon";
    }
    return "?";
}

std::string_view to_string(PolygonKind kind) {
    switch (kind) {
        case PolygonKind::square: return "square";
        case PolygonKind::triangle: return "triangle";
        case PolygonKind::rectangle: return "rectangle";
    }
    return "?";
}

ShapeKind shape_kind_from_string(std::string_view s) {
    if (s == "circle") return ShapeKind::circle;
    if (s == "line") return ShapeKind::line;
    if (s == "polygon") return ShapeKind::polygon;
    throw InvalidArgument("unknown shape kind: " + std::string(s));
}

PolygonKind polygon_kind_from_string(std::string_view s) {
    if (s == "square") return PolygonKind::square;
    if (s == "triangle") return PolygonKind::triangle;
    if (s == "rectangle") return PolygonKind::rectangle;
    throw InvalidArgument("unknown polygon kind: " + std::string(s));
}

long long TexelMask::area() const {
    long long n = 0;
    for (auto b : bits_) n += b;
    return n;
}

Vec2 TexelMask::centroid() const {
    double sx = 0.0, sy = 0.0;
    long long n = 0;
    for_each_pixel([&](int x, int y) {
        sx += x + 0.5;
        sy += y + 0.5;
        ++n;
    });
    if (n == 0) return {box_.x + box_.w * 0.5, box_.y + box_.h * 0.5};
    return {sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

TexelMask TexelMask::cropped() const {
    int x0 = box_.x + box_.w, y0 = box_.y + box_.h, x1 = box_.x - 1, y1 = box_.y - 1;
    for_each_pixel([&](int x, int y) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
    });
    if (x1 < x0) return TexelMask(BBox{box_.x, box_.y, 0, 0});
    TexelMask out(BBox{x0, y0, x1 - x0 + 1, y1 - y0 + 1});
    for_each_pixel([&](int x, int y) { out.set(x, y); });
    return out;
}

std::vector<std::uint32_t> TexelMask::to_rle() const {
    std::vector<std::uint32_t> runs;
    std::uint8_t current = 0;
    std::uint32_t length = 0;
    for (auto b : bits_) {
        if (b != current) {
            runs.push_back(length);
            current = b;
            length = 0;
        }
        ++length;
    }
    runs.push_back(length);
    return runs;
}

TexelMask TexelMask::from_rle(BBox box, const std::vector<std::uint32_t>& runs) {
    TexelMask mask(box);
    std::size_t pos = 0;
    std::uint8_t value = 0;
    for (auto run : runs) {
        if (pos + run > mask.bits_.size()) throw InvalidArgument("mask RLE overruns its bounding box");
        for (std::uint32_t i = 0; i < run; ++i) mask.bits_[pos++] = value;
        value ^= 1;
    }
    if (pos != mask.bits_.size()) throw InvalidArgument("mask RLE does not cover its bounding box");
    return mask;
}

MaskMoments mask_moments(const TexelMask& mask) {
    MaskMoments m;
    double sx = 0.0, sy = 0.0;
    mask.for_each_pixel([&](int x, int y) {
        sx += x + 0.5;
        sy += y + 0.5;
        m.area += 1.0;
    });
    if (m.area == 0.0) return m;
    m.centroid = {sx / m.area, sy / m.area};
    mask.for_each_pixel([&](int x, int y) {
        const double dx = x + 0.5 - m.centroid.x;
        const double dy = y + 0.5 - m.centroid.y;
        m.mu20 += dx * dx;
        m.mu02 += dy * dy;
        m.mu11 += dx * dy;
    });
    m.mu20 /= m.area;
    m.mu02 /= m.area;
    m.mu11 /= m.area;
    const double mean = 0.5 * (m.mu20 + m.mu02);
    const double diff = std::sqrt(0.25 * (m.mu20 - m.mu02) * (m.mu20 - m.mu02) + m.mu11 * m.mu11);
    m.lambda_major = mean + diff;
    m.lambda_minor = std::max(0.0, mean - diff);
    return m;
}

}  // namespace texelatt
