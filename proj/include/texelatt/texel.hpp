#pragma once

#include "texelatt/geometry.hpp"
#include "texelatt/image.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace texelatt {

/// Shape labels; enumerator order is the label-histogram order.
enum class ShapeKind : std::uint8_t { circle, line, polygon };
inline constexpr int kShapeKindCount = 3;

enum class PolygonKind : std::uint8_t { square, triangle, rectangle };

std::string_view to_string(ShapeKind kind);
std::string_view to_string(PolygonKind kind);
ShapeKind shape_kind_from_string(std::string_view s);
PolygonKind polygon_kind_from_string(std::string_view s);

/// Shape class of a texel. `polygon` is set iff `kind == ShapeKind::polygon`.
struct ShapeClass {
    ShapeKind kind = ShapeKind::circle;
    std::optional<PolygonKind> polygon;

    bool valid() const { return (kind == ShapeKind::polygon) == polygon.has_value(); }
    bool operator==(const ShapeClass&) const = default;
};

/// Binary pixel mask stored over a bounding box.
class TexelMask {
public:
    TexelMask() = default;
    explicit TexelMask(BBox box) : box_(box), bits_(static_cast<std::size_t>(box.area()), 0) {}

    const BBox& box() const noexcept { return box_; }

    bool test(int x, int y) const {
        if (x < box_.x || y < box_.y || x >= box_.x + box_.w || y >= box_.y + box_.h) return false;
        return bits_[offset(x, y)] != 0;
    }
    void set(int x, int y, bool on = true) { bits_[offset(x, y)] = on ? 1 : 0; }

    long long area() const;
    bool empty() const { return area() == 0; }

    /// Mean of pixel centers (x + 0.5, y + 0.5).
    Vec2 centroid() const;

    /// Shrinks the box to the set pixels.
    TexelMask cropped() const;

    /// Run lengths over the box in row-major order, alternating off/on and
    /// starting with an (possibly empty) off run.
    std::vector<std::uint32_t> to_rle() const;
    static TexelMask from_rle(BBox box, const std::vector<std::uint32_t>& runs);

    template <typename F>
    void for_each_pixel(F&& f) const {
        for (int y = 0; y < box_.h; ++y)
            for (int x = 0; x < box_.w; ++x)
                if (bits_[static_cast<std::size_t>(y) * static_cast<std::size_t>(box_.w) + static_cast<std::size_t>(x)])
                    f(box_.x + x, box_.y + y);
    }

    bool operator==(const TexelMask&) const = default;

private:
    std::size_t offset(int x, int y) const {
        return static_cast<std::size_t>(y - box_.y) * static_cast<std::size_t>(box_.w) +
               static_cast<std::size_t>(x - box_.x);
    }

    BBox box_;
    std::vector<std::uint8_t> bits_;
};

/// Second-order central moments of a mask.
struct MaskMoments {
    double area = 0.0;
    Vec2 centroid;
    double mu20 = 0.0;  // variance along x
    double mu02 = 0.0;  // variance along y
    double mu11 = 0.0;
    double lambda_major = 0.0;
    double lambda_minor = 0.0;
};

MaskMoments mask_moments(const TexelMask& mask);

/// Ground-truth texel emitted by the renderer.
struct TexelAnnotation {
    int id = 0;
    ShapeClass shape;
    int class_index = 0;
    Vec2 centroid;
    BBox bbox;
    TexelMask mask;
    Rgb color;
    double orientation_deg = 0.0;
};

/// Texel produced by a detector.
struct DetectedTexel {
    ShapeKind shape = ShapeKind::circle;
    Vec2 centroid;
    BBox bbox;
    TexelMask mask;
    Rgb mean_color;
    double confidence = 1.0;
};

}  // namespace texelatt
