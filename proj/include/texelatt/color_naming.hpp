#pragma once

#include "texelatt/image.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string_view>
#include <vector>

namespace texelatt {

inline constexpr int kColorNameCount = 11;

/// The eleven basic color terms; the enumerator order is the histogram order.
enum class ColorName : std::uint8_t {
    black, blue, brown, grey, green, orange, pink, purple, red, white, yellow
};

std::string_view to_string(ColorName name);

struct Lab {
    double l = 0.0;
    double a = 0.0;
    double b = 0.0;
};

/// sRGB (D65) to CIE L*a*b*.
Lab to_lab(Rgb c);

/// Nearest-prototype color namer in CIE L*a*b*. Ties go to the lowest index.
///
/// Whole-image naming goes through a lazily built 2^24 entry lookup table
/// that is filled from `name()`, so both paths always agree.
class ColorNamer {
public:
    using Prototypes = std::array<Rgb, kColorNameCount>;

    explicit ColorNamer(const Prototypes& prototypes);

    static const Prototypes& default_prototypes();

    /// Reads `name,r,g,b` lines (one per color term, any order, `#` comments).
    static ColorNamer from_file(const std::filesystem::path& path);

    ColorName name(Rgb c) const;
    ColorName name_cached(Rgb c) const;

    /// Names every pixel of the image.
    std::vector<std::uint8_t> name_image(const Image& image) const;

    const Prototypes& prototypes() const noexcept { return prototypes_; }

private:
    void build_table() const;

    Prototypes prototypes_;
    std::array<Lab, kColorNameCount> labs_;
    mutable std::once_flag table_once_;
    mutable std::vector<std::uint8_t> table_;
};

const ColorNamer& default_color_namer();

inline ColorName name_color(Rgb c) { return default_color_namer().name(c); }

/// Normalized histogram of color names over the given pixel name indices.
std::array<double, kColorNameCount> name_histogram(std::span<const std::uint8_t> names);

}  // namespace texelatt
