#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace texelatt {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    constexpr bool operator==(const Rgb&) const = default;
};

/// Interleaved 8-bit RGB image, row-major.
class Image {
public:
    Image() = default;
    Image(int width, int height, Rgb fill = {});

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return width_ == 0 || height_ == 0; }
    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }

    Rgb at(int x, int y) const {
        const std::uint8_t* p = &data_[index(x, y)];
        return {p[0], p[1], p[2]};
    }
    void set(int x, int y, Rgb c) {
        std::uint8_t* p = &data_[index(x, y)];
        p[0] = c.r;
        p[1] = c.g;
        p[2] = c.b;
    }

    std::span<std::uint8_t> bytes() noexcept { return data_; }
    std::span<const std::uint8_t> bytes() const noexcept { return data_; }

    bool operator==(const Image&) const = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                static_cast<std::size_t>(x)) * 3;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Single-channel floating point image, row-major.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    double at(int x, int y) const {
        return values[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(x)];
    }
};

/// Rec. 601 luma in [0, 255].
GrayImage to_gray(const Image& image);

/// 3x3 per-channel median; border pixels use the clamped neighborhood.
Image median3x3(const Image& image);

Image read_png(const std::filesystem::path& path);
void write_png(const Image& image, const std::filesystem::path& path);

}  // namespace texelatt
