#include "texelatt/image.hpp"

#include "texelatt/error.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cstring>

namespace texelatt {

Image::Image(int width, int height, Rgb fill) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw InvalidArgument("image dimensions must be non-negative");
    data_.resize(pixel_count() * 3);
    for (std::size_t i = 0; i < pixel_count(); ++i) {
        data_[3 * i] = fill.r;
        data_[3 * i + 1] = fill.g;
        data_[3 * i + 2] = fill.b;
    }
}

GrayImage to_gray(const Image& image) {
    GrayImage gray{image.width(), image.height(), {}};
    gray.values.resize(image.pixel_count());
    const auto bytes = image.bytes();
    for (std::size_t i = 0; i < gray.values.size(); ++i) {
        gray.values[i] = 0.299 * bytes[3 * i] + 0.587 * bytes[3 * i + 1] + 0.114 * bytes[3 * i + 2];
    }
    return gray;
}

namespace {

// Median of nine via the classic 19-exchange network.
inline std::uint8_t median9(std::array<std::uint8_t, 9>& p) {
    auto s = [&](int a, int b) {
        if (p[a] > p[b]) std::swap(p[a], p[b]);
    };
    s(1, 2); s(4, 5); s(7, 8); s(0, 1); s(3, 4); s(6, 7);
    s(1, 2); s(4, 5); s(7, 8); s(0, 3); s(5, 8); s(4, 7);
    s(3, 6); s(1, 4); s(2, 5); s(4, 7); s(4, 2); s(6, 4);
    s(4, 2);
    return p[4];
}

}  // namespace

Image median3x3(const Image& image) {
    const int w = image.width();
    const int h = image.height();
    Image out(w, h);
    const auto src = image.bytes();
    auto dst = out.bytes();
    std::array<std::uint8_t, 9> window{};
    for (int y = 0; y < h; ++y) {
        const int ys[3] = {std::max(0, y - 1), y, std::min(h - 1, y + 1)};
        for (int x = 0; x < w; ++x) {
            const int xs[3] = {std::max(0, x - 1), x, std::min(w - 1, x + 1)};
            for (int c = 0; c < 3; ++c) {
                int k = 0;
                for (int yy : ys) {
                    const std::size_t row = static_cast<std::size_t>(yy) * static_cast<std::size_t>(w);
                    for (int xx : xs) window[k++] = src[(row + static_cast<std::size_t>(xx)) * 3 + c];
                }
                dst[(static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)) * 3 + c] =
                    median9(window);
            }
        }
    }
    return out;
}

Image read_png(const std::filesystem::path& path) {
    png_image png;
    std::memset(&png, 0, sizeof png);
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.c_str())) {
        throw IoError("cannot read PNG " + path.string() + ": " + png.message);
    }
    png.format = PNG_FORMAT_RGB;
    Image image(static_cast<int>(png.width), static_cast<int>(png.height));
    if (!png_image_finish_read(&png, nullptr, image.bytes().data(), 0, nullptr)) {
        png_image_free(&png);
        throw IoError("cannot decode PNG " + path.string() + ": " + png.message);
    }
    return image;
}

void write_png(const Image& image, const std::filesystem::path& path) {
    png_image png;
    std::memset(&png, 0, sizeof png);
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width());
    png.height = static_cast<png_uint_32>(image.height());
    png.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&png, path.c_str(), 0, image.bytes().data(), 0, nullptr)) {
        throw IoError("cannot write PNG " + path.string() + ": " + png.message);
    }
}

}  // namespace texelatt
