#include "texelatt/color_naming.hpp"

#include "texelatt/error.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace texelatt {

namespace {

constexpr std::array<std::string_view, kColorNameCount> kNames = {
    "black", "blue", "brown", "grey", "green", "orange", "pink", "purple", "red", "white", "yellow"};

const std::array<double, 256>& linear_table() {
    static const std::array<double, 256> table = [] {
        std::array<double, 256> t{};
        for (int i = 0; i < 256; ++i) {
            const double c = i / 255.0;
            t[i] = c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
        }
        return t;
    }();
    return table;
}

inline double lab_f(double t) {
    constexpr double eps = 216.0 / 24389.0;
    constexpr double kappa = 24389.0 / 27.0;
    return t > eps ? std::cbrt(t) : (kappa * t + 16.0) / 116.0;
}

inline double dist2(const Lab& p, const Lab& q) {
    const double dl = p.l - q.l;
    const double da = p.a - q.a;
    const double db = p.b - q.b;
    return dl * dl + da * da + db * db;
}

}  // namespace

std::string_view to_string(ColorName name) { return kNames[static_cast<std::size_t>(name)]; }

Lab to_lab(Rgb c) {
    const auto& lin = linear_table();
    const double r = lin[c.r];
    const double g = lin[c.g];
    const double b = lin[c.b];
    const double x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
    const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    const double z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
    const double fx = lab_f(x);
    const double fy = lab_f(y);
    const double fz = lab_f(z);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

ColorNamer::ColorNamer(const Prototypes& prototypes) : prototypes_(prototypes) {
    for (int i = 0; i < kColorNameCount; ++i) labs_[i] = to_lab(prototypes_[i]);
}

const ColorNamer::Prototypes& ColorNamer::default_prototypes() {
    static const Prototypes table = {{
        {0, 0, 0},        // black
        {0, 0, 255},      // blue
        {150, 75, 0},     // brown
        {128, 128, 128},  // grey
        {0, 160, 0},      // green
        {255, 150, 0},    // orange
        {255, 160, 200},  // pink
        {140, 0, 170},    // purple
        {255, 0, 0},      // red
        {255, 255, 255},  // white
        {255, 255, 0},    // yellow
    }};
    return table;
}

ColorNamer ColorNamer::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open color table " + path.string());
    Prototypes protos = default_prototypes();
    std::array<bool, kColorNameCount> seen{};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string name, r, g, b;
        if (!std::getline(ss, name, ',') || !std::getline(ss, r, ',') || !std::getline(ss, g, ',') ||
            !std::getline(ss, b)) {
            throw InvalidArgument("malformed color table line: " + line);
        }
        std::size_t idx = kColorNameCount;
        for (std::size_t i = 0; i < kNames.size(); ++i)
            if (kNames[i] == name) idx = i;
        if (idx == kColorNameCount) throw InvalidArgument("unknown color name: " + name);
        auto channel = [&](const std::string& s) {
            const int v = std::stoi(s);
            if (v < 0 || v > 255) throw InvalidArgument("channel out of range in: " + line);
            return static_cast<std::uint8_t>(v);
        };
        protos[idx] = {channel(r), channel(g), channel(b)};
        seen[idx] = true;
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (!seen[i]) throw InvalidArgument("color table is missing " + std::string(kNames[i]));
    return ColorNamer(protos);
}

ColorName ColorNamer::name(Rgb c) const {
    const Lab lab = to_lab(c);
    int best = 0;
    double best_d = dist2(lab, labs_[0]);
    for (int i = 1; i < kColorNameCount; ++i) {
        const double d = dist2(lab, labs_[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return static_cast<ColorName>(best);
}

void ColorNamer::build_table() const {
    std::call_once(table_once_, [this] {
        table_.resize(std::size_t{1} << 24);
        for (int r = 0; r < 256; ++r)
            for (int g = 0; g < 256; ++g)
                for (int b = 0; b < 256; ++b) {
                    const Rgb c{static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                                static_cast<std::uint8_t>(b)};
                    table_[(static_cast<std::size_t>(r) << 16) | (static_cast<std::size_t>(g) << 8) |
                           static_cast<std::size_t>(b)] = static_cast<std::uint8_t>(name(c));
                }
    });
}

ColorName ColorNamer::name_cached(Rgb c) const {
    build_table();
    return static_cast<ColorName>(
        table_[(static_cast<std::size_t>(c.r) << 16) | (static_cast<std::size_t>(c.g) << 8) | c.b]);
}

std::vector<std::uint8_t> ColorNamer::name_image(const Image& image) const {
    build_table();
    const auto bytes = image.bytes();
    std::vector<std::uint8_t> names(image.pixel_count());
    for (std::size_t i = 0; i < names.size(); ++i) {
        names[i] = table_[(static_cast<std::size_t>(bytes[3 * i]) << 16) |
                          (static_cast<std::size_t>(bytes[3 * i + 1]) << 8) | bytes[3 * i + 2]];
    }
    return names;
}

const ColorNamer& default_color_namer() {
    static const ColorNamer namer(ColorNamer::default_prototypes());
    return namer;
}

std::array<double, kColorNameCount> name_histogram(std::span<const std::uint8_t> names) {
    std::array<double, kColorNameCount> hist{};
    if (names.empty()) return hist;
    std::array<std::size_t, kColorNameCount> counts{};
    for (auto n : names) ++counts[n];
    for (int i = 0; i < kColorNameCount; ++i)
        hist[i] = static_cast<double>(counts[i]) / static_cast<double>(names.size());
    return hist;
}

}  // namespace texelatt
