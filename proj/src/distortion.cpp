#include "texelatt/distortion.hpp"

#include "texelatt/error.hpp"
#include "texelatt/io.hpp"
#include "texelatt/parallel.hpp"
#include "texelatt/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace texelatt::distort {

namespace {

std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

struct Tap {
    int index;
    double weight;
};

/// Exact fractional-coverage weights of `in` source cells per output cell.
std::vector<std::vector<Tap>> area_taps(int in, int out) {
    std::vector<std::vector<Tap>> taps(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
        const double lo = o * scale;
        const double hi = (o + 1) * scale;
        for (int i = static_cast<int>(std::floor(lo)); i < in && i < hi; ++i) {
            const double cover = std::min(hi, i + 1.0) - std::max(lo, static_cast<double>(i));
            if (cover > 0.0) taps[o].push_back({i, cover / scale});
        }
    }
    return taps;
}

/// Two-tap bilinear weights for pixel-center aligned resizing.
std::vector<std::array<Tap, 2>> linear_taps(int in, int out) {
    std::vector<std::array<Tap, 2>> taps(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
        const double s = std::clamp((o + 0.5) * scale - 0.5, 0.0, static_cast<double>(in - 1));
        const int i0 = static_cast<int>(std::floor(s));
        const int i1 = std::min(i0 + 1, in - 1);
        const double f = s - i0;
        taps[o] = {Tap{i0, 1.0 - f}, Tap{i1, f}};
    }
    return taps;
}

}  // namespace

std::string_view to_string(Effect effect) {
    return effect == Effect::impulsive_noise ? "noise" : "light";
}

Effect effect_from_string(std::string_view s) {
    if (s == "noise" || s == "impulsive_noise") return Effect::impulsive_noise;
    if (s == "light" || s == "radial_lighting") return Effect::radial_lighting;
    throw InvalidArgument("unknown distortion effect '" + std::string(s) + "'");
}

std::string DistortionSpec::variant() const {
    return "r" + std::to_string(resolution) + "_" + std::string(to_string(effect));
}

std::vector<DistortionSpec> standard_variants(std::uint64_t seed) {
    std::vector<DistortionSpec> out;
    for (Effect e : {Effect::impulsive_noise, Effect::radial_lighting})
        for (int r : {100, 200, 300}) out.push_back({r, e, kDefaultNoiseProbability, seed});
    return out;
}

void validate(const DistortionSpec& spec) {
    if (spec.resolution != 100 && spec.resolution != 200 && spec.resolution != 300)
        throw InvalidArgument("resolution must be 100, 200 or 300, got " + std::to_string(spec.resolution));
    if (!(spec.noise_probability >= 0.0 && spec.noise_probability <= 1.0))
        throw InvalidArgument("noise probability must lie in [0, 1]");
}

Image area_downsample(const Image& image, int size) {
    if (size <= 0 || size > image.width() || size > image.height())
        throw InvalidArgument("down-sampling target " + std::to_string(size) + " exceeds the input size");
    const int W = image.width();
    const auto tx = area_taps(W, size);
    const auto ty = area_taps(image.height(), size);
    std::vector<double> rows(static_cast<std::size_t>(image.height()) * size * 3, 0.0);
    const auto src = image.bytes();
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < size; ++x)
            for (const Tap& t : tx[x])
                for (int c = 0; c < 3; ++c)
                    rows[(static_cast<std::size_t>(y) * size + x) * 3 + c] +=
                        t.weight * src[(static_cast<std::size_t>(y) * W + t.index) * 3 + c];
    Image out(size, size);
    auto dst = out.bytes();
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            for (int c = 0; c < 3; ++c) {
                double v = 0.0;
                for (const Tap& t : ty[y]) v += t.weight * rows[(static_cast<std::size_t>(t.index) * size + x) * 3 + c];
                dst[(static_cast<std::size_t>(y) * size + x) * 3 + c] = to_byte(v);
            }
    return out;
}

Image bilinear_resize(const Image& image, int width, int height) {
    if (image.empty() || width <= 0 || height <= 0) throw InvalidArgument("bilinear resize needs non-empty sizes");
    const int W = image.width();
    const auto tx = linear_taps(W, width);
    const auto ty = linear_taps(image.height(), height);
    const auto src = image.bytes();
    Image out(width, height);
    auto dst = out.bytes();
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < 3; ++c) {
                double v = 0.0;
                for (const Tap& a : ty[y])
                    for (const Tap& b : tx[x])
                        v += a.weight * b.weight * src[(static_cast<std::size_t>(a.index) * W + b.index) * 3 + c];
                dst[(static_cast<std::size_t>(y) * width + x) * 3 + c] = to_byte(v);
            }
    return out;
}

Image downsample_upsample(const Image& image, int resolution) {
    if (image.width() != image.height()) throw InvalidArgument("down/up-sampling needs a square image");
    if (resolution <= 0 || resolution > image.width())
        throw InvalidArgument("resolution " + std::to_string(resolution) + " is larger than the input side " +
                              std::to_string(image.width()));
    return bilinear_resize(area_downsample(image, resolution), image.width(), image.height());
}

Image impulsive_noise(const Image& image, double p, std::uint64_t seed) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("noise probability must lie in [0, 1]");
    Image out = image;
    Rng rng(seed);
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x) {
            const bool hit = rng.uniform() < p;
            const bool white = (rng.next() >> 63) != 0;
            if (hit) out.set(x, y, white ? Rgb{255, 255, 255} : Rgb{0, 0, 0});
        }
    return out;
}

double lighting_gain(double d2, int canvas_px) {
    const double sigma = kLightingSigmaFraction * canvas_px;
    return 1.0 + kLightingAmplitude * std::exp(-d2 / (2.0 * sigma * sigma));
}

Image radial_lighting(const Image& image, std::uint64_t seed) {
    Rng rng(seed);
    const double cx = rng.uniform(0.0, image.width());
    const double cy = rng.uniform(0.0, image.height());
    const int canvas = std::max(image.width(), image.height());
    Image out = image;
    auto px = out.bytes();
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x) {
            const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
            const double g = lighting_gain(dx * dx + dy * dy, canvas);
            for (int c = 0; c < 3; ++c) {
                auto& v = px[(static_cast<std::size_t>(y) * out.width() + x) * 3 + c];
                v = to_byte(v * g);
            }
        }
    return out;
}

Image apply(const Image& image, const DistortionSpec& spec, std::string_view item_id) {
    validate(spec);
    const std::uint64_t seed = derive_seed(derive_seed(spec.seed, spec.variant()), item_id);
    const Image resampled = downsample_upsample(image, spec.resolution);
    if (spec.effect == Effect::impulsive_noise) return impulsive_noise(resampled, spec.noise_probability, seed);
    return radial_lighting(resampled, seed);
}

std::string query_id(const DistortionSpec& spec, std::string_view database_id) {
    return spec.variant() + "_" + std::string(database_id);
}

QueryManifest make_query_set(const synth::DatasetManifest& manifest, const std::filesystem::path& manifest_dir,
                             const DistortionSpec& spec, const std::filesystem::path& out_dir) {
    validate(spec);
    std::error_code ec;
    std::filesystem::create_directories(out_dir / "images", ec);
    if (ec) throw IoError("cannot create query directory " + out_dir.string());

    QueryManifest qm;
    qm.spec = spec;
    std::vector<const synth::ManifestEntry*> items;
    for (const auto& id : manifest.test_ids) {
        const auto it = std::find_if(manifest.entries.begin(), manifest.entries.end(),
                                     [&](const synth::ManifestEntry& e) { return e.id == id; });
        if (it == manifest.entries.end()) throw InvalidArgument("test id " + id + " is not in the manifest");
        items.push_back(&*it);
        const std::string qid = query_id(spec, id);
        qm.entries.push_back({qid, "images/" + qid + ".png", id});
    }
    parallel_for(items.size(), [&](std::size_t i) {
        const Image clean = read_png(manifest_dir / items[i]->image_path);
        write_png(apply(clean, spec, items[i]->id), out_dir / qm.entries[i].image_path);
    });
    io::write_query_manifest(qm, out_dir / "queries.json");
    return qm;
}

}  // namespace texelatt::distort
