#include "texelatt/distortion.hpp"
#include "texelatt/error.hpp"
#include "texelatt/io.hpp"
#include "texelatt/synthesis.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

using namespace texelatt;
using namespace texelatt::distort;

namespace {

Image stripes(int side, int period) {
    Image img(side, side);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) img.set(x, y, (x / (period / 2)) % 2 ? Rgb{255, 255, 255} : Rgb{0, 0, 0});
    return img;
}

Image gradient(int side) {
    Image img(side, side);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
            img.set(x, y, {static_cast<std::uint8_t>(x * 200 / side), static_cast<std::uint8_t>(y * 200 / side), 90});
    return img;
}

/// Area average computed by integrating each source pixel's overlap with the
/// destination pixel, one channel.
std::vector<double> naive_area(const Image& img, int size, int ch) {
    const int n = img.width();
    const double scale = static_cast<double>(n) / size;
    std::vector<double> out(static_cast<std::size_t>(size) * size);
    for (int Y = 0; Y < size; ++Y)
        for (int X = 0; X < size; ++X) {
            double sum = 0;
            for (int y = static_cast<int>(Y * scale); y < std::min(n, static_cast<int>(std::ceil((Y + 1) * scale))); ++y) {
                const double wy = std::min<double>(y + 1, (Y + 1) * scale) - std::max<double>(y, Y * scale);
                if (wy <= 0) continue;
                for (int x = static_cast<int>(X * scale); x < std::min(n, static_cast<int>(std::ceil((X + 1) * scale))); ++x) {
                    const double wx = std::min<double>(x + 1, (X + 1) * scale) - std::max<double>(x, X * scale);
                    if (wx <= 0) continue;
                    const Rgb c = img.at(x, y);
                    sum += wx * wy * (ch == 0 ? c.r : ch == 1 ? c.g : c.b);
                }
            }
            out[static_cast<std::size_t>(Y) * size + X] = sum / (scale * scale);
        }
    return out;
}

/// Pixel-center bilinear sample of a small double grid, clamped at edges.
double naive_bilinear(const std::vector<double>& src, int size, double u, double v) {
    auto at = [&](int x, int y) {
        x = std::clamp(x, 0, size - 1);
        y = std::clamp(y, 0, size - 1);
        return src[static_cast<std::size_t>(y) * size + x];
    };
    const int x0 = static_cast<int>(std::floor(u)), y0 = static_cast<int>(std::floor(v));
    const double fx = u - x0, fy = v - y0;
    return (1 - fy) * ((1 - fx) * at(x0, y0) + fx * at(x0 + 1, y0)) + fy * ((1 - fx) * at(x0, y0 + 1) + fx * at(x0 + 1, y0 + 1));
}

}  // namespace

TEST(Resample, ConstantImageIsUnchanged) {
    const Image img(1024, 1024, {17, 130, 240});
    for (int r : {100, 200, 300}) EXPECT_EQ(downsample_upsample(img, r), img) << r;
}

TEST(Resample, OutputSizeEqualsInputSize) {
    const Image img = gradient(300);
    for (int r : {100, 200, 300}) {
        const Image out = downsample_upsample(img, r);
        EXPECT_EQ(out.width(), 300);
        EXPECT_EQ(out.height(), 300);
    }
    EXPECT_THROW(downsample_upsample(Image(300, 200), 100), InvalidArgument);
    EXPECT_THROW(downsample_upsample(Image(200, 200), 300), InvalidArgument);
}

TEST(Resample, AreaDownsampleMatchesNaiveIntegration) {
    const Image img = gradient(333);
    const Image small = area_downsample(img, 100);
    const auto r = naive_area(img, 100, 0), g = naive_area(img, 100, 1);
    for (int y = 0; y < 100; ++y)
        for (int x = 0; x < 100; ++x) {
            ASSERT_LE(std::abs(small.at(x, y).r - r[y * 100 + x]), 0.5 + 1e-9);
            ASSERT_LE(std::abs(small.at(x, y).g - g[y * 100 + x]), 0.5 + 1e-9);
        }
}

TEST(Resample, StripesBlurTowardTheMeanAsNaiveResampler) {
    const Image img = stripes(1024, 2);
    const Image out = downsample_upsample(img, 100);
    const auto small = naive_area(img, 100, 0);
    const double scale = 100.0 / 1024;
    double max_dev = 0;
    for (int y = 0; y < 1024; y += 5)
        for (int x = 0; x < 1024; x += 3) {
            const double want = naive_bilinear(small, 100, (x + 0.5) * scale - 0.5, (y + 0.5) * scale - 0.5);
            ASSERT_LE(std::abs(out.at(x, y).r - want), 1.0) << x << "," << y;
            max_dev = std::max(max_dev, std::abs(out.at(x, y).r - 127.5));
        }
    EXPECT_LT(max_dev, 3.0);
}

TEST(Noise, ZeroAndFullProbability) {
    const Image img = gradient(128);
    EXPECT_EQ(impulsive_noise(img, 0.0, 1), img);
    const Image all = impulsive_noise(img, 1.0, 1);
    for (int y = 0; y < 128; ++y)
        for (int x = 0; x < 128; ++x) {
            const Rgb c = all.at(x, y);
            EXPECT_TRUE(c == (Rgb{0, 0, 0}) || c == (Rgb{255, 255, 255}));
        }
}

TEST(Noise, CorruptedFractionConcentrates) {
    const Image grey(1024, 1024, {128, 128, 128});
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const Image out = impulsive_noise(grey, 0.2, seed);
        long long changed = 0;
        long long white = 0;
        for (int y = 0; y < 1024; ++y)
            for (int x = 0; x < 1024; ++x) {
                if (out.at(x, y) != grey.at(x, y)) ++changed;
                if (out.at(x, y) == (Rgb{255, 255, 255})) ++white;
            }
        const double n = 1024.0 * 1024.0;
        EXPECT_NEAR(changed / n, 0.2, 0.002);
        EXPECT_NEAR(static_cast<double>(white) / changed, 0.5, 0.01);
    }
}

TEST(Lighting, GainProfile) {
    EXPECT_DOUBLE_EQ(lighting_gain(0.0, 1024), 1.0 + kLightingAmplitude);
    const double sigma = kLightingSigmaFraction * 1024;
    EXPECT_NEAR(lighting_gain(9 * sigma * sigma, 1024) - 1.0, kLightingAmplitude * std::exp(-4.5), 1e-12);
    EXPECT_GT(lighting_gain(sigma * sigma, 1024), lighting_gain(4 * sigma * sigma, 1024));
}

TEST(Lighting, MeanBrightnessIncreasesOnNonSaturatedImages) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Image img = gradient(256);
        const Image lit = radial_lighting(img, seed);
        double before = 0, after = 0;
        for (auto b : img.bytes()) before += b;
        for (auto b : lit.bytes()) after += b;
        EXPECT_GT(after, before);
        for (std::size_t i = 0; i < img.bytes().size(); ++i) ASSERT_GE(lit.bytes()[i], img.bytes()[i]);
    }
}

TEST(Apply, IsByteReproducibleAndItemSeeded) {
    const Image img = gradient(300);
    for (const auto& spec : standard_variants(9)) {
        EXPECT_EQ(apply(img, spec, "000001"), apply(img, spec, "000001")) << spec.variant();
    }
    const auto spec = standard_variants(9)[0];
    EXPECT_NE(apply(img, spec, "000001"), apply(img, spec, "000002"));
}

TEST(Variants, SixNamedSpecs) {
    const auto v = standard_variants(1);
    ASSERT_EQ(v.size(), 6u);
    EXPECT_EQ(v[0].variant(), "r100_noise");
    EXPECT_EQ(v[5].variant(), "r300_light");
    DistortionSpec bad;
    bad.resolution = 150;
    EXPECT_THROW(validate(bad), InvalidArgument);
    bad.resolution = 100;
    bad.noise_probability = 1.5;
    EXPECT_THROW(validate(bad), InvalidArgument);
    EXPECT_EQ(effect_from_string("light"), Effect::radial_lighting);
    EXPECT_EQ(effect_from_string("impulsive_noise"), Effect::impulsive_noise);
}

TEST(QuerySet, BijectiveAndReproducible) {
    const auto root = std::filesystem::temp_directory_path() / "texelatt_query_test";
    std::filesystem::remove_all(root);
    synth::DatasetOptions options;
    options.n = 10;
    options.seed = 3;
    options.canvas_px = 320;
    options.split_ratio = 0.7;
    const auto manifest = synth::generate_dataset(options, root / "dataset");
    const auto spec = standard_variants(4)[1];
    const auto a = make_query_set(manifest, root / "dataset", spec, root / "qa");
    make_query_set(manifest, root / "dataset", spec, root / "qb");
    ASSERT_EQ(a.entries.size(), manifest.test_ids.size());
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        EXPECT_EQ(a.entries[i].database_id, manifest.test_ids[i]);
        EXPECT_EQ(a.entries[i].query_id, query_id(spec, manifest.test_ids[i]));
        EXPECT_EQ(io::read_text(root / "qa" / a.entries[i].image_path), io::read_text(root / "qb" / a.entries[i].image_path));
    }
    EXPECT_EQ(io::read_text(root / "qa" / "queries.json"), io::read_text(root / "qb" / "queries.json"));
    std::filesystem::remove_all(root);
}
