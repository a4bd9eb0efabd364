#pragma once

#include "texelatt/image.hpp"
#include "texelatt/synthesis.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace texelatt::distort {

enum class Effect { impulsive_noise, radial_lighting };

std::string_view to_string(Effect effect);
/// Accepts "noise"/"impulsive_noise" and "light"/"radial_lighting".
Effect effect_from_string(std::string_view s);

inline constexpr double kDefaultNoiseProbability = 0.2;
inline constexpr double kLightingAmplitude = 0.8;
inline constexpr double kLightingSigmaFraction = 0.35;

struct DistortionSpec {
    int resolution = 100;  // one of 100, 200, 300
    Effect effect = Effect::impulsive_noise;
    double noise_probability = kDefaultNoiseProbability;
    std::uint64_t seed = 0;

    /// Short variant name such as "r100_noise".
    std::string variant() const;
    bool operator==(const DistortionSpec&) const = default;
};

/// The six query-set variants: {100, 200, 300} x {noise, light}.
std::vector<DistortionSpec> standard_variants(std::uint64_t seed);

/// Throws InvalidArgument on unsupported resolutions or probabilities.
void validate(const DistortionSpec& spec);

/// Area-average down-sampling to resolution^2 then bilinear up-sampling back.
/// Throws InvalidArgument for non-square inputs or resolution > input side.
Image downsample_upsample(const Image& image, int resolution);

/// Area-average resampling of an arbitrary image to size x size.
Image area_downsample(const Image& image, int size);

/// Bilinear resampling with pixel-center alignment.
Image bilinear_resize(const Image& image, int width, int height);

/// Salt-and-pepper noise: each pixel with probability p becomes black or white.
Image impulsive_noise(const Image& image, double p, std::uint64_t seed);

/// Gaussian brightness gain 1 + A exp(-d^2 / 2 sigma^2) around a random center.
Image radial_lighting(const Image& image, std::uint64_t seed);

/// Gain of radial_lighting at squared distance d2 from the center.
double lighting_gain(double d2, int canvas_px);

/// Resample then apply the effect, seeded per item from spec.seed and item_id.
Image apply(const Image& image, const DistortionSpec& spec, std::string_view item_id);

struct QueryEntry {
    std::string query_id;
    std::string image_path;  // relative to the query manifest directory
    std::string database_id;
};

struct QueryManifest {
    DistortionSpec spec;
    std::vector<QueryEntry> entries;
};

std::string query_id(const DistortionSpec& spec, std::string_view database_id);

/// Distorts every test-split image of the dataset under manifest_dir, writing
/// images/ and queries.json under out_dir.
QueryManifest make_query_set(const synth::DatasetManifest& manifest, const std::filesystem::path& manifest_dir,
                             const DistortionSpec& spec, const std::filesystem::path& out_dir);

}  // namespace texelatt::distort
