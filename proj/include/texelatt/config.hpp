#pragma once

#include "texelatt/detection.hpp"
#include "texelatt/distortion.hpp"
#include "texelatt/retrieval.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace texelatt::config {

struct DatasetConfig {
    std::optional<std::size_t> n;
    std::optional<std::uint64_t> seed;
    int canvas = 1024;
    double split_ratio = 0.9;
};

enum class DetectorKind { classical, oracle };

struct DetectorSection {
    DetectorKind kind = DetectorKind::classical;
    detect::DetectorConfig thresholds;
};

struct DistortionSection {
    std::optional<std::uint64_t> seed;
    std::vector<int> resolutions{100, 200, 300};
    std::vector<distort::Effect> effects{distort::Effect::impulsive_noise, distort::Effect::radial_lighting};
    double noise_probability = distort::kDefaultNoiseProbability;

    /// Cross product of effects and resolutions, effects outermost.
    std::vector<distort::DistortionSpec> specs() const;
};

enum class Method { texelatt, tamura };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

struct MethodConfig {
    Method method = Method::texelatt;
    retrieval::Metric metric = retrieval::Metric::cosine;
};

struct ExperimentConfig {
    DatasetConfig dataset;
    DetectorSection detector;
    DistortionSection distortions;
    std::vector<MethodConfig> methods;
    bool tamura_extended = false;
    std::optional<std::filesystem::path> palette_file;  // name,r,g,b prototypes
    std::filesystem::path output_dir;
};

/// Parses a YAML document with sections dataset, detector, distortions,
/// methods and keys output_dir, palette_file, tamura_extended. Missing
/// required values are left empty for validate() to report; malformed values
/// throw InvalidArgument.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Human-readable problems; empty when the config is runnable. Pure.
std::vector<std::string> validate(const ExperimentConfig& config);

/// Default desk configuration: n = 300, six variants, both methods.
ExperimentConfig desk_config(const std::filesystem::path& output_dir);

/// Canonical text of the config, used for cache keys and the run manifest.
std::string to_yaml(const ExperimentConfig& config);

}  // namespace texelatt::config
