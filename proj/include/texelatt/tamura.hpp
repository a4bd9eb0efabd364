#pragma once

#include "texelatt/features.hpp"
#include "texelatt/image.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace texelatt::tamura {

inline constexpr int kMinSide = 64;
inline constexpr int kMaxScaleExponent = 5;  // windows 2^1 .. 2^5
inline constexpr int kDirectionBins = 16;
inline constexpr double kGradientThreshold = 12.0;

struct TamuraOptions {
    /// Adds line-likeness, regularity and roughness.
    bool extended = false;
};

struct TamuraDescriptor {
    double coarseness = 0.0;
    double contrast = 0.0;
    double directionality = 0.0;
    std::optional<double> linelikeness;
    std::optional<double> regularity;
    std::optional<double> roughness;

    std::vector<double> values() const;
    FeatureRecord to_record(std::string id) const;
    static std::vector<std::string> names(bool extended);
};

/// Mean over pixels of the best window size 2^k, k = 1..5. The best k
/// maximizes the difference between adjacent windows, ties taking the larger
/// window. Pixels where every difference is zero are left out; when every
/// pixel is left out (e.g. a constant image) the result is the largest scale, 32.
double coarseness(const GrayImage& image);

/// sigma / kurtosis^(1/4); 0 on constant images.
double contrast(const GrayImage& image);

/// Gradient-orientation histogram over pixels with |grad| >= threshold.
std::array<double, kDirectionBins> direction_histogram(const GrayImage& image);

/// 1 minus the squared circular spread of the histogram around its peak,
/// scaled so a uniform histogram scores 0; 0 when no edge pixel exists.
double directionality(const std::array<double, kDirectionBins>& histogram);
double directionality(const GrayImage& image);

/// Co-occurrence of edge directions along the edge, in [-1, 1].
double linelikeness(const GrayImage& image);

/// Throws InvalidArgument for images smaller than 64x64.
TamuraDescriptor compute(const GrayImage& image, const TamuraOptions& options = {});
TamuraDescriptor compute(const Image& image, const TamuraOptions& options = {});

}  // namespace texelatt::tamura
