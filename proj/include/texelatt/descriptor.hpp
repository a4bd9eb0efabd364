#pragma once

#include "texelatt/color_naming.hpp"
#include "texelatt/features.hpp"
#include "texelatt/image.hpp"
#include "texelatt/texel.hpp"

#include <array>
#include <bitset>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace texelatt::descriptor {

inline constexpr std::size_t kDims = 36;
inline constexpr std::size_t kMinGroupSize = 10;
inline constexpr std::size_t kPairNeighbors = 8;
inline constexpr std::size_t kSymmetryNeighbors = 4;
inline constexpr std::size_t kSymmetryNeighbors1d = 2;
inline constexpr int kQuadratGrid = 4;
inline constexpr int kLineBins = 8;

/// Offsets of each block inside the 36-dim vector.
namespace offset {
inline constexpr std::size_t label = 0;        // 3: circle, line, polygon
inline constexpr std::size_t color = 3;        // 11 color names
inline constexpr std::size_t orientation = 14; // 3 bins over [0, 180)
inline constexpr std::size_t size = 17;
inline constexpr std::size_t density = 18;
inline constexpr std::size_t homogeneity = 19;
inline constexpr std::size_t pair_orientation = 20;  // 3 bins
inline constexpr std::size_t local_symmetry = 23;
inline constexpr std::size_t translational_symmetry = 24;
inline constexpr std::size_t background = 25;  // 11 color names
}  // namespace offset

struct IndividualAttributes {
    std::array<double, kShapeKindCount> label_hist{};
    std::array<double, kColorNameCount> color_hist{};
    std::array<double, 3> orientation_hist{};
    double mean_size = 0.0;  // mean mask area / canvas area
};

/// Scalars are empty when undefined (too few or degenerate points).
struct LayoutAttributes {
    std::optional<double> density;
    std::optional<double> homogeneity;
    std::array<double, 3> pair_orientation_hist{};
    std::optional<double> local_symmetry;
    std::optional<double> translational_symmetry;
    std::array<double, kColorNameCount> background_color_hist{};
};

struct TexelGroup {
    ShapeKind shape = ShapeKind::circle;
    std::vector<std::size_t> members;  // indices into the texel list
    std::vector<Vec2> centroids;
    std::optional<double> principal_orientation;  // degrees, line groups only

    /// Centroids projected on the unit normal of the principal orientation.
    std::vector<double> projected() const;
};

struct TextureDescriptor {
    std::array<double, kDims> values{};
    std::bitset<kDims> missing;

    static const std::array<std::string, kDims>& names();
    FeatureRecord to_record(std::string id) const;
};

/// Principal axis angle of the mask's second moments in [0, 180); 0 for
/// isotropic masks (eigenvalue ratio < 1.05) and masks under 2 pixels.
double texel_orientation(const TexelMask& mask);

IndividualAttributes individual_attributes(std::span<const DetectedTexel> texels, double canvas_area,
                                           const ColorNamer& namer = default_color_namer());

/// One group per shape label with at least kMinGroupSize members.
std::vector<TexelGroup> group_texels(std::span<const DetectedTexel> texels);

/// Throws DegenerateGeometry for line groups with zero projected extent.
double density(const TexelGroup& group, int width, int height);
double homogeneity_chi2(const TexelGroup& group, int width, int height, int grid = kQuadratGrid);
std::array<double, 3> pair_orientation_hist(const TexelGroup& group);
std::optional<double> local_reflective_symmetry(const TexelGroup& group);
std::optional<double> translational_symmetry(const TexelGroup& group);

/// Member-count weighted layout over groups plus the background color histogram
/// of pixels outside every texel mask.
LayoutAttributes aggregate_layout(std::span<const TexelGroup> groups, const Image& image,
                                  std::span<const DetectedTexel> texels,
                                  const ColorNamer& namer = default_color_namer());

TextureDescriptor assemble(const IndividualAttributes& individual, const LayoutAttributes& layout);

/// Full descriptor of one image. The background histogram is taken on the
/// illumination-flattened image so that uneven lighting does not rename it.
TextureDescriptor describe(const Image& image, std::span<const DetectedTexel> texels,
                           const ColorNamer& namer = default_color_namer());

}  // namespace texelatt::descriptor
