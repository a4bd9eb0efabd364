#include "texelatt/descriptor.hpp"

#include "texelatt/error.hpp"
#include "texelatt/illumination.hpp"
#include "texelatt/layout.hpp"

#include <cmath>
#include <numbers>

namespace texelatt::descriptor {

namespace {

constexpr double kIsotropyRatio = 1.05;

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

/// Member-count weighted mean over the groups where the attribute is defined.
template <typename Get>
std::optional<double> weighted_mean(std::span<const TexelGroup> groups, Get&& get) {
    double sum = 0.0, weight = 0.0;
    for (const auto& g : groups) {
        const std::optional<double> v = get(g);
        if (!v) continue;
        const double w = static_cast<double>(g.members.size());
        sum += w * *v;
        weight += w;
    }
    if (weight == 0.0) return std::nullopt;
    return sum / weight;
}

}  // namespace

std::vector<double> TexelGroup::projected() const {
    const double t = deg2rad(principal_orientation.value_or(0.0));
    const Vec2 normal{-std::sin(t), std::cos(t)};
    std::vector<double> out;
    out.reserve(centroids.size());
    for (const auto& c : centroids) out.push_back(c.dot(normal));
    return out;
}

const std::array<std::string, kDims>& TextureDescriptor::names() {
    static const std::array<std::string, kDims> table = [] {
        std::array<std::string, kDims> n;
        n[offset::label + 0] = "label_circle";
        n[offset::label + 1] = "label_line";
        n[offset::label + 2] = "label_polygon";
        for (int i = 0; i < kColorNameCount; ++i) {
            n[offset::color + i] = "color_" + std::string(to_string(static_cast<ColorName>(i)));
            n[offset::background + i] = "background_" + std::string(to_string(static_cast<ColorName>(i)));
        }
        const char* bins[3] = {"0_60", "60_120", "120_180"};
        for (int i = 0; i < 3; ++i) {
            n[offset::orientation + i] = std::string("orientation_") + bins[i];
            n[offset::pair_orientation + i] = std::string("pair_orientation_") + bins[i];
        }
        n[offset::size] = "mean_size";
        n[offset::density] = "density";
        n[offset::homogeneity] = "homogeneity";
        n[offset::local_symmetry] = "local_symmetry";
        n[offset::translational_symmetry] = "translational_symmetry";
        return n;
    }();
    return table;
}

FeatureRecord TextureDescriptor::to_record(std::string id) const {
    FeatureRecord r;
    r.id = std::move(id);
    r.values.assign(values.begin(), values.end());
    r.missing.resize(kDims);
    for (std::size_t i = 0; i < kDims; ++i) r.missing[i] = missing[i] ? 1 : 0;
    return r;
}

double texel_orientation(const TexelMask& mask) {
    const MaskMoments m = mask_moments(mask);
    if (m.area < 2.0 || !(m.lambda_major > 0.0)) return 0.0;
    if (m.lambda_minor > 0.0 && m.lambda_major / m.lambda_minor < kIsotropyRatio) return 0.0;
    return fold_180(rad2deg(0.5 * std::atan2(2.0 * m.mu11, m.mu20 - m.mu02)));
}

IndividualAttributes individual_attributes(std::span<const DetectedTexel> texels, double canvas_area,
                                           const ColorNamer& namer) {
    IndividualAttributes a;
    if (texels.empty()) return a;
    const double n = static_cast<double>(texels.size());
    double area_sum = 0.0;
    for (const auto& t : texels) {
        a.label_hist[static_cast<std::size_t>(t.shape)] += 1.0 / n;
        a.color_hist[static_cast<std::size_t>(namer.name(t.mean_color))] += 1.0 / n;
        a.orientation_hist[layout::orientation_bin(texel_orientation(t.mask))] += 1.0 / n;
        area_sum += static_cast<double>(t.mask.area());
    }
    a.mean_size = area_sum / n / canvas_area;
    return a;
}

std::vector<TexelGroup> group_texels(std::span<const DetectedTexel> texels) {
    std::vector<TexelGroup> groups;
    for (int k = 0; k < kShapeKindCount; ++k) {
        TexelGroup g;
        g.shape = static_cast<ShapeKind>(k);
        for (std::size_t i = 0; i < texels.size(); ++i) {
            if (texels[i].shape != g.shape) continue;
            g.members.push_back(i);
            g.centroids.push_back(texels[i].centroid);
        }
        if (g.members.size() < kMinGroupSize) continue;
        if (g.shape == ShapeKind::line) {
            double c = 0.0, s = 0.0;
            for (auto i : g.members) {
                const double a = deg2rad(2.0 * texel_orientation(texels[i].mask));
                c += std::cos(a);
                s += std::sin(a);
            }
            g.principal_orientation = fold_180(rad2deg(0.5 * std::atan2(s, c)));
        }
        groups.push_back(std::move(g));
    }
    return groups;
}

double density(const TexelGroup& group, int width, int height) {
    if (group.shape == ShapeKind::line) {
        const auto proj = group.projected();
        return layout::density_1d(proj, width);
    }
    return layout::density_2d(group.centroids.size(), width, height);
}

double homogeneity_chi2(const TexelGroup& group, int width, int height, int grid) {
    if (group.shape == ShapeKind::line) {
        const auto proj = group.projected();
        return layout::homogeneity_1d(proj, kLineBins);
    }
    return layout::homogeneity_2d(group.centroids, width, height, grid, grid);
}

std::array<double, 3> pair_orientation_hist(const TexelGroup& group) {
    return layout::pair_orientation_hist(group.centroids, kPairNeighbors);
}

std::optional<double> local_reflective_symmetry(const TexelGroup& group) {
    if (group.shape == ShapeKind::line) {
        const auto proj = group.projected();
        return layout::local_reflective_symmetry_1d(proj, kSymmetryNeighbors1d);
    }
    return layout::local_reflective_symmetry(group.centroids, kSymmetryNeighbors);
}

std::optional<double> translational_symmetry(const TexelGroup& group) {
    if (group.shape == ShapeKind::line) {
        const auto proj = group.projected();
        return layout::translational_symmetry_1d(proj, kSymmetryNeighbors1d);
    }
    return layout::translational_symmetry(group.centroids, kSymmetryNeighbors);
}

LayoutAttributes aggregate_layout(std::span<const TexelGroup> groups, const Image& image,
                                  std::span<const DetectedTexel> texels, const ColorNamer& namer) {
    LayoutAttributes out;
    const int W = image.width();
    const int H = image.height();

    if (groups.empty()) {
        out.density = out.homogeneity = out.local_symmetry = out.translational_symmetry = 0.0;
    } else {
        out.density = weighted_mean(groups, [&](const TexelGroup& g) -> std::optional<double> {
            try {
                return density(g, W, H);
            } catch (const DegenerateGeometry&) {
                return std::nullopt;
            }
        });
        out.homogeneity = weighted_mean(groups, [&](const TexelGroup& g) -> std::optional<double> {
            return homogeneity_chi2(g, W, H);
        });
        out.local_symmetry = weighted_mean(groups, [](const TexelGroup& g) { return local_reflective_symmetry(g); });
        out.translational_symmetry =
            weighted_mean(groups, [](const TexelGroup& g) { return translational_symmetry(g); });
        double total = 0.0;
        for (const auto& g : groups) {
            const auto h = pair_orientation_hist(g);
            const double w = static_cast<double>(g.members.size());
            for (int i = 0; i < 3; ++i) out.pair_orientation_hist[i] += w * h[i];
        }
        for (double v : out.pair_orientation_hist) total += v;
        if (total > 0.0)
            for (auto& v : out.pair_orientation_hist) v /= total;
    }

    std::vector<std::uint8_t> covered(image.pixel_count(), 0);
    for (const auto& t : texels) {
        t.mask.for_each_pixel([&](int x, int y) {
            if (x >= 0 && y >= 0 && x < W && y < H) covered[static_cast<std::size_t>(y) * W + x] = 1;
        });
    }
    const std::vector<std::uint8_t> names = namer.name_image(image);
    std::array<std::size_t, kColorNameCount> counts{};
    std::size_t total = 0;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (covered[i]) continue;
        ++counts[names[i]];
        ++total;
    }
    if (total > 0)
        for (int i = 0; i < kColorNameCount; ++i)
            out.background_color_hist[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
    return out;
}

TextureDescriptor assemble(const IndividualAttributes& ind, const LayoutAttributes& lay) {
    TextureDescriptor d;
    auto put = [&](std::size_t at, std::span<const double> block) {
        for (std::size_t i = 0; i < block.size(); ++i) d.values[at + i] = block[i];
    };
    auto put_scalar = [&](std::size_t at, const std::optional<double>& v) {
        if (v && std::isfinite(*v)) {
            d.values[at] = *v;
        } else {
            d.values[at] = 0.0;
            d.missing.set(at);
        }
    };
    put(offset::label, ind.label_hist);
    put(offset::color, ind.color_hist);
    put(offset::orientation, ind.orientation_hist);
    d.values[offset::size] = ind.mean_size;
    put_scalar(offset::density, lay.density);
    put_scalar(offset::homogeneity, lay.homogeneity);
    put(offset::pair_orientation, lay.pair_orientation_hist);
    put_scalar(offset::local_symmetry, lay.local_symmetry);
    put_scalar(offset::translational_symmetry, lay.translational_symmetry);
    put(offset::background, lay.background_color_hist);
    return d;
}

TextureDescriptor describe(const Image& image, std::span<const DetectedTexel> texels, const ColorNamer& namer) {
    const double canvas_area = static_cast<double>(image.width()) * image.height();
    const auto individual = individual_attributes(texels, canvas_area, namer);
    const auto groups = group_texels(texels);
    const auto layout = aggregate_layout(groups, flatten_illumination(image, namer), texels, namer);
    return assemble(individual, layout);
}

}  // namespace texelatt::descriptor
