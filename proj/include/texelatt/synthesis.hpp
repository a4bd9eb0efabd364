#pragma once

#include "texelatt/geometry.hpp"
#include "texelatt/image.hpp"
#include "texelatt/texel.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace texelatt::synth {

struct Range {
    double min = 0.0;
    double max = 0.0;
    bool operator==(const Range&) const = default;
};

/// Lattice {phase + i*basis_u + j*basis_v}; a missing basis_v is a linear layout.
///
/// For line classes basis_u is the stripe-to-stripe translation, so stripes run
/// perpendicular to it.
struct LayoutSpec {
    Vec2 basis_u;
    std::optional<Vec2> basis_v;
    double jitter = 0.0;  // fraction of the shortest basis length
    Vec2 phase;
    bool operator==(const LayoutSpec&) const = default;
};

/// Size semantics: circle diameter, square side, triangle side (equilateral),
/// rectangle long side (short side = size / aspect), line stroke thickness.
struct ElementClassSpec {
    ShapeClass shape;
    Range size_px;
    Range orientation_deg;
    double aspect = 1.0;
    Rgb color;
    LayoutSpec layout;
    bool operator==(const ElementClassSpec&) const = default;
};

enum class Shading { flat, perturbed };

struct TextureSpec {
    int canvas_px = 1024;
    Rgb background_color{255, 255, 255};
    std::vector<ElementClassSpec> classes;
    Shading shading = Shading::flat;
    std::uint64_t seed = 0;
    bool operator==(const TextureSpec&) const = default;
};

struct GroundTruth {
    int canvas_px = 0;
    Rgb background_color;
    std::vector<TexelAnnotation> texels;
    std::vector<LayoutSpec> per_class_layout;
};

struct Rendered {
    Image image;
    GroundTruth ground_truth;
};

/// Throws InvalidSpec on violated invariants.
void validate_spec(const TextureSpec& spec);

/// Default palette: prototype-like colors whose names are pairwise distinct.
std::span<const Rgb> default_palette();

struct SamplerOptions {
    int canvas_px = 1024;
    double two_class_probability = 0.4;
    double perturbed_probability = 0.5;
};

/// Samples a random texture recipe; deterministic in `seed`.
TextureSpec sample_spec(std::uint64_t seed, std::span<const Rgb> palette, const SamplerOptions& options = {});

/// Rasterizes the spec and emits ground truth. Throws InfeasibleSpec when more
/// than 20% of texels collide with a texel of another class.
Rendered render(const TextureSpec& spec);

/// Lattice points of a class (before jitter) whose texels can reach the canvas.
std::vector<Vec2> lattice_points(const LayoutSpec& layout, int canvas_px, double margin);

/// Nominal (unclipped) area of a texel of the given class and size.
double nominal_area(const ElementClassSpec& cls, double size, int canvas_px);

// ---------------------------------------------------------------------------
// Datasets

struct ManifestEntry {
    std::string id;
    std::string image_path;         // relative to the manifest directory
    std::string ground_truth_path;  // relative to the manifest directory
    TextureSpec spec;
};

struct DatasetManifest {
    std::uint64_t seed = 0;
    double split_ratio = 0.9;
    int canvas_px = 1024;
    std::vector<ManifestEntry> entries;
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
};

std::string dataset_item_id(std::size_t index);

/// Deterministic train/test partition of `n` ids; train size = round(n * ratio).
void split_ids(std::size_t n, std::uint64_t seed, double split_ratio, std::vector<std::string>& train,
               std::vector<std::string>& test);

/// Samples and renders item `index` of a dataset, resampling infeasible specs.
ManifestEntry realize_item(std::uint64_t dataset_seed, std::size_t index, int canvas_px, Rendered* rendered);

struct DatasetOptions {
    std::size_t n = 300;
    std::uint64_t seed = 0;
    int canvas_px = 1024;
    double split_ratio = 0.9;
};

/// Writes images/, ground_truth/ and manifest.json under out_dir.
DatasetManifest generate_dataset(const DatasetOptions& options, const std::filesystem::path& out_dir);

}  // namespace texelatt::synth
