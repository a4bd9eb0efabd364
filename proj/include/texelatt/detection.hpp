#pragma once

#include "texelatt/color_naming.hpp"
#include "texelatt/image.hpp"
#include "texelatt/synthesis.hpp"
#include "texelatt/texel.hpp"

#include <span>
#include <vector>

namespace texelatt::detect {

/// Thresholds of the classical detector.
struct DetectorConfig {
    double circularity_threshold = 0.85;
    double elongation_threshold = 8.0;
    long long min_component_px = 9;
    // Components covering more than this fraction of the image are not texels.
    double max_component_fraction = 0.05;
    // Border-clipped components smaller than this fraction of a typical
    // same-color texel are dropped.
    double border_keep_fraction = 0.5;
    // A 3x3 median runs first when more than impulse_threshold of the pixels
    // are isolated black or white impulses. The median rounds the corners of
    // small polygons, so clean images skip it.
    bool median_prefilter = true;
    double impulse_threshold = 0.002;
    // Divide out a smooth gain field estimated from the background before
    // naming colors.
    bool flatten_illumination = true;
};

/// Fraction of interior pixels that are pure black or white and differ by
/// more than 64 in some channel from each of their 4 neighbours.
double impulse_fraction(const Image& image);

struct ShapeMeasures {
    double area = 0.0;
    double perimeter = 0.0;
    double circularity = 0.0;  // 4*pi*A / P^2
    double elongation = 0.0;   // major / minor principal axis length
    double orientation_deg = 0.0;
};

/// Length of the marching-squares contour of the mask, holes included.
double contour_perimeter(const TexelMask& mask);

ShapeMeasures measure_shape(const TexelMask& mask);

ShapeKind classify_shape(const ShapeMeasures& m, bool spans_opposite_borders, const DetectorConfig& config = {});

/// Classical texel detector: background by dominant color name, foreground
/// components per color name, then geometric shape rules. Deterministic.
std::vector<DetectedTexel> detect(const Image& image, const DetectorConfig& config = {},
                                  const ColorNamer& namer = default_color_namer());

/// Converts ground-truth annotations into detections with confidence 1.
std::vector<DetectedTexel> detect_oracle(const synth::GroundTruth& ground_truth);

struct Match {
    int detection = 0;
    int ground_truth = 0;
    double iou = 0.0;
};

struct DetectionReport {
    int true_positives = 0;
    int false_positives = 0;
    int false_negatives = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::vector<Match> matches;
};

/// Greedy matching in descending box IoU; a pair matches iff IoU >= threshold
/// and the shape labels agree.
DetectionReport evaluate_detection(std::span<const DetectedTexel> detections,
                                   std::span<const TexelAnnotation> ground_truth, double iou_threshold = 0.5);

}  // namespace texelatt::detect
