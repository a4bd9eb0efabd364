#pragma once

#include "texelatt/distortion.hpp"
#include "texelatt/features.hpp"
#include "texelatt/synthesis.hpp"
#include "texelatt/texel.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace texelatt::io {

std::string read_text(const std::filesystem::path& path);
/// Writes atomically through a temporary sibling file; creates parent dirs.
void write_text(const std::filesystem::path& path, const std::string& text);

// Texel annotations use {id, shape, polygon?, class, color, orientation_deg,
// centroid, bbox, mask_rle}; the mask run lengths cover the bbox.
std::string ground_truth_to_json(const synth::GroundTruth& gt);
synth::GroundTruth ground_truth_from_json(const std::string& text);
void write_ground_truth(const synth::GroundTruth& gt, const std::filesystem::path& path);
synth::GroundTruth read_ground_truth(const std::filesystem::path& path);

/// Same schema as annotations plus `confidence`; color is the mean color.
void write_detections(const std::vector<DetectedTexel>& detections, const std::filesystem::path& path);
std::vector<DetectedTexel> read_detections(const std::filesystem::path& path);

std::string spec_to_json(const synth::TextureSpec& spec);
synth::TextureSpec spec_from_json(const std::string& text);

void write_manifest(const synth::DatasetManifest& manifest, const std::filesystem::path& path);
synth::DatasetManifest read_manifest(const std::filesystem::path& path);

void write_query_manifest(const distort::QueryManifest& manifest, const std::filesystem::path& path);
distort::QueryManifest read_query_manifest(const std::filesystem::path& path);

struct DescriptorTable {
    std::vector<std::string> names;
    std::vector<FeatureRecord> records;
};

/// Headered CSV `id,<names...>`; missing entries are empty cells.
void write_descriptors_csv(const DescriptorTable& table, const std::filesystem::path& path);
DescriptorTable read_descriptors_csv(const std::filesystem::path& path);

/// Rows `name,mean,stddev,constant`.
void write_stats_csv(const NormalizationStats& stats, const std::vector<std::string>& names,
                     const std::filesystem::path& path);
NormalizationStats read_stats_csv(const std::filesystem::path& path);

}  // namespace texelatt::io
