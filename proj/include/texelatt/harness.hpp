#pragma once

#include "texelatt/color_naming.hpp"
#include "texelatt/config.hpp"
#include "texelatt/features.hpp"
#include "texelatt/image.hpp"
#include "texelatt/retrieval.hpp"
#include "texelatt/synthesis.hpp"
#include "texelatt/tamura.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace texelatt::harness {

/// Texel-Att record of an image with detections from either detector.
FeatureRecord texelatt_record(const std::string& id, const Image& image, std::span<const DetectedTexel> texels,
                              const ColorNamer& namer = default_color_namer());

FeatureRecord tamura_record(const std::string& id, const Image& image, const tamura::TamuraOptions& options = {});

std::vector<std::string> texelatt_names();

/// Hex SHA-256 of a byte string / file content.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Stage cache: a stamp per stage records the input key and the digest of
/// every output. A stage is skipped when the key matches and every output
/// still has its recorded digest.
class StageCache {
public:
    explicit StageCache(std::filesystem::path root);

    bool fresh(const std::string& stage, const std::string& key) const;
    /// Records outputs (paths relative to root) after a stage completed.
    void commit(const std::string& stage, const std::string& key, const std::vector<std::string>& outputs);
    /// Outputs recorded for a stage, relative to root.
    std::vector<std::string> outputs(const std::string& stage) const;
    /// Combined digest of a stage's recorded outputs, for downstream keys.
    std::string digest(const std::string& stage) const;

private:
    std::filesystem::path stamp_path(const std::string& stage) const;

    std::filesystem::path root_;
};

struct RunSummary {
    std::vector<retrieval::ReportRow> rows;
    std::vector<std::string> executed_stages;
    std::vector<std::string> skipped_stages;
    std::filesystem::path report_csv;
    std::filesystem::path run_manifest;
};

/// synth -> detect -> describe -> index -> distort -> retrieve -> eval.
/// Throws InvalidArgument listing validation problems and StageError naming
/// the failing stage and item.
RunSummary run(const config::ExperimentConfig& config);

}  // namespace texelatt::harness
