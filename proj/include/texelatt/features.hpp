#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace texelatt {

/// A named, fixed-length feature vector as stored in descriptor files.
/// Missing entries (undefined attributes) hold 0 in `values`.
struct FeatureRecord {
    std::string id;
    std::vector<double> values;
    std::vector<std::uint8_t> missing;

    std::size_t dim() const noexcept { return values.size(); }
    bool is_missing(std::size_t i) const { return !missing.empty() && missing[i] != 0; }
};

/// Per-dimension database statistics for Z-normalization.
struct NormalizationStats {
    std::vector<double> mean;
    std::vector<double> stddev;
    std::vector<std::uint8_t> constant;

    std::size_t dim() const noexcept { return mean.size(); }
};

/// Fits mean/stddev per dimension. Missing entries are imputed with the mean
/// of the present ones before the (population) stddev is taken. Needs >= 2.
NormalizationStats znormalize_fit(const std::vector<FeatureRecord>& records);

/// (x - mean) / stddev; missing entries and constant dimensions map to 0.
std::vector<double> znormalize_apply(const FeatureRecord& record, const NormalizationStats& stats);

}  // namespace texelatt
