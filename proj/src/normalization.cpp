#include "texelatt/error.hpp"
#include "texelatt/features.hpp"

#include <algorithm>
#include <cmath>

namespace texelatt {

NormalizationStats znormalize_fit(const std::vector<FeatureRecord>& records) {
    if (records.size() < 2) throw InsufficientData("normalization needs at least 2 descriptors");
    const std::size_t d = records.front().dim();
    for (const auto& r : records)
        if (r.dim() != d) throw InvalidArgument("descriptor dimensions differ within the database");

    NormalizationStats stats;
    stats.mean.assign(d, 0.0);
    stats.stddev.assign(d, 0.0);
    stats.constant.assign(d, 0);
    const double n = static_cast<double>(records.size());
    for (std::size_t k = 0; k < d; ++k) {
        double sum = 0.0;
        std::size_t present = 0;
        for (const auto& r : records) {
            if (r.is_missing(k)) continue;
            sum += r.values[k];
            ++present;
        }
        const double mean = present > 0 ? sum / static_cast<double>(present) : 0.0;
        double ss = 0.0;
        for (const auto& r : records) {
            if (r.is_missing(k)) continue;
            ss += (r.values[k] - mean) * (r.values[k] - mean);
        }
        stats.mean[k] = mean;
        stats.stddev[k] = std::sqrt(ss / n);
        stats.constant[k] = stats.stddev[k] <= 1e-12 * std::max(1.0, std::abs(mean)) ? 1 : 0;
    }
    return stats;
}

std::vector<double> znormalize_apply(const FeatureRecord& record, const NormalizationStats& stats) {
    if (record.dim() != stats.dim())
        throw InvalidArgument("descriptor has dimension " + std::to_string(record.dim()) + ", expected " +
                              std::to_string(stats.dim()));
    std::vector<double> out(record.dim(), 0.0);
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (stats.constant[k] || record.is_missing(k)) continue;
        out[k] = (record.values[k] - stats.mean[k]) / stats.stddev[k];
    }
    return out;
}

}  // namespace texelatt
