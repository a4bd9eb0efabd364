#pragma once

#include "texelatt/features.hpp"

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace texelatt::retrieval {

enum class Metric { cosine, cityblock, euclidean };

std::string_view to_string(Metric metric);
Metric metric_from_string(std::string_view s);

/// Cosine distance is 1 - a.b / (|a||b|), defined as 1 when either side is the
/// zero vector. Throws InvalidArgument on dimension mismatch.
double distance(std::span<const double> a, std::span<const double> b, Metric metric);

struct DescriptorIndex {
    std::vector<std::string> ids;
    std::vector<std::vector<double>> vectors;  // Z-normalized
    NormalizationStats stats;
    Metric metric = Metric::cosine;

    std::size_t size() const noexcept { return ids.size(); }
};

/// Fits normalization stats over the database and stores normalized vectors.
/// Throws InsufficientData below 2 records and InvalidArgument on duplicate
/// ids or non-finite values.
DescriptorIndex build_index(const std::vector<FeatureRecord>& database, Metric metric);

struct Ranking {
    std::string query_id;
    std::vector<std::pair<std::string, double>> ordered;  // ascending distance

    /// 1-based rank of a database id; 0 when absent.
    std::size_t rank_of(std::string_view id) const;
};

/// Ranks the whole database against the raw query descriptor. Exact distance
/// ties are broken by ascending database id.
Ranking query(const DescriptorIndex& index, const FeatureRecord& raw_query);
Ranking query(const DescriptorIndex& index, const FeatureRecord& raw_query, Metric metric);

struct CmcCurve {
    std::vector<double> recognition_rate;  // entry r-1 is the rate at rank r
    double auc = 0.0;
    double auc_at_200 = 0.0;
};

inline constexpr std::size_t kTruncatedRanks = 200;

/// Throws InvalidArgument naming the query when a truth entry is missing or
/// its database id is absent from the ranking.
CmcCurve evaluate_cmc(const std::vector<Ranking>& rankings, const std::map<std::string, std::string>& truth);

/// CMC from 1-based correct-match ranks over a database of size n.
CmcCurve cmc_from_ranks(std::span<const std::size_t> ranks, std::size_t n);

struct ReportRow {
    std::string variant;
    std::string method;
    Metric metric = Metric::cosine;
    double auc = 0.0;
    double auc_at_200 = 0.0;
};

struct ExperimentResult {
    ReportRow row;
    CmcCurve curve;
};

/// Indexes the database, ranks every query and evaluates the CMC.
ExperimentResult run_experiment(const std::vector<FeatureRecord>& database, const std::vector<FeatureRecord>& queries,
                                const std::map<std::string, std::string>& truth, Metric metric,
                                std::string variant, std::string method);

/// Rows (variant, method, metric, auc, auc_at_200).
void write_report_csv(const std::vector<ReportRow>& rows, const std::filesystem::path& path);
std::vector<ReportRow> read_report_csv(const std::filesystem::path& path);

/// Rows (variant, method, rank, recognition_rate).
void write_cmc_csv(const std::vector<ExperimentResult>& results, const std::filesystem::path& path);

/// One polyline per method over the first `max_rank` ranks.
void write_cmc_svg(const std::vector<ExperimentResult>& results, const std::string& title,
                   const std::filesystem::path& path, std::size_t max_rank = kTruncatedRanks);

}  // namespace texelatt::retrieval
