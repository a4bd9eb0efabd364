#include "texelatt/retrieval.hpp"

#include "texelatt/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace texelatt::retrieval {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << std::setprecision(17);
    return out;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

std::string_view to_string(Metric metric) {
    switch (metric) {
        case Metric::cosine: return "cosine";
        case Metric::cityblock: return "cityblock";
        case Metric::euclidean: return "euclidean";
    }
    return "cosine";
}

Metric metric_from_string(std::string_view s) {
    if (s == "cosine") return Metric::cosine;
    if (s == "cityblock") return Metric::cityblock;
    if (s == "euclidean") return Metric::euclidean;
    throw InvalidArgument("unknown metric '" + std::string(s) + "'");
}

double distance(std::span<const double> a, std::span<const double> b, Metric metric) {
    if (a.size() != b.size())
        throw InvalidArgument("distance between vectors of dimension " + std::to_string(a.size()) + " and " +
                              std::to_string(b.size()));
    switch (metric) {
        case Metric::cosine: {
            double ab = 0.0, aa = 0.0, bb = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                ab += a[i] * b[i];
                aa += a[i] * a[i];
                bb += b[i] * b[i];
            }
            if (aa == 0.0 || bb == 0.0) return 1.0;
            return std::max(0.0, 1.0 - ab / (std::sqrt(aa) * std::sqrt(bb)));
        }
        case Metric::cityblock: {
            double s = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
            return s;
        }
        case Metric::euclidean: {
            double s = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
            return std::sqrt(s);
        }
    }
    return 0.0;
}

DescriptorIndex build_index(const std::vector<FeatureRecord>& database, Metric metric) {
    DescriptorIndex index;
    index.metric = metric;
    index.stats = znormalize_fit(database);
    std::set<std::string> seen;
    for (const auto& r : database) {
        if (!seen.insert(r.id).second) throw InvalidArgument("duplicate database id " + r.id);
        for (double v : r.values)
            if (!std::isfinite(v)) throw InvalidArgument("non-finite descriptor value in " + r.id);
        index.ids.push_back(r.id);
        index.vectors.push_back(znormalize_apply(r, index.stats));
    }
    return index;
}

std::size_t Ranking::rank_of(std::string_view id) const {
    for (std::size_t i = 0; i < ordered.size(); ++i)
        if (ordered[i].first == id) return i + 1;
    return 0;
}

Ranking query(const DescriptorIndex& index, const FeatureRecord& raw_query) {
    return query(index, raw_query, index.metric);
}

Ranking query(const DescriptorIndex& index, const FeatureRecord& raw_query, Metric metric) {
    const std::vector<double> q = znormalize_apply(raw_query, index.stats);
    Ranking ranking;
    ranking.query_id = raw_query.id;
    ranking.ordered.reserve(index.size());
    for (std::size_t i = 0; i < index.size(); ++i)
        ranking.ordered.emplace_back(index.ids[i], distance(q, index.vectors[i], metric));
    std::sort(ranking.ordered.begin(), ranking.ordered.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second < b.second : a.first < b.first;
    });
    return ranking;
}

CmcCurve cmc_from_ranks(std::span<const std::size_t> ranks, std::size_t n) {
    if (n == 0) throw InvalidArgument("CMC over an empty database");
    if (ranks.empty()) throw InvalidArgument("CMC without queries");
    std::vector<double> hits(n, 0.0);
    for (std::size_t r : ranks) {
        if (r < 1 || r > n) throw InvalidArgument("rank " + std::to_string(r) + " outside 1.." + std::to_string(n));
        hits[r - 1] += 1.0;
    }
    CmcCurve c;
    c.recognition_rate.resize(n);
    double cum = 0.0, sum = 0.0, sum200 = 0.0;
    const std::size_t head = std::min(kTruncatedRanks, n);
    for (std::size_t i = 0; i < n; ++i) {
        cum += hits[i];
        c.recognition_rate[i] = cum / static_cast<double>(ranks.size());
        sum += c.recognition_rate[i];
        if (i < head) sum200 += c.recognition_rate[i];
    }
    c.auc = sum / static_cast<double>(n);
    c.auc_at_200 = sum200 / static_cast<double>(head);
    return c;
}

CmcCurve evaluate_cmc(const std::vector<Ranking>& rankings, const std::map<std::string, std::string>& truth) {
    if (rankings.empty()) throw InvalidArgument("CMC without queries");
    std::vector<std::size_t> ranks;
    ranks.reserve(rankings.size());
    const std::size_t n = rankings.front().ordered.size();
    for (const auto& r : rankings) {
        const auto it = truth.find(r.query_id);
        if (it == truth.end()) throw InvalidArgument("no ground-truth match for query " + r.query_id);
        if (r.ordered.size() != n) throw InvalidArgument("ranking of query " + r.query_id + " has a different length");
        const std::size_t rank = r.rank_of(it->second);
        if (rank == 0)
            throw InvalidArgument("correct match " + it->second + " of query " + r.query_id + " is not in the database");
        ranks.push_back(rank);
    }
    return cmc_from_ranks(ranks, n);
}

ExperimentResult run_experiment(const std::vector<FeatureRecord>& database, const std::vector<FeatureRecord>& queries,
                                const std::map<std::string, std::string>& truth, Metric metric, std::string variant,
                                std::string method) {
    const DescriptorIndex index = build_index(database, metric);
    std::vector<Ranking> rankings;
    rankings.reserve(queries.size());
    for (const auto& q : queries) rankings.push_back(query(index, q));
    ExperimentResult result;
    result.curve = evaluate_cmc(rankings, truth);
    result.row = {std::move(variant), std::move(method), metric, result.curve.auc, result.curve.auc_at_200};
    return result;
}

void write_report_csv(const std::vector<ReportRow>& rows, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "variant,method,metric,auc,auc_at_200\n";
    for (const auto& r : rows)
        out << r.variant << ',' << r.method << ',' << to_string(r.metric) << ',' << r.auc << ',' << r.auc_at_200 << '\n';
}

std::vector<ReportRow> read_report_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::string line;
    std::getline(in, line);
    std::vector<ReportRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 5) throw IoError("malformed report row in " + path.string() + ": " + line);
        rows.push_back({cells[0], cells[1], metric_from_string(cells[2]), std::stod(cells[3]), std::stod(cells[4])});
    }
    return rows;
}

void write_cmc_csv(const std::vector<ExperimentResult>& results, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "variant,method,rank,recognition_rate\n";
    for (const auto& r : results)
        for (std::size_t i = 0; i < r.curve.recognition_rate.size(); ++i)
            out << r.row.variant << ',' << r.row.method << ',' << i + 1 << ',' << r.curve.recognition_rate[i] << '\n';
}

void write_cmc_svg(const std::vector<ExperimentResult>& results, const std::string& title,
                   const std::filesystem::path& path, std::size_t max_rank) {
    constexpr double kW = 480, kH = 320, kPad = 40;
    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    auto out = open_out(path);
    out << std::setprecision(6);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n"
        << "<rect x=\"" << kPad << "\" y=\"" << kPad << "\" width=\"" << kW - 2 * kPad << "\" height=\""
        << kH - 2 * kPad << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (std::size_t k = 0; k < results.size(); ++k) {
        const auto& rate = results[k].curve.recognition_rate;
        const std::size_t n = std::min(max_rank, rate.size());
        out << "<polyline fill=\"none\" stroke=\"" << kColors[k % 6] << "\" points=\"";
        for (std::size_t i = 0; i < n; ++i) {
            const double x = kPad + (kW - 2 * kPad) * (n > 1 ? static_cast<double>(i) / (n - 1) : 0.0);
            const double y = kH - kPad - (kH - 2 * kPad) * rate[i];
            out << x << ',' << y << ' ';
        }
        out << "\"/>\n<text x=\"" << kPad + 8 << "\" y=\"" << kH - kPad - 10 - 16.0 * k << "\" font-size=\"12\" fill=\""
            << kColors[k % 6] << "\">" << results[k].row.method << " (AUC " << results[k].row.auc << ")</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace texelatt::retrieval
