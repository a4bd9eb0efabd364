// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include "texelatt/descriptor.hpp"
#include "texelatt/detection.hpp"
#include "texelatt/distortion.hpp"
#include "texelatt/harness.hpp"
#include "texelatt/layout.hpp"
#include "texelatt/retrieval.hpp"
#include "texelatt/rng.hpp"
#include "texelatt/synthesis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <numeric>
#include <string>
#include <vector>

using namespace texelatt;

namespace {

constexpr std::uint64_t kDatasetSeed = 20240917;
constexpr std::uint64_t kDistortionSeed = 77;
constexpr std::size_t kPlannedItems = 3000;  // 0.9 split leaves 300 test images
constexpr double kSplitRatio = 0.9;
constexpr int kCanvas = 1024;

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
    std::printf("[%s] criterion %d %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::size_t index_of(const std::string& id) { return std::stoul(id.substr(id.find('_') + 1)); }

struct Records {
    std::vector<FeatureRecord> db_texelatt, db_tamura, db_oracle;
    // per variant
    std::map<std::string, std::vector<FeatureRecord>> q_texelatt, q_tamura, q_oracle;
    std::map<std::string, std::string> truth;  // query id -> database id
};

struct DetectionTally {
    int tp = 0, fp = 0, fn = 0, images = 0;
    bool oracle_perfect = true;
};

bool flat_low_jitter(const synth::TextureSpec& spec) {
    if (spec.shading != synth::Shading::flat) return false;
    return std::all_of(spec.classes.begin(), spec.classes.end(),
                       [](const synth::ElementClassSpec& c) { return c.layout.jitter <= 0.1; });
}

bool histogram_ok(const std::array<double, descriptor::kDims>& v, std::size_t at, std::size_t n) {
    double s = 0.0;
    bool zero = true;
    for (std::size_t i = at; i < at + n; ++i) {
        s += v[i];
        if (v[i] != 0.0) zero = false;
    }
    return zero || std::abs(s - 1.0) <= 1e-9;
}

bool record_histograms_ok(const FeatureRecord& r) {
    if (r.dim() != descriptor::kDims) return false;
    std::array<double, descriptor::kDims> v{};
    std::copy(r.values.begin(), r.values.end(), v.begin());
    namespace off = descriptor::offset;
    return histogram_ok(v, off::label, 3) && histogram_ok(v, off::color, 11) && histogram_ok(v, off::orientation, 3) &&
           histogram_ok(v, off::pair_orientation, 3) && histogram_ok(v, off::background, 11);
}

double auc(const std::vector<FeatureRecord>& db, const std::vector<FeatureRecord>& queries,
           const std::map<std::string, std::string>& truth, retrieval::Metric metric) {
    return retrieval::run_experiment(db, queries, truth, metric, "", "").curve.auc;
}

// ---------------------------------------------------------------------------
// Spatial statistics on synthetic point sets

std::vector<Vec2> lattice(Vec2 u, Vec2 v, Vec2 phase, int canvas, double jitter, std::uint64_t seed) {
    Rng rng(seed);
    const double shortest = std::min(u.norm(), v.norm());
    std::vector<Vec2> pts;
    for (int i = -64; i <= 64; ++i)
        for (int j = -64; j <= 64; ++j) {
            const Vec2 p = phase + u * i + v * j;
            if (p.x < 0 || p.y < 0 || p.x >= canvas || p.y >= canvas) continue;
            const auto [dx, dy] = rng.in_disk(jitter * shortest);
            pts.push_back({p.x + dx, p.y + dy});
        }
    return pts;
}

void spatial_suite() {
    struct Lat {
        Vec2 u, v, phase;
    };
    const std::vector<Lat> lattices = {
        {{32, 0}, {0, 32}, {16, 16}},
        {{64, 0}, {0, 64}, {32, 32}},
        {{32, 0}, {0, 64}, {16, 32}},
        {{16, 0}, {0, 16}, {8, 8}},
    };
    bool ideal_ok = true;
    double worst_h = 0.0, worst_l = 0.0, worst_t = 0.0;
    for (const auto& l : lattices) {
        const auto pts = lattice(l.u, l.v, l.phase, kCanvas, 0.0, 1);
        const double h = layout::homogeneity_2d(pts, kCanvas, kCanvas, 4, 4);
        const auto ls = layout::local_reflective_symmetry(pts, descriptor::kSymmetryNeighbors);
        const auto ts = layout::translational_symmetry(pts, descriptor::kSymmetryNeighbors);
        worst_h = std::max(worst_h, std::abs(h));
        worst_l = std::max(worst_l, ls.value_or(1e9));
        worst_t = std::max(worst_t, ts.value_or(1e9));
        if (std::abs(h) > 1e-12 || !ls || *ls > 1e-9 || !ts || *ts > 0.1) ideal_ok = false;
    }

    const double jitters[] = {0.0, 0.1, 0.2, 0.3};
    double h_mean[4]{}, l_mean[4]{}, t_mean[4]{};
    for (int j = 0; j < 4; ++j) {
        for (std::uint64_t s = 0; s < 20; ++s) {
            // Random phase per seed; any phase keeps the ideal quadrat counts equal.
            Rng phase_rng(derive_seed(7, s));
            const Vec2 phase{phase_rng.uniform(0.0, 32.0), phase_rng.uniform(0.0, 32.0)};
            const auto pts = lattice({32, 0}, {0, 32}, phase, kCanvas, jitters[j], derive_seed(99, s));
            h_mean[j] += layout::homogeneity_2d(pts, kCanvas, kCanvas, 4, 4) / 20.0;
            l_mean[j] += layout::local_reflective_symmetry(pts, descriptor::kSymmetryNeighbors).value_or(0.0) / 20.0;
            t_mean[j] += layout::translational_symmetry(pts, descriptor::kSymmetryNeighbors).value_or(0.0) / 20.0;
        }
    }
    bool mono = true;
    for (int j = 0; j + 1 < 4; ++j) {
        if (!(l_mean[j + 1] > l_mean[j]) || !(t_mean[j + 1] > t_mean[j]) || !(h_mean[j + 1] > h_mean[j])) mono = false;
    }

    std::vector<Vec2> one(32, Vec2{10.0, 10.0});
    for (std::size_t i = 0; i < one.size(); ++i) one[i] = {10.0 + static_cast<double>(i), 20.0};
    const double closed = layout::homogeneity_2d(one, kCanvas, kCanvas, 4, 4);

    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "ideal max |H|=%.3g, local=%.3g, translational=%.4f; jitter means H=[%.4f %.4f %.4f %.4f] "
                  "L=[%.4f %.4f %.4f %.4f] T=[%.4f %.4f %.4f %.4f]; one-quadrat H=%.12f",
                  worst_h, worst_l, worst_t, h_mean[0], h_mean[1], h_mean[2], h_mean[3], l_mean[0], l_mean[1],
                  l_mean[2], l_mean[3], t_mean[0], t_mean[1], t_mean[2], t_mean[3], closed);
    report(6, "spatial statistics oracle suite", ideal_ok && mono && std::abs(closed - 15.0) <= 1e-9, buf);
}

// ---------------------------------------------------------------------------

void random_ranking_null() {
    constexpr std::size_t n = 300;
    Rng rng(4242);
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = synth::dataset_item_id(i);
    std::vector<retrieval::Ranking> rankings;
    std::map<std::string, std::string> truth;
    double brute = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
        std::vector<std::string> order = ids;
        for (std::size_t i = n - 1; i > 0; --i)
            std::swap(order[i], order[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(i)))]);
        retrieval::Ranking r;
        r.query_id = "q" + std::to_string(q);
        for (std::size_t i = 0; i < n; ++i) r.ordered.emplace_back(order[i], static_cast<double>(i));
        truth[r.query_id] = ids[q];
        // Brute force: count, for every rank cutoff, the queries matched so far.
        std::size_t rank = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (order[i] == ids[q]) rank = i + 1;
        for (std::size_t cut = 1; cut <= n; ++cut) brute += (rank <= cut ? 1.0 : 0.0);
        rankings.push_back(std::move(r));
    }
    brute /= static_cast<double>(n * n);
    const auto curve = retrieval::evaluate_cmc(rankings, truth);
    char buf[160];
    std::snprintf(buf, sizeof buf, "AUC=%.4f (brute force %.4f)", curve.auc, brute);
    report(9, "random-ranking null", std::abs(curve.auc - 0.5) <= 0.03 && std::abs(curve.auc - brute) <= 1e-12, buf);
}

void distortion_statistics(const std::vector<Image>& samples) {
    Image grey(kCanvas, kCanvas, Rgb{128, 128, 128});
    const Image noisy = distort::impulsive_noise(grey, 0.2, 31337);
    std::size_t corrupted = 0;
    for (int y = 0; y < kCanvas; ++y)
        for (int x = 0; x < kCanvas; ++x)
            if (!(noisy.at(x, y) == Rgb{128, 128, 128})) ++corrupted;
    const double fraction = static_cast<double>(corrupted) / (static_cast<double>(kCanvas) * kCanvas);

    bool brighter = true;
    std::size_t checked = 0;
    auto mean_of = [](const Image& im) {
        double s = 0.0;
        for (auto b : im.bytes()) s += b;
        return s / static_cast<double>(im.bytes().size());
    };
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const bool saturated = std::all_of(samples[i].bytes().begin(), samples[i].bytes().end(),
                                           [](std::uint8_t b) { return b == 255 || b == 0; });
        if (saturated) continue;
        ++checked;
        if (!(mean_of(distort::radial_lighting(samples[i], 1000 + i)) > mean_of(samples[i]))) brighter = false;
    }

    bool reproducible = true;
    for (const auto& spec : distort::standard_variants(kDistortionSeed)) {
        const Image& src = samples.front();
        if (!(distort::apply(src, spec, "elba_00000") == distort::apply(src, spec, "elba_00000"))) reproducible = false;
    }
    char buf[200];
    std::snprintf(buf, sizeof buf, "noise fraction=%.5f; lighting brightened %zu/%zu non-saturated images; byte-reproducible=%s",
                  fraction, brighter ? checked : 0, checked, reproducible ? "yes" : "no");
    report(8, "distortion statistics", std::abs(fraction - 0.2) <= 0.002 && brighter && checked > 0 && reproducible, buf);
}

}  // namespace

int main(int argc, char** argv) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t planned = argc > 1 ? std::stoul(argv[1]) : kPlannedItems;

    spatial_suite();
    random_ranking_null();

    std::vector<std::string> train, test;
    synth::split_ids(planned, kDatasetSeed, kSplitRatio, train, test);
    const auto variants = distort::standard_variants(kDistortionSeed);
    std::printf("dataset: %zu planned items, %zu test images, %zu variants\n", planned, test.size(), variants.size());

    Records rec;
    DetectionTally tally;
    std::vector<Image> lighting_samples;
    for (std::size_t k = 0; k < test.size(); ++k) {
        const std::string& id = test[k];
        synth::Rendered rendered;
        const auto entry = synth::realize_item(kDatasetSeed, index_of(id), kCanvas, &rendered);
        const Image& image = rendered.image;
        if (lighting_samples.size() < 10) lighting_samples.push_back(image);

        const auto detections = detect::detect(image);
        const auto oracle = detect::detect_oracle(rendered.ground_truth);
        if (flat_low_jitter(entry.spec)) {
            const auto r = detect::evaluate_detection(detections, rendered.ground_truth.texels);
            tally.tp += r.true_positives;
            tally.fp += r.false_positives;
            tally.fn += r.false_negatives;
            ++tally.images;
        }
        const auto ro = detect::evaluate_detection(oracle, rendered.ground_truth.texels);
        if (ro.precision != 1.0 || ro.recall != 1.0) tally.oracle_perfect = false;

        rec.db_texelatt.push_back(harness::texelatt_record(id, image, detections));
        rec.db_oracle.push_back(harness::texelatt_record(id, image, oracle));
        rec.db_tamura.push_back(harness::tamura_record(id, image));

        for (const auto& spec : variants) {
            const std::string v = spec.variant();
            const std::string qid = distort::query_id(spec, id);
            const Image q = distort::apply(image, spec, id);
            rec.truth[qid] = id;
            rec.q_texelatt[v].push_back(harness::texelatt_record(qid, q, detect::detect(q)));
            rec.q_oracle[v].push_back(harness::texelatt_record(qid, q, oracle));
            rec.q_tamura[v].push_back(harness::tamura_record(qid, q));
        }
        if ((k + 1) % 25 == 0) {
            const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            std::printf("  processed %zu/%zu test images (%.0f s)\n", k + 1, test.size(), el);
            std::fflush(stdout);
        }
    }

    // AUC table
    std::map<std::string, double> a_tex, a_tam, a_orc;
    std::printf("%-12s %10s %10s %10s\n", "variant", "texelatt", "tamura", "oracle");
    for (const auto& spec : variants) {
        const std::string v = spec.variant();
        a_tex[v] = auc(rec.db_texelatt, rec.q_texelatt[v], rec.truth, retrieval::Metric::cosine);
        a_tam[v] = auc(rec.db_tamura, rec.q_tamura[v], rec.truth, retrieval::Metric::cityblock);
        a_orc[v] = auc(rec.db_oracle, rec.q_oracle[v], rec.truth, retrieval::Metric::cosine);
        std::printf("%-12s %10.4f %10.4f %10.4f\n", v.c_str(), a_tex[v], a_tam[v], a_orc[v]);
    }

    {
        bool ok = true;
        std::string detail;
        for (const auto& spec : variants) {
            const std::string v = spec.variant();
            if (!(a_tex[v] > a_tam[v])) ok = false;
            detail += v + " " + fmt("%.4f", a_tex[v]) + ">" + fmt("%.4f", a_tam[v]) + "; ";
        }
        report(1, "ordering Texel-Att > Tamura on all variants", ok, detail);
    }
    {
        bool ok = true;
        std::string detail;
        for (const char* effect : {"noise", "light"}) {
            for (const auto* table : {&a_tex, &a_tam}) {
                const double r1 = table->at(std::string("r100_") + effect);
                const double r2 = table->at(std::string("r200_") + effect);
                const double r3 = table->at(std::string("r300_") + effect);
                if (!(r3 >= r2 - 0.02 && r2 >= r1 - 0.02)) ok = false;
                detail += std::string(table == &a_tex ? "texelatt/" : "tamura/") + effect + " " + fmt("%.4f", r1) +
                          "," + fmt("%.4f", r2) + "," + fmt("%.4f", r3) + "; ";
            }
        }
        report(2, "resolution monotonicity (tolerance 0.02)", ok, detail);
    }
    report(3, "oracle Texel-Att AUC on r100_noise >= 0.6", a_orc["r100_noise"] >= 0.6,
           fmt("AUC=%.4f", a_orc["r100_noise"]));

    {
        std::map<std::string, std::string> self;
        for (const auto& r : rec.db_texelatt) self[r.id] = r.id;
        bool ok = true;
        std::string detail;
        const std::pair<const std::vector<FeatureRecord>*, retrieval::Metric> runs[] = {
            {&rec.db_texelatt, retrieval::Metric::cosine},
            {&rec.db_tamura, retrieval::Metric::cityblock},
            {&rec.db_oracle, retrieval::Metric::cosine}};
        for (const auto& [db, metric] : runs) {
            const auto res = retrieval::run_experiment(*db, *db, self, metric, "identity", "");
            const double rank1 = res.curve.recognition_rate.front();
            if (rank1 != 1.0 || res.curve.auc != 1.0) ok = false;
            detail += fmt("rank1=%.4f ", rank1) + fmt("auc=%.6f; ", res.curve.auc);
        }
        report(4, "identity experiment", ok, detail);
    }
    {
        bool ok = true;
        std::size_t checked = 0;
        auto check_all = [&](const std::vector<FeatureRecord>& rs) {
            for (const auto& r : rs) {
                ++checked;
                if (!record_histograms_ok(r)) ok = false;
            }
        };
        check_all(rec.db_texelatt);
        check_all(rec.db_oracle);
        for (auto& [v, rs] : rec.q_texelatt) check_all(rs);
        for (auto& [v, rs] : rec.q_oracle) check_all(rs);
        double worst_mean = 0.0, worst_var = 0.0;
        for (const auto* db : {&rec.db_texelatt, &rec.db_oracle}) {
            const auto index = retrieval::build_index(*db, retrieval::Metric::cosine);
            for (std::size_t k = 0; k < descriptor::kDims; ++k) {
                if (index.stats.constant[k]) continue;
                double m = 0.0, v = 0.0;
                for (const auto& x : index.vectors) m += x[k];
                m /= static_cast<double>(index.size());
                for (const auto& x : index.vectors) v += (x[k] - m) * (x[k] - m);
                v /= static_cast<double>(index.size());
                worst_mean = std::max(worst_mean, std::abs(m));
                worst_var = std::max(worst_var, std::abs(v - 1.0));
            }
        }
        if (worst_mean >= 1e-9 || worst_var > 1e-6) ok = false;
        char buf[200];
        std::snprintf(buf, sizeof buf, "%zu descriptors of dim 36 with valid histograms; max |mean|=%.3g, max |var-1|=%.3g",
                      checked, worst_mean, worst_var);
        report(5, "descriptor contract", ok, buf);
    }
    {
        const double p = tally.tp + tally.fp > 0 ? static_cast<double>(tally.tp) / (tally.tp + tally.fp) : 1.0;
        const double r = tally.tp + tally.fn > 0 ? static_cast<double>(tally.tp) / (tally.tp + tally.fn) : 1.0;
        const double f1 = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
        char buf[200];
        std::snprintf(buf, sizeof buf, "classical F1=%.4f (P=%.4f R=%.4f over %d flat images); oracle P=R=1: %s", f1, p, r,
                      tally.images, tally.oracle_perfect ? "yes" : "no");
        report(7, "detection gate", f1 >= 0.95 && tally.images > 0 && tally.oracle_perfect, buf);
    }
    distortion_statistics(lighting_samples);

    const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s: %d criteria failed, %.0f s\n", failures == 0 ? "ALL PASS" : "FAILURES", failures, el);
    return failures == 0 ? 0 : 1;
}
