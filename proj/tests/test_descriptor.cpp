#include "texelatt/color_naming.hpp"
#include "texelatt/descriptor.hpp"
#include "texelatt/error.hpp"
#include "texelatt/features.hpp"
#include "texelatt/layout.hpp"
#include "texelatt/retrieval.hpp"
#include "texelatt/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>

using namespace texelatt;
using namespace texelatt::descriptor;

namespace {

std::vector<Vec2> grid(int nx, int ny, double sx, double sy, Vec2 phase = {16, 16}) {
    std::vector<Vec2> pts;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) pts.push_back({phase.x + i * sx, phase.y + j * sy});
    return pts;
}

std::vector<Vec2> jittered(std::vector<Vec2> pts, double radius, std::uint64_t seed) {
    Rng rng(seed);
    for (auto& p : pts) {
        const auto [dx, dy] = rng.in_disk(radius);
        p += Vec2{dx, dy};
    }
    return pts;
}

TexelMask rect_mask(int x, int y, int w, int h) {
    TexelMask m({x, y, w, h});
    for (int j = y; j < y + h; ++j)
        for (int i = x; i < x + w; ++i) m.set(i, j);
    return m;
}

/// Pixels within half_width of the line through (cx, cy) at `deg`.
TexelMask rotated_bar(double cx, double cy, double deg, double length, double half_width) {
    const Vec2 d = direction_deg(deg);
    TexelMask m({0, 0, 400, 400});
    for (int y = 0; y < 400; ++y)
        for (int x = 0; x < 400; ++x) {
            const Vec2 p{x + 0.5 - cx, y + 0.5 - cy};
            if (std::abs(p.dot(d)) <= length / 2 && std::abs(p.cross(d)) <= half_width) m.set(x, y);
        }
    return m.cropped();
}

DetectedTexel texel_at(Vec2 c, ShapeKind shape, Rgb color, int side = 10) {
    DetectedTexel t;
    t.shape = shape;
    t.mask = rect_mask(static_cast<int>(c.x) - side / 2, static_cast<int>(c.y) - side / 2, side, side);
    t.bbox = t.mask.box();
    t.centroid = t.mask.centroid();
    t.mean_color = color;
    return t;
}

double block_sum(const TextureDescriptor& d, std::size_t at, std::size_t n) {
    return std::accumulate(d.values.begin() + at, d.values.begin() + at + n, 0.0);
}

}  // namespace

// ---------------------------------------------------------------------------
// Color naming

TEST(ColorNaming, PrototypesAndGrey) {
    EXPECT_EQ(name_color({255, 0, 0}), ColorName::red);
    EXPECT_EQ(name_color({0, 0, 0}), ColorName::black);
    EXPECT_EQ(name_color({128, 128, 128}), ColorName::grey);
    const auto& protos = ColorNamer::default_prototypes();
    for (int i = 0; i < kColorNameCount; ++i) EXPECT_EQ(static_cast<int>(name_color(protos[i])), i);
}

TEST(ColorNaming, MatchesBruteForceNearestLab) {
    const auto& protos = ColorNamer::default_prototypes();
    Rng rng(4);
    for (int k = 0; k < 2000; ++k) {
        const Rgb c{static_cast<std::uint8_t>(rng.integer(0, 255)), static_cast<std::uint8_t>(rng.integer(0, 255)),
                    static_cast<std::uint8_t>(rng.integer(0, 255))};
        const Lab l = to_lab(c);
        int best = 0;
        double best_d = 1e300;
        for (int i = 0; i < kColorNameCount; ++i) {
            const Lab p = to_lab(protos[i]);
            const double d = std::pow(l.l - p.l, 2) + std::pow(l.a - p.a, 2) + std::pow(l.b - p.b, 2);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        ASSERT_EQ(static_cast<int>(name_color(c)), best);
        ASSERT_EQ(default_color_namer().name_cached(c), name_color(c));
    }
}

TEST(ColorNaming, LabOfWhiteAndBlack) {
    const Lab w = to_lab({255, 255, 255});
    EXPECT_NEAR(w.l, 100.0, 1e-3);
    EXPECT_NEAR(w.a, 0.0, 1e-2);
    EXPECT_NEAR(w.b, 0.0, 1e-2);
    EXPECT_NEAR(to_lab({0, 0, 0}).l, 0.0, 1e-9);
}

TEST(ColorNaming, PaletteFileOverridesPrototypes) {
    const auto path = std::filesystem::temp_directory_path() / "texelatt_palette.csv";
    {
        std::ofstream out(path);
        out << "# custom palette\n";
        const char* names[] = {"black", "blue", "brown", "grey", "green", "orange",
                               "pink", "purple", "red", "white", "yellow"};
        const auto& protos = ColorNamer::default_prototypes();
        for (int i = 0; i < kColorNameCount; ++i) {
            Rgb p = protos[i];
            if (i == static_cast<int>(ColorName::grey)) p = {60, 60, 60};
            out << names[i] << "," << int(p.r) << "," << int(p.g) << "," << int(p.b) << "\n";
        }
    }
    const auto namer = ColorNamer::from_file(path);
    EXPECT_EQ(namer.prototypes()[static_cast<int>(ColorName::grey)], (Rgb{60, 60, 60}));
    EXPECT_EQ(namer.name({62, 60, 61}), ColorName::grey);
    std::ofstream(path) << "black,0,0,0\n";
    EXPECT_THROW(ColorNamer::from_file(path), InvalidArgument);
    std::filesystem::remove(path);
}

// ---------------------------------------------------------------------------
// Individual attributes

TEST(Orientation, StripesAndDisks) {
    EXPECT_NEAR(texel_orientation(rect_mask(0, 0, 100, 5)), 0.0, 1e-9);
    EXPECT_NEAR(texel_orientation(rect_mask(0, 0, 5, 100)), 90.0, 1e-9);
    EXPECT_NEAR(texel_orientation(rotated_bar(200, 200, 45, 200, 4)), 45.0, 1.0);
    EXPECT_NEAR(texel_orientation(rotated_bar(200, 200, 135, 200, 4)), 135.0, 1.0);
    EXPECT_EQ(texel_orientation(rect_mask(0, 0, 30, 30)), 0.0);
}

TEST(IndividualAttributes, RedCircleGrid) {
    std::vector<DetectedTexel> ts;
    for (const auto& p : grid(32, 32, 32, 32)) {
        DetectedTexel t;
        t.shape = ShapeKind::circle;
        t.mask = rect_mask(static_cast<int>(p.x) - 10, static_cast<int>(p.y) - 5, 20, 10);
        t.centroid = p;
        t.mean_color = {255, 0, 0};
        ts.push_back(t);
    }
    const auto a = individual_attributes(ts, 1024.0 * 1024.0);
    EXPECT_DOUBLE_EQ(a.label_hist[0], 1.0);
    EXPECT_DOUBLE_EQ(a.color_hist[static_cast<int>(ColorName::red)], 1.0);
    EXPECT_NEAR(a.mean_size, 200.0 / 1048576.0, 1e-15);
    EXPECT_NEAR(a.mean_size, 1.907e-4, 1e-7);
}

TEST(IndividualAttributes, EmptyAndMixedLabels) {
    const auto empty = individual_attributes({}, 1.0);
    for (double v : empty.label_hist) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(empty.mean_size, 0.0);

    std::vector<DetectedTexel> ts;
    for (int i = 0; i < 50; ++i) ts.push_back(texel_at({20.0 + 20 * i, 20}, ShapeKind::circle, {0, 0, 0}));
    for (int i = 0; i < 50; ++i) ts.push_back(texel_at({20.0 + 20 * i, 80}, ShapeKind::polygon, {0, 0, 255}));
    const auto a = individual_attributes(ts, 1024.0 * 1024.0);
    EXPECT_DOUBLE_EQ(a.label_hist[0], 0.5);
    EXPECT_DOUBLE_EQ(a.label_hist[1], 0.0);
    EXPECT_DOUBLE_EQ(a.label_hist[2], 0.5);
}

TEST(Grouping, DropsSmallGroups) {
    std::vector<DetectedTexel> ts;
    for (int i = 0; i < 9; ++i) ts.push_back(texel_at({20.0 + 20 * i, 20}, ShapeKind::circle, {0, 0, 0}));
    for (int i = 0; i < 100; ++i) ts.push_back(texel_at({20.0 + 10 * i, 80}, ShapeKind::polygon, {0, 0, 0}));
    auto groups = group_texels(ts);
    ASSERT_EQ(groups.size(), 1u);
    EXPECT_EQ(groups[0].shape, ShapeKind::polygon);
    EXPECT_EQ(groups[0].members.size(), 100u);

    ts.clear();
    for (int i = 0; i < 20; ++i) ts.push_back(texel_at({20.0 + 20 * i, 20}, ShapeKind::circle, {0, 0, 0}));
    for (int i = 0; i < 15; ++i) ts.push_back(texel_at({20.0 + 20 * i, 80}, ShapeKind::line, {0, 0, 0}));
    EXPECT_EQ(group_texels(ts).size(), 2u);
}

// ---------------------------------------------------------------------------
// Layout statistics

TEST(Layout, Density2dAndLinearity) {
    EXPECT_DOUBLE_EQ(layout::density_2d(1024, 1024, 1024), 1024.0);
    EXPECT_DOUBLE_EQ(layout::density_2d(2048, 1024, 1024), 2 * layout::density_2d(1024, 1024, 1024));
    // Coordinates are rescaled to the reference canvas, so the count is scale free.
    EXPECT_DOUBLE_EQ(layout::density_2d(256, 512, 512), 256.0);
    EXPECT_DOUBLE_EQ(layout::density_2d(512, 1024, 512), 1024.0);
}

TEST(Layout, Density1dOfStripes) {
    std::vector<double> ys;
    for (int i = 0; i < 42; ++i) ys.push_back(12.0 + 24 * i);
    const double extent = ys.back() - ys.front();
    EXPECT_NEAR(layout::density_1d(ys, 1024), 41.0 / extent * 1024.0, 1e-9);
    EXPECT_NEAR(layout::density_1d(ys, 1024), 42.0 / 1008.0 * 1024.0, 1.0);
    EXPECT_THROW(layout::density_1d(std::vector<double>{3.0, 3.0}, 1024), DegenerateGeometry);
}

TEST(Layout, HomogeneityClosedForms) {
    EXPECT_NEAR(layout::homogeneity_2d(grid(32, 32, 32, 32), 1024, 1024), 0.0, 1e-12);
    for (int n : {16, 100, 1000}) {
        std::vector<Vec2> pts(static_cast<std::size_t>(n), Vec2{10, 10});
        EXPECT_NEAR(layout::homogeneity_2d(pts, 1024, 1024), 15.0, 1e-9) << n;
    }
    std::vector<double> even;
    for (int i = 0; i < 64; ++i) even.push_back(i + 0.5);
    EXPECT_NEAR(layout::homogeneity_1d(even, 8), 0.0, 1e-12);
}

TEST(Layout, HomogeneityOracle) {
    // Independent quadrat count of random points.
    Rng rng(8);
    std::vector<Vec2> pts;
    for (int i = 0; i < 500; ++i) pts.push_back({rng.uniform(0, 1024), rng.uniform(0, 1024)});
    std::array<double, 16> counts{};
    for (auto p : pts) counts[static_cast<int>(p.y / 256) * 4 + static_cast<int>(p.x / 256)] += 1;
    const double e = 500.0 / 16;
    double chi = 0;
    for (double c : counts) chi += (c - e) * (c - e) / e;
    EXPECT_NEAR(layout::homogeneity_2d(pts, 1024, 1024), chi / 500.0, 1e-12);
}

TEST(Layout, PairOrientationOfSquareGridAndSinglePair) {
    const auto h = layout::pair_orientation_hist(grid(32, 32, 32, 32), 4);
    EXPECT_NEAR(h[0], 0.5, 0.02);
    EXPECT_NEAR(h[1], 0.5, 0.02);
    EXPECT_NEAR(h[2], 0.0, 0.02);
    const std::vector<Vec2> pair{{0, 0}, direction_deg(30) * 10};
    const auto one = layout::pair_orientation_hist(pair, 1);
    EXPECT_EQ(one[0], 1.0);
    EXPECT_EQ(one[1] + one[2], 0.0);
}

TEST(Layout, PairOrientationMatchesBruteForce) {
    Rng rng(5);
    std::vector<Vec2> pts;
    for (int i = 0; i < 120; ++i) pts.push_back({rng.uniform(0, 300), rng.uniform(0, 300)});
    std::array<double, 3> want{};
    for (std::size_t i = 0; i < pts.size(); ++i) {
        std::vector<std::pair<double, std::size_t>> d;
        for (std::size_t j = 0; j < pts.size(); ++j)
            if (j != i) d.push_back({distance(pts[i], pts[j]), j});
        std::sort(d.begin(), d.end());
        for (int k = 0; k < 8; ++k) {
            const Vec2 v = pts[d[k].second] - pts[i];
            const double deg = fold_180(std::atan2(v.y, v.x) * 180.0 / std::numbers::pi);
            want[std::min(2, static_cast<int>(deg / 60.0))] += 1;
        }
    }
    const auto got = layout::pair_orientation_hist(pts, 8);
    for (int b = 0; b < 3; ++b) EXPECT_NEAR(got[b], want[b] / (8.0 * pts.size()), 1e-12);
}

TEST(Layout, PairOrientationRotationBy60ShiftsBins) {
    Rng rng(2);
    std::vector<Vec2> pts;
    for (int i = 0; i < 200; ++i) pts.push_back({rng.uniform(0, 500), rng.uniform(0, 500)});
    // Rotation by +60 degrees in image coordinates.
    const double c = 0.5, s = std::sqrt(3.0) / 2;
    std::vector<Vec2> rot;
    for (auto p : pts) rot.push_back({c * p.x - s * p.y, s * p.x + c * p.y});
    const auto h = layout::pair_orientation_hist(pts, 8);
    const auto r = layout::pair_orientation_hist(rot, 8);
    for (int b = 0; b < 3; ++b) EXPECT_NEAR(r[(b + 1) % 3], h[b], 1e-9);
}

TEST(Layout, IdealLatticeSymmetry) {
    for (auto [sx, sy] : {std::pair{32.0, 32.0}, std::pair{32.0, 64.0}}) {
        const auto pts = grid(32, 1024 / static_cast<int>(sy), sx, sy);
        EXPECT_NEAR(*layout::local_reflective_symmetry(pts), 0.0, 1e-9);
        EXPECT_LE(*layout::translational_symmetry(pts), 0.1);
    }
}

TEST(Layout, SymmetryGrowsWithJitter) {
    const auto base = grid(32, 32, 32, 32);
    auto mean_score = [&](double jitter, bool local) {
        double sum = 0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto pts = jittered(base, jitter * 32, seed);
            sum += local ? *layout::local_reflective_symmetry(pts) : *layout::translational_symmetry(pts);
        }
        return sum / 20;
    };
    for (bool local : {true, false}) {
        double prev = -1;
        for (double j : {0.0, 0.1, 0.2, 0.3}) {
            const double s = mean_score(j, local);
            EXPECT_GT(s, prev) << (local ? "local" : "translational") << " jitter " << j;
            prev = s;
        }
    }
}

TEST(Layout, RandomPointsAreLessSymmetricThanLightJitter) {
    double random_sum = 0, jitter_sum = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(100 + seed);
        std::vector<Vec2> pts;
        for (int i = 0; i < 1024; ++i) pts.push_back({rng.uniform(0, 1024), rng.uniform(0, 1024)});
        random_sum += *layout::local_reflective_symmetry(pts);
        jitter_sum += *layout::local_reflective_symmetry(jittered(grid(32, 32, 32, 32), 3.2, seed));
    }
    EXPECT_GT(random_sum, jitter_sum);
}

TEST(Layout, SymmetryNeedsEnoughPoints) {
    EXPECT_FALSE(layout::local_reflective_symmetry(grid(2, 2, 10, 10)).has_value());
    EXPECT_FALSE(layout::translational_symmetry(grid(2, 2, 10, 10)).has_value());
}

TEST(Layout, OneDimensionalSymmetry) {
    std::vector<double> even;
    for (int i = 0; i < 40; ++i) even.push_back(10.0 + 25 * i);
    EXPECT_NEAR(*layout::local_reflective_symmetry_1d(even), 0.0, 1e-9);
    EXPECT_LE(*layout::translational_symmetry_1d(even), 0.1);
    Rng rng(3);
    auto noisy = even;
    for (auto& v : noisy) v += rng.uniform(-7, 7);
    EXPECT_GT(*layout::local_reflective_symmetry_1d(noisy), 0.0);
}

// ---------------------------------------------------------------------------
// Aggregation and the full descriptor

TEST(Aggregate, SingleGroupAndBackground) {
    Image img(512, 512, {255, 255, 255});
    std::vector<DetectedTexel> ts;
    for (const auto& p : grid(16, 16, 32, 32)) {
        auto t = texel_at(p, ShapeKind::circle, {0, 0, 0});
        t.mask.for_each_pixel([&](int x, int y) { img.set(x, y, {0, 0, 0}); });
        ts.push_back(t);
    }
    const auto groups = group_texels(ts);
    ASSERT_EQ(groups.size(), 1u);
    const auto lay = aggregate_layout(groups, img, ts);
    EXPECT_DOUBLE_EQ(*lay.density, density(groups[0], 512, 512));
    EXPECT_DOUBLE_EQ(*lay.homogeneity, homogeneity_chi2(groups[0], 512, 512));
    EXPECT_DOUBLE_EQ(lay.background_color_hist[static_cast<int>(ColorName::white)], 1.0);
}

TEST(Aggregate, WeightedMeanOfEqualGroups) {
    // 100 circles on a 10x10 grid and 100 polygons on a sparser 10x10 grid.
    std::vector<DetectedTexel> ts;
    for (const auto& p : grid(10, 10, 20, 20, {20, 20})) ts.push_back(texel_at(p, ShapeKind::circle, {0, 0, 0}, 4));
    for (const auto& p : grid(10, 10, 30, 30, {600, 600})) ts.push_back(texel_at(p, ShapeKind::polygon, {0, 0, 0}, 4));
    const Image img(1024, 1024, {255, 255, 255});
    const auto groups = group_texels(ts);
    ASSERT_EQ(groups.size(), 2u);
    const auto lay = aggregate_layout(groups, img, ts);
    const double h0 = homogeneity_chi2(groups[0], 1024, 1024), h1 = homogeneity_chi2(groups[1], 1024, 1024);
    EXPECT_NEAR(*lay.homogeneity, (h0 + h1) / 2, 1e-12);
}

TEST(Describe, ContractOnEmptyAndRealInputs) {
    const Image blank(256, 256, {0, 0, 255});
    const auto d = describe(blank, {});
    EXPECT_EQ(d.values.size(), 36u);
    for (std::size_t i = 0; i < offset::background; ++i) EXPECT_EQ(d.values[i], 0.0) << i;
    EXPECT_FALSE(d.missing.any());
    EXPECT_DOUBLE_EQ(d.values[offset::background + static_cast<int>(ColorName::blue)], 1.0);

    Image img(512, 512, {255, 255, 255});
    std::vector<DetectedTexel> ts;
    for (const auto& p : grid(16, 16, 32, 32)) ts.push_back(texel_at(p, ShapeKind::circle, {255, 0, 0}));
    const auto a = describe(img, ts);
    const auto b = describe(img, ts);
    EXPECT_EQ(a.values, b.values);
    EXPECT_NEAR(block_sum(a, offset::label, 3), 1.0, 1e-9);
    EXPECT_NEAR(block_sum(a, offset::color, 11), 1.0, 1e-9);
    EXPECT_NEAR(block_sum(a, offset::orientation, 3), 1.0, 1e-9);
    EXPECT_NEAR(block_sum(a, offset::pair_orientation, 3), 1.0, 1e-9);
    EXPECT_NEAR(block_sum(a, offset::background, 11), 1.0, 1e-9);
    EXPECT_EQ(TextureDescriptor::names().size(), 36u);
}

// ---------------------------------------------------------------------------
// Z-normalization

TEST(Normalization, ZeroMeanUnitVarianceAndConstantDims) {
    Rng rng(6);
    std::vector<FeatureRecord> db;
    for (int i = 0; i < 50; ++i) {
        FeatureRecord r;
        r.id = std::to_string(i);
        r.values = {rng.uniform(0, 5), rng.uniform(-3, 1) * 100, 7.0};
        db.push_back(r);
    }
    const auto stats = znormalize_fit(db);
    EXPECT_TRUE(stats.constant[2]);
    std::array<double, 3> mean{}, var{};
    for (const auto& r : db) {
        const auto z = znormalize_apply(r, stats);
        EXPECT_EQ(z[2], 0.0);
        for (int k = 0; k < 3; ++k) mean[k] += z[k] / 50;
    }
    for (const auto& r : db) {
        const auto z = znormalize_apply(r, stats);
        for (int k = 0; k < 3; ++k) var[k] += (z[k] - mean[k]) * (z[k] - mean[k]) / 50;
    }
    for (int k = 0; k < 2; ++k) {
        EXPECT_LT(std::abs(mean[k]), 1e-9);
        EXPECT_NEAR(var[k], 1.0, 1e-6);
    }
    EXPECT_THROW(znormalize_fit({db[0]}), InsufficientData);
}

TEST(Normalization, MissingEntriesAreImputedWithTheMean) {
    std::vector<FeatureRecord> db(4);
    for (int i = 0; i < 4; ++i) {
        db[i].id = std::to_string(i);
        db[i].values = {static_cast<double>(i)};
        db[i].missing = {0};
    }
    db[3].missing = {1};
    const auto stats = znormalize_fit(db);
    EXPECT_NEAR(stats.mean[0], 1.0, 1e-12);
    // Values 0, 1, 2 and the imputed 1.
    EXPECT_NEAR(stats.stddev[0], std::sqrt(0.5), 1e-12);
    EXPECT_EQ(znormalize_apply(db[3], stats)[0], 0.0);
}

TEST(Normalization, SharedStatsPreserveTranslationInvariantRankings) {
    // A shift of the raw space moves the fitted mean by the same amount, so
    // cityblock and euclidean rankings of a query do not change.
    Rng rng(12);
    std::vector<FeatureRecord> db, shifted;
    for (int i = 0; i < 30; ++i) {
        FeatureRecord r;
        r.id = "d" + std::to_string(100 + i);
        r.values = {rng.uniform(0, 1), rng.uniform(0, 2), rng.uniform(-1, 1)};
        db.push_back(r);
        for (auto& v : r.values) v += 5.0;
        shifted.push_back(r);
    }
    FeatureRecord q;
    q.id = "q";
    q.values = {0.3, 1.1, 0.2};
    FeatureRecord qs = q;
    for (auto& v : qs.values) v += 5.0;
    for (auto metric : {retrieval::Metric::cityblock, retrieval::Metric::euclidean}) {
        const auto a = retrieval::query(retrieval::build_index(db, metric), q);
        const auto b = retrieval::query(retrieval::build_index(shifted, metric), qs);
        for (std::size_t i = 0; i < a.ordered.size(); ++i) EXPECT_EQ(a.ordered[i].first, b.ordered[i].first);
    }
}
