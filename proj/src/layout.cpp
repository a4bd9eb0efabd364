#include "texelatt/layout.hpp"

#include "texelatt/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace texelatt::layout {

namespace {

constexpr std::size_t kMinSymmetryPoints = 5;

std::vector<Vec2> embed(std::span<const double> coords) {
    std::vector<Vec2> pts;
    pts.reserve(coords.size());
    for (double c : coords) pts.push_back({c, 0.0});
    return pts;
}

struct Bounds {
    double x0, y0, x1, y1;
};

Bounds bounds_of(std::span<const Vec2> pts) {
    Bounds b{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
             std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
    for (const auto& p : pts) {
        b.x0 = std::min(b.x0, p.x);
        b.y0 = std::min(b.y0, p.y);
        b.x1 = std::max(b.x1, p.x);
        b.y1 = std::max(b.y1, p.y);
    }
    return b;
}

double edge_distance(const Bounds& b, Vec2 p, bool one_dimensional) {
    double d = std::min(p.x - b.x0, b.x1 - p.x);
    if (!one_dimensional) d = std::min(d, std::min(p.y - b.y0, b.y1 - p.y));
    return d;
}

double nearest_distance(std::span<const Vec2> pts, Vec2 q) {
    double best = std::numeric_limits<double>::max();
    for (const auto& p : pts) best = std::min(best, (p - q).norm2());
    return std::sqrt(best);
}

/// Centroids scored by the symmetry measures, with their neighbourhoods.
template <typename Score>
std::optional<double> score_neighbourhoods(std::span<const Vec2> pts, std::size_t k, bool one_dimensional,
                                           Score&& score) {
    if (pts.size() < kMinSymmetryPoints || pts.size() <= k) return std::nullopt;
    const Bounds b = bounds_of(pts);
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        auto nn = nearest_neighbors(pts, i, k);
        const double rk = distance(pts[i], pts[nn.back()]);
        // Points tied with the k-th neighbour join the neighbourhood, so the
        // selection never depends on point order.
        for (std::size_t j = 0; j < pts.size(); ++j) {
            if (j == i || std::find(nn.begin(), nn.end(), j) != nn.end()) continue;
            if (std::abs(distance(pts[i], pts[j]) - rk) <= 1e-9 * std::max(1.0, rk)) nn.push_back(j);
        }
        if (!(rk > 0.0)) continue;
        if (edge_distance(b, pts[i], one_dimensional) < rk * (1.0 - 1e-9)) continue;
        score(i, nn, total, count);
    }
    if (count == 0) return std::nullopt;
    return total / static_cast<double>(count);
}

std::optional<double> reflective(std::span<const Vec2> pts, std::size_t k, bool one_dimensional) {
    return score_neighbourhoods(pts, k, one_dimensional,
                                [&](std::size_t i, const std::vector<std::size_t>& nn, double& total, std::size_t& count) {
                                    const Vec2 c = pts[i];
                                    double residual = 0.0, radius = 0.0;
                                    for (auto j : nn) {
                                        const Vec2 reflected = c * 2.0 - pts[j];
                                        double best = std::numeric_limits<double>::max();
                                        for (auto m : nn) best = std::min(best, distance(reflected, pts[m]));
                                        residual += best;
                                        radius += distance(c, pts[j]);
                                    }
                                    total += residual / radius;
                                    ++count;
                                });
}

std::optional<double> translational(std::span<const Vec2> pts, std::size_t k, bool one_dimensional) {
    return score_neighbourhoods(pts, k, one_dimensional,
                                [&](std::size_t i, const std::vector<std::size_t>& nn, double& total, std::size_t& count) {
                                    const Vec2 c = pts[i];
                                    for (auto j : nn) {
                                        const Vec2 t = pts[j] - c;
                                        const double len = t.norm();
                                        double residual = nearest_distance(pts, c + t);
                                        for (auto m : nn) residual += nearest_distance(pts, pts[m] + t);
                                        total += residual / static_cast<double>(nn.size() + 1) / len;
                                        ++count;
                                    }
                                });
}

}  // namespace

int orientation_bin(double deg) {
    const int b = static_cast<int>(std::floor(fold_180(deg) / 60.0));
    return std::clamp(b, 0, 2);
}

double density_2d(std::size_t count, int width, int height) {
    if (width <= 0 || height <= 0) throw InvalidArgument("canvas dimensions must be positive");
    const double scale = kReferenceSide / width;
    const double area = (width * scale) * (height * scale);
    return static_cast<double>(count) / area * kReferenceSide * kReferenceSide;
}

double density_1d(std::span<const double> coords, int canvas_side) {
    if (coords.size() < 2) throw DegenerateGeometry("1D density needs at least two stripes");
    const auto [lo, hi] = std::minmax_element(coords.begin(), coords.end());
    const double extent = (*hi - *lo) * kReferenceSide / canvas_side;
    if (!(extent > 0.0)) throw DegenerateGeometry("stripe centroids have zero projected extent");
    return static_cast<double>(coords.size() - 1) / extent * kReferenceSide;
}

double homogeneity_2d(std::span<const Vec2> points, int width, int height, int gx, int gy) {
    if (points.empty()) return 0.0;
    std::vector<double> counts(static_cast<std::size_t>(gx) * gy, 0.0);
    for (const auto& p : points) {
        const int cx = std::clamp(static_cast<int>(std::floor(p.x / width * gx)), 0, gx - 1);
        const int cy = std::clamp(static_cast<int>(std::floor(p.y / height * gy)), 0, gy - 1);
        counts[static_cast<std::size_t>(cy) * gx + cx] += 1.0;
    }
    const double n = static_cast<double>(points.size());
    const double e = n / static_cast<double>(counts.size());
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - e) * (c - e) / e;
    return chi2 / n;
}

double homogeneity_1d(std::span<const double> coords, int bins) {
    if (coords.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(coords.begin(), coords.end());
    const double span = *hi - *lo;
    std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
    for (double c : coords) {
        const int b = span > 0.0 ? std::clamp(static_cast<int>(std::floor((c - *lo) / span * bins)), 0, bins - 1) : 0;
        counts[static_cast<std::size_t>(b)] += 1.0;
    }
    const double n = static_cast<double>(coords.size());
    const double e = n / bins;
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - e) * (c - e) / e;
    return chi2 / n;
}

std::vector<std::size_t> nearest_neighbors(std::span<const Vec2> points, std::size_t i, std::size_t k) {
    std::vector<std::size_t> idx;
    idx.reserve(points.size());
    for (std::size_t j = 0; j < points.size(); ++j)
        if (j != i) idx.push_back(j);
    k = std::min(k, idx.size());
    const Vec2 c = points[i];
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          const double da = (points[a] - c).norm2();
                          const double db = (points[b] - c).norm2();
                          return da != db ? da < db : a < b;
                      });
    idx.resize(k);
    return idx;
}

std::array<double, 3> pair_orientation_hist(std::span<const Vec2> points, std::size_t k) {
    std::array<double, 3> hist{};
    if (points.size() < 2) return hist;
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (auto j : nearest_neighbors(points, i, k)) {
            const Vec2 d = points[j] - points[i];
            hist[orientation_bin(std::atan2(d.y, d.x) * 180.0 / std::numbers::pi)] += 1.0;
            total += 1.0;
        }
    }
    for (auto& h : hist) h /= total;
    return hist;
}

std::optional<double> local_reflective_symmetry(std::span<const Vec2> points, std::size_t k) {
    return reflective(points, k, false);
}

std::optional<double> local_reflective_symmetry_1d(std::span<const double> coords, std::size_t k) {
    const auto pts = embed(coords);
    return reflective(pts, k, true);
}

std::optional<double> translational_symmetry(std::span<const Vec2> points, std::size_t k) {
    return translational(points, k, false);
}

std::optional<double> translational_symmetry_1d(std::span<const double> coords, std::size_t k) {
    const auto pts = embed(coords);
    return translational(pts, k, true);
}

}  // namespace texelatt::layout
