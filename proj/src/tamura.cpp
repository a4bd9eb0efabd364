#include "texelatt/tamura.hpp"

#include "texelatt/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace texelatt::tamura {

namespace {

constexpr int kLineDistance = 4;
constexpr int kRegularityGrid = 4;

/// Summed-area table with one row and column of zero padding.
class Integral {
public:
    explicit Integral(const GrayImage& g) : w_(g.width), h_(g.height), s_((w_ + 1) * static_cast<std::size_t>(h_ + 1)) {
        for (int y = 0; y < h_; ++y) {
            double row = 0.0;
            for (int x = 0; x < w_; ++x) {
                row += g.at(x, y);
                s_[idx(x + 1, y + 1)] = s_[idx(x + 1, y)] + row;
            }
        }
    }

    /// Mean over [x0, x1) x [y0, y1) clipped to the image.
    double mean(int x0, int y0, int x1, int y1) const {
        x0 = std::clamp(x0, 0, w_);
        x1 = std::clamp(x1, 0, w_);
        y0 = std::clamp(y0, 0, h_);
        y1 = std::clamp(y1, 0, h_);
        const double area = static_cast<double>(x1 - x0) * (y1 - y0);
        if (area <= 0.0) return 0.0;
        return (s_[idx(x1, y1)] - s_[idx(x0, y1)] - s_[idx(x1, y0)] + s_[idx(x0, y0)]) / area;
    }

private:
    std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * (w_ + 1) + x; }

    int w_, h_;
    std::vector<double> s_;
};

struct Gradient {
    double magnitude;
    double angle;  // [0, pi)
};

/// Prewitt gradient at an interior pixel.
Gradient gradient_at(const GrayImage& g, int x, int y) {
    double dh = 0.0, dv = 0.0;
    for (int k = -1; k <= 1; ++k) {
        dh += g.at(x + 1, y + k) - g.at(x - 1, y + k);
        dv += g.at(x + k, y + 1) - g.at(x + k, y - 1);
    }
    dh /= 3.0;
    dv /= 3.0;
    double a = std::atan2(dv, dh);
    if (a < 0.0) a += std::numbers::pi;
    if (a >= std::numbers::pi) a -= std::numbers::pi;
    return {(std::abs(dh) + std::abs(dv)) / 2.0, a};
}

int direction_bin(double angle) {
    return std::min(kDirectionBins - 1, static_cast<int>(angle / std::numbers::pi * kDirectionBins));
}

GrayImage crop(const GrayImage& g, int x0, int y0, int w, int h) {
    GrayImage out{w, h, std::vector<double>(static_cast<std::size_t>(w) * h)};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.values[static_cast<std::size_t>(y) * w + x] = g.at(x0 + x, y0 + y);
    return out;
}

double stddev(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size()));
}

}  // namespace

std::vector<double> TamuraDescriptor::values() const {
    std::vector<double> v{coarseness, contrast, directionality};
    if (linelikeness) v.insert(v.end(), {*linelikeness, regularity.value_or(0.0), roughness.value_or(0.0)});
    return v;
}

FeatureRecord TamuraDescriptor::to_record(std::string id) const {
    FeatureRecord r;
    r.id = std::move(id);
    r.values = values();
    r.missing.assign(r.values.size(), 0);
    return r;
}

std::vector<std::string> TamuraDescriptor::names(bool extended) {
    std::vector<std::string> n{"coarseness", "contrast", "directionality"};
    if (extended) n.insert(n.end(), {"linelikeness", "regularity", "roughness"});
    return n;
}

double coarseness(const GrayImage& image) {
    if (image.values.empty()) throw InvalidArgument("coarseness of an empty image");
    const double max_scale = std::pow(2.0, kMaxScaleExponent);
    const Integral sat(image);
    double total = 0.0;
    std::size_t counted = 0;
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            double best_e = 0.0;
            int best_k = 0;
            for (int k = 1; k <= kMaxScaleExponent; ++k) {
                const int s = 1 << k;
                const int h = s / 2;
                const double eh = std::abs(sat.mean(x, y - h, x + s, y + h) - sat.mean(x - s, y - h, x, y + h));
                const double ev = std::abs(sat.mean(x - h, y, x + h, y + s) - sat.mean(x - h, y - s, x + h, y));
                const double e = std::max(eh, ev);
                if (e > 0.0 && e >= best_e) {
                    best_e = e;
                    best_k = k;
                }
            }
            if (best_k == 0) continue;
            total += static_cast<double>(1 << best_k);
            ++counted;
        }
    }
    return counted > 0 ? total / static_cast<double>(counted) : max_scale;
}

double contrast(const GrayImage& image) {
    if (image.values.empty()) throw InvalidArgument("contrast of an empty image");
    const double n = static_cast<double>(image.values.size());
    double mean = 0.0;
    for (double v : image.values) mean += v;
    mean /= n;
    double m2 = 0.0, m4 = 0.0;
    for (double v : image.values) {
        const double d2 = (v - mean) * (v - mean);
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    if (!(m4 > 0.0)) return 0.0;
    // sigma / (m4 / sigma^4)^(1/4) = sigma^2 / m4^(1/4)
    return m2 / std::pow(m4, 0.25);
}

std::array<double, kDirectionBins> direction_histogram(const GrayImage& image) {
    std::array<double, kDirectionBins> hist{};
    double total = 0.0;
    for (int y = 1; y + 1 < image.height; ++y)
        for (int x = 1; x + 1 < image.width; ++x) {
            const Gradient g = gradient_at(image, x, y);
            if (g.magnitude < kGradientThreshold) continue;
            hist[direction_bin(g.angle)] += 1.0;
            total += 1.0;
        }
    if (total > 0.0)
        for (auto& h : hist) h /= total;
    return hist;
}

double directionality(const std::array<double, kDirectionBins>& histogram) {
    double mass = 0.0;
    for (double h : histogram) mass += h;
    if (!(mass > 0.0)) return 0.0;
    const int peak = static_cast<int>(std::max_element(histogram.begin(), histogram.end()) - histogram.begin());
    auto sq_dist = [&](int b) {
        int d = std::abs(b - peak);
        d = std::min(d, kDirectionBins - d);
        return static_cast<double>(d * d);
    };
    double spread = 0.0, uniform = 0.0;
    for (int b = 0; b < kDirectionBins; ++b) {
        spread += histogram[b] / mass * sq_dist(b);
        uniform += sq_dist(b) / kDirectionBins;
    }
    return std::clamp(1.0 - spread / uniform, 0.0, 1.0);
}

double directionality(const GrayImage& image) { return directionality(direction_histogram(image)); }

double linelikeness(const GrayImage& image) {
    const int w = image.width, h = image.height;
    std::vector<int> bins(static_cast<std::size_t>(w) * h, -1);
    std::vector<double> angles(bins.size(), 0.0);
    for (int y = 1; y + 1 < h; ++y)
        for (int x = 1; x + 1 < w; ++x) {
            const Gradient g = gradient_at(image, x, y);
            if (g.magnitude < kGradientThreshold) continue;
            bins[static_cast<std::size_t>(y) * w + x] = direction_bin(g.angle);
            angles[static_cast<std::size_t>(y) * w + x] = g.angle;
        }
    double num = 0.0, den = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int bi = bins[static_cast<std::size_t>(y) * w + x];
            if (bi < 0) continue;
            // Step along the edge, perpendicular to the gradient.
            const double a = angles[static_cast<std::size_t>(y) * w + x] + std::numbers::pi / 2.0;
            const int qx = x + static_cast<int>(std::lround(kLineDistance * std::cos(a)));
            const int qy = y + static_cast<int>(std::lround(kLineDistance * std::sin(a)));
            if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
            const int bj = bins[static_cast<std::size_t>(qy) * w + qx];
            if (bj < 0) continue;
            num += std::cos((bi - bj) * 2.0 * std::numbers::pi / kDirectionBins);
            den += 1.0;
        }
    return den > 0.0 ? num / den : 0.0;
}

TamuraDescriptor compute(const GrayImage& image, const TamuraOptions& options) {
    if (image.width < kMinSide || image.height < kMinSide)
        throw InvalidArgument("Tamura features need an image of at least 64x64 pixels");
    TamuraDescriptor d;
    d.coarseness = coarseness(image);
    d.contrast = contrast(image);
    d.directionality = directionality(image);
    if (options.extended) {
        d.linelikeness = linelikeness(image);
        d.roughness = d.coarseness + d.contrast;
        std::vector<double> crs, con, dir, lin;
        const int sw = image.width / kRegularityGrid, sh = image.height / kRegularityGrid;
        for (int gy = 0; gy < kRegularityGrid; ++gy)
            for (int gx = 0; gx < kRegularityGrid; ++gx) {
                const GrayImage sub = crop(image, gx * sw, gy * sh, sw, sh);
                crs.push_back(coarseness(sub));
                con.push_back(contrast(sub));
                dir.push_back(directionality(sub));
                lin.push_back(linelikeness(sub));
            }
        // Each feature's spread is scaled by its attainable range.
        const double spread = stddev(crs) / std::pow(2.0, kMaxScaleExponent) + stddev(con) / 128.0 + stddev(dir) +
                              stddev(lin) / 2.0;
        d.regularity = 1.0 - spread / 4.0;
    }
    return d;
}

TamuraDescriptor compute(const Image& image, const TamuraOptions& options) {
    return compute(to_gray(image), options);
}

}  // namespace texelatt::tamura
