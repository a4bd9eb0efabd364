#include "texelatt/illumination.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>

namespace texelatt {

namespace {

// Background channels darker than this carry no gain information.
constexpr int kMinReferenceChannel = 24;
// Channels at or above this value are treated as clipped.
constexpr int kClipLevel = 250;
// A pixel is a background sample when a single gain explains every channel
// within this many levels.
constexpr double kResidualLevels = 24.0;
constexpr double kMinGain = 0.75;
constexpr double kMaxGain = 2.0;
// The image is split into kBlocks blocks along its shorter side.
constexpr int kBlocks = 16;
// Blocks with fewer gain samples than this fraction are filled in. The
// background covers most blocks; texel samples are sparse.
constexpr double kMinBackgroundCoverage = 0.3;
constexpr double kMinTexelCoverage = 0.02;
// Fits against different references must agree within this gain.
constexpr double kGainAgreement = 0.05;
constexpr double kMinGainRange = 0.05;
// The field is scaled so that this fraction of the blocks lies at or below 1.
constexpr double kReferencePercentile = 0.05;
constexpr double kGainSlack = 1.3;
constexpr int kGainSlackSteps = 6;
// Known blocks needed before unknown ones are filled from a fitted surface.
constexpr int kMinFitBlocks = 12;

double median_of(std::vector<double>& v) {
    const std::size_t h = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h), v.end());
    const double upper = v[h];
    if (v.size() % 2) return upper;
    return 0.5 * (upper + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h)));
}

std::uint8_t channel_median(std::vector<std::uint8_t>& v) {
    const std::size_t h = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h), v.end());
    return v[h];
}

// Least-squares gain of `c` against `ref` over the unclipped, informative
// channels; NaN when the pixel is not a scaled copy of the reference.
double pixel_gain(const std::array<int, 3>& c, const std::array<int, 3>& ref) {
    double num = 0.0, den = 0.0;
    for (int k = 0; k < 3; ++k) {
        if (ref[k] < kMinReferenceChannel || c[k] >= kClipLevel) continue;
        num += static_cast<double>(c[k]) * ref[k];
        den += static_cast<double>(ref[k]) * ref[k];
    }
    if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
    const double g = num / den;
    if (g < kMinGain || g > kMaxGain) return std::numeric_limits<double>::quiet_NaN();
    for (int k = 0; k < 3; ++k) {
        const double predicted = std::min(255.0, g * ref[k]);
        if (std::abs(predicted - c[k]) > kResidualLevels) return std::numeric_limits<double>::quiet_NaN();
    }
    return g;
}

using Quadratic = std::array<double, 6>;

std::array<double, 6> quadratic_basis(int bx, int by, int bw, int bh) {
    const double u = (bx + 0.5) / bw, v = (by + 0.5) / bh;
    return {1.0, u, v, u * u, u * v, v * v};
}

double eval_quadratic(const Quadratic& q, int bx, int by, int bw, int bh) {
    const auto f = quadratic_basis(bx, by, bw, bh);
    double s = 0.0;
    for (int i = 0; i < 6; ++i) s += q[i] * f[i];
    return s;
}

// Least-squares quadratic surface through the known (non-NaN) blocks.
std::optional<Quadratic> fit_quadratic(const std::vector<double>& blocks, int bw, int bh) {
    std::array<std::array<double, 7>, 6> m{};  // normal equations, augmented
    int known = 0;
    for (int by = 0; by < bh; ++by)
        for (int bx = 0; bx < bw; ++bx) {
            const double g = blocks[static_cast<std::size_t>(by) * bw + bx];
            if (std::isnan(g)) continue;
            ++known;
            const auto f = quadratic_basis(bx, by, bw, bh);
            for (int i = 0; i < 6; ++i) {
                for (int j = 0; j < 6; ++j) m[i][j] += f[i] * f[j];
                m[i][6] += f[i] * g;
            }
        }
    if (known < kMinFitBlocks) return std::nullopt;
    for (int c = 0; c < 6; ++c) {
        int pivot = c;
        for (int r = c + 1; r < 6; ++r)
            if (std::abs(m[r][c]) > std::abs(m[pivot][c])) pivot = r;
        if (std::abs(m[pivot][c]) < 1e-12) return std::nullopt;
        std::swap(m[c], m[pivot]);
        for (int r = 0; r < 6; ++r) {
            if (r == c) continue;
            const double f = m[r][c] / m[c][c];
            for (int k = c; k < 7; ++k) m[r][k] -= f * m[c][k];
        }
    }
    Quadratic q{};
    for (int i = 0; i < 6; ++i) q[i] = m[i][6] / m[i][i];
    return q;
}

}  // namespace

namespace {

// Gain field plus the background color name it was measured against.
GrayImage estimate_field(const Image& image, const ColorNamer& namer, std::uint8_t& background) {
    const int W = image.width();
    const int H = image.height();
    GrayImage field{W, H, std::vector<double>(image.pixel_count(), 1.0)};
    if (image.empty()) return field;

    const std::vector<std::uint8_t> names = namer.name_image(image);
    std::array<std::size_t, kColorNameCount> counts{};
    for (auto n : names) ++counts[n];
    background = static_cast<std::uint8_t>(
        std::distance(counts.begin(), std::max_element(counts.begin(), counts.end())));

    const auto bytes = image.bytes();
    std::array<int, 3> ref{};
    {
        std::array<std::vector<std::uint8_t>, 3> channels;
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == background)
                for (int k = 0; k < 3; ++k) channels[k].push_back(bytes[3 * i + k]);
        for (int k = 0; k < 3; ++k) ref[k] = channel_median(channels[k]);
    }
    // The background color is the reference when it has an unclipped,
    // informative channel. Otherwise every prototype is tried, and pixels
    // that fit several references with different gains are skipped.
    std::vector<std::array<int, 3>> refs;
    bool informative = false;
    for (int k = 0; k < 3; ++k) informative |= ref[k] >= kMinReferenceChannel && ref[k] < kClipLevel;
    if (informative) {
        refs.push_back(ref);
    } else {
        for (const auto& p : namer.prototypes()) refs.push_back({p.r, p.g, p.b});
    }

    const double coverage = informative ? kMinBackgroundCoverage : kMinTexelCoverage;
    const int side = std::max(4, std::min(W, H) / kBlocks);
    const int bw = (W + side - 1) / side;
    const int bh = (H + side - 1) / side;
    std::vector<std::vector<double>> samples(static_cast<std::size_t>(bw) * bh);
    // Background pixels clipped in every informative channel only bound the
    // gain from below.
    std::vector<int> censored(samples.size(), 0);
    double clip_gain = kMaxGain;
    if (informative)
        for (int k = 0; k < 3; ++k)
            if (ref[k] >= kMinReferenceChannel) clip_gain = std::min(clip_gain, kClipLevel / static_cast<double>(ref[k]));
    auto is_censored = [&](const std::array<int, 3>& c) {
        if (!informative) return false;
        for (int k = 0; k < 3; ++k) {
            if (ref[k] >= kMinReferenceChannel ? c[k] < kClipLevel : c[k] > kMaxGain * ref[k] + kResidualLevels)
                return false;
        }
        return true;
    };
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * W + x;
            const std::array<int, 3> c{bytes[3 * i], bytes[3 * i + 1], bytes[3 * i + 2]};
            double g = std::numeric_limits<double>::quiet_NaN();
            bool ambiguous = false;
            for (const auto& r : refs) {
                const double fit = pixel_gain(c, r);
                if (std::isnan(fit)) continue;
                if (std::isnan(g)) {
                    g = fit;
                } else if (std::abs(fit - g) > kGainAgreement) {
                    ambiguous = true;
                    break;
                }
            }
            const std::size_t b = static_cast<std::size_t>(y / side) * bw + x / side;
            if (!std::isnan(g) && !ambiguous) {
                samples[b].push_back(g);
            } else if (is_censored(c)) {
                ++censored[b];
            }
        }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> blocks(samples.size(), nan);
    std::vector<char> clipped(samples.size(), 0);
    bool any = false;
    for (int by = 0; by < bh; ++by)
        for (int bx = 0; bx < bw; ++bx) {
            const std::size_t b = static_cast<std::size_t>(by) * bw + bx;
            auto& s = samples[b];
            const int area = (std::min(W, (bx + 1) * side) - bx * side) * (std::min(H, (by + 1) * side) - by * side);
            const std::size_t total = s.size() + static_cast<std::size_t>(censored[b]);
            if (static_cast<double>(total) < coverage * area) continue;
            any = true;
            // Censored pixels rank above every sample.
            if (s.size() <= total / 2) {
                clipped[b] = 1;
                continue;
            }
            std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(total / 2), s.end());
            blocks[b] = s[total / 2];
        }
    if (!any) return field;

    auto neighbours = [&](const std::vector<double>& grid, int bx, int by) {
        std::vector<double> v;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int nx = bx + dx, ny = by + dy;
                if (nx < 0 || ny < 0 || nx >= bw || ny >= bh) continue;
                const double g = grid[static_cast<std::size_t>(ny) * bw + nx];
                if (!std::isnan(g)) v.push_back(g);
            }
        return v;
    };

    // Blocks without enough samples take the value of a quadratic surface
    // fitted to the known blocks, at least the clipping gain where the
    // background clipped. Without enough known blocks for the fit, the
    // remaining ones grow inward instead.
    const auto surface = fit_quadratic(blocks, bw, bh);
    for (bool missing = true; missing;) {
        missing = false;
        std::vector<double> next = blocks;
        for (int by = 0; by < bh; ++by)
            for (int bx = 0; bx < bw; ++bx) {
                const std::size_t b = static_cast<std::size_t>(by) * bw + bx;
                if (!std::isnan(blocks[b])) continue;
                if (surface || clipped[b]) {
                    const double fitted = surface ? eval_quadratic(*surface, bx, by, bw, bh) : kMinGain;
                    next[b] = std::clamp(clipped[b] ? std::max(fitted, clip_gain) : fitted, kMinGain, kMaxGain);
                    continue;
                }
                auto v = neighbours(blocks, bx, by);
                if (v.empty()) {
                    missing = true;
                    continue;
                }
                double sum = 0.0;
                for (double g : v) sum += g;
                next[b] = sum / static_cast<double>(v.size());
            }
        blocks = std::move(next);
    }

    // A 3x3 block median drops blocks dominated by texels that happen to lie
    // on the background's gain ray.
    std::vector<double> smooth(blocks.size());
    for (int by = 0; by < bh; ++by)
        for (int bx = 0; bx < bw; ++bx) {
            auto v = neighbours(blocks, bx, by);
            smooth[static_cast<std::size_t>(by) * bw + bx] = median_of(v);
        }

    std::vector<double> sorted = smooth;
    std::sort(sorted.begin(), sorted.end());
    const double lo = sorted[static_cast<std::size_t>(kReferencePercentile * static_cast<double>(sorted.size() - 1))];
    if (sorted.back() / lo < 1.0 + kMinGainRange) return field;
    for (auto& g : smooth) g /= lo;

    // Bilinear interpolation between block centres.
    for (int y = 0; y < H; ++y) {
        const double fy = std::clamp((y + 0.5) / side - 0.5, 0.0, static_cast<double>(bh - 1));
        const int y0 = std::min(static_cast<int>(fy), bh - 1);
        const int y1 = std::min(y0 + 1, bh - 1);
        const double ty = fy - y0;
        for (int x = 0; x < W; ++x) {
            const double fx = std::clamp((x + 0.5) / side - 0.5, 0.0, static_cast<double>(bw - 1));
            const int x0 = std::min(static_cast<int>(fx), bw - 1);
            const int x1 = std::min(x0 + 1, bw - 1);
            const double tx = fx - x0;
            auto at = [&](int bx, int by) { return smooth[static_cast<std::size_t>(by) * bw + bx]; };
            const double top = (1.0 - tx) * at(x0, y0) + tx * at(x1, y0);
            const double bottom = (1.0 - tx) * at(x0, y1) + tx * at(x1, y1);
            field.values[static_cast<std::size_t>(y) * W + x] = std::max(1.0, (1.0 - ty) * top + ty * bottom);
        }
    }
    return field;
}

}  // namespace

GrayImage estimate_gain(const Image& image, const ColorNamer& namer) {
    std::uint8_t background = 0;
    return estimate_field(image, namer, background);
}

Image flatten_illumination(const Image& image, const ColorNamer& namer) {
    std::uint8_t background = 0;
    const GrayImage gain = estimate_field(image, namer, background);
    Image out = image;
    auto px = out.bytes();
    const auto& protos = namer.prototypes();
    for (std::size_t i = 0; i < gain.values.size(); ++i) {
        const double g = gain.values[i];
        if (g <= 1.0) continue;
        const std::array<int, 3> c{px[3 * i], px[3 * i + 1], px[3 * i + 2]};
        std::array<double, 3> restored{};
        bool clipped = false;
        for (int k = 0; k < 3; ++k) {
            restored[k] = c[k] / g;
            clipped |= c[k] >= kClipLevel;
        }
        if (clipped) {
            // The original value of a clipped channel lies in [255 / g, 255];
            // take it from the prototype whose lit color is closest. The
            // estimate runs low where the background clipped, so each
            // prototype may also be lit up to kGainSlack times brighter. Ties
            // go to the background.
            auto lit_distance = [&](const Rgb& p) {
                const std::array<int, 3> pc{p.r, p.g, p.b};
                double best_d = std::numeric_limits<double>::infinity();
                for (int step = 0; step <= kGainSlackSteps; ++step) {
                    const double lit_gain = g * (1.0 + (kGainSlack - 1.0) * step / kGainSlackSteps);
                    double d = 0.0;
                    for (int k = 0; k < 3; ++k) {
                        const double lit = std::min(255.0, lit_gain * pc[k]);
                        d += (lit - c[k]) * (lit - c[k]);
                    }
                    best_d = std::min(best_d, d);
                }
                return best_d;
            };
            const Rgb* match = &protos[background];
            double best = lit_distance(*match);
            for (const auto& p : protos) {
                const double d = lit_distance(p);
                if (d < best) {
                    best = d;
                    match = &p;
                }
            }
            const std::array<int, 3> mc{match->r, match->g, match->b};
            for (int k = 0; k < 3; ++k)
                if (c[k] >= kClipLevel) restored[k] = std::clamp(static_cast<double>(mc[k]), c[k] / g, 255.0);
        }
        for (int k = 0; k < 3; ++k)
            px[3 * i + k] = static_cast<std::uint8_t>(std::clamp(std::lround(restored[k]), 0L, 255L));
    }
    return out;
}

}  // namespace texelatt
