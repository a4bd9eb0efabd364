#include "texelatt/detection.hpp"

#include "texelatt/error.hpp"
#include "texelatt/illumination.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <unordered_map>

namespace texelatt::detect {

double contour_perimeter(const TexelMask& mask) {
    const BBox& b = mask.box();
    constexpr double kDiag = std::numbers::sqrt2 / 2.0;
    double length = 0.0;
    // Cells span the padded grid: cell (cx, cy) has corners (cx-1..cx, cy-1..cy).
    for (int cy = b.y; cy <= b.y + b.h; ++cy) {
        for (int cx = b.x; cx <= b.x + b.w; ++cx) {
            const bool tl = mask.test(cx - 1, cy - 1);
            const bool tr = mask.test(cx, cy - 1);
            const bool bl = mask.test(cx - 1, cy);
            const bool br = mask.test(cx, cy);
            const int n = tl + tr + bl + br;
            if (n == 0 || n == 4) continue;
            if (n == 1 || n == 3) {
                length += kDiag;
            } else if (tl == br) {
                length += 2.0 * kDiag;  // saddle
            } else {
                length += 1.0;
            }
        }
    }
    return length;
}

ShapeMeasures measure_shape(const TexelMask& mask) {
    ShapeMeasures m;
    const MaskMoments mom = mask_moments(mask);
    m.area = mom.area;
    m.perimeter = contour_perimeter(mask);
    m.circularity = m.perimeter > 0.0 ? 4.0 * std::numbers::pi * m.area / (m.perimeter * m.perimeter) : 0.0;
    m.elongation = mom.lambda_minor > 0.0 ? std::sqrt(mom.lambda_major / mom.lambda_minor)
                                          : (mom.lambda_major > 0.0 ? INFINITY : 1.0);
    m.orientation_deg = fold_180(0.5 * std::atan2(2.0 * mom.mu11, mom.mu20 - mom.mu02) * 180.0 / std::numbers::pi);
    return m;
}

ShapeKind classify_shape(const ShapeMeasures& m, bool spans_opposite_borders, const DetectorConfig& config) {
    if (spans_opposite_borders || m.elongation > config.elongation_threshold) return ShapeKind::line;
    if (m.circularity >= config.circularity_threshold) return ShapeKind::circle;
    return ShapeKind::polygon;
}

namespace {

constexpr int kImpulseContrast = 64;
// Blend merging: a component whose mean color sits at a fraction in
// [kMinBlend, kMaxBlend] of the way from a neighbour's color to the
// background color, within the residual, joins that neighbour.
constexpr double kMinBlend = 0.1;
constexpr double kMaxBlend = 0.95;
constexpr double kBlendResidual = 20.0;
constexpr double kBlendResidualFraction = 0.15;
constexpr double kMinBlendContrast = 40.0;
// Lit-piece merging: neighbours whose colors differ by a brightening gain up
// to kMaxLightGain and whose shared boundary steps by at most kSmoothStep per
// pixel on average are one texel.
constexpr double kMaxLightGain = 1.9;
constexpr double kGainResidual = 24.0;
constexpr double kSmoothStep = 32.0;
constexpr int kClipLevel = 250;
// Both merges need at least this many touching pixel pairs.
constexpr int kMinMergeContacts = 3;

struct Component {
    std::uint8_t name = 0;
    long long area = 0;
    long long own_area = 0;  // pixels covered by the color sums
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    double sum_r = 0.0, sum_g = 0.0, sum_b = 0.0;
    bool left = false, right = false, top = false, bottom = false;
    TexelMask mask;
    ShapeMeasures measures;
    ShapeKind label = ShapeKind::polygon;
    bool keep = true;
    double confidence = 1.0;

    bool touches_border() const { return left || right || top || bottom; }
    bool spans_opposite() const { return (left && right) || (top && bottom); }
};

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}


using Color3 = std::array<double, 3>;

Color3 mean_of(const Component& c) {
    const double a = static_cast<double>(c.own_area);
    return {c.sum_r / a, c.sum_g / a, c.sum_b / a};
}

double distance(const Color3& a, const Color3& b) {
    return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

// Residual of `c` as a mix of `core` and `background`, or infinity when the
// mixing fraction is out of range.
double blend_residual(const Color3& c, const Color3& core, const Color3& background) {
    Color3 v{}, w{};
    double vv = 0.0, wv = 0.0;
    for (int k = 0; k < 3; ++k) {
        v[k] = background[k] - core[k];
        w[k] = c[k] - core[k];
        vv += v[k] * v[k];
        wv += w[k] * v[k];
    }
    const double span = std::sqrt(vv);
    if (span < kMinBlendContrast) return INFINITY;
    const double alpha = wv / vv;
    if (alpha < kMinBlend || alpha > kMaxBlend) return INFINITY;
    Color3 mix{};
    for (int k = 0; k < 3; ++k) mix[k] = core[k] + alpha * v[k];
    const double r = distance(c, mix);
    return r <= std::max(kBlendResidual, kBlendResidualFraction * span) ? r : INFINITY;
}

// True when `bright` is `dark` scaled by a gain in [1, kMaxLightGain] and
// clipped at 255, within kGainResidual per channel.
bool gain_related(const Color3& dark, const Color3& bright) {
    double num = 0.0, den = 0.0;
    for (int k = 0; k < 3; ++k) {
        if (bright[k] >= kClipLevel) continue;
        num += bright[k] * dark[k];
        den += dark[k] * dark[k];
    }
    // Every informative channel clipped: any gain that clips them all fits.
    double g = den > 0.0 ? num / den : kMaxLightGain;
    g = std::clamp(g, 1.0, kMaxLightGain);
    for (int k = 0; k < 3; ++k)
        if (std::abs(std::min(255.0, g * dark[k]) - bright[k]) > kGainResidual) return false;
    return true;
}

struct Contact {
    int count = 0;
    double step = 0.0;  // summed max-channel difference across the contact
};

std::unordered_map<std::uint64_t, Contact> find_contacts(const std::vector<std::int32_t>& labels, int W, int H,
                                                         std::span<const std::uint8_t> bytes, std::size_t n) {
    std::unordered_map<std::uint64_t, Contact> contacts;
    constexpr std::array<std::pair<int, int>, 4> kForward{{{1, 0}, {0, 1}, {1, 1}, {-1, 1}}};
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const std::size_t p = static_cast<std::size_t>(y) * W + x;
            const std::int32_t a = labels[p];
            if (a < 0) continue;
            for (const auto& [dx, dy] : kForward) {
                const int nx = x + dx, ny = y + dy;
                if (nx < 0 || nx >= W || ny >= H) continue;
                const std::size_t q = static_cast<std::size_t>(ny) * W + nx;
                const std::int32_t b = labels[q];
                if (b < 0 || b == a) continue;
                int step = 0;
                for (int k = 0; k < 3; ++k) step = std::max(step, std::abs(bytes[3 * p + k] - bytes[3 * q + k]));
                const auto lo = static_cast<std::uint64_t>(std::min(a, b));
                const auto hi = static_cast<std::uint64_t>(std::max(a, b));
                auto& c = contacts[lo * n + hi];
                ++c.count;
                c.step += step;
            }
        }
    return contacts;
}

// Folds every component into target[i] (itself when target[i] == i). With
// `keep_color` the color sums follow the pixels; otherwise the target keeps
// its own color.
void fold(std::vector<Component>& comps, std::vector<std::int32_t>& labels, const std::vector<std::int32_t>& target,
          bool keep_color) {
    bool any = false;
    for (std::size_t i = 0; i < comps.size(); ++i) {
        if (target[i] == static_cast<std::int32_t>(i)) continue;
        any = true;
        auto& r = comps[target[i]];
        auto& c = comps[i];
        r.area += c.area;
        if (keep_color) {
            r.own_area += c.own_area;
            r.sum_r += c.sum_r;
            r.sum_g += c.sum_g;
            r.sum_b += c.sum_b;
        }
        r.x0 = std::min(r.x0, c.x0);
        r.x1 = std::max(r.x1, c.x1);
        r.y0 = std::min(r.y0, c.y0);
        r.y1 = std::max(r.y1, c.y1);
        r.left |= c.left;
        r.right |= c.right;
        r.top |= c.top;
        r.bottom |= c.bottom;
        c.area = 0;
    }
    if (!any) return;
    for (auto& l : labels)
        if (l >= 0) l = target[l];
}

std::int32_t find_root(std::vector<std::int32_t>& parent, std::int32_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
}

// Joins pieces of one texel that lighting split across two color names: the
// boundary between them is a gradient rather than an edge, and one mean color
// is a brightened copy of the other.
void merge_lit_pieces(std::vector<Component>& comps, std::vector<std::int32_t>& labels, int W, int H,
                      std::span<const std::uint8_t> bytes) {
    const std::size_t n = comps.size();
    const auto contacts = find_contacts(labels, W, H, bytes, n);
    std::vector<std::int32_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::vector<std::pair<std::uint64_t, Contact>> pairs(contacts.begin(), contacts.end());
    std::sort(pairs.begin(), pairs.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    for (const auto& [key, contact] : pairs) {
        if (contact.count < kMinMergeContacts || contact.step / contact.count > kSmoothStep) continue;
        const auto a = static_cast<std::int32_t>(key / n);
        const auto b = static_cast<std::int32_t>(key % n);
        const Color3 ca = mean_of(comps[a]), cb = mean_of(comps[b]);
        if (!gain_related(ca, cb) && !gain_related(cb, ca)) continue;
        const auto ra = find_root(parent, a), rb = find_root(parent, b);
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    }
    for (std::size_t i = 0; i < n; ++i) parent[i] = find_root(parent, static_cast<std::int32_t>(i));
    fold(comps, labels, parent, true);
}

// Merges blurred edge rings into the texel they surround. A ring touching
// several cores of the same color name joins them, which reconnects thin
// stripes whose core faded to the blend color in places. Each merged set
// keeps the color of its member farthest from the background.
void merge_blends(std::vector<Component>& comps, std::vector<std::int32_t>& labels, int W, int H,
                  std::span<const std::uint8_t> bytes, const Color3& background) {
    const std::size_t n = comps.size();
    const auto contacts = find_contacts(labels, W, H, bytes, n);
    std::vector<Color3> means(n);
    std::vector<double> contrast(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (comps[i].area == 0) continue;
        means[i] = mean_of(comps[i]);
        contrast[i] = distance(means[i], background);
    }
    // Candidate cores of every blend component, with their residuals.
    std::vector<std::vector<std::pair<double, std::int32_t>>> cores(n);
    std::vector<std::pair<std::uint64_t, Contact>> pairs(contacts.begin(), contacts.end());
    std::sort(pairs.begin(), pairs.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    for (const auto& [key, contact] : pairs) {
        if (contact.count < kMinMergeContacts) continue;
        const auto a = static_cast<std::int32_t>(key / n);
        const auto b = static_cast<std::int32_t>(key % n);
        for (const auto& [c, d] : {std::pair{a, b}, std::pair{b, a}}) {
            if (contrast[d] <= contrast[c]) continue;
            const double r = blend_residual(means[c], means[d], background);
            if (std::isfinite(r)) cores[c].push_back({r, d});
        }
    }
    std::vector<std::int32_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto unite = [&](std::int32_t x, std::int32_t y) {
        x = find_root(parent, x);
        y = find_root(parent, y);
        if (x == y) return;
        // The root is the member farthest from the background, ties by index.
        if (contrast[y] > contrast[x] || (contrast[y] == contrast[x] && y < x)) std::swap(x, y);
        parent[y] = x;
    };
    for (std::size_t c = 0; c < n; ++c) {
        if (cores[c].empty()) continue;
        std::sort(cores[c].begin(), cores[c].end());
        const std::int32_t best = cores[c].front().second;
        unite(static_cast<std::int32_t>(c), best);
        for (const auto& [r, d] : cores[c])
            if (comps[d].name == comps[best].name) unite(best, d);
    }
    for (std::size_t i = 0; i < n; ++i) parent[i] = find_root(parent, static_cast<std::int32_t>(i));
    fold(comps, labels, parent, false);
}

}  // namespace

double impulse_fraction(const Image& image) {
    const int W = image.width();
    const int H = image.height();
    if (W < 3 || H < 3) return 0.0;
    auto far = [](Rgb a, Rgb b) {
        return std::max({std::abs(a.r - b.r), std::abs(a.g - b.g), std::abs(a.b - b.b)}) > kImpulseContrast;
    };
    std::size_t hits = 0;
    for (int y = 1; y + 1 < H; ++y)
        for (int x = 1; x + 1 < W; ++x) {
            const Rgb c = image.at(x, y);
            const bool extreme = (c.r == 0 && c.g == 0 && c.b == 0) || (c.r == 255 && c.g == 255 && c.b == 255);
            if (extreme && far(c, image.at(x - 1, y)) && far(c, image.at(x + 1, y)) && far(c, image.at(x, y - 1)) &&
                far(c, image.at(x, y + 1)))
                ++hits;
        }
    return static_cast<double>(hits) / (static_cast<double>(W - 2) * (H - 2));
}

std::vector<DetectedTexel> detect(const Image& input, const DetectorConfig& config, const ColorNamer& namer) {
    const int W = input.width();
    const int H = input.height();
    if (std::min(W, H) < 64) throw InvalidArgument("detect needs an image with min side >= 64 px");

    const bool noisy = config.median_prefilter && impulse_fraction(input) > config.impulse_threshold;
    const Image denoised = noisy ? median3x3(input) : input;
    const Image image = config.flatten_illumination ? flatten_illumination(denoised, namer) : denoised;
    const std::vector<std::uint8_t> names = namer.name_image(image);

    std::array<std::size_t, kColorNameCount> counts{};
    for (auto n : names) ++counts[n];
    const auto background = static_cast<std::uint8_t>(
        std::distance(counts.begin(), std::max_element(counts.begin(), counts.end())));

    // 8-connected components of equal, non-background color name.
    std::vector<std::int32_t> labels(names.size(), -1);
    std::vector<Component> comps;
    std::vector<std::int32_t> stack;
    const auto bytes = image.bytes();
    for (int sy = 0; sy < H; ++sy) {
        for (int sx = 0; sx < W; ++sx) {
            const std::size_t s = static_cast<std::size_t>(sy) * W + sx;
            if (names[s] == background || labels[s] >= 0) continue;
            const auto id = static_cast<std::int32_t>(comps.size());
            Component c;
            c.name = names[s];
            c.x0 = c.x1 = sx;
            c.y0 = c.y1 = sy;
            labels[s] = id;
            stack.assign(1, static_cast<std::int32_t>(s));
            while (!stack.empty()) {
                const std::int32_t p = stack.back();
                stack.pop_back();
                const int x = p % W, y = p / W;
                ++c.area;
                c.x0 = std::min(c.x0, x);
                c.x1 = std::max(c.x1, x);
                c.y0 = std::min(c.y0, y);
                c.y1 = std::max(c.y1, y);
                c.sum_r += bytes[3 * static_cast<std::size_t>(p)];
                c.sum_g += bytes[3 * static_cast<std::size_t>(p) + 1];
                c.sum_b += bytes[3 * static_cast<std::size_t>(p) + 2];
                for (int dy = -1; dy <= 1; ++dy) {
                    const int ny = y + dy;
                    if (ny < 0 || ny >= H) continue;
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = x + dx;
                        if (nx < 0 || nx >= W || (dx == 0 && dy == 0)) continue;
                        const std::size_t q = static_cast<std::size_t>(ny) * W + nx;
                        if (labels[q] < 0 && names[q] == c.name) {
                            labels[q] = id;
                            stack.push_back(static_cast<std::int32_t>(q));
                        }
                    }
                }
            }
            c.own_area = c.area;
            c.left = c.x0 == 0;
            c.right = c.x1 == W - 1;
            c.top = c.y0 == 0;
            c.bottom = c.y1 == H - 1;
            comps.push_back(std::move(c));
        }
    }

    Color3 background_color{};
    {
        double count = 0.0;
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (names[i] != background) continue;
            for (int k = 0; k < 3; ++k) background_color[k] += bytes[3 * i + k];
            count += 1.0;
        }
        for (auto& v : background_color) v /= count;
    }
    merge_lit_pieces(comps, labels, W, H, bytes);
    merge_blends(comps, labels, W, H, bytes, background_color);

    const double max_area = config.max_component_fraction * static_cast<double>(W) * H;
    for (std::size_t id = 0; id < comps.size(); ++id) {
        auto& c = comps[id];
        if (c.area < config.min_component_px || static_cast<double>(c.area) > max_area) {
            c.keep = false;
            continue;
        }
        c.mask = TexelMask(BBox{c.x0, c.y0, c.x1 - c.x0 + 1, c.y1 - c.y0 + 1});
        for (int y = c.y0; y <= c.y1; ++y)
            for (int x = c.x0; x <= c.x1; ++x)
                if (labels[static_cast<std::size_t>(y) * W + x] == static_cast<std::int32_t>(id)) c.mask.set(x, y);
        c.measures = measure_shape(c.mask);
        c.label = classify_shape(c.measures, c.spans_opposite(), config);
    }

    // Border-clipped components: compare against typical same-color texels and
    // inherit their label, since clipping distorts the shape measures.
    std::map<std::uint8_t, std::vector<std::size_t>> by_name;
    for (std::size_t id = 0; id < comps.size(); ++id)
        if (comps[id].keep) by_name[comps[id].name].push_back(id);
    for (auto& [name, ids] : by_name) {
        std::vector<double> interior_areas, all_areas;
        std::array<int, kShapeKindCount> interior_labels{};
        for (auto id : ids) {
            all_areas.push_back(static_cast<double>(comps[id].area));
            if (!comps[id].touches_border()) {
                interior_areas.push_back(static_cast<double>(comps[id].area));
                ++interior_labels[static_cast<int>(comps[id].label)];
            }
        }
        const double reference = interior_areas.empty() ? median(all_areas) : median(interior_areas);
        const bool has_majority = interior_areas.size() >= 3;
        const auto majority = static_cast<ShapeKind>(
            std::distance(interior_labels.begin(), std::max_element(interior_labels.begin(), interior_labels.end())));
        for (auto id : ids) {
            auto& c = comps[id];
            if (!c.touches_border() || c.spans_opposite()) continue;
            if (c.label == ShapeKind::line && !has_majority) {
                // Corner pieces of stripes: compare with the longest chord at this angle.
                const Vec2 d = direction_deg(c.measures.orientation_deg);
                const double chord = std::min(W, H) / std::max(std::abs(d.x), std::abs(d.y));
                const MaskMoments mom = mask_moments(c.mask);
                const double length = std::sqrt(12.0 * mom.lambda_major);
                c.confidence = std::min(1.0, length / chord);
                if (length < config.border_keep_fraction * chord) c.keep = false;
                continue;
            }
            c.confidence = reference > 0.0 ? std::min(1.0, static_cast<double>(c.area) / reference) : 1.0;
            if (static_cast<double>(c.area) < config.border_keep_fraction * reference) {
                c.keep = false;
                continue;
            }
            if (has_majority) c.label = majority;
        }
    }

    std::vector<DetectedTexel> out;
    for (auto& c : comps) {
        if (!c.keep) continue;
        DetectedTexel t;
        t.shape = c.label;
        t.bbox = c.mask.box();
        t.centroid = c.mask.centroid();
        const double a = static_cast<double>(c.own_area);
        t.mean_color = {static_cast<std::uint8_t>(std::lround(c.sum_r / a)),
                        static_cast<std::uint8_t>(std::lround(c.sum_g / a)),
                        static_cast<std::uint8_t>(std::lround(c.sum_b / a))};
        t.confidence = c.confidence;
        t.mask = std::move(c.mask);
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<DetectedTexel> detect_oracle(const synth::GroundTruth& ground_truth) {
    std::vector<DetectedTexel> out;
    out.reserve(ground_truth.texels.size());
    for (const auto& a : ground_truth.texels) {
        DetectedTexel t;
        t.shape = a.shape.kind;
        t.centroid = a.centroid;
        t.bbox = a.bbox;
        t.mask = a.mask;
        t.mean_color = a.color;
        t.confidence = 1.0;
        out.push_back(std::move(t));
    }
    return out;
}

DetectionReport evaluate_detection(std::span<const DetectedTexel> detections,
                                   std::span<const TexelAnnotation> ground_truth, double iou_threshold) {
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0))
        throw InvalidArgument("IoU threshold must lie in (0, 1]");
    std::vector<Match> candidates;
    for (std::size_t d = 0; d < detections.size(); ++d)
        for (std::size_t g = 0; g < ground_truth.size(); ++g) {
            if (detections[d].shape != ground_truth[g].shape.kind) continue;
            const double v = iou(detections[d].bbox, ground_truth[g].bbox);
            if (v >= iou_threshold) candidates.push_back({static_cast<int>(d), static_cast<int>(g), v});
        }
    std::sort(candidates.begin(), candidates.end(), [](const Match& a, const Match& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        if (a.detection != b.detection) return a.detection < b.detection;
        return a.ground_truth < b.ground_truth;
    });
    std::vector<char> det_used(detections.size(), 0), gt_used(ground_truth.size(), 0);
    DetectionReport r;
    for (const auto& m : candidates) {
        if (det_used[m.detection] || gt_used[m.ground_truth]) continue;
        det_used[m.detection] = gt_used[m.ground_truth] = 1;
        r.matches.push_back(m);
    }
    r.true_positives = static_cast<int>(r.matches.size());
    r.false_positives = static_cast<int>(detections.size()) - r.true_positives;
    r.false_negatives = static_cast<int>(ground_truth.size()) - r.true_positives;
    // Empty denominators score 1 only when the other side is empty as well.
    const int pred = r.true_positives + r.false_positives;
    const int actual = r.true_positives + r.false_negatives;
    r.precision = pred > 0 ? static_cast<double>(r.true_positives) / pred : (actual == 0 ? 1.0 : 0.0);
    r.recall = actual > 0 ? static_cast<double>(r.true_positives) / actual : (pred == 0 ? 1.0 : 0.0);
    r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
}

}  // namespace texelatt::detect
