#include "texelatt/synthesis.hpp"

#include "texelatt/color_naming.hpp"
#include "texelatt/error.hpp"
#include "texelatt/io.hpp"
#include "texelatt/parallel.hpp"
#include "texelatt/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

namespace texelatt::synth {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMaxCollisionFraction = 0.2;
constexpr double kMinVisibleFraction = 0.5;
constexpr int kMaxResampleAttempts = 64;

bool is_line(const ElementClassSpec& cls) { return cls.shape.kind == ShapeKind::line; }

/// Radius of the circle circumscribing a texel, as a multiple of its size.
double extent_factor(const ElementClassSpec& cls) {
    switch (cls.shape.kind) {
        case ShapeKind::circle: return 0.5;
        case ShapeKind::line: return 0.5;
        case ShapeKind::polygon:
            switch (*cls.shape.polygon) {
                case PolygonKind::square: return std::numbers::sqrt2 / 2.0;
                case PolygonKind::triangle: return 1.0 / std::numbers::sqrt3;
                case PolygonKind::rectangle: return 0.5 * std::sqrt(1.0 + 1.0 / (cls.aspect * cls.aspect));
            }
    }
    return 0.5;
}

Vec2 line_normal(const LayoutSpec& layout) { return layout.basis_u / layout.basis_u.norm(); }

/// Stripe direction in degrees, folded to [0, 180).
double stripe_angle(const LayoutSpec& layout) {
    const Vec2 n = line_normal(layout);
    return fold_180(std::atan2(n.y, n.x) * 180.0 / kPi - 90.0);
}

double shortest_basis(const LayoutSpec& layout) {
    double m = layout.basis_u.norm();
    if (layout.basis_v) m = std::min(m, layout.basis_v->norm());
    return m;
}

struct TexelGeometry {
    int class_index = 0;
    Vec2 center;
    double size = 0.0;
    double orientation_deg = 0.0;
    double nominal_area = 0.0;
    std::vector<std::int32_t> pixels;  // linear indices of rasterized pixels inside the canvas
};

void rasterize_shape(const ElementClassSpec& cls, TexelGeometry& t, int canvas) {
    const double radius = extent_factor(cls) * t.size + 1.0;
    const int x0 = std::max(0, static_cast<int>(std::floor(t.center.x - radius)));
    const int y0 = std::max(0, static_cast<int>(std::floor(t.center.y - radius)));
    const int x1 = std::min(canvas - 1, static_cast<int>(std::ceil(t.center.x + radius)));
    const int y1 = std::min(canvas - 1, static_cast<int>(std::ceil(t.center.y + radius)));
    const Vec2 u = direction_deg(t.orientation_deg);
    const Vec2 v{-u.y, u.x};

    std::array<Vec2, 3> tri{};
    if (cls.shape.kind == ShapeKind::polygon && *cls.shape.polygon == PolygonKind::triangle) {
        const double r = t.size / std::numbers::sqrt3;
        for (int k = 0; k < 3; ++k) tri[k] = t.center + direction_deg(t.orientation_deg - 90.0 + 120.0 * k) * r;
    }

    auto inside = [&](Vec2 p) {
        const Vec2 d = p - t.center;
        switch (cls.shape.kind) {
            case ShapeKind::circle: return d.norm2() <= 0.25 * t.size * t.size;
            case ShapeKind::line: return false;
            case ShapeKind::polygon: break;
        }
        switch (*cls.shape.polygon) {
            case PolygonKind::square:
                return std::abs(d.dot(u)) <= 0.5 * t.size && std::abs(d.dot(v)) <= 0.5 * t.size;
            case PolygonKind::rectangle:
                return std::abs(d.dot(u)) <= 0.5 * t.size && std::abs(d.dot(v)) <= 0.5 * t.size / cls.aspect;
            case PolygonKind::triangle: {
                const double c0 = (tri[1] - tri[0]).cross(p - tri[0]);
                const double c1 = (tri[2] - tri[1]).cross(p - tri[1]);
                const double c2 = (tri[0] - tri[2]).cross(p - tri[2]);
                return (c0 >= 0 && c1 >= 0 && c2 >= 0) || (c0 <= 0 && c1 <= 0 && c2 <= 0);
            }
        }
        return false;
    };

    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if (inside({x + 0.5, y + 0.5})) t.pixels.push_back(y * canvas + x);
}

void rasterize_stripe(const Vec2& normal, double offset, double thickness, TexelGeometry& t, int canvas) {
    const double half = 0.5 * thickness;
    for (int y = 0; y < canvas; ++y) {
        const double yc = y + 0.5;
        int xa = 0;
        int xb = canvas - 1;
        if (std::abs(normal.x) < 1e-12) {
            if (std::abs(yc * normal.y - offset) > half) continue;
        } else {
            double lo = (offset - half - yc * normal.y) / normal.x;
            double hi = (offset + half - yc * normal.y) / normal.x;
            if (lo > hi) std::swap(lo, hi);
            xa = std::max(xa, static_cast<int>(std::ceil(lo - 0.5)));
            xb = std::min(xb, static_cast<int>(std::floor(hi - 0.5)));
        }
        for (int x = xa; x <= xb; ++x) t.pixels.push_back(y * canvas + x);
    }
}

/// Range of stripe indices whose stripes can intersect the canvas.
std::pair<long, long> stripe_index_range(const LayoutSpec& layout, int canvas, double margin) {
    const Vec2 n = line_normal(layout);
    const double s = layout.basis_u.norm();
    double pmin = 1e300, pmax = -1e300;
    for (Vec2 c : {Vec2{0, 0}, Vec2{double(canvas), 0}, Vec2{0, double(canvas)}, Vec2{double(canvas), double(canvas)}}) {
        pmin = std::min(pmin, c.dot(n));
        pmax = std::max(pmax, c.dot(n));
    }
    const double base = layout.phase.dot(n);
    return {static_cast<long>(std::floor((pmin - margin - base) / s)) - 1,
            static_cast<long>(std::ceil((pmax + margin - base) / s)) + 1};
}

double stripe_chord(const LayoutSpec& layout, int canvas) {
    const Vec2 n = line_normal(layout);
    // Longest chord of the stripe direction (-n.y, n.x) across a square canvas.
    return canvas / std::max(std::abs(n.y), std::abs(n.x));
}

}  // namespace

// ---------------------------------------------------------------------------

std::span<const Rgb> default_palette() {
    static const std::vector<Rgb> palette = [] {
        const auto& p = ColorNamer::default_prototypes();
        return std::vector<Rgb>(p.begin(), p.end());
    }();
    return palette;
}

void validate_spec(const TextureSpec& spec) {
    if (spec.canvas_px <= 0) throw InvalidSpec("canvas_px must be positive");
    if (spec.classes.empty() || spec.classes.size() > 2) throw InvalidSpec("a texture has 1 or 2 element classes");
    std::set<ColorName> names{name_color(spec.background_color)};
    for (const auto& cls : spec.classes) {
        if (!names.insert(name_color(cls.color)).second)
            throw InvalidSpec("class and background colors must be pairwise distinct under color naming");
        if (!cls.shape.valid()) throw InvalidSpec("polygon subkind must be set iff the shape is a polygon");
        if (!(cls.size_px.min > 0.0) || cls.size_px.min > cls.size_px.max) throw InvalidSpec("invalid size range");
        if (cls.orientation_deg.min < 0.0 || cls.orientation_deg.max >= 180.0 ||
            cls.orientation_deg.min > cls.orientation_deg.max)
            throw InvalidSpec("orientation range must lie in [0, 180)");
        if (cls.aspect < 1.0) throw InvalidSpec("aspect must be >= 1");
        const auto& lay = cls.layout;
        if (!(lay.basis_u.norm() > 0.0)) throw InvalidSpec("basis_u must be nonzero");
        if (lay.basis_v && std::abs(lay.basis_u.cross(*lay.basis_v)) < 1e-9 * lay.basis_u.norm2())
            throw InvalidSpec("basis vectors must be linearly independent");
        if (lay.jitter < 0.0 || lay.jitter > 0.5) throw InvalidSpec("jitter must lie in [0, 0.5]");
        if (is_line(cls) && lay.basis_v) throw InvalidSpec("line classes use a linear layout");
    }
}

std::vector<Vec2> lattice_points(const LayoutSpec& layout, int canvas_px, double margin) {
    const double lo = -margin;
    const double hi = canvas_px + margin;
    std::vector<Vec2> points;
    const Vec2 u = layout.basis_u;
    if (!layout.basis_v) {
        // Points along a line: bound i by projecting the expanded canvas on u.
        double pmin = 1e300, pmax = -1e300;
        for (Vec2 c : {Vec2{lo, lo}, Vec2{hi, lo}, Vec2{lo, hi}, Vec2{hi, hi}}) {
            const double t = (c - layout.phase).dot(u) / u.norm2();
            pmin = std::min(pmin, t);
            pmax = std::max(pmax, t);
        }
        for (long i = static_cast<long>(std::floor(pmin)); i <= static_cast<long>(std::ceil(pmax)); ++i) {
            const Vec2 p = layout.phase + u * static_cast<double>(i);
            if (p.x >= lo && p.x <= hi && p.y >= lo && p.y <= hi) points.push_back(p);
        }
        return points;
    }
    const Vec2 v = *layout.basis_v;
    const double det = u.cross(v);
    double imin = 1e300, imax = -1e300, jmin = 1e300, jmax = -1e300;
    for (Vec2 c : {Vec2{lo, lo}, Vec2{hi, lo}, Vec2{lo, hi}, Vec2{hi, hi}}) {
        const Vec2 d = c - layout.phase;
        const double i = d.cross(v) / det;
        const double j = u.cross(d) / det;
        imin = std::min(imin, i);
        imax = std::max(imax, i);
        jmin = std::min(jmin, j);
        jmax = std::max(jmax, j);
    }
    for (long i = static_cast<long>(std::floor(imin)); i <= static_cast<long>(std::ceil(imax)); ++i)
        for (long j = static_cast<long>(std::floor(jmin)); j <= static_cast<long>(std::ceil(jmax)); ++j) {
            const Vec2 p = layout.phase + u * static_cast<double>(i) + v * static_cast<double>(j);
            if (p.x >= lo && p.x <= hi && p.y >= lo && p.y <= hi) points.push_back(p);
        }
    return points;
}

double nominal_area(const ElementClassSpec& cls, double size, int canvas_px) {
    switch (cls.shape.kind) {
        case ShapeKind::circle: return kPi * 0.25 * size * size;
        case ShapeKind::line: return size * stripe_chord(cls.layout, canvas_px);
        case ShapeKind::polygon:
            switch (*cls.shape.polygon) {
                case PolygonKind::square: return size * size;
                case PolygonKind::triangle: return std::numbers::sqrt3 / 4.0 * size * size;
                case PolygonKind::rectangle: return size * size / cls.aspect;
            }
    }
    return 0.0;
}

Rendered render(const TextureSpec& spec) {
    validate_spec(spec);
    const int W = spec.canvas_px;
    Rng rng(spec.seed);

    std::vector<TexelGeometry> texels;
    for (std::size_t c = 0; c < spec.classes.size(); ++c) {
        const auto& cls = spec.classes[c];
        const auto& lay = cls.layout;
        if (is_line(cls)) {
            const Vec2 n = line_normal(lay);
            const double s = lay.basis_u.norm();
            const double jitter_len = lay.jitter * s;
            const auto [i0, i1] = stripe_index_range(lay, W, cls.size_px.max + jitter_len);
            const double base = lay.phase.dot(n);
            for (long i = i0; i <= i1; ++i) {
                TexelGeometry t;
                t.class_index = static_cast<int>(c);
                t.size = rng.uniform(cls.size_px.min, cls.size_px.max);
                const double offset = base + i * s + rng.uniform(-jitter_len, jitter_len);
                t.orientation_deg = stripe_angle(lay);
                t.center = n * offset;
                t.nominal_area = nominal_area(cls, t.size, W);
                rasterize_stripe(n, offset, t.size, t, W);
                if (!t.pixels.empty()) texels.push_back(std::move(t));
            }
        } else {
            const double jitter_radius = lay.jitter * shortest_basis(lay);
            const double margin = extent_factor(cls) * cls.size_px.max + jitter_radius + 2.0;
            for (Vec2 p : lattice_points(lay, W, margin)) {
                TexelGeometry t;
                t.class_index = static_cast<int>(c);
                const auto [dx, dy] = rng.in_disk(jitter_radius);
                t.center = p + Vec2{dx, dy};
                t.size = rng.uniform(cls.size_px.min, cls.size_px.max);
                t.orientation_deg = rng.uniform(cls.orientation_deg.min, cls.orientation_deg.max);
                t.nominal_area = nominal_area(cls, t.size, W);
                rasterize_shape(cls, t, W);
                if (!t.pixels.empty()) texels.push_back(std::move(t));
            }
        }
    }

    std::vector<std::int32_t> owner(static_cast<std::size_t>(W) * W, -1);
    std::vector<char> collided(texels.size(), 0);
    for (std::size_t k = 0; k < texels.size(); ++k) {
        for (auto px : texels[k].pixels) {
            const std::int32_t o = owner[px];
            if (o >= 0 && texels[o].class_index != texels[k].class_index) collided[o] = collided[k] = 1;
            owner[px] = static_cast<std::int32_t>(k);
        }
    }
    const auto n_collided = std::count(collided.begin(), collided.end(), 1);
    if (!texels.empty() && n_collided > kMaxCollisionFraction * static_cast<double>(texels.size())) {
        throw InfeasibleSpec("texels of different classes collide on " + std::to_string(n_collided) + " of " +
                             std::to_string(texels.size()) + " texels");
    }

    Rendered out;
    out.image = Image(W, W, spec.background_color);
    auto& gt = out.ground_truth;
    gt.canvas_px = W;
    gt.background_color = spec.background_color;
    for (const auto& cls : spec.classes) gt.per_class_layout.push_back(cls.layout);

    for (std::size_t k = 0; k < texels.size(); ++k) {
        const auto& t = texels[k];
        const auto& cls = spec.classes[t.class_index];
        int x0 = W, y0 = W, x1 = -1, y1 = -1;
        long long visible = 0;
        for (auto px : t.pixels) {
            if (owner[px] != static_cast<std::int32_t>(k)) continue;
            const int x = px % W, y = px / W;
            out.image.set(x, y, cls.color);
            x0 = std::min(x0, x);
            y0 = std::min(y0, y);
            x1 = std::max(x1, x);
            y1 = std::max(y1, y);
            ++visible;
        }
        if (visible == 0 || static_cast<double>(visible) < kMinVisibleFraction * t.nominal_area) continue;

        TexelAnnotation ann;
        ann.id = static_cast<int>(gt.texels.size());
        ann.shape = cls.shape;
        ann.class_index = t.class_index;
        ann.color = cls.color;
        ann.orientation_deg = fold_180(t.orientation_deg);
        ann.bbox = {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
        ann.mask = TexelMask(ann.bbox);
        for (auto px : t.pixels)
            if (owner[px] == static_cast<std::int32_t>(k)) ann.mask.set(px % W, px / W);
        ann.centroid = ann.mask.centroid();
        gt.texels.push_back(std::move(ann));
    }

    if (spec.shading == Shading::perturbed) {
        Rng shade(derive_seed(spec.seed, "shading"));
        struct Wave {
            double amplitude, fx, fy, phase;
        };
        std::array<Wave, 3> waves{};
        double total = 0.0;
        for (auto& w : waves) {
            w.amplitude = shade.uniform(0.5, 1.0);
            do {
                w.fx = static_cast<double>(shade.integer(-2, 2));
                w.fy = static_cast<double>(shade.integer(-2, 2));
            } while (w.fx == 0.0 && w.fy == 0.0);
            w.phase = shade.uniform(0.0, 2.0 * kPi);
            total += w.amplitude;
        }
        auto bytes = out.image.bytes();
        for (int y = 0; y < W; ++y)
            for (int x = 0; x < W; ++x) {
                double s = 0.0;
                for (const auto& w : waves)
                    s += w.amplitude * std::cos(2.0 * kPi * (w.fx * x + w.fy * y) / W + w.phase);
                const double gain = 1.0 + 0.1 * s / total;
                for (int ch = 0; ch < 3; ++ch) {
                    auto& b = bytes[(static_cast<std::size_t>(y) * W + x) * 3 + ch];
                    const double noise = static_cast<double>(shade.integer(-2, 2));
                    b = static_cast<std::uint8_t>(std::clamp(std::round(b * gain + noise), 0.0, 255.0));
                }
            }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

double shortest_lattice_vector(Vec2 u, Vec2 v, Vec2 offset, bool skip_origin) {
    double best = 1e300;
    for (int i = -3; i <= 3; ++i)
        for (int j = -3; j <= 3; ++j) {
            if (skip_origin && i == 0 && j == 0) continue;
            best = std::min(best, (offset + u * double(i) + v * double(j)).norm());
        }
    return best;
}

ShapeClass random_shape(ShapeKind kind, Rng& rng) {
    ShapeClass s{kind, std::nullopt};
    if (kind == ShapeKind::polygon) s.polygon = static_cast<PolygonKind>(rng.integer(0, 2));
    return s;
}

double random_jitter(Rng& rng, double max_jitter) {
    if (max_jitter <= 0.0 || rng.bernoulli(0.3)) return 0.0;
    return rng.uniform(0.0, max_jitter);
}

Range random_orientation(Rng& rng) {
    const double lo = rng.uniform(0.0, 150.0);
    return {lo, lo + rng.uniform(0.0, 29.0)};
}

/// Fills size range (and aspect) so the circumscribed diameter is at most `max_extent`.
void assign_size(ElementClassSpec& cls, Rng& rng, double max_extent, double min_fraction = 0.5,
                 double max_aspect = 3.0) {
    if (cls.shape.kind == ShapeKind::polygon && *cls.shape.polygon == PolygonKind::rectangle)
        cls.aspect = rng.uniform(1.5, max_aspect);
    const double diameter = rng.uniform(min_fraction, 0.9) * max_extent;
    const double size = diameter / (2.0 * extent_factor(cls));
    cls.size_px = {0.9 * size, size};
}

}  // namespace

TextureSpec sample_spec(std::uint64_t seed, std::span<const Rgb> palette, const SamplerOptions& options) {
    std::vector<ColorName> names;
    for (const auto& c : palette) names.push_back(name_color(c));
    if (palette.size() < 3) throw InvalidPalette("palette needs at least 3 colors, got " + std::to_string(palette.size()));
    if (std::set<ColorName>(names.begin(), names.end()).size() != names.size())
        throw InvalidPalette("palette colors must be pairwise distinct under color naming");

    Rng rng(seed);
    const double W = options.canvas_px;
    const double scale = W / 1024.0;
    TextureSpec spec;
    spec.canvas_px = options.canvas_px;

    const std::size_t n_classes = rng.bernoulli(options.two_class_probability) ? 2 : 1;
    std::vector<ShapeKind> kinds = {ShapeKind::circle, ShapeKind::polygon, ShapeKind::line};
    for (std::size_t i = kinds.size() - 1; i > 0; --i)
        std::swap(kinds[i], kinds[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(i)))]);
    kinds.resize(n_classes);
    // Stripes are drawn first so that other elements sit on top of them.
    std::stable_partition(kinds.begin(), kinds.end(), [](ShapeKind k) { return k == ShapeKind::line; });

    std::vector<std::size_t> order(palette.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size() - 1; i > 0; --i)
        std::swap(order[i], order[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(i)))]);
    spec.background_color = palette[order[0]];

    if (kinds.front() == ShapeKind::line) {
        ElementClassSpec line;
        line.shape = {ShapeKind::line, std::nullopt};
        line.color = palette[order[1]];
        // Two-class stripe textures get thin, widely spaced stripes so the
        // elements placed in the gaps stay large enough to segment.
        const double s = rng.uniform(n_classes == 2 ? 30.0 : 20.0, 34.0) * scale;
        const double theta = rng.uniform(0.0, 180.0);
        const Vec2 n = direction_deg(theta + 90.0);
        line.layout.basis_u = n * s;
        line.layout.phase = n * rng.uniform(0.0, s);
        const double t0 = rng.uniform(4.0 * scale, n_classes == 2 ? std::max(4.0 * scale, 0.15 * s) : 0.45 * s);
        line.size_px = {0.9 * t0, 1.1 * t0};
        const double max_jitter =
            std::clamp((s - 1.1 * t0 - 4.0 * scale) / (2.0 * s), 0.0, n_classes == 2 ? 0.02 : 0.15);
        line.layout.jitter = random_jitter(rng, max_jitter);
        const double angle = stripe_angle(line.layout);
        line.orientation_deg = {angle, angle};
        spec.classes.push_back(line);

        if (n_classes == 2) {
            // Second class sits in the gaps between stripes.
            ElementClassSpec dots;
            dots.shape = random_shape(kinds[1], rng);
            dots.color = palette[order[2]];
            const Vec2 d = direction_deg(theta);
            const double gap = s - 1.1 * t0 - 2.0 * line.layout.jitter * s;
            const double max_extent = 0.85 * gap;
            const double a = rng.uniform(std::max(1.4 * max_extent, 20.0 * scale), 90.0 * scale);
            const int k = static_cast<int>(rng.integer(1, 2));
            dots.layout.basis_u = d * a;
            dots.layout.basis_v = n * (k * s) + d * rng.uniform(-0.5 * a, 0.5 * a);
            dots.layout.phase = line.layout.phase + n * (0.5 * s) + d * rng.uniform(0.0, a);
            dots.layout.jitter = random_jitter(rng, 0.05 * gap / std::min(a, k * s));
            const double room = max_extent - 2.0 * dots.layout.jitter * std::min(a, k * s);
            assign_size(dots, rng, room, 0.7, 2.0);
            dots.orientation_deg = random_orientation(rng);
            spec.classes.push_back(dots);
        }
    } else {
        const double a = rng.uniform(40.0, 140.0) * scale;
        const double b = a * rng.uniform(0.8, 1.25);
        const double alpha = rng.uniform(0.0, 180.0);
        const double beta = rng.uniform(60.0, 120.0);
        LayoutSpec lay;
        lay.basis_u = direction_deg(alpha) * a;
        lay.basis_v = direction_deg(alpha + beta) * b;
        lay.phase = {rng.uniform(0.0, a), rng.uniform(0.0, a)};
        const Vec2 u = lay.basis_u, v = *lay.basis_v;
        double spacing = shortest_lattice_vector(u, v, {}, true);
        if (n_classes == 2) spacing = std::min(spacing, shortest_lattice_vector(u, v, (u + v) * 0.5, false));
        const double min_extent = 16.0 * scale;
        const double max_jitter = std::clamp((spacing - min_extent / 0.85) / (2.0 * std::min(a, b)), 0.0, 0.25);
        lay.jitter = random_jitter(rng, max_jitter);
        const double room = 0.85 * (spacing - 2.0 * lay.jitter * std::min(a, b));
        for (std::size_t c = 0; c < n_classes; ++c) {
            ElementClassSpec cls;
            cls.shape = random_shape(kinds[c], rng);
            cls.color = palette[order[1 + c]];
            cls.layout = lay;
            if (c == 1) cls.layout.phase = lay.phase + (u + v) * 0.5;
            assign_size(cls, rng, room);
            cls.orientation_deg = random_orientation(rng);
            spec.classes.push_back(cls);
        }
    }

    spec.shading = rng.bernoulli(options.perturbed_probability) ? Shading::perturbed : Shading::flat;
    spec.seed = derive_seed(seed, "render");
    validate_spec(spec);
    return spec;
}

// ---------------------------------------------------------------------------
// Datasets

std::string dataset_item_id(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "elba_%05zu", index);
    return buf;
}

void split_ids(std::size_t n, std::uint64_t seed, double split_ratio, std::vector<std::string>& train,
               std::vector<std::string>& test) {
    if (split_ratio < 0.0 || split_ratio > 1.0) throw InvalidArgument("split ratio must lie in [0, 1]");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(derive_seed(seed, "split"));
    for (std::size_t i = n; i > 1; --i)
        std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(i - 1)))]);
    const auto n_train = static_cast<std::size_t>(std::llround(split_ratio * static_cast<double>(n)));
    std::vector<std::size_t> tr(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> te(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    std::sort(tr.begin(), tr.end());
    std::sort(te.begin(), te.end());
    train.clear();
    test.clear();
    for (auto i : tr) train.push_back(dataset_item_id(i));
    for (auto i : te) test.push_back(dataset_item_id(i));
}

ManifestEntry realize_item(std::uint64_t dataset_seed, std::size_t index, int canvas_px, Rendered* rendered) {
    ManifestEntry entry;
    entry.id = dataset_item_id(index);
    entry.image_path = "images/" + entry.id + ".png";
    entry.ground_truth_path = "ground_truth/" + entry.id + ".json";
    SamplerOptions opts;
    opts.canvas_px = canvas_px;
    const std::uint64_t item_seed = derive_seed(dataset_seed, static_cast<std::uint64_t>(index));
    for (int attempt = 0; attempt < kMaxResampleAttempts; ++attempt) {
        entry.spec = sample_spec(derive_seed(item_seed, static_cast<std::uint64_t>(attempt)), default_palette(), opts);
        try {
            Rendered r = render(entry.spec);
            if (rendered) *rendered = std::move(r);
            return entry;
        } catch (const InfeasibleSpec&) {
        }
    }
    throw InfeasibleSpec("no feasible spec for " + entry.id + " after resampling");
}

DatasetManifest generate_dataset(const DatasetOptions& options, const std::filesystem::path& out_dir) {
    if (options.n < 10) throw InvalidArgument("a dataset needs at least 10 items");
    std::error_code ec;
    std::filesystem::create_directories(out_dir / "images", ec);
    std::filesystem::create_directories(out_dir / "ground_truth", ec);
    if (ec || !std::filesystem::is_directory(out_dir / "images"))
        throw IoError("cannot create dataset directory " + out_dir.string());

    DatasetManifest manifest;
    manifest.seed = options.seed;
    manifest.split_ratio = options.split_ratio;
    manifest.canvas_px = options.canvas_px;
    manifest.entries.resize(options.n);
    split_ids(options.n, options.seed, options.split_ratio, manifest.train_ids, manifest.test_ids);

    parallel_for(options.n, [&](std::size_t i) {
        Rendered r;
        manifest.entries[i] = realize_item(options.seed, i, options.canvas_px, &r);
        write_png(r.image, out_dir / manifest.entries[i].image_path);
        io::write_ground_truth(r.ground_truth, out_dir / manifest.entries[i].ground_truth_path);
    });
    io::write_manifest(manifest, out_dir / "manifest.json");
    return manifest;
}

}  // namespace texelatt::synth
