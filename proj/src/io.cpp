#include "texelatt/io.hpp"

#include "texelatt/error.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace texelatt::io {

using nlohmann::json;

namespace {

json vec_json(Vec2 v) { return json::array({v.x, v.y}); }
Vec2 vec_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json rgb_json(Rgb c) { return json::array({c.r, c.g, c.b}); }
Rgb rgb_from(const json& j) {
    return {j.at(0).get<std::uint8_t>(), j.at(1).get<std::uint8_t>(), j.at(2).get<std::uint8_t>()};
}

json box_json(const BBox& b) { return json::array({b.x, b.y, b.w, b.h}); }
BBox box_from(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(), j.at(3).get<int>()}; }

/// Re-expresses a mask over `box` so the stored runs match the bbox field.
TexelMask over_box(const TexelMask& mask, const BBox& box) {
    if (mask.box() == box) return mask;
    TexelMask out(box);
    mask.for_each_pixel([&](int x, int y) {
        if (x >= box.x && y >= box.y && x < box.x + box.w && y < box.y + box.h) out.set(x, y);
    });
    return out;
}

json shape_fields(ShapeKind kind, Vec2 centroid, const BBox& box, const TexelMask& mask, Rgb color) {
    return json{{"shape", std::string(to_string(kind))},
                {"centroid", vec_json(centroid)},
                {"bbox", box_json(box)},
                {"mask_rle", over_box(mask, box).to_rle()},
                {"color", rgb_json(color)}};
}

json layout_json(const synth::LayoutSpec& l) {
    return json{{"basis_u", vec_json(l.basis_u)},
                {"basis_v", l.basis_v ? vec_json(*l.basis_v) : json(nullptr)},
                {"jitter", l.jitter},
                {"phase", vec_json(l.phase)}};
}

synth::LayoutSpec layout_from(const json& j) {
    synth::LayoutSpec l;
    l.basis_u = vec_from(j.at("basis_u"));
    if (!j.at("basis_v").is_null()) l.basis_v = vec_from(j.at("basis_v"));
    l.jitter = j.at("jitter").get<double>();
    l.phase = vec_from(j.at("phase"));
    return l;
}

json spec_json(const synth::TextureSpec& spec) {
    json classes = json::array();
    for (const auto& c : spec.classes) {
        json jc{{"shape", std::string(to_string(c.shape.kind))},
                {"size_px", json::array({c.size_px.min, c.size_px.max})},
                {"orientation_deg", json::array({c.orientation_deg.min, c.orientation_deg.max})},
                {"aspect", c.aspect},
                {"color", rgb_json(c.color)},
                {"layout", layout_json(c.layout)}};
        if (c.shape.polygon) jc["polygon"] = std::string(to_string(*c.shape.polygon));
        classes.push_back(std::move(jc));
    }
    return json{{"canvas_px", spec.canvas_px},
                {"background_color", rgb_json(spec.background_color)},
                {"shading", spec.shading == synth::Shading::flat ? "flat" : "perturbed"},
                {"seed", spec.seed},
                {"classes", std::move(classes)}};
}

synth::TextureSpec spec_from(const json& j) {
    synth::TextureSpec spec;
    spec.canvas_px = j.at("canvas_px").get<int>();
    spec.background_color = rgb_from(j.at("background_color"));
    const auto shading = j.at("shading").get<std::string>();
    if (shading != "flat" && shading != "perturbed") throw InvalidSpec("unknown shading '" + shading + "'");
    spec.shading = shading == "flat" ? synth::Shading::flat : synth::Shading::perturbed;
    spec.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& jc : j.at("classes")) {
        synth::ElementClassSpec c;
        c.shape.kind = shape_kind_from_string(jc.at("shape").get<std::string>());
        if (jc.contains("polygon")) c.shape.polygon = polygon_kind_from_string(jc.at("polygon").get<std::string>());
        c.size_px = {jc.at("size_px").at(0).get<double>(), jc.at("size_px").at(1).get<double>()};
        c.orientation_deg = {jc.at("orientation_deg").at(0).get<double>(), jc.at("orientation_deg").at(1).get<double>()};
        c.aspect = jc.at("aspect").get<double>();
        c.color = rgb_from(jc.at("color"));
        c.layout = layout_from(jc.at("layout"));
        spec.classes.push_back(std::move(c));
    }
    return spec;
}

json parse(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw IoError("malformed JSON in " + what + ": " + e.what());
    }
}

/// Runs `fn` translating JSON access errors into IoError.
template <typename Fn>
auto guarded(const std::string& what, Fn&& fn) {
    try {
        return fn();
    } catch (const json::exception& e) {
        throw IoError("unexpected JSON content in " + what + ": " + e.what());
    }
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else if (ch != '\r') {
            cell.push_back(ch);
        }
    }
    cells.push_back(std::move(cell));
    return cells;
}

double parse_double(const std::string& s, const std::filesystem::path& path) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError("bad number '" + s + "' in " + path.string());
    }
}

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + path.string());
        out << text;
        if (!out) throw IoError("write failed for " + path.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

std::string ground_truth_to_json(const synth::GroundTruth& gt) {
    json texels = json::array();
    for (const auto& t : gt.texels) {
        json jt = shape_fields(t.shape.kind, t.centroid, t.bbox, t.mask, t.color);
        jt["id"] = t.id;
        jt["class"] = t.class_index;
        jt["orientation_deg"] = t.orientation_deg;
        if (t.shape.polygon) jt["polygon"] = std::string(to_string(*t.shape.polygon));
        texels.push_back(std::move(jt));
    }
    json layouts = json::array();
    for (const auto& l : gt.per_class_layout) layouts.push_back(layout_json(l));
    const json j{{"canvas_px", gt.canvas_px},
                 {"background_color", rgb_json(gt.background_color)},
                 {"texels", std::move(texels)},
                 {"layouts", std::move(layouts)}};
    return j.dump() + "\n";
}

synth::GroundTruth ground_truth_from_json(const std::string& text) {
    const json j = parse(text, "ground truth");
    return guarded("ground truth", [&] {
        synth::GroundTruth gt;
        gt.canvas_px = j.at("canvas_px").get<int>();
        gt.background_color = rgb_from(j.at("background_color"));
        for (const auto& jt : j.at("texels")) {
            TexelAnnotation t;
            t.id = jt.at("id").get<int>();
            t.shape.kind = shape_kind_from_string(jt.at("shape").get<std::string>());
            if (jt.contains("polygon")) t.shape.polygon = polygon_kind_from_string(jt.at("polygon").get<std::string>());
            t.class_index = jt.at("class").get<int>();
            t.centroid = vec_from(jt.at("centroid"));
            t.bbox = box_from(jt.at("bbox"));
            t.mask = TexelMask::from_rle(t.bbox, jt.at("mask_rle").get<std::vector<std::uint32_t>>());
            t.color = rgb_from(jt.at("color"));
            t.orientation_deg = jt.at("orientation_deg").get<double>();
            gt.texels.push_back(std::move(t));
        }
        for (const auto& jl : j.at("layouts")) gt.per_class_layout.push_back(layout_from(jl));
        return gt;
    });
}

void write_ground_truth(const synth::GroundTruth& gt, const std::filesystem::path& path) {
    write_text(path, ground_truth_to_json(gt));
}

synth::GroundTruth read_ground_truth(const std::filesystem::path& path) {
    return ground_truth_from_json(read_text(path));
}

void write_detections(const std::vector<DetectedTexel>& detections, const std::filesystem::path& path) {
    json arr = json::array();
    for (std::size_t i = 0; i < detections.size(); ++i) {
        const auto& d = detections[i];
        json jd = shape_fields(d.shape, d.centroid, d.bbox, d.mask, d.mean_color);
        jd["id"] = static_cast<int>(i);
        jd["confidence"] = d.confidence;
        arr.push_back(std::move(jd));
    }
    write_text(path, json{{"detections", std::move(arr)}}.dump() + "\n");
}

std::vector<DetectedTexel> read_detections(const std::filesystem::path& path) {
    const json j = parse(read_text(path), path.string());
    return guarded(path.string(), [&] {
        std::vector<DetectedTexel> out;
        for (const auto& jd : j.at("detections")) {
            DetectedTexel d;
            d.shape = shape_kind_from_string(jd.at("shape").get<std::string>());
            d.centroid = vec_from(jd.at("centroid"));
            d.bbox = box_from(jd.at("bbox"));
            d.mask = TexelMask::from_rle(d.bbox, jd.at("mask_rle").get<std::vector<std::uint32_t>>());
            d.mean_color = rgb_from(jd.at("color"));
            d.confidence = jd.at("confidence").get<double>();
            out.push_back(std::move(d));
        }
        return out;
    });
}

std::string spec_to_json(const synth::TextureSpec& spec) { return spec_json(spec).dump(); }

synth::TextureSpec spec_from_json(const std::string& text) {
    const json j = parse(text, "texture spec");
    return guarded("texture spec", [&] { return spec_from(j); });
}

void write_manifest(const synth::DatasetManifest& m, const std::filesystem::path& path) {
    json entries = json::array();
    for (const auto& e : m.entries)
        entries.push_back(json{{"id", e.id},
                               {"image", e.image_path},
                               {"ground_truth", e.ground_truth_path},
                               {"spec", spec_json(e.spec)}});
    const json j{{"seed", m.seed},
                 {"split_ratio", m.split_ratio},
                 {"canvas_px", m.canvas_px},
                 {"entries", std::move(entries)},
                 {"train", m.train_ids},
                 {"test", m.test_ids}};
    write_text(path, j.dump(1) + "\n");
}

synth::DatasetManifest read_manifest(const std::filesystem::path& path) {
    const json j = parse(read_text(path), path.string());
    return guarded(path.string(), [&] {
        synth::DatasetManifest m;
        m.seed = j.at("seed").get<std::uint64_t>();
        m.split_ratio = j.at("split_ratio").get<double>();
        m.canvas_px = j.at("canvas_px").get<int>();
        for (const auto& je : j.at("entries"))
            m.entries.push_back({je.at("id").get<std::string>(), je.at("image").get<std::string>(),
                                 je.at("ground_truth").get<std::string>(), spec_from(je.at("spec"))});
        m.train_ids = j.at("train").get<std::vector<std::string>>();
        m.test_ids = j.at("test").get<std::vector<std::string>>();
        return m;
    });
}

void write_query_manifest(const distort::QueryManifest& m, const std::filesystem::path& path) {
    json entries = json::array();
    for (const auto& e : m.entries)
        entries.push_back(json{{"query_id", e.query_id}, {"image", e.image_path}, {"database_id", e.database_id}});
    const json j{{"variant", m.spec.variant()},
                 {"resolution", m.spec.resolution},
                 {"effect", std::string(distort::to_string(m.spec.effect))},
                 {"noise_probability", m.spec.noise_probability},
                 {"seed", m.spec.seed},
                 {"queries", std::move(entries)}};
    write_text(path, j.dump(1) + "\n");
}

distort::QueryManifest read_query_manifest(const std::filesystem::path& path) {
    const json j = parse(read_text(path), path.string());
    return guarded(path.string(), [&] {
        distort::QueryManifest m;
        m.spec.resolution = j.at("resolution").get<int>();
        m.spec.effect = distort::effect_from_string(j.at("effect").get<std::string>());
        m.spec.noise_probability = j.at("noise_probability").get<double>();
        m.spec.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& je : j.at("queries"))
            m.entries.push_back({je.at("query_id").get<std::string>(), je.at("image").get<std::string>(),
                                 je.at("database_id").get<std::string>()});
        return m;
    });
}

void write_descriptors_csv(const DescriptorTable& table, const std::filesystem::path& path) {
    std::string text = "id";
    for (const auto& n : table.names) text += "," + n;
    text += "\n";
    for (const auto& r : table.records) {
        if (r.dim() != table.names.size())
            throw InvalidArgument("descriptor " + r.id + " has " + std::to_string(r.dim()) + " values, expected " +
                                  std::to_string(table.names.size()));
        text += r.id;
        for (std::size_t k = 0; k < r.dim(); ++k) {
            text += ",";
            if (!r.is_missing(k)) text += format_double(r.values[k]);
        }
        text += "\n";
    }
    write_text(path, text);
}

DescriptorTable read_descriptors_csv(const std::filesystem::path& path) {
    std::istringstream in(read_text(path));
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty descriptor file " + path.string());
    auto header = split_csv(line);
    if (header.empty() || header.front() != "id") throw IoError("descriptor file " + path.string() + " lacks an id column");
    DescriptorTable table;
    table.names.assign(header.begin() + 1, header.end());
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size())
            throw IoError("row with " + std::to_string(cells.size()) + " cells in " + path.string());
        FeatureRecord r;
        r.id = cells[0];
        r.values.assign(table.names.size(), 0.0);
        r.missing.assign(table.names.size(), 0);
        for (std::size_t k = 0; k < table.names.size(); ++k) {
            if (cells[k + 1].empty())
                r.missing[k] = 1;
            else
                r.values[k] = parse_double(cells[k + 1], path);
        }
        table.records.push_back(std::move(r));
    }
    return table;
}

void write_stats_csv(const NormalizationStats& stats, const std::vector<std::string>& names,
                     const std::filesystem::path& path) {
    if (names.size() != stats.dim()) throw InvalidArgument("stats and column names differ in length");
    std::string text = "name,mean,stddev,constant\n";
    for (std::size_t k = 0; k < stats.dim(); ++k)
        text += names[k] + "," + format_double(stats.mean[k]) + "," + format_double(stats.stddev[k]) + "," +
                (stats.constant[k] ? "1" : "0") + "\n";
    write_text(path, text);
}

NormalizationStats read_stats_csv(const std::filesystem::path& path) {
    std::istringstream in(read_text(path));
    std::string line;
    std::getline(in, line);
    NormalizationStats stats;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 4) throw IoError("malformed stats row in " + path.string());
        stats.mean.push_back(parse_double(cells[1], path));
        stats.stddev.push_back(parse_double(cells[2], path));
        stats.constant.push_back(cells[3] == "1" ? 1 : 0);
    }
    return stats;
}

}  // namespace texelatt::io
